#include "schoolopt/kernels.hpp"

#include <cstdlib>
#include <stdexcept>

namespace schoolopt::kernels {

FeatureTables::FeatureTables(const SchoolData& data)
    : num_schools_(data.num_schools()), num_slots_(data.num_slots()) {
    if (num_slots_ > kMaxSlots || num_schools_ > kMaxSchools) {
        throw std::invalid_argument("instance too large for the enumeration kernels");
    }
    enrollment_.reserve(num_schools_);
    change_.reserve(num_schools_ * num_slots_);
    for (const auto& s : data.schools()) {
        enrollment_.push_back(s.enrollment);
        for (const auto& t : data.slots()) change_.push_back(std::abs(t.minutes - s.current_start));
    }
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace schoolopt::kernels
