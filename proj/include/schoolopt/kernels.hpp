#pragma once

// Enumeration kernels over a ScheduleSpace. Each kernel has a serial reference
// and an OpenMP variant; both return identical results (ties resolve to the
// smallest schedule index, i.e. the lexicographically smallest assignment).

#include "schoolopt/domain.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <unordered_map>
#include <utility>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace schoolopt::kernels {

struct PeakDev {
    std::int64_t peak = 0;
    std::int64_t dev_sum = 0;
};

/// Per (school, slot) enrollment and start-time change, laid out flat.
class FeatureTables {
public:
    explicit FeatureTables(const SchoolData& data);

    std::size_t num_schools() const noexcept { return num_schools_; }
    std::size_t num_slots() const noexcept { return num_slots_; }

    PeakDev evaluate(const std::uint8_t* slots) const noexcept {
        std::int64_t loads[kMaxSlots] = {};
        std::int64_t dev = 0;
        for (std::size_t q = 0; q < num_schools_; ++q) {
            const std::size_t t = slots[q] - 1u;
            loads[t] += enrollment_[q];
            dev += change_[q * num_slots_ + t];
        }
        std::int64_t peak = 0;
        for (std::size_t t = 0; t < num_slots_; ++t) peak = std::max(peak, loads[t]);
        return {peak, dev};
    }

    static constexpr std::size_t kMaxSlots = 8;
    static constexpr std::size_t kMaxSchools = 32;

private:
    std::size_t num_schools_;
    std::size_t num_slots_;
    std::vector<std::int64_t> enrollment_;
    std::vector<std::int64_t> change_;
};

/// Integer-scaled linear objective: value = per_peak*peak + per_dev*dev_sum - sum(bonus[q][t]),
/// with optional caps peak <= peak_cap and dev_sum <= dev_cap.
struct LinearObjective {
    std::int64_t per_peak = 0;
    std::int64_t per_dev = 0;
    std::vector<std::int64_t> bonus;  // num_schools * num_slots, empty = none
    std::int64_t peak_cap = std::numeric_limits<std::int64_t>::max();
    std::int64_t dev_cap = std::numeric_limits<std::int64_t>::max();
};

struct ArgminResult {
    bool found = false;
    std::uint64_t index = 0;
    std::int64_t value = 0;
    PeakDev features;
};

namespace detail {

inline std::int64_t objective_value(const LinearObjective& obj, const FeatureTables& tables,
                                    const std::uint8_t* slots, const PeakDev& f) {
    std::int64_t v = obj.per_peak * f.peak + obj.per_dev * f.dev_sum;
    if (!obj.bonus.empty()) {
        const std::size_t ns = tables.num_slots();
        for (std::size_t q = 0; q < tables.num_schools(); ++q) v -= obj.bonus[q * ns + slots[q] - 1u];
    }
    return v;
}

inline void consider(ArgminResult& best, std::uint64_t index, std::int64_t value, const PeakDev& f) {
    if (!best.found || value < best.value || (value == best.value && index < best.index)) {
        best = {true, index, value, f};
    }
}

inline void argmin_range(const ScheduleSpace& space, const FeatureTables& tables, const LinearObjective& obj,
                         std::uint64_t begin, std::uint64_t end, ArgminResult& best) {
    std::uint8_t slots[FeatureTables::kMaxSchools];
    for (std::uint64_t i = begin; i < end; ++i) {
        space.decode(i, slots);
        const PeakDev f = tables.evaluate(slots);
        if (f.peak > obj.peak_cap || f.dev_sum > obj.dev_cap) continue;
        consider(best, i, objective_value(obj, tables, slots, f), f);
    }
}

}  // namespace detail

inline ArgminResult argmin_serial(const ScheduleSpace& space, const FeatureTables& tables,
                                  const LinearObjective& obj) {
    ArgminResult best;
    detail::argmin_range(space, tables, obj, 0, space.size(), best);
    return best;
}

inline ArgminResult argmin_parallel(const ScheduleSpace& space, const FeatureTables& tables,
                                    const LinearObjective& obj) {
#ifdef _OPENMP
    ArgminResult best;
    const auto n = static_cast<std::int64_t>(space.size());
#pragma omp parallel
    {
        ArgminResult local;
        std::uint8_t slots[FeatureTables::kMaxSchools];
#pragma omp for schedule(static)
        for (std::int64_t i = 0; i < n; ++i) {
            const auto idx = static_cast<std::uint64_t>(i);
            space.decode(idx, slots);
            const PeakDev f = tables.evaluate(slots);
            if (f.peak > obj.peak_cap || f.dev_sum > obj.dev_cap) continue;
            detail::consider(local, idx, detail::objective_value(obj, tables, slots, f), f);
        }
#pragma omp critical(schoolopt_argmin)
        {
            if (local.found) detail::consider(best, local.index, local.value, local.features);
        }
    }
    return best;
#else
    return argmin_serial(space, tables, obj);
#endif
}

/// Smallest schedule index per distinct key. `key_of(slots, features)` returns a
/// std::uint64_t. The result is sorted by key.
template <class KeyFn>
std::vector<std::pair<std::uint64_t, std::uint64_t>> first_index_by_key_serial(const ScheduleSpace& space,
                                                                              const FeatureTables& tables,
                                                                              KeyFn key_of) {
    std::unordered_map<std::uint64_t, std::uint64_t> first;
    std::uint8_t slots[FeatureTables::kMaxSchools];
    for (std::uint64_t i = 0; i < space.size(); ++i) {
        space.decode(i, slots);
        const std::uint64_t key = key_of(slots, tables.evaluate(slots));
        first.try_emplace(key, i);
    }
    std::vector<std::pair<std::uint64_t, std::uint64_t>> out(first.begin(), first.end());
    std::sort(out.begin(), out.end());
    return out;
}

template <class KeyFn>
std::vector<std::pair<std::uint64_t, std::uint64_t>> first_index_by_key_parallel(const ScheduleSpace& space,
                                                                                const FeatureTables& tables,
                                                                                KeyFn key_of) {
#ifdef _OPENMP
    std::unordered_map<std::uint64_t, std::uint64_t> first;
    const auto n = static_cast<std::int64_t>(space.size());
#pragma omp parallel
    {
        std::unordered_map<std::uint64_t, std::uint64_t> local;
        std::uint8_t slots[FeatureTables::kMaxSchools];
#pragma omp for schedule(static) nowait
        for (std::int64_t i = 0; i < n; ++i) {
            const auto idx = static_cast<std::uint64_t>(i);
            space.decode(idx, slots);
            local.try_emplace(key_of(slots, tables.evaluate(slots)), idx);
        }
#pragma omp critical(schoolopt_first_by_key)
        {
            for (const auto& [k, idx] : local) {
                auto [it, inserted] = first.try_emplace(k, idx);
                if (!inserted && idx < it->second) it->second = idx;
            }
        }
    }
    std::vector<std::pair<std::uint64_t, std::uint64_t>> out(first.begin(), first.end());
    std::sort(out.begin(), out.end());
    return out;
#else
    return first_index_by_key_serial(space, tables, key_of);
#endif
}

/// Key packing for (slot, peak, dev_sum) triples.
inline std::uint64_t pack_slot_peak_dev(std::uint64_t slot, std::uint64_t peak, std::uint64_t dev) {
    return (slot << 56) | (peak << 28) | dev;
}
inline void unpack_slot_peak_dev(std::uint64_t key, int& slot, std::int64_t& peak, std::int64_t& dev) {
    slot = static_cast<int>(key >> 56);
    peak = static_cast<std::int64_t>((key >> 28) & ((1ULL << 28) - 1));
    dev = static_cast<std::int64_t>(key & ((1ULL << 28) - 1));
}

int max_threads();

}  // namespace schoolopt::kernels
