#pragma once

#include "schoolopt/rational.hpp"

#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace schoolopt {

enum class GradeLevel { PK, ES, MS, K8, HS };

std::string_view to_string(GradeLevel g);
GradeLevel parse_grade_level(std::string_view s);

struct SchoolRecord {
    int id = 0;  // 1-based, contiguous
    std::string name;
    GradeLevel grade_level = GradeLevel::PK;
    int enrollment = 0;
    int current_start = 0;  // minutes since midnight
};

struct TimeSlot {
    int index = 0;  // 1-based
    int minutes = 0;
    std::string label;
};

/// Raised for malformed school data. The message names the offending row.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when some school has no admissible slot left.
class InfeasibleSpaceError : public std::runtime_error {
public:
    InfeasibleSpaceError(int school_id, const std::string& message)
        : std::runtime_error(message), school_id_(school_id) {}
    int school_id() const noexcept { return school_id_; }

private:
    int school_id_;
};

/// Schools plus the standardized start slots. Immutable once built.
class SchoolData {
public:
    SchoolData(std::vector<SchoolRecord> schools, std::vector<TimeSlot> slots);

    const std::vector<SchoolRecord>& schools() const noexcept { return schools_; }
    const std::vector<TimeSlot>& slots() const noexcept { return slots_; }
    std::size_t num_schools() const noexcept { return schools_.size(); }
    std::size_t num_slots() const noexcept { return slots_.size(); }

    const SchoolRecord& school(int id) const { return schools_.at(static_cast<std::size_t>(id - 1)); }
    const TimeSlot& slot(int index) const { return slots_.at(static_cast<std::size_t>(index - 1)); }

    int total_enrollment() const noexcept;

    /// Case-insensitive, whitespace-trimmed exact match. Returns 0 when absent.
    int find_school(std::string_view name) const;
    /// Same normalization for slot labels ("7:50 AM"). Returns 0 when absent.
    int find_slot(std::string_view label) const;

    /// Stable content hash, used to key caches.
    std::uint64_t fingerprint() const noexcept { return fingerprint_; }

private:
    std::vector<SchoolRecord> schools_;
    std::vector<TimeSlot> slots_;
    std::uint64_t fingerprint_ = 0;
};

/// 7:50 AM, 8:40 AM, 9:30 AM.
std::vector<TimeSlot> standard_slots();

/// The ten-school instance embedded in the binary.
const SchoolData& canonical_data();

/// The canonical CSV text (same content as data/schools.csv).
std::string_view canonical_csv();

/// Reads `id,name,grade,enrollment,current_start_minutes` rows.
std::vector<SchoolRecord> load_school_data(std::istream& source);
SchoolData load_school_data_file(const std::string& path);

/// "7:50 AM" for 470.
std::string format_clock(int minutes);

/// One slot per school; slot indices are 1-based and `slots[q-1]` belongs to school q.
struct Schedule {
    std::vector<std::uint8_t> slots;

    int slot_of(int school_id) const { return slots.at(static_cast<std::size_t>(school_id - 1)); }
    bool operator==(const Schedule&) const = default;
    auto operator<=>(const Schedule&) const = default;
};

struct ScheduleFeatures {
    std::vector<int> per_school_change;  // minutes, indexed by school id - 1
    std::int64_t deviation_sum = 0;      // minutes
    std::vector<std::int64_t> slot_loads;  // students, indexed by slot index - 1
    std::int64_t peak_load = 0;          // students
    std::size_t num_schools = 0;

    Rational avg_deviation() const { return Rational(deviation_sum, static_cast<std::int64_t>(num_schools)); }
    Rational peak_load_hundreds() const { return Rational(peak_load, 100); }
};

ScheduleFeatures compute_features(const Schedule& s, const SchoolData& data);

/// Throws std::invalid_argument if `s` does not cover every school with a valid slot.
void validate_schedule(const Schedule& s, const SchoolData& data);

/// Mixed-radix view of the Cartesian product of per-school allowed slots.
/// Index 0 is the lexicographically smallest schedule (school 1 most significant,
/// slots ascending); index order equals lexicographic order.
class ScheduleSpace {
public:
    /// `allowed[q-1]` lists admissible 1-based slots for school q. Throws
    /// InfeasibleSpaceError naming the first school whose list is empty.
    ScheduleSpace(std::vector<std::vector<std::uint8_t>> allowed, const SchoolData& data);

    /// Every school may take any slot.
    static ScheduleSpace full(const SchoolData& data);
    /// Schools absent from `fixes` are unrestricted.
    static ScheduleSpace from_fixes(const std::map<int, std::set<int>>& fixes, const SchoolData& data);

    std::uint64_t size() const noexcept { return size_; }
    std::size_t num_schools() const noexcept { return allowed_.size(); }
    const std::vector<std::uint8_t>& allowed(int school_id) const {
        return allowed_.at(static_cast<std::size_t>(school_id - 1));
    }

    Schedule at(std::uint64_t index) const;
    /// Writes slots for `index` into `out` (size num_schools), no allocation.
    void decode(std::uint64_t index, std::uint8_t* out) const;

private:
    std::vector<std::vector<std::uint8_t>> allowed_;
    std::vector<std::uint64_t> stride_;
    std::uint64_t size_ = 1;
};

/// Visits every schedule of the space in lexicographic order.
void enumerate_schedules(const ScheduleSpace& space, const std::function<void(const Schedule&)>& visit);
void enumerate_schedules(const std::map<int, std::set<int>>& fixes, const SchoolData& data,
                         const std::function<void(const Schedule&)>& visit);

}  // namespace schoolopt
