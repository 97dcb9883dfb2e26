#pragma once

#include "schoolopt/domain.hpp"
#include "schoolopt/rational.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

namespace schoolopt {

enum class Direction { Earlier, Later };
enum class FeedbackStyle { Binary, Rich };

std::string_view to_string(Direction d);
Direction parse_direction(std::string_view s);
std::string_view to_string(FeedbackStyle f);
FeedbackStyle parse_feedback_style(std::string_view s);

/// Hidden preferences of one decision agent. Weights are keyed by component,
/// never by position.
struct UtilitySpec {
    std::string id;
    int school = 0;
    Direction direction = Direction::Earlier;
    Rational w_time;
    Rational w_load;
    Rational w_dev;
    Rational load_threshold;  // hundreds of students
    Rational dev_threshold;   // minutes

    bool operator==(const UtilitySpec&) const = default;
};

/// Throws std::invalid_argument when weights are negative or do not sum to 1
/// within three-decimal rounding, or thresholds are negative.
void validate_utility(const UtilitySpec& spec, const SchoolData& data);

nlohmann::json utility_to_json(const UtilitySpec& spec);
UtilitySpec utility_from_json(const nlohmann::json& j);

/// (f_time, f_load, f_dev). f_time is stored in halves (0, 1, 2) so profiles stay integral.
struct UtilityProfile {
    int time_halves = 0;
    int load = 0;
    int dev = 0;

    Rational f_time() const { return Rational(time_halves, 2); }
    auto operator<=>(const UtilityProfile&) const = default;
};

struct UtilityEvaluation {
    UtilityProfile profile;
    Rational total;
    std::set<std::string> satisfied;  // subset of {"time", "load", "dev"}

    Rational f_time() const { return profile.f_time(); }
    int f_load() const { return profile.load; }
    int f_dev() const { return profile.dev; }
};

/// f_time in halves for the school's slot under `direction` (3 slots: 2/1/0 earlier, 0/1/2 later).
int time_score_halves(Direction direction, int slot, std::size_t num_slots);

Rational utility_of_profile(const UtilitySpec& spec, const UtilityProfile& p);
UtilityProfile profile_of(const UtilitySpec& spec, int school_slot, std::int64_t peak, std::int64_t dev_sum,
                          std::size_t num_schools);

UtilityEvaluation evaluate_utility(const UtilitySpec& spec, const Schedule& s, const SchoolData& data);

struct ProfileWitness {
    UtilityProfile profile;
    Schedule witness;  // lexicographically smallest schedule with this profile
};

struct OracleResult {
    Rational u_star;
    std::vector<ProfileWitness> maximizing;  // sorted by profile
    std::vector<ProfileWitness> achievable;  // every attainable profile
};

/// Exhaustive scan of all schedules.
OracleResult oracle_max(const UtilitySpec& spec, const SchoolData& data);

/// Read-mostly cache keyed by (spec id, data fingerprint). Safe for concurrent readers.
class OracleCache {
public:
    std::shared_ptr<const OracleResult> get(const UtilitySpec& spec, const SchoolData& data);
    std::size_t size() const;

private:
    mutable std::shared_mutex mutex_;
    std::map<std::pair<std::string, std::uint64_t>, std::shared_ptr<const OracleResult>> entries_;
};

struct CheckFeedback {
    FeedbackStyle style = FeedbackStyle::Binary;
    bool is_max = false;
    // rich only
    Rational total;
    Rational u_star;
    std::set<std::string> satisfied;
    std::set<std::string> unsatisfied;
    std::vector<std::string> guidance;

    /// Binary style serializes only {"is_max": bool}.
    nlohmann::json to_json() const;
};

CheckFeedback check_utility(const UtilitySpec& spec, const Schedule& s, FeedbackStyle style, const SchoolData& data,
                            const OracleResult& oracle);

/// Parses a check_utility `start_times` argument: {"<full school name>": "<slot label>"}.
/// Throws std::invalid_argument ("... is not a standardized time") for any other time.
Schedule parse_start_times(const nlohmann::json& start_times, const SchoolData& data);

/// pi = U / U*. Throws std::invalid_argument when u_star <= 0.
Rational score(const Rational& utility, const Rational& u_star);
Rational score(const UtilitySpec& spec, const Schedule& s, const SchoolData& data, const OracleResult& oracle);

/// Threshold in hundreds with at least one decimal ("25.0").
std::string format_hundreds(const Rational& v);

}  // namespace schoolopt
