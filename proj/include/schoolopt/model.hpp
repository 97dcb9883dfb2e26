#pragma once

#include "schoolopt/domain.hpp"
#include "schoolopt/rational.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace schoolopt {

/// Declared in alphabetical order; std::map iteration follows it.
enum class ObjectiveId { ScheduleDeviation, StudentLoadBalancing };

std::string_view to_string(ObjectiveId id);
std::optional<ObjectiveId> parse_objective(std::string_view s);

/// Raised when a ModelState violates its own invariants.
class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ConstraintKind { Fix, Forbid, Bound };

struct ConstraintInfo {
    std::string name;
    ConstraintKind kind = ConstraintKind::Fix;
    int school = 0;
    int slot = 0;
    ObjectiveId objective = ObjectiveId::ScheduleDeviation;
    Rational value;
};

/// The live optimization model. Weights are in display units: alpha multiplies
/// peak load in hundreds of students, beta multiplies the average deviation in minutes.
struct ModelState {
    Rational alpha{1};
    Rational beta{1};
    std::map<std::pair<int, int>, Rational> gamma;  // (school id, slot index) -> bonus
    std::map<int, int> fixed;                       // school id -> slot index
    std::set<std::pair<int, int>> forbidden;        // (school id, slot index)
    std::map<ObjectiveId, Rational> bounds;         // upper bounds, display units

    bool operator==(const ModelState&) const = default;

    /// Every active constraint, in summary order: fixes by school, forbids by
    /// (school, slot), bounds by objective id.
    std::vector<ConstraintInfo> constraints(const SchoolData& data) const;
};

/// Naming scheme addressed by remove_constraint.
std::string fix_constraint_name(const SchoolData& data, int school);
std::string forbid_constraint_name(const SchoolData& data, int school, int slot);
std::string bound_constraint_name(ObjectiveId id);

ModelState default_model();

/// Throws ModelError when fixes and forbids contradict or values are out of range.
void validate_model(const ModelState& m, const SchoolData& data);

enum class SolveStatus { Optimal, Infeasible };

struct ViolatedBound {
    ObjectiveId objective;
    Rational requested;
    Rational min_achievable;
};

struct InfeasibilityReport {
    std::vector<ViolatedBound> violated_bounds;
};

struct SolveResult {
    SolveStatus status = SolveStatus::Infeasible;
    std::optional<Schedule> schedule;
    Rational objective_value;
    std::optional<ScheduleFeatures> features;
    InfeasibilityReport infeasibility;
};

/// Exact minimum of alpha*peak_hundreds + beta*avg_deviation - sum(gamma) over the
/// schedules admitted by fixes, forbids and bounds. Ties go to the
/// lexicographically smallest assignment. Throws InfeasibleSpaceError if some
/// school has every slot forbidden.
SolveResult solve(const ModelState& m, const SchoolData& data);

/// Minimum of one objective (display units) honoring fixes, forbids and the other
/// objective's bound; the objective's own bound is ignored.
Rational min_achievable(ObjectiveId objective, const ModelState& m, const SchoolData& data);

/// Objective value of a specific schedule under the model's weights.
Rational objective_value(const ModelState& m, const Schedule& s, const ScheduleFeatures& f);

/// Whether `s` honors every fix, forbid and bound of `m`.
bool satisfies(const ModelState& m, const Schedule& s, const ScheduleFeatures& f);

std::string model_summary(const ModelState& m, const SchoolData& data);

/// Reads back fixes, forbids, bounds and weights from a model_summary text.
ModelState parse_model_summary(const std::string& summary, const SchoolData& data);

/// Canonical JSON (sorted keys, rationals as exact strings).
nlohmann::json model_to_json(const ModelState& m, const SchoolData& data);
ModelState model_from_json(const nlohmann::json& j, const SchoolData& data);

/// Accepts a JSON number or a string such as "24.53" or "1/3".
Rational rational_from_json(const nlohmann::json& j);

nlohmann::json schedule_to_json(const Schedule& s, const SchoolData& data);
/// Accepts {"<school name>": "<slot label>", ...} or [slot, slot, ...].
Schedule schedule_from_json(const nlohmann::json& j, const SchoolData& data);

nlohmann::json solve_result_to_json(const SolveResult& r, const SchoolData& data);

}  // namespace schoolopt
