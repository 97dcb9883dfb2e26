#pragma once

#include "schoolopt/model.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>

namespace schoolopt {

enum class ToolName { FixStartTime, ChangeObjectiveWeight, AddObjectiveUpperBound, RemoveConstraint, CallSolver };

std::string_view to_string(ToolName t);
/// Also accepts `add_objective_constraint` as an alias for the bound tool.
std::optional<ToolName> parse_tool_name(std::string_view s);

enum class FixType { Fix, Forbid };

struct ToolCall {
    std::string id;
    std::string name;
    nlohmann::json arguments = nlohmann::json::object();

    bool operator==(const ToolCall&) const = default;
};

struct ToolResult {
    bool ok = false;
    /// Arguments did not match the tool schema (unknown tool, missing or mistyped field).
    bool schema_error = false;
    std::string message;
    std::string model_summary;
    std::optional<SolveResult> solve_result;

    /// Text returned to the LLM as the tool message.
    std::string to_tool_content() const;
};

ToolResult fix_start_time(ModelState& m, const SchoolData& data, const std::string& school, const std::string& time,
                          FixType type);
ToolResult change_objective_weight(ModelState& m, const SchoolData& data, ObjectiveId objective, const Rational& w);
ToolResult add_objective_upper_bound(ModelState& m, const SchoolData& data, ObjectiveId objective,
                                     const Rational& v);
ToolResult remove_constraint(ModelState& m, const SchoolData& data, const std::string& name);
ToolResult call_solver(const ModelState& m, const SchoolData& data);

/// Validates `call.arguments` against the named tool's schema and runs it.
ToolResult execute_tool(ModelState& m, const SchoolData& data, const ToolCall& call);

/// Function-calling descriptors in chat-completions `tools` format.
nlohmann::json optimization_tool_schemas();

/// "25.65 (2,565 students)" or "8.5 minutes".
std::string objective_display(ObjectiveId id, const Rational& v);

/// "2,565"
std::string format_thousands(std::int64_t v);

/// Schedule table followed by both objective lines.
std::string render_solution(const Schedule& s, const ScheduleFeatures& f, const SchoolData& data);
std::string render_infeasibility(const InfeasibilityReport& report, const SchoolData& data);

}  // namespace schoolopt
