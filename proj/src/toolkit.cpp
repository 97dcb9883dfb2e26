#include "schoolopt/toolkit.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace schoolopt {

namespace {

constexpr std::string_view kLe = "\xE2\x89\xA4";

ToolResult finish(bool ok, std::string message, const ModelState& m, const SchoolData& data) {
    ToolResult r;
    r.ok = ok;
    r.message = std::move(message);
    r.model_summary = model_summary(m, data);
    return r;
}

std::set<std::string> words(std::string_view s) {
    std::set<std::string> out;
    std::string cur;
    for (char c : s) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!cur.empty()) {
            out.insert(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.insert(std::move(cur));
    return out;
}

std::string school_suggestions(const SchoolData& data, std::string_view query) {
    const auto q = words(query);
    std::vector<std::string> hits;
    for (const auto& s : data.schools()) {
        const auto w = words(s.name);
        if (std::any_of(q.begin(), q.end(), [&](const std::string& x) { return x.size() > 1 && w.count(x); })) {
            hits.push_back(s.name);
        }
    }
    if (hits.empty()) {
        for (const auto& s : data.schools()) hits.push_back(s.name);
    }
    std::string out;
    for (const auto& h : hits) out += (out.empty() ? "" : "; ") + h;
    return out;
}

std::string slot_list(const SchoolData& data) {
    std::string out;
    for (const auto& t : data.slots()) out += (out.empty() ? "" : ", ") + t.label;
    return out;
}

struct SchemaError {
    std::string message;
};

const nlohmann::json& require(const nlohmann::json& args, const char* key) {
    if (!args.is_object() || !args.contains(key)) throw SchemaError{std::string("missing argument '") + key + "'"};
    return args.at(key);
}

std::string require_string(const nlohmann::json& args, const char* key) {
    const auto& v = require(args, key);
    if (!v.is_string()) throw SchemaError{std::string("argument '") + key + "' must be a string"};
    return v.get<std::string>();
}

Rational require_number(const nlohmann::json& args, const char* key) {
    const auto& v = require(args, key);
    try {
        if (v.is_number() || v.is_string()) return rational_from_json(v);
    } catch (const std::exception&) {
    }
    throw SchemaError{std::string("argument '") + key + "' must be a number"};
}

ObjectiveId require_objective(const nlohmann::json& args) {
    const auto s = require_string(args, "objective");
    const auto id = parse_objective(s);
    if (!id) {
        throw SchemaError{"unknown objective '" + s + "'; expected student_load_balancing or schedule_deviation"};
    }
    return *id;
}

}  // namespace

std::string objective_display(ObjectiveId id, const Rational& v) {
    if (id == ObjectiveId::StudentLoadBalancing) {
        const Rational students = v * 100;
        return to_string(v) + " (" +
               (students.denominator() == 1 ? format_thousands(students.numerator()) : to_string(students)) +
               " students)";
    }
    return to_string(v) + " minutes";
}

std::string_view to_string(ToolName t) {
    switch (t) {
        case ToolName::FixStartTime: return "fix_start_time";
        case ToolName::ChangeObjectiveWeight: return "change_objective_weight";
        case ToolName::AddObjectiveUpperBound: return "add_objective_upper_bound";
        case ToolName::RemoveConstraint: return "remove_constraint";
        case ToolName::CallSolver: return "call_solver";
    }
    return "?";
}

std::optional<ToolName> parse_tool_name(std::string_view s) {
    for (auto t : {ToolName::FixStartTime, ToolName::ChangeObjectiveWeight, ToolName::AddObjectiveUpperBound,
                   ToolName::RemoveConstraint, ToolName::CallSolver}) {
        if (s == to_string(t)) return t;
    }
    if (s == "add_objective_constraint") return ToolName::AddObjectiveUpperBound;
    return std::nullopt;
}

std::string ToolResult::to_tool_content() const {
    std::string out = ok ? message : "Error: " + message;
    out += "\n\nCurrent model summary:\n" + model_summary;
    return out;
}

std::string format_thousands(std::int64_t v) {
    std::string digits = std::to_string(v < 0 ? -v : v);
    std::string out;
    for (std::size_t i = 0; i < digits.size(); ++i) {
        if (i > 0 && (digits.size() - i) % 3 == 0) out.push_back(',');
        out.push_back(digits[i]);
    }
    return v < 0 ? "-" + out : out;
}

std::string render_solution(const Schedule& s, const ScheduleFeatures& f, const SchoolData& data) {
    std::ostringstream out;
    out << "| School Name | Proposed Start |\n| --- | --- |\n";
    for (const auto& school : data.schools()) {
        out << "| " << school.name << " | " << data.slot(s.slot_of(school.id)).label << " |\n";
    }
    out << "\n- Student Load Balancing: " << objective_display(ObjectiveId::StudentLoadBalancing, f.peak_load_hundreds())
        << "\n- Schedule Deviation: " << objective_display(ObjectiveId::ScheduleDeviation, f.avg_deviation()) << "\n";
    return out.str();
}

std::string render_infeasibility(const InfeasibilityReport& report, const SchoolData&) {
    std::ostringstream out;
    out << "The solver found no schedule that satisfies every active constraint.\n";
    for (const auto& v : report.violated_bounds) {
        const bool load = v.objective == ObjectiveId::StudentLoadBalancing;
        out << "- " << to_string(v.objective) << ' ' << kLe << ' ' << to_string(v.requested)
            << " cannot be met: with the other active constraints the lowest achievable "
            << (load ? "student load balancing" : "schedule deviation") << " is "
            << objective_display(v.objective, v.min_achievable) << ".\n";
    }
    if (report.violated_bounds.empty()) {
        out << "- The fixed and forbidden start times leave no admissible schedule.\n";
    }
    out << "Relax or remove a constraint before making further adjustments.\n";
    return out.str();
}

ToolResult fix_start_time(ModelState& m, const SchoolData& data, const std::string& school, const std::string& time,
                          FixType type) {
    const int q = data.find_school(school);
    if (!q) {
        return finish(false, "Unknown school '" + school + "'. Did you mean one of: " + school_suggestions(data, school),
                      m, data);
    }
    const int t = data.find_slot(time);
    if (!t) {
        return finish(false, "Unknown start time '" + time + "'. Valid start times are: " + slot_list(data), m, data);
    }
    const auto& name = data.school(q).name;
    const auto& label = data.slot(t).label;

    if (type == FixType::Fix) {
        std::vector<std::string> removed;
        if (auto it = m.fixed.find(q); it != m.fixed.end()) {
            if (it->second == t) return finish(true, name + " is already fixed to " + label + ".", m, data);
            removed.push_back(fix_constraint_name(data, q));
        }
        for (auto it = m.forbidden.begin(); it != m.forbidden.end();) {
            if (it->first == q) {
                removed.push_back(forbid_constraint_name(data, q, it->second));
                it = m.forbidden.erase(it);
            } else {
                ++it;
            }
        }
        m.fixed[q] = t;
        std::string msg = "Fixed " + name + " to start at " + label + " (constraint " + fix_constraint_name(data, q) + ").";
        if (!removed.empty()) {
            msg += " Removed conflicting constraints:";
            for (const auto& r : removed) msg += " " + r + ";";
            msg.pop_back();
            msg += ".";
        }
        return finish(true, msg, m, data);
    }

    std::size_t already = 0;
    for (const auto& [school_id, slot] : m.forbidden) already += school_id == q && slot != t;
    if (already + 1 >= data.num_slots() && !m.forbidden.count({q, t})) {
        return finish(false,
                      "Cannot forbid " + label + " for " + name +
                          ": every other start time is already forbidden, so the school would have no start time. "
                          "Fix the school to a start time or remove one of its forbid constraints instead.",
                      m, data);
    }
    std::string msg;
    if (auto it = m.fixed.find(q); it != m.fixed.end() && it->second == t) {
        m.fixed.erase(it);
        msg = "Removed conflicting constraint " + fix_constraint_name(data, q) + ". ";
    }
    m.forbidden.insert({q, t});
    msg += "Forbade " + name + " from starting at " + label + " (constraint " + forbid_constraint_name(data, q, t) + ").";
    return finish(true, msg, m, data);
}

ToolResult change_objective_weight(ModelState& m, const SchoolData& data, ObjectiveId objective, const Rational& w) {
    if (w < 0) return finish(false, "Objective weights must be non-negative.", m, data);
    (objective == ObjectiveId::StudentLoadBalancing ? m.alpha : m.beta) = w;
    return finish(true, "Set the weight on " + std::string(to_string(objective)) + " to " + to_string(w) + ".", m, data);
}

ToolResult add_objective_upper_bound(ModelState& m, const SchoolData& data, ObjectiveId objective,
                                     const Rational& v) {
    if (v < 0) return finish(false, "Upper bounds must be non-negative.", m, data);
    std::string msg;
    if (auto it = m.bounds.find(objective); it != m.bounds.end()) {
        msg = "Replaced the previous bound " + std::string(to_string(objective)) + " " + std::string(kLe) + " " +
              to_string(it->second) + ". ";
    }
    m.bounds[objective] = v;
    msg += "Imposed " + std::string(to_string(objective)) + " " + std::string(kLe) + " " + to_string(v) +
           " (constraint " + bound_constraint_name(objective) + ").";
    return finish(true, msg, m, data);
}

ToolResult remove_constraint(ModelState& m, const SchoolData& data, const std::string& name) {
    for (const auto& c : m.constraints(data)) {
        if (c.name != name) continue;
        switch (c.kind) {
            case ConstraintKind::Fix: m.fixed.erase(c.school); break;
            case ConstraintKind::Forbid: m.forbidden.erase({c.school, c.slot}); break;
            case ConstraintKind::Bound: m.bounds.erase(c.objective); break;
        }
        return finish(true, "Removed constraint " + name + ".", m, data);
    }
    std::string active;
    for (const auto& c : m.constraints(data)) active += (active.empty() ? "" : ", ") + c.name;
    return finish(false,
                  "No constraint named '" + name + "'. Active constraints: " + (active.empty() ? "none" : active) + ".",
                  m, data);
}

ToolResult call_solver(const ModelState& m, const SchoolData& data) {
    SolveResult result;
    try {
        result = solve(m, data);
    } catch (const InfeasibleSpaceError& e) {
        return finish(false, std::string("The model has no admissible schedule: ") + e.what() + ".", m, data);
    } catch (const ModelError& e) {
        return finish(false, std::string("The model is inconsistent: ") + e.what() + ".", m, data);
    }
    ToolResult r;
    if (result.status == SolveStatus::Optimal) {
        r = finish(true, "Solver status: optimal\n\n" + render_solution(*result.schedule, *result.features, data), m,
                   data);
    } else {
        r = finish(true, "Solver status: infeasible\n\n" + render_infeasibility(result.infeasibility, data), m, data);
    }
    r.solve_result = std::move(result);
    return r;
}

ToolResult execute_tool(ModelState& m, const SchoolData& data, const ToolCall& call) {
    const auto tool = parse_tool_name(call.name);
    try {
        if (!tool) throw SchemaError{"unknown tool '" + call.name + "'"};
        switch (*tool) {
            case ToolName::FixStartTime: {
                const auto school = require_string(call.arguments, "school");
                const auto time = require_string(call.arguments, "time");
                const auto type = call.arguments.contains("type") ? require_string(call.arguments, "type") : "fix";
                if (type != "fix" && type != "forbid") throw SchemaError{"argument 'type' must be 'fix' or 'forbid'"};
                return fix_start_time(m, data, school, time, type == "fix" ? FixType::Fix : FixType::Forbid);
            }
            case ToolName::ChangeObjectiveWeight:
                return change_objective_weight(m, data, require_objective(call.arguments),
                                               require_number(call.arguments, "weight"));
            case ToolName::AddObjectiveUpperBound:
                return add_objective_upper_bound(m, data, require_objective(call.arguments),
                                                 require_number(call.arguments, "value"));
            case ToolName::RemoveConstraint:
                return remove_constraint(m, data, require_string(call.arguments, "name"));
            case ToolName::CallSolver:
                return call_solver(m, data);
        }
    } catch (const SchemaError& e) {
        ToolResult r = finish(false, "Invalid arguments for " + call.name + ": " + e.message, m, data);
        r.schema_error = true;
        return r;
    }
    return finish(false, "unreachable", m, data);
}

nlohmann::json optimization_tool_schemas() {
    using nlohmann::json;
    const json objective = {{"type", "string"},
                            {"enum", {"student_load_balancing", "schedule_deviation"}},
                            {"description", "Objective id."}};
    auto fn = [](const char* name, const char* description, json properties, json required) {
        return json{{"type", "function"},
                    {"function",
                     {{"name", name},
                      {"description", description},
                      {"parameters",
                       {{"type", "object"}, {"properties", std::move(properties)}, {"required", std::move(required)}}}}}};
    };
    json tools = json::array();
    tools.push_back(fn("fix_start_time",
                       "Fixes or forbids a school's start time. Fixing automatically removes any conflicting "
                       "constraints for the given school.",
                       {{"school", {{"type", "string"}, {"description", "Full school name."}}},
                        {"time", {{"type", "string"}, {"enum", {"7:50 AM", "8:40 AM", "9:30 AM"}}}},
                        {"type", {{"type", "string"}, {"enum", {"fix", "forbid"}}}}},
                       {"school", "time", "type"}));
    tools.push_back(fn("change_objective_weight",
                       "Adjusts the weight on one objective (alpha for student_load_balancing, beta for "
                       "schedule_deviation).",
                       {{"objective", objective}, {"weight", {{"type", "number"}, {"minimum", 0}}}},
                       {"objective", "weight"}));
    tools.push_back(fn("add_objective_upper_bound",
                       "Imposes an upper bound on an objective value (hundreds of students for "
                       "student_load_balancing, minutes for schedule_deviation). Replaces any existing bound on the "
                       "same objective.",
                       {{"objective", objective}, {"value", {{"type", "number"}, {"minimum", 0}}}},
                       {"objective", "value"}));
    tools.push_back(fn("remove_constraint", "Removes an existing constraint by name to undo previous modifications.",
                       {{"name", {{"type", "string"}}}}, {"name"}));
    tools.push_back(fn("call_solver", "Solves the current model and returns the proposed schedule and objective values.",
                       json::object(), json::array()));
    return tools;
}

}  // namespace schoolopt
