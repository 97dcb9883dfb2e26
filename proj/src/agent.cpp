#include "schoolopt/agent.hpp"

#include "schoolopt/prompts.hpp"

#include <cctype>

namespace schoolopt {

namespace {

void emit(const EventSink& sink, const std::string& actor, const std::string& type, nlohmann::json payload) {
    if (sink) sink(actor, type, std::move(payload));
}

nlohmann::json calls_json(const std::vector<ToolCall>& calls) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& c : calls) a.push_back(tool_call_to_json(c));
    return a;
}

bool token_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::vector<std::size_t> marker_positions(std::string_view text) {
    std::vector<std::size_t> out;
    for (auto pos = text.find(kEndMarker); pos != std::string_view::npos; pos = text.find(kEndMarker, pos + 1)) {
        const auto end = pos + kEndMarker.size();
        const bool left = pos == 0 || !token_char(text[pos - 1]);
        const bool right = end == text.size() || !token_char(text[end]);
        if (left && right) out.push_back(pos);
    }
    return out;
}

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

nlohmann::json start_times_json(const Schedule& s, const SchoolData& data) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& school : data.schools()) j[school.name] = data.slot(s.slot_of(school.id)).label;
    return j;
}

}  // namespace

nlohmann::json tool_call_to_json(const ToolCall& c) {
    return {{"id", c.id}, {"name", c.name}, {"arguments", c.arguments}};
}

bool contains_end_marker(std::string_view text) { return !marker_positions(text).empty(); }

std::string strip_end_marker(std::string_view text) {
    std::string out(text);
    const auto positions = marker_positions(text);
    for (auto it = positions.rbegin(); it != positions.rend(); ++it) out.erase(*it, kEndMarker.size());
    return trim(out);
}

OptimizationAgent::OptimizationAgent(std::shared_ptr<Provider> provider, const SchoolData& data,
                                     std::string conversation_id, RuntimeLimits limits)
    : provider_(std::move(provider)),
      data_(&data),
      conversation_id_(std::move(conversation_id)),
      limits_(limits),
      model_(default_model()) {
    default_solution_ = solve(model_, data);
    opening_ = render_opening(data, default_solution_);
    history_.push_back(system_message(build_optimization_prompt(data, default_solution_)));
    history_.push_back(assistant_message(opening_));
}

AgentTurnResult OptimizationAgent::run_turn(const std::string& incoming, const EventSink& sink) {
    ++turns_;
    history_.push_back(user_message(incoming));
    const nlohmann::json tools = optimization_tool_schemas();
    AgentTurnResult result;
    std::string last_text;
    int tool_rounds = 0;

    for (int step = 1;; ++step) {
        if (tool_rounds >= limits_.max_tool_iterations) {
            result.hit_iteration_cap = true;
            result.visible_text = last_text.empty()
                                      ? "I'm sorry, I wasn't able to finish working through that request. Could you "
                                        "rephrase it or tell me which change matters most to you?"
                                      : last_text;
            emit(sink, "harness", "tool_iteration_cap", {{"turn", turns_}, {"cap", limits_.max_tool_iterations}});
            history_.push_back(assistant_message(result.visible_text));
            break;
        }
        ChatMessage reply = provider_->chat({conversation_id_, turns_, step}, history_, tools);
        reply.role = Role::Assistant;
        history_.push_back(reply);
        emit(sink, "optimization", "assistant",
             {{"turn", turns_}, {"step", step}, {"content", reply.content}, {"tool_calls", calls_json(reply.tool_calls)}});
        if (!reply.content.empty()) last_text = reply.content;
        if (reply.tool_calls.empty()) {
            result.visible_text = reply.content;
            break;
        }
        ++tool_rounds;
        bool schema_failure = false;
        std::string schema_message;
        for (const auto& call : reply.tool_calls) {
            ToolResult r = execute_tool(model_, *data_, call);
            if (r.schema_error) {
                schema_failure = true;
                schema_message = r.message;
            }
            const bool solver = parse_tool_name(call.name) == ToolName::CallSolver && !r.schema_error;
            if (solver) ++result.solver_calls;
            nlohmann::json payload = {{"turn", turns_}, {"tool_call_id", call.id}, {"name", call.name},
                                      {"ok", r.ok},     {"content", r.to_tool_content()}};
            if (solver && r.solve_result && r.solve_result->status == SolveStatus::Optimal) {
                result.schedules_presented.push_back(*r.solve_result->schedule);
                payload["schedule"] = schedule_to_json(*r.solve_result->schedule, *data_);
            }
            if (solver) payload["status"] = r.solve_result && r.solve_result->status == SolveStatus::Optimal
                                                ? "optimal"
                                                : (r.ok ? "infeasible" : "error");
            history_.push_back(tool_message(call.id, r.to_tool_content()));
            emit(sink, "tool", "tool_result", std::move(payload));
            result.executed_tools.push_back({call, std::move(r)});
        }
        if (schema_failure) {
            if (++result.repairs > limits_.max_repairs) {
                throw TurnError("tool arguments still invalid after " + std::to_string(limits_.max_repairs) +
                                " repair attempt(s): " + schema_message);
            }
        }
    }
    return result;
}

DecisionAgent::DecisionAgent(std::shared_ptr<Provider> provider, DecisionAgentConfig config, const SchoolData& data,
                             std::shared_ptr<const OracleResult> oracle, const SolveResult& default_solution,
                             std::string conversation_id, RuntimeLimits limits)
    : provider_(std::move(provider)),
      config_(std::move(config)),
      data_(&data),
      oracle_(std::move(oracle)),
      conversation_id_(std::move(conversation_id)),
      limits_(limits) {
    if (oracle_->u_star <= 0) throw std::invalid_argument("utility " + config_.utility.id + " has no positive maximum");
    history_.push_back(system_message(build_decision_prompt(config_, data, default_solution, oracle_->u_star)));
}

UtilityCheck DecisionAgent::check(const Schedule& s) const {
    UtilityCheck c;
    c.schedule = s;
    c.feedback = check_utility(config_.utility, s, config_.feedback_style, *data_, *oracle_);
    c.total = evaluate_utility(config_.utility, s, *data_).total;
    c.is_max = c.total == oracle_->u_star;
    return c;
}

std::vector<UtilityCheck> DecisionAgent::evaluate(const std::vector<Schedule>& presented, const EventSink& sink) const {
    std::vector<UtilityCheck> out;
    for (const auto& s : presented) {
        out.push_back(check(s));
        emit(sink, "harness", "utility_check",
             {{"turn", turns_},
              {"source", "harness"},
              {"schedule", schedule_to_json(s, *data_)},
              {"feedback", out.back().feedback.to_json()}});
    }
    return out;
}

DecisionTurnResult DecisionAgent::run_turn(const std::string& incoming, const std::vector<Schedule>& presented,
                                           const EventSink& sink) {
    ++turns_;
    history_.push_back(user_message(incoming));
    DecisionTurnResult result;

    if (!presented.empty()) {
        std::vector<ToolCall> calls;
        for (std::size_t k = 0; k < presented.size(); ++k) {
            calls.push_back({"check_" + std::to_string(turns_) + "_" + std::to_string(k + 1), "check_utility",
                             {{"start_times", start_times_json(presented[k], *data_)}}});
        }
        history_.push_back(assistant_message("", calls));
        result.checks = evaluate(presented, sink);
        for (std::size_t k = 0; k < presented.size(); ++k) {
            history_.push_back(tool_message(calls[k].id, result.checks[k].feedback.to_json().dump()));
        }
    }

    const nlohmann::json tools = check_utility_schema(config_.feedback_style);
    int tool_rounds = 0;
    for (int step = 1;; ++step) {
        ChatMessage reply = provider_->chat({conversation_id_, turns_, step}, history_, tools);
        reply.role = Role::Assistant;
        history_.push_back(reply);
        emit(sink, "decision", "assistant",
             {{"turn", turns_}, {"step", step}, {"content", reply.content}, {"tool_calls", calls_json(reply.tool_calls)}});
        if (reply.tool_calls.empty()) {
            result.raw = reply.content;
            break;
        }
        if (++tool_rounds > limits_.max_tool_iterations) {
            // Answer the dangling calls so the history stays well formed.
            for (const auto& call : reply.tool_calls) {
                history_.push_back(tool_message(call.id, "Error: tool-call limit reached for this turn"));
            }
            emit(sink, "harness", "tool_iteration_cap", {{"turn", turns_}, {"actor", "decision"}});
            result.raw = reply.content;
            break;
        }
        for (const auto& call : reply.tool_calls) {
            std::string content;
            nlohmann::json payload = {{"turn", turns_}, {"source", "agent"}, {"tool_call_id", call.id}};
            try {
                if (call.name != "check_utility") throw std::invalid_argument("unknown tool '" + call.name + "'");
                if (!call.arguments.is_object() || !call.arguments.contains("start_times")) {
                    throw std::invalid_argument("missing argument 'start_times'");
                }
                const Schedule s = parse_start_times(call.arguments["start_times"], *data_);
                UtilityCheck c = check(s);
                content = c.feedback.to_json().dump();
                payload["schedule"] = schedule_to_json(s, *data_);
                payload["feedback"] = c.feedback.to_json();
                result.agent_checks.push_back(std::move(c));
            } catch (const std::invalid_argument& e) {
                content = std::string("Error: ") + e.what();
                payload["error"] = e.what();
            }
            history_.push_back(tool_message(call.id, content));
            emit(sink, "tool", "utility_check", std::move(payload));
        }
    }
    result.ended = contains_end_marker(result.raw);
    result.text = strip_end_marker(result.raw);
    emit(sink, "decision", "message", {{"turn", turns_}, {"text", result.text}, {"end_marker", result.ended}});
    return result;
}

}  // namespace schoolopt
