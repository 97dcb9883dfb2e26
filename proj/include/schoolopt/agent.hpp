#pragma once

#include "schoolopt/chat.hpp"
#include "schoolopt/dataset.hpp"
#include "schoolopt/toolkit.hpp"
#include "schoolopt/utility.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace schoolopt {

struct RuntimeLimits {
    int max_tool_iterations = 8;  // provider responses with tool calls per turn
    int max_repairs = 1;          // schema-error round-trips per turn before the turn fails
};

/// A turn that cannot complete (persistent malformed tool arguments).
class TurnError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Receives (actor, type, payload) for every message and tool result.
using EventSink = std::function<void(const std::string&, const std::string&, nlohmann::json)>;

struct ExecutedTool {
    ToolCall call;
    ToolResult result;
};

struct AgentTurnResult {
    std::string visible_text;
    std::vector<ExecutedTool> executed_tools;
    std::vector<Schedule> schedules_presented;  // only from optimal call_solver results
    int solver_calls = 0;
    int repairs = 0;
    bool hit_iteration_cap = false;
};

/// The tool-based optimization agent: an LLM editing and solving the model.
class OptimizationAgent {
public:
    OptimizationAgent(std::shared_ptr<Provider> provider, const SchoolData& data, std::string conversation_id,
                      RuntimeLimits limits = {});

    const SolveResult& default_solution() const noexcept { return default_solution_; }
    const std::string& opening() const noexcept { return opening_; }
    const ModelState& model() const noexcept { return model_; }
    const std::vector<ChatMessage>& history() const noexcept { return history_; }
    int turns() const noexcept { return turns_; }

    /// One reply to `incoming`: chat, execute any tool calls, repeat until plain text
    /// or the iteration cap. Provider errors propagate; the history keeps what happened.
    AgentTurnResult run_turn(const std::string& incoming, const EventSink& sink = {});

private:
    std::shared_ptr<Provider> provider_;
    const SchoolData* data_;
    std::string conversation_id_;
    RuntimeLimits limits_;
    ModelState model_;
    SolveResult default_solution_;
    std::string opening_;
    std::vector<ChatMessage> history_;
    int turns_ = 0;
};

struct UtilityCheck {
    Schedule schedule;
    CheckFeedback feedback;
    Rational total;  // harness bookkeeping; never shown to the agent in binary style
    bool is_max = false;
};

struct DecisionTurnResult {
    std::string text;  // reply with the end marker removed
    std::string raw;
    bool ended = false;
    std::vector<UtilityCheck> checks;        // harness checks of presented schedules
    std::vector<UtilityCheck> agent_checks;  // checks the agent requested itself
};

/// A simulated stakeholder with a hidden utility.
class DecisionAgent {
public:
    DecisionAgent(std::shared_ptr<Provider> provider, DecisionAgentConfig config, const SchoolData& data,
                  std::shared_ptr<const OracleResult> oracle, const SolveResult& default_solution,
                  std::string conversation_id, RuntimeLimits limits = {});

    const DecisionAgentConfig& config() const noexcept { return config_; }
    const OracleResult& oracle() const noexcept { return *oracle_; }
    const std::vector<ChatMessage>& history() const noexcept { return history_; }
    int turns() const noexcept { return turns_; }

    /// Checks every presented schedule, appends the results as tool output, then asks
    /// the agent for its reply.
    DecisionTurnResult run_turn(const std::string& incoming, const std::vector<Schedule>& presented,
                                const EventSink& sink = {});

    /// Harness checks without requesting a reply (closing evaluation in one-shot mode).
    std::vector<UtilityCheck> evaluate(const std::vector<Schedule>& presented, const EventSink& sink = {}) const;

private:
    UtilityCheck check(const Schedule& s) const;

    std::shared_ptr<Provider> provider_;
    DecisionAgentConfig config_;
    const SchoolData* data_;
    std::shared_ptr<const OracleResult> oracle_;
    std::string conversation_id_;
    RuntimeLimits limits_;
    std::vector<ChatMessage> history_;
    int turns_ = 0;
};

/// Whether `text` contains the end marker as a whole token.
bool contains_end_marker(std::string_view text);
/// Removes every whole-token end marker and trims surrounding whitespace.
std::string strip_end_marker(std::string_view text);

nlohmann::json tool_call_to_json(const ToolCall& c);

}  // namespace schoolopt
