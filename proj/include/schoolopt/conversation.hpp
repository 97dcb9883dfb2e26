#pragma once

#include "schoolopt/agent.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace schoolopt {

enum class ConversationMode { Conversation, OneShot, AwareOneShot };

std::string_view to_string(ConversationMode m);
/// Accepts "conversation", "one_shot"/"one-shot", "aware_one_shot"/"aware-one-shot".
ConversationMode parse_mode(std::string_view s);

struct ConversationConfig {
    ConversationMode mode = ConversationMode::Conversation;
    int max_decision_turns = 20;
    std::string design = "tpp";
    std::string dataset_id = "adhoc";
    ProviderConfig optimization_provider;
    ProviderConfig decision_provider;
    std::uint64_t rng_seed = 0;
    RuntimeLimits limits;

    void validate() const;
    /// 1 in the one-shot modes.
    int turn_cap() const;
};

/// Run configuration file: `{"optimization": provider, "decision": provider,
/// "max_decision_turns"?, "max_tool_iterations"?, "max_repairs"?, "design"?, "dataset_id"?}`.
ConversationConfig conversation_config_from_json(const nlohmann::json& j);
nlohmann::json conversation_config_to_json(const ConversationConfig& c);
/// Reads a run configuration file; relative script paths resolve against its directory.
ConversationConfig load_conversation_config(const std::string& path);
/// Resolves a relative script path against `base_dir`.
void resolve_script_path(ProviderConfig& c, const std::string& base_dir);

enum class Termination { MaxUtilityReached, AgentEnded, TurnCap, Error };

std::string_view to_string(Termination t);
Termination parse_termination(std::string_view s);

struct ConversationOutcome {
    Termination termination = Termination::Error;
    std::optional<Schedule> best_schedule;
    Rational best_utility;
    Rational u_star;
    Rational pi;
    bool success = false;
    int decision_turns = 0;
    int optimization_turns = 0;
    int solver_calls = 0;
    std::string error;
};

nlohmann::json outcome_to_json(const ConversationOutcome& o, const SchoolData& data);
ConversationOutcome outcome_from_json(const nlohmann::json& j, const SchoolData& data);

struct TranscriptEvent {
    std::size_t seq = 0;
    std::string actor;  // decision, optimization, tool, harness
    std::string type;
    nlohmann::json payload;
};

struct Transcript {
    std::string conversation_id;
    nlohmann::json header;
    std::vector<TranscriptEvent> events;
    ConversationOutcome outcome;
};

/// Priority: max utility reached, then the end marker, then the turn cap.
std::optional<Termination> detect_termination(bool max_reached, bool end_marker, int decision_turns, int turn_cap);

/// `<dataset>__<agent>__<design>__<mode>`
std::string conversation_id(const std::string& dataset_id, const std::string& agent_id, const std::string& design,
                            ConversationMode mode);

/// Runs one full protocol. Provider failures end the conversation with
/// termination=error and keep the partial transcript.
Transcript run_conversation(const ConversationConfig& cfg, const DecisionAgentConfig& agent, const SchoolData& data,
                            std::shared_ptr<Provider> optimization, std::shared_ptr<Provider> decision,
                            OracleCache& oracles);

/// Header line, one line per event, outcome line last.
std::string transcript_to_jsonl(const Transcript& t, const SchoolData& data);
Transcript transcript_from_jsonl(const std::string& text, const SchoolData& data);

/// Writes `<conversation id>.jsonl` under `dir` and returns its path.
std::string persist_transcript(const Transcript& t, const std::string& dir, const SchoolData& data);
Transcript load_transcript(const std::string& path, const SchoolData& data);

/// Recomputes best utility and pi from the transcript's harness checks alone.
ConversationOutcome audit_outcome(const Transcript& t, const SchoolData& data);

struct BatchSummary {
    std::vector<std::string> files;
    std::vector<ConversationOutcome> outcomes;
    nlohmann::json manifest;
};

/// Runs one conversation per agent, up to `parallel` at a time, writing transcripts
/// and `run.json` into `out_dir`.
BatchSummary run_batch(const ConversationConfig& cfg, const std::vector<DecisionAgentConfig>& agents,
                       const SchoolData& data, std::shared_ptr<Provider> optimization,
                       std::shared_ptr<Provider> decision, int parallel, const std::string& out_dir);

}  // namespace schoolopt
