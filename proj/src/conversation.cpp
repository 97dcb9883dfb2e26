#include "schoolopt/conversation.hpp"

#include <atomic>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace schoolopt {

namespace fs = std::filesystem;

std::string_view to_string(ConversationMode m) {
    switch (m) {
        case ConversationMode::Conversation: return "conversation";
        case ConversationMode::OneShot: return "one_shot";
        case ConversationMode::AwareOneShot: return "aware_one_shot";
    }
    return "?";
}

ConversationMode parse_mode(std::string_view s) {
    if (s == "conversation") return ConversationMode::Conversation;
    if (s == "one_shot" || s == "one-shot") return ConversationMode::OneShot;
    if (s == "aware_one_shot" || s == "aware-one-shot") return ConversationMode::AwareOneShot;
    throw std::invalid_argument("mode must be conversation, one-shot or aware-one-shot, got '" + std::string(s) + "'");
}

void ConversationConfig::validate() const {
    if (max_decision_turns < 1) throw std::invalid_argument("max_decision_turns must be at least 1");
    if (limits.max_tool_iterations < 1) throw std::invalid_argument("max_tool_iterations must be at least 1");
    if (limits.max_repairs < 0) throw std::invalid_argument("max_repairs must be non-negative");
    if (design.empty() || dataset_id.empty()) throw std::invalid_argument("design and dataset id must be non-empty");
}

int ConversationConfig::turn_cap() const { return mode == ConversationMode::Conversation ? max_decision_turns : 1; }

ConversationConfig conversation_config_from_json(const nlohmann::json& j) {
    ConversationConfig c;
    c.optimization_provider = provider_config_from_json(j.at("optimization"));
    c.decision_provider =
        j.contains("decision") ? provider_config_from_json(j["decision"]) : c.optimization_provider;
    c.max_decision_turns = j.value("max_decision_turns", c.max_decision_turns);
    c.limits.max_tool_iterations = j.value("max_tool_iterations", c.limits.max_tool_iterations);
    c.limits.max_repairs = j.value("max_repairs", c.limits.max_repairs);
    c.design = j.value("design", c.design);
    c.dataset_id = j.value("dataset_id", c.dataset_id);
    c.rng_seed = j.value("rng_seed", c.rng_seed);
    if (j.contains("mode")) c.mode = parse_mode(j["mode"].get<std::string>());
    c.validate();
    return c;
}

nlohmann::json conversation_config_to_json(const ConversationConfig& c) {
    return {{"mode", to_string(c.mode)},
            {"max_decision_turns", c.max_decision_turns},
            {"turn_cap", c.turn_cap()},
            {"design", c.design},
            {"dataset_id", c.dataset_id},
            {"rng_seed", c.rng_seed},
            {"max_tool_iterations", c.limits.max_tool_iterations},
            {"max_repairs", c.limits.max_repairs},
            {"optimization", provider_config_to_json(c.optimization_provider)},
            {"decision", provider_config_to_json(c.decision_provider)}};
}

void resolve_script_path(ProviderConfig& c, const std::string& base_dir) {
    if (c.kind == ProviderKind::Scripted && fs::path(c.script_path).is_relative()) {
        c.script_path = (fs::path(base_dir) / c.script_path).lexically_normal().string();
    }
}

ConversationConfig load_conversation_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    ConversationConfig c = conversation_config_from_json(nlohmann::json::parse(f));
    const std::string base = fs::absolute(path).parent_path().string();
    resolve_script_path(c.optimization_provider, base);
    resolve_script_path(c.decision_provider, base);
    return c;
}

std::string_view to_string(Termination t) {
    switch (t) {
        case Termination::MaxUtilityReached: return "max_utility_reached";
        case Termination::AgentEnded: return "agent_ended";
        case Termination::TurnCap: return "turn_cap";
        case Termination::Error: return "error";
    }
    return "?";
}

Termination parse_termination(std::string_view s) {
    for (auto t : {Termination::MaxUtilityReached, Termination::AgentEnded, Termination::TurnCap, Termination::Error}) {
        if (s == to_string(t)) return t;
    }
    throw std::invalid_argument("unknown termination '" + std::string(s) + "'");
}

nlohmann::json outcome_to_json(const ConversationOutcome& o, const SchoolData& data) {
    nlohmann::json j;
    j["type"] = "outcome";
    j["termination"] = to_string(o.termination);
    j["best_schedule"] = o.best_schedule ? schedule_to_json(*o.best_schedule, data) : nlohmann::json(nullptr);
    j["best_utility"] = to_string(o.best_utility);
    j["u_star"] = to_string(o.u_star);
    j["pi"] = to_double(o.pi);
    j["pi_exact"] = to_string(o.pi);
    j["success"] = o.success;
    j["decision_turns"] = o.decision_turns;
    j["optimization_turns"] = o.optimization_turns;
    j["solver_calls"] = o.solver_calls;
    if (!o.error.empty()) j["error"] = o.error;
    return j;
}

ConversationOutcome outcome_from_json(const nlohmann::json& j, const SchoolData& data) {
    ConversationOutcome o;
    o.termination = parse_termination(j.at("termination").get<std::string>());
    if (!j.at("best_schedule").is_null()) o.best_schedule = schedule_from_json(j["best_schedule"], data);
    o.best_utility = parse_rational(j.at("best_utility").get<std::string>());
    o.u_star = parse_rational(j.at("u_star").get<std::string>());
    o.pi = parse_rational(j.at("pi_exact").get<std::string>());
    o.success = j.at("success").get<bool>();
    o.decision_turns = j.at("decision_turns").get<int>();
    o.optimization_turns = j.value("optimization_turns", 0);
    o.solver_calls = j.at("solver_calls").get<int>();
    o.error = j.value("error", std::string());
    return o;
}

std::optional<Termination> detect_termination(bool max_reached, bool end_marker, int decision_turns, int turn_cap) {
    if (max_reached) return Termination::MaxUtilityReached;
    if (end_marker) return Termination::AgentEnded;
    if (decision_turns >= turn_cap) return Termination::TurnCap;
    return std::nullopt;
}

std::string conversation_id(const std::string& dataset_id, const std::string& agent_id, const std::string& design,
                            ConversationMode mode) {
    return dataset_id + "__" + agent_id + "__" + design + "__" + std::string(to_string(mode));
}

Transcript run_conversation(const ConversationConfig& cfg, const DecisionAgentConfig& agent_in, const SchoolData& data,
                            std::shared_ptr<Provider> optimization, std::shared_ptr<Provider> decision,
                            OracleCache& oracles) {
    cfg.validate();
    DecisionAgentConfig agent = agent_in;
    if (cfg.mode == ConversationMode::AwareOneShot) agent.prompt_variant = PromptVariant::OptimizationAware;

    Transcript t;
    t.conversation_id = conversation_id(cfg.dataset_id, agent.id, cfg.design, cfg.mode);
    const auto oracle = oracles.get(agent.utility, data);
    t.header = {{"type", "header"},
                {"schema_version", 1},
                {"conversation_id", t.conversation_id},
                {"dataset_id", cfg.dataset_id},
                {"design", cfg.design},
                {"mode", to_string(cfg.mode)},
                {"config", conversation_config_to_json(cfg)},
                {"agent", agent_to_json(agent)},
                {"u_star", to_string(oracle->u_star)},
                {"data_fingerprint", std::to_string(data.fingerprint())}};

    EventSink sink = [&t](const std::string& actor, const std::string& type, nlohmann::json payload) {
        t.events.push_back({t.events.size() + 1, actor, type, std::move(payload)});
    };

    ConversationOutcome& out = t.outcome;
    out.u_star = oracle->u_star;
    bool max_reached = false;
    auto track = [&](const std::vector<UtilityCheck>& checks) {
        for (const auto& c : checks) {
            if (!out.best_schedule || c.total > out.best_utility) {
                out.best_schedule = c.schedule;
                out.best_utility = c.total;
            }
            max_reached = max_reached || c.is_max;
        }
    };

    const int cap = cfg.turn_cap();
    std::optional<Termination> termination;
    try {
        OptimizationAgent opt(optimization, data, t.conversation_id, cfg.limits);
        DecisionAgent dec(decision, agent, data, oracle, opt.default_solution(), t.conversation_id, cfg.limits);
        sink("harness", "opening",
             {{"text", opt.opening()}, {"schedule", schedule_to_json(*opt.default_solution().schedule, data)}});

        std::string incoming = opt.opening();
        std::vector<Schedule> presented{*opt.default_solution().schedule};
        while (!termination) {
            const DecisionTurnResult d = dec.run_turn(incoming, presented, sink);
            out.decision_turns = dec.turns();
            track(d.checks);

            if (cfg.mode != ConversationMode::Conversation) {
                const AgentTurnResult o = opt.run_turn(d.text, sink);
                out.optimization_turns = opt.turns();
                out.solver_calls += o.solver_calls;
                track(dec.evaluate(o.schedules_presented, sink));
                termination = detect_termination(max_reached, d.ended, out.decision_turns, cap);
                break;
            }

            termination = detect_termination(max_reached, d.ended, out.decision_turns, cap);
            if (termination) break;

            const AgentTurnResult o = opt.run_turn(d.text, sink);
            out.optimization_turns = opt.turns();
            out.solver_calls += o.solver_calls;
            incoming = o.visible_text;
            presented = o.schedules_presented;
        }
        out.termination = *termination;
    } catch (const std::exception& e) {
        out.termination = Termination::Error;
        out.error = e.what();
        sink("harness", "error", {{"message", e.what()}});
    }
    out.pi = out.best_schedule ? score(out.best_utility, out.u_star) : Rational(0);
    out.success = out.pi == Rational(1);
    return t;
}

std::string transcript_to_jsonl(const Transcript& t, const SchoolData& data) {
    std::string s = t.header.dump() + "\n";
    for (const auto& e : t.events) {
        s += nlohmann::json{{"type", "event"}, {"seq", e.seq}, {"actor", e.actor}, {"event", e.type}, {"payload", e.payload}}
                 .dump() +
             "\n";
    }
    s += outcome_to_json(t.outcome, data).dump() + "\n";
    return s;
}

Transcript transcript_from_jsonl(const std::string& text, const SchoolData& data) {
    Transcript t;
    std::istringstream in(text);
    std::string line;
    bool have_outcome = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line);
        const auto type = j.at("type").get<std::string>();
        if (type == "header") {
            t.header = j;
            t.conversation_id = j.at("conversation_id").get<std::string>();
        } else if (type == "event") {
            t.events.push_back({j.at("seq").get<std::size_t>(), j.at("actor").get<std::string>(),
                                j.at("event").get<std::string>(), j.at("payload")});
        } else if (type == "outcome") {
            t.outcome = outcome_from_json(j, data);
            have_outcome = true;
        }
    }
    if (t.header.is_null() || !have_outcome) throw std::runtime_error("transcript is missing its header or outcome");
    return t;
}

std::string persist_transcript(const Transcript& t, const std::string& dir, const SchoolData& data) {
    fs::create_directories(dir);
    const fs::path path = fs::path(dir) / (t.conversation_id + ".jsonl");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << transcript_to_jsonl(t, data);
    if (!f) throw std::runtime_error("write failed for " + path.string());
    return path.string();
}

Transcript load_transcript(const std::string& path, const SchoolData& data) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return transcript_from_jsonl(ss.str(), data);
}

ConversationOutcome audit_outcome(const Transcript& t, const SchoolData& data) {
    const DecisionAgentConfig agent = agent_from_json(t.header.at("agent"));
    ConversationOutcome o;
    o.termination = t.outcome.termination;
    o.u_star = oracle_max(agent.utility, data).u_star;
    for (const auto& e : t.events) {
        if (e.actor == "harness" && e.type == "utility_check") {
            const Schedule s = schedule_from_json(e.payload.at("schedule"), data);
            const Rational u = evaluate_utility(agent.utility, s, data).total;
            if (!o.best_schedule || u > o.best_utility) {
                o.best_schedule = s;
                o.best_utility = u;
            }
        }
        if (e.actor == "decision" && e.type == "message") ++o.decision_turns;
        if (e.actor == "tool" && e.type == "tool_result" && e.payload.contains("status")) ++o.solver_calls;
    }
    o.pi = o.best_schedule ? score(o.best_utility, o.u_star) : Rational(0);
    o.success = o.pi == Rational(1);
    return o;
}

namespace {

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

BatchSummary run_batch(const ConversationConfig& cfg, const std::vector<DecisionAgentConfig>& agents,
                       const SchoolData& data, std::shared_ptr<Provider> optimization,
                       std::shared_ptr<Provider> decision, int parallel, const std::string& out_dir) {
    cfg.validate();
    if (parallel < 1) throw std::invalid_argument("parallel must be at least 1");
    fs::create_directories(out_dir);
    const std::string started = utc_now();

    BatchSummary summary;
    summary.files.resize(agents.size());
    summary.outcomes.resize(agents.size());
    std::vector<std::string> failures(agents.size());
    OracleCache oracles;
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t i = next++; i < agents.size(); i = next++) {
            try {
                const Transcript t = run_conversation(cfg, agents[i], data, optimization, decision, oracles);
                summary.outcomes[i] = t.outcome;
                summary.files[i] = persist_transcript(t, out_dir, data);
            } catch (const std::exception& e) {
                failures[i] = e.what();
                summary.outcomes[i].error = e.what();
            }
        }
    };
    const int n_threads = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(parallel), agents.size()));
    std::vector<std::thread> threads;
    for (int k = 1; k < n_threads; ++k) threads.emplace_back(worker);
    worker();
    for (auto& th : threads) th.join();

    nlohmann::json index = nlohmann::json::array();
    std::map<std::string, int> counts;
    int errored = 0;
    for (std::size_t i = 0; i < agents.size(); ++i) {
        const auto& o = summary.outcomes[i];
        const bool error = o.termination == Termination::Error || !failures[i].empty();
        errored += error;
        ++counts[std::string(to_string(o.termination))];
        nlohmann::json row = {{"agent_id", agents[i].id},
                              {"utility_id", agents[i].utility.id},
                              {"comm_style", to_string(agents[i].comm_style)},
                              {"feedback_style", to_string(agents[i].feedback_style)},
                              {"file", summary.files[i].empty() ? nlohmann::json(nullptr)
                                                                : nlohmann::json(fs::path(summary.files[i]).filename().string())},
                              {"termination", to_string(o.termination)},
                              {"pi", to_double(o.pi)},
                              {"pi_exact", to_string(o.pi)},
                              {"success", o.success},
                              {"decision_turns", o.decision_turns},
                              {"solver_calls", o.solver_calls}};
        if (!o.error.empty()) row["error"] = o.error;
        index.push_back(std::move(row));
    }
    summary.manifest = {{"schema_version", 1},
                        {"config", conversation_config_to_json(cfg)},
                        {"parallel", parallel},
                        {"started_at", started},
                        {"finished_at", utc_now()},
                        {"n_conversations", agents.size()},
                        {"n_errored", errored},
                        {"terminations", counts},
                        {"conversations", index}};
    std::ofstream f(fs::path(out_dir) / "run.json", std::ios::binary);
    f << summary.manifest.dump(2) << '\n';
    return summary;
}

}  // namespace schoolopt
