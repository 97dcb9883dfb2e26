#include "schoolopt/conversation.hpp"
#include "schoolopt/dataset.hpp"
#include "schoolopt/metrics.hpp"
#include "schoolopt/service.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace schoolopt;

namespace {

constexpr int kValidation = 1;
constexpr int kRuntime = 2;

// Validation problems in user input, as opposed to runtime failures.
struct InputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

nlohmann::json read_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw InputError("cannot open " + path);
    auto j = nlohmann::json::parse(f, nullptr, false);
    if (j.is_discarded()) throw InputError(path + " is not valid JSON");
    return j;
}

const SchoolData& school_data(const std::string& csv, std::unique_ptr<SchoolData>& holder) {
    if (csv.empty()) return canonical_data();
    holder = std::make_unique<SchoolData>(load_school_data_file(csv));
    return *holder;
}

std::string schedule_table(const Schedule& s, const SchoolData& data) {
    return render_solution(s, compute_features(s, data), data);
}

SessionService* g_service = nullptr;

void on_signal(int) {
    if (g_service) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"School start-time optimization agent and decision-agent evaluation harness"};
    app.require_subcommand(1);
    std::string data_csv;
    app.add_option("--data", data_csv, "School data CSV (defaults to the built-in district)");

    // gen-dataset
    auto* gen = app.add_subcommand("gen-dataset", "Generate decision-agent utilities and configs");
    std::uint64_t seed = 7;
    std::string out_dir;
    int samples = 10000;
    int max_agents = 0;
    gen->add_option("--seed", seed, "RNG seed")->capture_default_str();
    gen->add_option("--out", out_dir, "Output directory")->required();
    gen->add_option("--samples", samples, "Weight samples per (L, R) cell")->capture_default_str();
    gen->add_option("--max-agents", max_agents, "Cap on accepted utilities (4 agents each)");

    // oracle
    auto* oracle = app.add_subcommand("oracle", "Exact maximum utility for a utility spec");
    std::string utility_file;
    oracle->add_option("--utility", utility_file, "UtilitySpec JSON")->required();

    // solve
    auto* solve_cmd = app.add_subcommand("solve", "Solve a model state");
    std::string model_file;
    solve_cmd->add_option("--model", model_file, "ModelState JSON")->required();
    bool solve_json = false;
    solve_cmd->add_flag("--json", solve_json, "Print the result as JSON");

    // converse
    auto* converse = app.add_subcommand("converse", "Run one conversation");
    std::string agent_file, provider_file, design = "tpp", mode = "conversation";
    int turns = 0;
    converse->add_option("--agent", agent_file, "Decision agent JSON")->required();
    converse->add_option("--provider", provider_file, "Run configuration JSON")->required();
    converse->add_option("--design", design, "Optimization agent design label")->capture_default_str();
    converse->add_option("--mode", mode, "conversation | one-shot | aware-one-shot")->capture_default_str();
    converse->add_option("--out", out_dir, "Transcript directory")->required();
    converse->add_option("--turns", turns, "Decision-turn cap (default 20)");

    // bench
    auto* bench = app.add_subcommand("bench", "Run every agent in a dataset");
    std::string dataset_dir;
    int parallel = 1;
    int limit = 0;
    bench->add_option("--dataset", dataset_dir, "Dataset directory")->required();
    bench->add_option("--provider", provider_file, "Run configuration JSON")->required();
    bench->add_option("--design", design, "Optimization agent design label")->capture_default_str();
    bench->add_option("--mode", mode, "conversation | one-shot | aware-one-shot")->capture_default_str();
    bench->add_option("--parallel", parallel, "Concurrent conversations")->capture_default_str();
    bench->add_option("--out", out_dir, "Run directory")->required();
    bench->add_option("--limit", limit, "Only the first N agents");
    bench->add_option("--turns", turns, "Decision-turn cap (default 20)");

    // report
    auto* report = app.add_subcommand("report", "Aggregate run outcomes");
    std::string runs_dir, format = "csv", report_out;
    std::vector<std::string> group_by;
    report->add_option("--runs", runs_dir, "Run directory (or a directory of runs)")->required();
    report->add_option("--group-by", group_by, "design, mode, comm_style, feedback_style, model")->delimiter(',');
    report->add_option("--format", format, "csv | md")->capture_default_str();
    report->add_option("--out", report_out, "Write to a file instead of stdout");

    // compare
    auto* compare = app.add_subcommand("compare", "Paired one-sided sign test between two runs");
    std::string run_a, run_b, metric = "score";
    compare->add_option("--a", run_a, "Run directory A")->required();
    compare->add_option("--b", run_b, "Run directory B")->required();
    compare->add_option("--metric", metric, "score | success | turns | solver_calls")->capture_default_str();

    // serve
    auto* serve = app.add_subcommand("serve", "HTTP session service for interactive use");
    int port = 8080;
    std::string host = "127.0.0.1", snapshots;
    serve->add_option("--port", port, "Port (0 picks a free one)")->capture_default_str();
    serve->add_option("--host", host, "Bind address")->capture_default_str();
    serve->add_option("--provider", provider_file, "Run or provider configuration JSON")->required();
    serve->add_option("--snapshots", snapshots, "Write a JSONL snapshot per session on teardown");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kValidation;
    }

    try {
        std::unique_ptr<SchoolData> holder;
        const SchoolData& data = school_data(data_csv, holder);

        if (*gen) {
            GenerationConfig cfg = GenerationConfig::defaults();
            cfg.rng_seed = seed;
            cfg.samples_per_cell = samples;
            if (max_agents > 0) cfg.max_utilities = max_agents;
            cfg.validate();
            const Dataset ds = generate_dataset(cfg, data);
            write_dataset(ds, out_dir, data);
            std::cout << "accepted utilities: " << ds.utilities.size() << "\n"
                      << "decision agents: " << ds.agents.size() << "\n"
                      << "seeds considered: " << ds.manifest["seeds_considered"] << "\n"
                      << "written to " << out_dir << "\n";
        } else if (*oracle) {
            UtilitySpec spec;
            try {
                spec = utility_from_json(read_json(utility_file));
            } catch (const nlohmann::json::exception& e) {
                throw InputError(std::string("invalid utility file: ") + e.what());
            }
            validate_utility(spec, data);
            const OracleResult r = oracle_max(spec, data);
            std::cout << "u_star: " << to_fixed(r.u_star, 3) << " (" << to_string(r.u_star) << ")\n";
            for (const auto& w : r.maximizing) {
                std::cout << "maximizing profile: (" << to_string(w.profile.f_time()) << ", " << w.profile.load << ", "
                          << w.profile.dev << ")\n\nwitness schedule:\n"
                          << schedule_table(w.witness, data);
            }
        } else if (*solve_cmd) {
            ModelState m;
            try {
                m = model_from_json(read_json(model_file), data);
            } catch (const nlohmann::json::exception& e) {
                throw InputError(std::string("invalid model file: ") + e.what());
            }
            validate_model(m, data);
            const SolveResult r = solve(m, data);
            if (solve_json) {
                std::cout << solve_result_to_json(r, data).dump(2) << "\n";
            } else if (r.status == SolveStatus::Optimal) {
                std::cout << "Solver status: optimal\n\n" << render_solution(*r.schedule, *r.features, data);
            } else {
                std::cout << "Solver status: infeasible\n\n" << render_infeasibility(r.infeasibility, data);
            }
            std::cout << "\n" << model_summary(m, data) << "\n";
        } else if (*converse || *bench) {
            ConversationConfig cfg = load_conversation_config(provider_file);
            cfg.mode = parse_mode(mode);
            cfg.design = design;
            if (turns > 0) cfg.max_decision_turns = turns;
            cfg.validate();
            auto opt = make_provider(cfg.optimization_provider);
            auto dec = make_provider(cfg.decision_provider);
            if (*converse) {
                const DecisionAgentConfig agent = agent_from_json(read_json(agent_file));
                validate_utility(agent.utility, data);
                OracleCache cache;
                const Transcript t = run_conversation(cfg, agent, data, opt, dec, cache);
                const std::string path = persist_transcript(t, out_dir, data);
                const auto& o = t.outcome;
                std::cout << "termination: " << to_string(o.termination) << "\n"
                          << "pi: " << to_fixed(o.pi, 4) << " (" << to_string(o.pi) << ")\n"
                          << "decision turns: " << o.decision_turns << "\n"
                          << "solver calls: " << o.solver_calls << "\n"
                          << "transcript: " << path << "\n";
                if (o.termination == Termination::Error) {
                    std::cerr << "error: " << o.error << "\n";
                    return kRuntime;
                }
            } else {
                std::vector<DecisionAgentConfig> agents = load_dataset_agents(dataset_dir);
                if (limit > 0 && static_cast<std::size_t>(limit) < agents.size()) agents.resize(limit);
                if (cfg.dataset_id == "adhoc") cfg.dataset_id = std::filesystem::path(dataset_dir).filename().string();
                const BatchSummary s = run_batch(cfg, agents, data, opt, dec, parallel, out_dir);
                std::cout << "conversations: " << s.outcomes.size() << "\n"
                          << "errored: " << s.manifest["n_errored"] << "\n"
                          << "terminations: " << s.manifest["terminations"].dump() << "\n"
                          << "run manifest: " << (std::filesystem::path(out_dir) / "run.json").string() << "\n";
            }
        } else if (*report) {
            const auto records = load_run_records(runs_dir, data);
            const std::string text = emit_report(aggregate(records, group_by), parse_report_format(format));
            if (report_out.empty()) {
                std::cout << text;
            } else {
                std::ofstream f(report_out, std::ios::binary);
                f << text;
            }
        } else if (*compare) {
            const PairedResult r =
                paired_comparison(load_run_records(run_a, data), load_run_records(run_b, data), parse_metric(metric));
            std::cout << "pairs: " << r.n_pairs << "\n"
                      << "mean difference (A - B): " << to_fixed(r.mean_diff, 4) << "\n"
                      << "A better / B better / tied: " << r.n_positive << " / " << r.n_negative << " / "
                      << (r.n_pairs - r.n_positive - r.n_negative) << "\n"
                      << "one-sided sign test p: " << r.sign_test_p << "\n";
        } else if (*serve) {
            const auto j = read_json(provider_file);
            ProviderConfig pc = provider_config_from_json(j.contains("optimization") ? j["optimization"] : j);
            resolve_script_path(pc, std::filesystem::absolute(provider_file).parent_path().string());
            ServiceConfig sc;
            sc.provider = make_provider(pc);
            sc.snapshot_dir = snapshots;
            if (j.contains("max_tool_iterations")) sc.limits.max_tool_iterations = j["max_tool_iterations"].get<int>();
            SessionService service(data, sc);
            const int bound = service.bind(host, port);
            if (bound < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
            g_service = &service;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cout << "listening on http://" << host << ":" << bound << std::endl;
            service.listen_after_bind();
            g_service = nullptr;
        }
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const ModelError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: malformed input: " << e.what() << "\n";
        return kValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntime;
    }
    return 0;
}
