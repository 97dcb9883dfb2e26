#include "schoolopt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace schoolopt {

namespace fs = std::filesystem;

void validate_record(const RunRecord& r) {
    if (r.pi < 0 || r.pi > 1) throw std::invalid_argument("record " + r.agent_id + ": pi outside [0, 1]");
    if (r.success != (r.pi == Rational(1))) throw std::invalid_argument("record " + r.agent_id + ": success must equal pi = 1");
}

std::string record_field(const RunRecord& r, const std::string& key) {
    if (key == "design") return r.design;
    if (key == "mode") return r.mode;
    if (key == "comm_style") return r.comm_style;
    if (key == "feedback_style") return r.feedback_style;
    if (key == "model") return r.model;
    throw std::invalid_argument("unknown group key '" + key + "'; expected design, mode, comm_style, feedback_style "
                                "or model");
}

namespace {

AggregateReport summarize(std::string group, const std::vector<const RunRecord*>& rs) {
    AggregateReport a;
    a.group = std::move(group);
    Rational pi_sum, succ, turns, calls;
    for (const RunRecord* r : rs) {
        if (r->errored()) {
            ++a.n_errored;
            continue;
        }
        ++a.n;
        pi_sum += r->pi;
        succ += r->success ? 1 : 0;
        turns += r->decision_turns;
        calls += r->solver_calls;
    }
    if (a.n) {
        const auto n = static_cast<std::int64_t>(a.n);
        a.avg_score = pi_sum / n;
        a.success_rate = succ / n;
        a.avg_turns = turns / n;
        a.avg_solver_calls = calls / n;
    }
    return a;
}

}  // namespace

std::vector<AggregateReport> aggregate(const std::vector<RunRecord>& records, const std::vector<std::string>& keys) {
    for (const auto& r : records) validate_record(r);
    std::vector<AggregateReport> out;
    if (!keys.empty()) {
        std::map<std::string, std::vector<const RunRecord*>> groups;
        for (const auto& r : records) {
            std::string label;
            for (const auto& k : keys) label += (label.empty() ? "" : ";") + k + "=" + record_field(r, k);
            groups[label].push_back(&r);
        }
        for (const auto& [label, rs] : groups) out.push_back(summarize(label, rs));
    }
    std::vector<const RunRecord*> all;
    for (const auto& r : records) all.push_back(&r);
    out.push_back(summarize("All", all));
    return out;
}

Metric parse_metric(std::string_view s) {
    if (s == "score" || s == "pi") return Metric::Score;
    if (s == "success") return Metric::Success;
    if (s == "turns") return Metric::Turns;
    if (s == "solver_calls") return Metric::SolverCalls;
    throw std::invalid_argument("unknown metric '" + std::string(s) + "'");
}

double binomial_upper_tail(std::size_t n, std::size_t k) {
    if (k == 0) return 1.0;
    if (k > n) return 0.0;
    // log-space terms keep large n from underflowing
    const double ln2 = std::log(2.0);
    double max_term = -INFINITY;
    std::vector<double> terms;
    for (std::size_t i = k; i <= n; ++i) {
        const double t = std::lgamma(static_cast<double>(n) + 1) - std::lgamma(static_cast<double>(i) + 1) -
                         std::lgamma(static_cast<double>(n - i) + 1) - static_cast<double>(n) * ln2;
        terms.push_back(t);
        max_term = std::max(max_term, t);
    }
    double sum = 0;
    for (double t : terms) sum += std::exp(t - max_term);
    return std::min(1.0, std::exp(max_term) * sum);
}

PairedResult paired_comparison(const std::vector<RunRecord>& a, const std::vector<RunRecord>& b, Metric metric) {
    auto index = [](const std::vector<RunRecord>& rs, const char* side) {
        std::map<std::string, const RunRecord*> m;
        for (const auto& r : rs) {
            if (!m.emplace(r.agent_id, &r).second) {
                throw PairingError(std::string("duplicate agent id '") + r.agent_id + "' in " + side);
            }
        }
        return m;
    };
    const auto ia = index(a, "A");
    const auto ib = index(b, "B");
    std::vector<std::string> only;
    for (const auto& [id, _] : ia)
        if (!ib.count(id)) only.push_back("A:" + id);
    for (const auto& [id, _] : ib)
        if (!ia.count(id)) only.push_back("B:" + id);
    if (!only.empty()) {
        std::string msg = "agent id sets differ:";
        for (const auto& s : only) msg += " " + s;
        throw PairingError(msg);
    }
    if (ia.empty()) throw PairingError("no pairs to compare");

    auto value = [metric](const RunRecord& r) -> Rational {
        switch (metric) {
            case Metric::Score: return r.pi;
            case Metric::Success: return r.success ? 1 : 0;
            case Metric::Turns: return r.decision_turns;
            case Metric::SolverCalls: return r.solver_calls;
        }
        return 0;
    };
    PairedResult res;
    Rational sum;
    for (const auto& [id, ra] : ia) {
        const Rational d = value(*ra) - value(*ib.at(id));
        sum += d;
        ++res.n_pairs;
        if (d > 0) ++res.n_positive;
        if (d < 0) ++res.n_negative;
    }
    res.mean_diff = sum / static_cast<std::int64_t>(res.n_pairs);
    res.sign_test_p = binomial_upper_tail(res.n_positive + res.n_negative, res.n_positive);
    return res;
}

ReportFormat parse_report_format(std::string_view s) {
    if (s == "csv") return ReportFormat::Csv;
    if (s == "md" || s == "markdown") return ReportFormat::Markdown;
    throw std::invalid_argument("format must be csv or md, got '" + std::string(s) + "'");
}

std::string emit_report(const std::vector<AggregateReport>& reports, ReportFormat format) {
    std::ostringstream out;
    auto cells = [](const AggregateReport& r) {
        if (!r.n) return std::vector<std::string>{"", "", "", ""};
        return std::vector<std::string>{to_fixed(r.avg_score, 2), to_fixed(r.success_rate * 100, 1),
                                        to_fixed(r.avg_turns, 1), to_fixed(r.avg_solver_calls, 1)};
    };
    if (format == ReportFormat::Csv) {
        out << "group,n,avg_score,success_rate,avg_turns,avg_solver_calls,n_errored\n";
        for (const auto& r : reports) {
            const auto c = cells(r);
            std::string group = r.group;
            if (group.find_first_of(",\"") != std::string::npos) {
                std::string q = "\"";
                for (char ch : group) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
                group = q + "\"";
            }
            out << group << ',' << r.n << ',' << c[0] << ',' << c[1] << ',' << c[2] << ',' << c[3] << ','
                << r.n_errored << '\n';
        }
    } else {
        out << "| Group | n | Avg. score | Success rate | Avg. turns | Avg. solver calls | Errored |\n"
            << "| --- | ---: | ---: | ---: | ---: | ---: | ---: |\n";
        for (const auto& r : reports) {
            const auto c = cells(r);
            out << "| " << r.group << " | " << r.n << " | " << c[0] << " | " << (c[1].empty() ? "" : c[1] + "%")
                << " | " << c[2] << " | " << c[3] << " | " << r.n_errored << " |\n";
        }
    }
    return out.str();
}

RunRecord record_from_transcript(const Transcript& t) {
    RunRecord r;
    const auto& agent = t.header.at("agent");
    r.agent_id = agent.at("id").get<std::string>();
    r.utility_id = agent.at("utility_id").get<std::string>();
    r.comm_style = agent.at("comm_style").get<std::string>();
    r.feedback_style = agent.at("feedback_style").get<std::string>();
    r.design = t.header.at("design").get<std::string>();
    r.mode = t.header.at("mode").get<std::string>();
    const auto& opt = t.header.at("config").at("optimization");
    r.model = opt.value("kind", std::string()) == "scripted" ? "scripted" : opt.value("model_name", std::string());
    r.pi = t.outcome.pi;
    r.success = t.outcome.success;
    r.decision_turns = t.outcome.decision_turns;
    r.solver_calls = t.outcome.solver_calls;
    r.termination = t.outcome.termination;
    return r;
}

namespace {

void load_one_run(const fs::path& dir, const SchoolData& data, std::vector<RunRecord>& out) {
    std::ifstream f(dir / "run.json");
    const auto run = nlohmann::json::parse(f);
    const auto& cfg = run.at("config");
    for (const auto& row : run.at("conversations")) {
        if (!row.at("file").is_null()) {
            out.push_back(record_from_transcript(load_transcript((dir / row["file"].get<std::string>()).string(), data)));
            continue;
        }
        RunRecord r;
        r.agent_id = row.at("agent_id").get<std::string>();
        r.utility_id = row.value("utility_id", std::string());
        r.comm_style = row.value("comm_style", std::string());
        r.feedback_style = row.value("feedback_style", std::string());
        r.design = cfg.value("design", std::string());
        r.mode = cfg.value("mode", std::string());
        r.termination = Termination::Error;
        out.push_back(std::move(r));
    }
}

}  // namespace

std::vector<RunRecord> load_run_records(const std::string& dir, const SchoolData& data) {
    std::vector<RunRecord> out;
    const fs::path root(dir);
    if (fs::exists(root / "run.json")) {
        load_one_run(root, data, out);
        return out;
    }
    std::vector<fs::path> runs;
    if (fs::is_directory(root)) {
        for (const auto& e : fs::directory_iterator(root)) {
            if (e.is_directory() && fs::exists(e.path() / "run.json")) runs.push_back(e.path());
        }
    }
    if (runs.empty()) throw std::runtime_error("no run.json found in " + dir + " or its subdirectories");
    std::sort(runs.begin(), runs.end());
    for (const auto& r : runs) load_one_run(r, data, out);
    return out;
}

}  // namespace schoolopt
