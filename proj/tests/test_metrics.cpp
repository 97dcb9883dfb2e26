#include "support.hpp"

#include "schoolopt/metrics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace schoolopt;
using namespace schoolopt::testing;

namespace {

RunRecord record(std::string id, Rational pi, std::string comm = "vague", std::string feedback = "rich") {
    RunRecord r;
    r.agent_id = std::move(id);
    r.utility_id = "u";
    r.comm_style = std::move(comm);
    r.feedback_style = std::move(feedback);
    r.design = "tpp";
    r.mode = "conversation";
    r.model = "scripted";
    r.pi = pi;
    r.success = pi == Rational(1);
    r.decision_turns = r.success ? 6 : 20;
    r.solver_calls = 3;
    r.termination = r.success ? Termination::MaxUtilityReached : Termination::TurnCap;
    return r;
}

// 436 conversations, 284 reaching the maximum, the rest at pi = 4/5.
std::vector<RunRecord> synthetic_run() {
    std::vector<RunRecord> rs;
    for (int i = 0; i < 436; ++i) {
        rs.push_back(record("a" + std::to_string(i), i < 284 ? Rational(1) : Rational(4, 5), i % 2 ? "vague" : "precise",
                            i % 4 < 2 ? "rich" : "binary"));
    }
    return rs;
}

}  // namespace

TEST(Aggregate, OverallRow) {
    const auto reports = aggregate(synthetic_run(), {});
    ASSERT_EQ(reports.size(), 1u);
    const auto& all = reports[0];
    EXPECT_EQ(all.group, "All");
    EXPECT_EQ(all.n, 436u);
    EXPECT_EQ(all.success_rate, Rational(284, 436));
    EXPECT_EQ(all.avg_score, (Rational(284) + Rational(152 * 4, 5)) / 436);
    const auto csv = emit_report(reports, ReportFormat::Csv);
    EXPECT_NE(csv.find("All,436,0.93,65.1,"), std::string::npos) << csv;
}

TEST(Aggregate, GroupsMatchIndependentTally) {
    const auto rs = synthetic_run();
    const auto reports = aggregate(rs, {"comm_style", "feedback_style"});
    ASSERT_EQ(reports.size(), 5u);
    std::map<std::string, std::pair<int, Rational>> tally;
    for (const auto& r : rs) {
        auto& t = tally["comm_style=" + r.comm_style + ";feedback_style=" + r.feedback_style];
        ++t.first;
        t.second += r.pi;
    }
    for (std::size_t i = 0; i + 1 < reports.size(); ++i) {
        const auto& t = tally.at(reports[i].group);
        EXPECT_EQ(reports[i].n, static_cast<std::size_t>(t.first));
        EXPECT_EQ(reports[i].avg_score, t.second / t.first);
    }
    EXPECT_LT(reports[0].group, reports[1].group);
    EXPECT_THROW(aggregate(rs, {"colour"}), std::invalid_argument);
}

TEST(Aggregate, ErroredRecordsAreCountedSeparately) {
    auto rs = synthetic_run();
    auto bad = record("broken", Rational(0));
    bad.termination = Termination::Error;
    rs.push_back(bad);
    const auto all = aggregate(rs, {}).back();
    EXPECT_EQ(all.n, 436u);
    EXPECT_EQ(all.n_errored, 1u);
    EXPECT_EQ(all.success_rate, Rational(284, 436));
}

TEST(Aggregate, RejectsInconsistentRecords) {
    auto r = record("x", Rational(1));
    r.success = false;
    EXPECT_THROW(aggregate({r}, {}), std::invalid_argument);
    r = record("y", Rational(3, 2));
    EXPECT_THROW(aggregate({r}, {}), std::invalid_argument);
}

TEST(Report, MarkdownTable) {
    const auto md = emit_report(aggregate(synthetic_run(), {"feedback_style"}), ReportFormat::Markdown);
    EXPECT_NE(md.find("| Group | n |"), std::string::npos);
    EXPECT_NE(md.find("| All | 436 | 0.93 | 65.1% |"), std::string::npos) << md;
    EXPECT_EQ(parse_report_format("md"), ReportFormat::Markdown);
    EXPECT_THROW(parse_report_format("xlsx"), std::invalid_argument);
}

TEST(SignTest, BinomialTailMatchesDirectSum) {
    EXPECT_DOUBLE_EQ(binomial_upper_tail(20, 20), std::ldexp(1.0, -20));
    EXPECT_DOUBLE_EQ(binomial_upper_tail(10, 0), 1.0);
    EXPECT_EQ(binomial_upper_tail(5, 6), 0.0);
    for (std::size_t n : {1u, 7u, 16u, 30u}) {
        for (std::size_t k = 0; k <= n; ++k) {
            double direct = 0, c = 1;  // c = C(n, i)
            for (std::size_t i = 0; i <= n; ++i) {
                if (i >= k) direct += c;
                c = c * static_cast<double>(n - i) / static_cast<double>(i + 1);
            }
            EXPECT_NEAR(binomial_upper_tail(n, k), direct / std::pow(2.0, static_cast<double>(n)), 1e-12)
                << n << " " << k;
        }
    }
}

TEST(Paired, ComparesByAgentId) {
    std::vector<RunRecord> a, b;
    for (int i = 0; i < 20; ++i) {
        a.push_back(record("a" + std::to_string(i), Rational(1)));
        b.push_back(record("a" + std::to_string(19 - i), Rational(1, 2)));
    }
    b[0].pi = Rational(1);
    b[0].success = true;
    const auto r = paired_comparison(a, b, Metric::Score);
    EXPECT_EQ(r.n_pairs, 20u);
    EXPECT_EQ(r.n_positive, 19u);
    EXPECT_EQ(r.n_negative, 0u);
    EXPECT_EQ(r.mean_diff, Rational(19, 40));
    EXPECT_DOUBLE_EQ(r.sign_test_p, std::ldexp(1.0, -19));
    EXPECT_EQ(parse_metric("turns"), Metric::Turns);
}

TEST(Paired, MismatchedSetsAreRejected) {
    std::vector<RunRecord> a{record("x", Rational(1)), record("y", Rational(1))};
    std::vector<RunRecord> b{record("x", Rational(1)), record("z", Rational(1))};
    try {
        paired_comparison(a, b, Metric::Success);
        FAIL() << "expected PairingError";
    } catch (const PairingError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("A:y"), std::string::npos);
        EXPECT_NE(msg.find("B:z"), std::string::npos);
    }
}

TEST(RunRecords, LoadFromBatchDirectory) {
    auto s = scripted_run("ortega_run.json");
    auto agent = ortega_parent_agent();
    const auto dir = std::filesystem::temp_directory_path() / ("schoolopt_records_" + std::to_string(std::random_device{}()));
    run_batch(s.config, {agent}, canonical_data(), s.optimization, s.decision, 1, dir.string());
    const auto rs = load_run_records(dir.string(), canonical_data());
    ASSERT_EQ(rs.size(), 1u);
    EXPECT_EQ(rs[0].agent_id, agent.id);
    EXPECT_EQ(rs[0].model, "scripted");
    EXPECT_TRUE(rs[0].success);
    EXPECT_EQ(rs[0].decision_turns, 8);
    std::filesystem::remove_all(dir);
    EXPECT_THROW(load_run_records(dir.string(), canonical_data()), std::runtime_error);
}
