#include "support.hpp"

#include "schoolopt/dataset.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace schoolopt;
using namespace schoolopt::testing;

namespace {

GenerationConfig small_config() {
    GenerationConfig cfg = GenerationConfig::defaults();
    cfg.load_grid = {Rational(24), Rational(25), Rational(26), Rational(28)};
    cfg.dev_grid = {Rational(9), Rational(23, 2), Rational(14), Rational(20)};
    cfg.samples_per_cell = 300;
    return cfg;
}

class TempDir {
public:
    TempDir() {
        path_ = std::filesystem::temp_directory_path() /
                ("schoolopt_test_" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    std::string str() const { return path_.string(); }

private:
    std::filesystem::path path_;
};

}  // namespace

TEST(Frontier, OrtegaEarlyFrontierIsNonDominated) {
    const auto& d = canonical_data();
    const auto f = conditional_pareto_frontier(2, 1, d);
    ASSERT_FALSE(f.empty());
    for (std::size_t i = 1; i < f.size(); ++i) {
        EXPECT_LT(f[i - 1].peak, f[i].peak);
        EXPECT_GT(f[i - 1].dev_sum, f[i].dev_sum);
    }
    for (const auto& p : f) {
        EXPECT_EQ(p.schedule.slot_of(2), 1);
        const auto feat = compute_features(p.schedule, d);
        EXPECT_EQ(feat.peak_load, p.peak);
        EXPECT_EQ(feat.deviation_sum, p.dev_sum);
    }
    EXPECT_EQ(f.back().dev_sum, 165);  // least disruption with Ortega at 7:50
}

TEST(Frontier, MatchesBruteForceDominanceCheck) {
    const auto& d = canonical_data();
    std::set<std::pair<std::int64_t, std::int64_t>> points;
    for_each_assignment(d, [&](const std::vector<int>& slots) {
        if (slots[6] != 3) return;
        const auto raw = raw_features(slots, d);
        points.insert({raw.peak, raw.dev_sum});
    });
    std::set<std::pair<std::int64_t, std::int64_t>> want;
    for (const auto& p : points) {
        bool dominated = false;
        for (const auto& q : points) {
            if (q.first <= p.first && q.second <= p.second && q != p) {
                dominated = true;
                break;
            }
        }
        if (!dominated) want.insert(p);
    }
    std::set<std::pair<std::int64_t, std::int64_t>> got;
    for (const auto& p : conditional_pareto_frontier(7, 3, d)) got.insert({p.peak, p.dev_sum});
    EXPECT_EQ(got, want);
}

TEST(Synthesis, StreamsAreReproducible) {
    auto a = make_stream(7, 2, 1, 3);
    auto b = make_stream(7, 2, 1, 3);
    auto c = make_stream(7, 2, 1, 4);
    const double x = uniform01(a);
    EXPECT_EQ(x, uniform01(b));
    EXPECT_NE(x, uniform01(c));
    EXPECT_GE(x, 0.0);
    EXPECT_LT(x, 1.0);
}

TEST(Synthesis, AcceptedUtilitiesHaveUniqueMaximizingProfile) {
    const auto& d = canonical_data();
    const auto cfg = small_config();
    const SchoolOutcomeTable table(2, d);
    int accepted = 0;
    for (int slot = 1; slot <= 3; ++slot) {
        const auto frontier = conditional_pareto_frontier(2, slot, d);
        for (std::size_t i = 0; i < frontier.size(); ++i) {
            auto rng = make_stream(cfg.rng_seed, 2, slot, i);
            const auto r = synthesize_utility(frontier[i], 2, table, cfg, rng, d);
            if (r.outcome != SynthesisOutcome::Accepted) continue;
            ++accepted;
            EXPECT_NO_THROW(validate_utility(r.spec, d));
            EXPECT_TRUE(verify_unique_profile(r.spec, frontier[i].schedule, d));
            const auto brute = brute_oracle(r.spec, d);
            EXPECT_EQ(brute.maximizing.size(), 1u);
            EXPECT_EQ(evaluate_utility(r.spec, frontier[i].schedule, d).total, brute.u_star);
            EXPECT_GT(brute.u_star, Rational(0));
        }
    }
    EXPECT_GT(accepted, 0);
}

TEST(Dataset, GenerationIsDeterministic) {
    const auto& d = canonical_data();
    const auto a = generate_dataset(small_config(), d);
    const auto b = generate_dataset(small_config(), d);
    EXPECT_EQ(a.manifest, b.manifest);
    ASSERT_EQ(a.agents.size(), b.agents.size());
    for (std::size_t i = 0; i < a.agents.size(); ++i) EXPECT_EQ(agent_to_json(a.agents[i]), agent_to_json(b.agents[i]));
    EXPECT_EQ(a.agents.size(), 4 * a.utilities.size());
    EXPECT_GT(a.utilities.size(), 0u);
}

TEST(Dataset, AgentsCoverFourVariantsPerUtility) {
    const auto ds = generate_dataset(small_config(), canonical_data());
    std::set<std::string> ids;
    std::map<std::string, int> per_utility;
    for (const auto& a : ds.agents) {
        EXPECT_TRUE(ids.insert(a.id).second) << "duplicate id " << a.id;
        ++per_utility[a.utility.id];
    }
    for (const auto& [_, n] : per_utility) EXPECT_EQ(n, 4);
    for (const auto& u : ds.utilities) {
        std::set<std::pair<CommStyle, FeedbackStyle>> combos;
        for (const auto& a : ds.agents) {
            if (a.utility.id == u.spec.id) combos.insert({a.comm_style, a.feedback_style});
        }
        EXPECT_EQ(combos.size(), 4u);
    }
}

TEST(Dataset, CapLimitsUtilities) {
    auto cfg = small_config();
    cfg.max_utilities = 1;
    const auto ds = generate_dataset(cfg, canonical_data());
    EXPECT_EQ(ds.utilities.size(), 1u);
    EXPECT_EQ(ds.agents.size(), 4u);
}

TEST(Dataset, ConfigValidation) {
    auto cfg = small_config();
    cfg.samples_per_cell = 0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = small_config();
    cfg.load_grid = {Rational(26), Rational(25)};
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = small_config();
    cfg.dev_grid.clear();
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Dataset, WriteAndReloadAgents) {
    const auto& d = canonical_data();
    const auto ds = generate_dataset(small_config(), d);
    TempDir dir;
    write_dataset(ds, dir.str(), d);
    const auto loaded = load_dataset_agents(dir.str());
    ASSERT_EQ(loaded.size(), ds.agents.size());
    std::set<std::string> want, got;
    for (const auto& a : ds.agents) want.insert(agent_to_json(a).dump());
    for (const auto& a : loaded) got.insert(agent_to_json(a).dump());
    EXPECT_EQ(got, want);
    const auto manifest = nlohmann::json::parse(read_file(dir.str() + "/manifest.json"));
    EXPECT_EQ(manifest["rng_seed"], ds.manifest["rng_seed"]);
}
