#pragma once

#include "schoolopt/conversation.hpp"
#include "schoolopt/dataset.hpp"
#include "schoolopt/model.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <map>
#include <random>
#include <set>
#include <tuple>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace schoolopt::testing {

inline std::string fixture_path(const std::string& name) {
    return (std::filesystem::path(SCHOOLOPT_FIXTURES_DIR) / name).string();
}

inline nlohmann::json load_fixture(const std::string& name) {
    std::ifstream f(fixture_path(name));
    return nlohmann::json::parse(f);
}

inline std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

// Slot indices in school-id order: 1 = 7:50, 2 = 8:40, 3 = 9:30.
inline Schedule make_schedule(std::vector<int> slots) {
    Schedule s;
    for (int v : slots) s.slots.push_back(static_cast<std::uint8_t>(v));
    return s;
}

inline Schedule default_schedule() { return make_schedule({3, 3, 3, 1, 2, 1, 1, 2, 2, 3}); }
inline Schedule ortega_750() { return make_schedule({3, 1, 3, 1, 1, 2, 1, 2, 2, 3}); }
inline Schedule ortega_840() { return make_schedule({3, 2, 3, 1, 2, 1, 1, 2, 2, 3}); }
inline Schedule option_one() { return make_schedule({3, 2, 3, 2, 2, 1, 1, 2, 2, 3}); }
inline Schedule final_ortega() { return make_schedule({3, 3, 3, 1, 1, 2, 1, 2, 2, 3}); }

inline UtilitySpec ortega_parent() { return utility_from_json(load_fixture("ortega_parent.json")); }
inline DecisionAgentConfig ortega_parent_agent() { return agent_from_json(load_fixture("ortega_parent_agent.json")); }

// Feature computation written from the raw records, independent of compute_features.
struct RawFeatures {
    std::int64_t peak = 0;
    std::int64_t dev_sum = 0;
};

inline RawFeatures raw_features(const std::vector<int>& slots, const SchoolData& data) {
    std::vector<std::int64_t> load(data.num_slots(), 0);
    RawFeatures f;
    for (std::size_t q = 0; q < slots.size(); ++q) {
        const auto& school = data.schools()[q];
        const auto& slot = data.slots()[static_cast<std::size_t>(slots[q] - 1)];
        load[static_cast<std::size_t>(slots[q] - 1)] += school.enrollment;
        f.dev_sum += std::abs(slot.minutes - school.current_start);
    }
    for (auto l : load) f.peak = std::max(f.peak, l);
    return f;
}

// Visits every assignment as a plain odometer over slot indices.
template <class Fn>
void for_each_assignment(const SchoolData& data, Fn fn) {
    const int n = static_cast<int>(data.num_schools());
    const int k = static_cast<int>(data.num_slots());
    std::vector<int> slots(static_cast<std::size_t>(n), 1);
    while (true) {
        fn(slots);
        int q = n - 1;
        while (q >= 0 && slots[static_cast<std::size_t>(q)] == k) slots[static_cast<std::size_t>(q--)] = 1;
        if (q < 0) return;
        ++slots[static_cast<std::size_t>(q)];
    }
}

struct BruteOracle {
    Rational u_star;
    std::set<std::tuple<int, int, int>> maximizing;
};

// Exhaustive maximum with profiles derived from raw features and thresholds.
inline BruteOracle brute_oracle(const UtilitySpec& spec, const SchoolData& d) {
    std::map<std::tuple<int, int, int>, Rational> seen;
    for_each_assignment(d, [&](const std::vector<int>& slots) {
        const auto raw = raw_features(slots, d);
        const int slot = slots[static_cast<std::size_t>(spec.school - 1)];
        const int halves = spec.direction == Direction::Earlier ? 3 - slot : slot - 1;
        const int load = Rational(raw.peak, 100) <= spec.load_threshold ? 1 : 0;
        const int dev = Rational(raw.dev_sum, 10) <= spec.dev_threshold ? 1 : 0;
        seen[{halves, load, dev}] = spec.w_time * Rational(halves, 2) + spec.w_load * load + spec.w_dev * dev;
    });
    BruteOracle r;
    bool first = true;
    for (const auto& [_, u] : seen) {
        if (first || u > r.u_star) r.u_star = u;
        first = false;
    }
    for (const auto& [p, u] : seen) {
        if (u == r.u_star) r.maximizing.insert(p);
    }
    return r;
}

struct BruteResult {
    bool feasible = false;
    Rational value;
    std::vector<int> argmin;  // lexicographically smallest optimum
};

// Exhaustive search written without the library's enumeration, tables or kernels.
inline BruteResult brute_force(const ModelState& m, const SchoolData& d) {
    BruteResult r;
    const auto n = static_cast<std::int64_t>(d.num_schools());
    for_each_assignment(d, [&](const std::vector<int>& slots) {
        for (const auto& [school, slot] : m.fixed) {
            if (slots[static_cast<std::size_t>(school - 1)] != slot) return;
        }
        for (const auto& [school, slot] : m.forbidden) {
            if (slots[static_cast<std::size_t>(school - 1)] == slot) return;
        }
        const auto raw = raw_features(slots, d);
        const Rational peak(raw.peak, 100), dev(raw.dev_sum, n);
        for (const auto& [id, bound] : m.bounds) {
            if ((id == ObjectiveId::StudentLoadBalancing ? peak : dev) > bound) return;
        }
        Rational v = m.alpha * peak + m.beta * dev;
        for (const auto& [key, g] : m.gamma) {
            if (slots[static_cast<std::size_t>(key.first - 1)] == key.second) v -= g;
        }
        if (!r.feasible || v < r.value) {  // odometer order is lexicographic, so first optimum wins
            r.feasible = true;
            r.value = v;
            r.argmin = slots;
        }
    });
    return r;
}

inline ModelState random_model(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> school(1, 10), slot(1, 3), coin(0, 3), small(0, 8);
    ModelState m;
    m.alpha = Rational(small(rng), 1 + coin(rng));
    m.beta = Rational(small(rng), 1 + coin(rng));
    for (int k = coin(rng); k > 0; --k) m.gamma[{school(rng), slot(rng)}] = Rational(small(rng), 2);
    for (int k = coin(rng); k > 0; --k) m.fixed[school(rng)] = slot(rng);
    for (int k = coin(rng); k > 0; --k) {
        const int s = school(rng), t = slot(rng);
        auto it = m.fixed.find(s);
        if (it != m.fixed.end() && it->second == t) continue;
        int forbidden_here = 0;
        for (int u = 1; u <= 3; ++u) forbidden_here += m.forbidden.count({s, u}) ? 1 : 0;
        if (forbidden_here < 2) m.forbidden.insert({s, t});
    }
    if (coin(rng) >= 2) {
        std::uniform_int_distribution<int> hundredths(1953, 3200);
        m.bounds[ObjectiveId::StudentLoadBalancing] = Rational(hundredths(rng), 100);
    }
    if (coin(rng) >= 2) {
        std::uniform_int_distribution<int> halves(0, 80);
        m.bounds[ObjectiveId::ScheduleDeviation] = Rational(halves(rng), 2);
    }
    return m;
}

struct Scripted {
    ConversationConfig config;
    std::shared_ptr<Provider> optimization;
    std::shared_ptr<Provider> decision;
};

inline Scripted scripted_run(const std::string& run_fixture) {
    Scripted s;
    s.config = load_conversation_config(fixture_path(run_fixture));
    s.optimization = make_provider(s.config.optimization_provider);
    s.decision = make_provider(s.config.decision_provider);
    return s;
}

inline Transcript run_scripted(const std::string& run_fixture, ConversationMode mode,
                               const DecisionAgentConfig& agent) {
    Scripted s = scripted_run(run_fixture);
    s.config.mode = mode;
    OracleCache cache;
    return run_conversation(s.config, agent, canonical_data(), s.optimization, s.decision, cache);
}

}  // namespace schoolopt::testing
