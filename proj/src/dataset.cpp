#include "schoolopt/dataset.hpp"

#include "schoolopt/kernels.hpp"
#include "schoolopt/model.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <tuple>

namespace schoolopt {

namespace fs = std::filesystem;

std::string_view to_string(Persona p) {
    switch (p) {
        case Persona::Principal: return "principal";
        case Persona::Parent: return "parent";
        case Persona::Administrator: return "administrator";
        case Persona::TransportationCoordinator: return "transportation coordinator";
    }
    return "?";
}

Persona parse_persona(std::string_view s) {
    for (auto p : {Persona::Principal, Persona::Parent, Persona::Administrator, Persona::TransportationCoordinator}) {
        if (s == to_string(p)) return p;
    }
    throw std::invalid_argument("unknown persona '" + std::string(s) + "'");
}

std::string_view to_string(CommStyle c) { return c == CommStyle::Vague ? "vague" : "precise"; }

CommStyle parse_comm_style(std::string_view s) {
    if (s == "vague") return CommStyle::Vague;
    if (s == "precise") return CommStyle::Precise;
    throw std::invalid_argument("unknown communication style '" + std::string(s) + "'");
}

std::string_view to_string(PromptVariant v) {
    switch (v) {
        case PromptVariant::Default: return "default";
        case PromptVariant::OptimizationAware: return "optimization_aware";
        case PromptVariant::NoContext: return "no_context";
    }
    return "?";
}

PromptVariant parse_prompt_variant(std::string_view s) {
    for (auto v : {PromptVariant::Default, PromptVariant::OptimizationAware, PromptVariant::NoContext}) {
        if (s == to_string(v)) return v;
    }
    throw std::invalid_argument("unknown prompt variant '" + std::string(s) + "'");
}

GenerationConfig GenerationConfig::defaults() {
    GenerationConfig cfg;
    for (int h = 195; h <= 290; h += 5) cfg.load_grid.emplace_back(h, 10);
    for (int r = 85; r <= 250; r += 5) cfg.dev_grid.emplace_back(r, 10);
    return cfg;
}

void GenerationConfig::validate() const {
    auto ascending = [](const std::vector<Rational>& g) {
        for (std::size_t i = 1; i < g.size(); ++i) {
            if (!(g[i - 1] < g[i])) return false;
        }
        return !g.empty();
    };
    if (!ascending(load_grid)) throw std::invalid_argument("load grid must be non-empty and strictly ascending");
    if (!ascending(dev_grid)) throw std::invalid_argument("deviation grid must be non-empty and strictly ascending");
    if (samples_per_cell < 1) throw std::invalid_argument("samples_per_cell must be at least 1");
    if (max_utilities && *max_utilities < 1) throw std::invalid_argument("max_agents must be at least 1");
}

nlohmann::json agent_to_json(const DecisionAgentConfig& a) {
    return {{"schema_version", 1},
            {"id", a.id},
            {"utility_id", a.utility.id},
            {"utility", utility_to_json(a.utility)},
            {"persona", to_string(a.persona)},
            {"comm_style", to_string(a.comm_style)},
            {"feedback_style", to_string(a.feedback_style)},
            {"prompt_variant", to_string(a.prompt_variant)}};
}

DecisionAgentConfig agent_from_json(const nlohmann::json& j) {
    DecisionAgentConfig a;
    a.id = j.at("id").get<std::string>();
    a.utility = utility_from_json(j.at("utility"));
    a.persona = parse_persona(j.at("persona").get<std::string>());
    a.comm_style = parse_comm_style(j.at("comm_style").get<std::string>());
    a.feedback_style = parse_feedback_style(j.at("feedback_style").get<std::string>());
    a.prompt_variant = parse_prompt_variant(j.value("prompt_variant", std::string("default")));
    return a;
}

std::vector<FrontierPoint> conditional_pareto_frontier(int school, int slot, const SchoolData& data) {
    const auto space = ScheduleSpace::from_fixes({{school, {slot}}}, data);
    const kernels::FeatureTables tables(data);
    const auto firsts = kernels::first_index_by_key_parallel(
        space, tables, [](const std::uint8_t*, const kernels::PeakDev& f) {
            return kernels::pack_slot_peak_dev(0, static_cast<std::uint64_t>(f.peak),
                                               static_cast<std::uint64_t>(f.dev_sum));
        });
    // keys sort by (peak, dev) ascending
    std::vector<FrontierPoint> front;
    std::int64_t best_dev = std::numeric_limits<std::int64_t>::max();
    for (const auto& [key, index] : firsts) {
        int s = 0;
        std::int64_t peak = 0;
        std::int64_t dev = 0;
        kernels::unpack_slot_peak_dev(key, s, peak, dev);
        if (dev < best_dev) {
            front.push_back({space.at(index), peak, dev});
            best_dev = dev;
        }
    }
    return front;
}

SchoolOutcomeTable::SchoolOutcomeTable(int school, const SchoolData& data) : school_(school) {
    const auto space = ScheduleSpace::full(data);
    const kernels::FeatureTables tables(data);
    const std::size_t q = static_cast<std::size_t>(school - 1);
    const auto firsts = kernels::first_index_by_key_parallel(
        space, tables, [q](const std::uint8_t* slots, const kernels::PeakDev& f) {
            return kernels::pack_slot_peak_dev(slots[q], static_cast<std::uint64_t>(f.peak),
                                               static_cast<std::uint64_t>(f.dev_sum));
        });
    outcomes_.reserve(firsts.size());
    for (const auto& [key, _] : firsts) {
        Outcome o{};
        kernels::unpack_slot_peak_dev(key, o.slot, o.peak, o.dev_sum);
        outcomes_.push_back(o);
    }
}

std::vector<UtilityProfile> SchoolOutcomeTable::profiles(Direction direction, std::int64_t peak_cap,
                                                         std::int64_t dev_cap) const {
    bool seen[3][2][2] = {};
    for (const auto& o : outcomes_) {
        seen[time_score_halves(direction, o.slot, 3)][o.peak <= peak_cap][o.dev_sum <= dev_cap] = true;
    }
    std::vector<UtilityProfile> out;
    for (int t = 0; t < 3; ++t)
        for (int l = 0; l < 2; ++l)
            for (int d = 0; d < 2; ++d)
                if (seen[t][l][d]) out.push_back({t, l, d});
    return out;
}

std::mt19937_64 make_stream(std::uint64_t rng_seed, int school, int slot, std::size_t seed_index) {
    auto mix = [](std::uint64_t x) {
        x += 0x9E3779B97F4A7C15ULL;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return x ^ (x >> 31);
    };
    std::uint64_t h = mix(rng_seed);
    h = mix(h ^ static_cast<std::uint64_t>(school));
    h = mix(h ^ static_cast<std::uint64_t>(slot));
    h = mix(h ^ static_cast<std::uint64_t>(seed_index));
    return std::mt19937_64(h);
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

SynthesisResult synthesize_utility(const FrontierPoint& seed, int school, const SchoolOutcomeTable& table,
                                   const GenerationConfig& cfg, std::mt19937_64& rng, const SchoolData& data) {
    SynthesisResult result;
    const Direction direction = uniform01(rng) < 0.5 ? Direction::Earlier : Direction::Later;
    const int seed_slot = seed.schedule.slot_of(school);
    const auto n = static_cast<std::int64_t>(data.num_schools());

    for (const auto& L : cfg.load_grid) {
        const std::int64_t peak_cap = floor_int(L * 100);
        for (const auto& R : cfg.dev_grid) {
            const std::int64_t dev_cap = floor_int(R * n);
            ++result.cells_tried;
            const UtilityProfile sp{time_score_halves(direction, seed_slot, 3), seed.peak <= peak_cap ? 1 : 0,
                                    seed.dev_sum <= dev_cap ? 1 : 0};
            const auto profiles = table.profiles(direction, peak_cap, dev_cap);
            // A profile that weakly dominates the seed's ties or beats it under every weight vector.
            const bool dominated = std::any_of(profiles.begin(), profiles.end(), [&](const UtilityProfile& p) {
                return p != sp && p.time_halves >= sp.time_halves && p.load >= sp.load && p.dev >= sp.dev;
            });
            if (dominated) continue;

            for (int k = 0; k < cfg.samples_per_cell; ++k) {
                ++result.samples_drawn;
                double a = uniform01(rng);
                double b = uniform01(rng);
                if (a > b) std::swap(a, b);
                const auto A = static_cast<std::int64_t>(std::llround(a * 1000.0));
                const auto B = static_cast<std::int64_t>(std::llround(b * 1000.0));
                const std::int64_t wt = A;
                const std::int64_t wl = B - A;
                const std::int64_t wd = 1000 - B;
                // utilities in units of 1/2000
                auto u = [&](const UtilityProfile& p) { return wt * p.time_halves + 2 * wl * p.load + 2 * wd * p.dev; };
                const std::int64_t us = u(sp);
                if (us <= 0) continue;
                const bool unique = std::all_of(profiles.begin(), profiles.end(),
                                                [&](const UtilityProfile& p) { return p == sp || u(p) < us; });
                if (!unique) continue;

                result.outcome = SynthesisOutcome::Accepted;
                UtilitySpec& s = result.spec;
                s.id = "u" + std::string(school < 10 ? "0" : "") + std::to_string(school) + "_s" +
                       std::to_string(seed_slot) + "_p" + std::to_string(seed.peak) + "_d" +
                       std::to_string(seed.dev_sum);
                s.school = school;
                s.direction = direction;
                s.w_time = Rational(wt, 1000);
                s.w_load = Rational(wl, 1000);
                s.w_dev = Rational(wd, 1000);
                s.load_threshold = L;
                s.dev_threshold = R;
                return result;
            }
        }
    }
    return result;
}

bool verify_unique_profile(const UtilitySpec& spec, const Schedule& seed, const SchoolData& data) {
    const OracleResult oracle = oracle_max(spec, data);
    if (oracle.maximizing.size() != 1 || oracle.u_star <= 0) return false;
    const UtilityEvaluation e = evaluate_utility(spec, seed, data);
    return e.total == oracle.u_star && e.profile == oracle.maximizing.front().profile;
}

namespace {

struct SeedJob {
    int school;
    int slot;
    std::size_t index;
    FrontierPoint point;
};

struct JobResult {
    SynthesisResult synthesis;
    Persona persona = Persona::Parent;
};

nlohmann::json grid_json(const std::vector<Rational>& g) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& v : g) j.push_back(to_string(v));
    return j;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

}  // namespace

Dataset generate_dataset(const GenerationConfig& cfg, const SchoolData& data) {
    cfg.validate();
    std::vector<SeedJob> jobs;
    std::vector<SchoolOutcomeTable> tables;
    std::map<std::pair<int, int>, std::size_t> frontier_sizes;
    for (const auto& school : data.schools()) {
        tables.emplace_back(school.id, data);
        for (const auto& slot : data.slots()) {
            auto front = conditional_pareto_frontier(school.id, slot.index, data);
            frontier_sizes[{school.id, slot.index}] = front.size();
            for (std::size_t i = 0; i < front.size(); ++i) {
                jobs.push_back({school.id, slot.index, i, std::move(front[i])});
            }
        }
    }

    std::vector<JobResult> results(jobs.size());
    const auto n_jobs = static_cast<std::int64_t>(jobs.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < n_jobs; ++i) {
        const auto& job = jobs[static_cast<std::size_t>(i)];
        auto rng = make_stream(cfg.rng_seed, job.school, job.slot, job.index);
        auto& r = results[static_cast<std::size_t>(i)];
        r.synthesis = synthesize_utility(job.point, job.school, tables[static_cast<std::size_t>(job.school - 1)], cfg,
                                         rng, data);
        if (r.synthesis.outcome == SynthesisOutcome::Accepted) {
            r.persona = static_cast<Persona>(std::min<std::uint64_t>(3, static_cast<std::uint64_t>(uniform01(rng) * 4)));
        }
    }

    Dataset ds;
    ds.config = cfg;
    std::set<std::tuple<int, int, Rational, Rational, Rational, Rational, Rational>> seen;
    std::size_t rejected = 0;
    std::size_t duplicates = 0;
    std::size_t capped = 0;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        const auto& r = results[i];
        if (r.synthesis.outcome != SynthesisOutcome::Accepted) {
            ++rejected;
            continue;
        }
        const auto& s = r.synthesis.spec;
        auto key = std::make_tuple(s.school, static_cast<int>(s.direction), s.load_threshold, s.dev_threshold,
                                   s.w_time, s.w_load, s.w_dev);
        if (!seen.insert(key).second) {
            ++duplicates;
            continue;
        }
        if (cfg.max_utilities && ds.utilities.size() >= static_cast<std::size_t>(*cfg.max_utilities)) {
            ++capped;
            continue;
        }
        const OracleResult oracle = oracle_max(s, data);
        UtilityRecord rec;
        rec.spec = s;
        rec.seed_schedule = jobs[i].point.schedule;
        rec.seed_slot = jobs[i].slot;
        rec.u_star = oracle.u_star;
        rec.profile = evaluate_utility(s, rec.seed_schedule, data).profile;
        rec.persona = r.persona;
        if (oracle.maximizing.size() != 1 || !(oracle.maximizing.front().profile == rec.profile)) {
            throw GenerationError("synthesized utility " + s.id + " failed re-verification");
        }
        ds.utilities.push_back(std::move(rec));
    }

    if (ds.utilities.empty()) {
        std::string diag = "no utility function accepted (" + std::to_string(jobs.size()) + " seeds):";
        for (std::size_t i = 0; i < jobs.size(); ++i) {
            diag += " " + std::to_string(jobs[i].school) + "/" + std::to_string(jobs[i].slot) + "#" +
                    std::to_string(jobs[i].index) + " cells=" + std::to_string(results[i].synthesis.cells_tried) +
                    " samples=" + std::to_string(results[i].synthesis.samples_drawn) + ";";
        }
        throw GenerationError(diag);
    }

    for (const auto& rec : ds.utilities) {
        for (auto comm : {CommStyle::Vague, CommStyle::Precise}) {
            for (auto fb : {FeedbackStyle::Binary, FeedbackStyle::Rich}) {
                DecisionAgentConfig a;
                a.id = rec.spec.id + "__" + std::string(to_string(comm)) + "__" + std::string(to_string(fb));
                a.utility = rec.spec;
                a.persona = rec.persona;
                a.comm_style = comm;
                a.feedback_style = fb;
                ds.agents.push_back(std::move(a));
            }
        }
    }

    nlohmann::json m;
    m["schema_version"] = 1;
    m["rng_seed"] = cfg.rng_seed;
    m["load_grid_hundreds"] = grid_json(cfg.load_grid);
    m["dev_grid_minutes"] = grid_json(cfg.dev_grid);
    m["samples_per_cell"] = cfg.samples_per_cell;
    m["max_agents"] = cfg.max_utilities ? nlohmann::json(*cfg.max_utilities) : nlohmann::json(nullptr);
    m["data_fingerprint"] = data.fingerprint();
    m["seeds_considered"] = jobs.size();
    m["accepted_utilities"] = ds.utilities.size();
    m["rejected_no_cell"] = rejected;
    m["rejected_duplicate"] = duplicates;
    m["skipped_by_cap"] = capped;
    m["agents"] = ds.agents.size();
    nlohmann::json sizes = nlohmann::json::array();
    for (const auto& [key, size] : frontier_sizes) {
        sizes.push_back({{"school", key.first}, {"slot", key.second}, {"points", size}});
    }
    m["frontier_sizes"] = sizes;
    nlohmann::json ids = nlohmann::json::array();
    for (const auto& rec : ds.utilities) ids.push_back(rec.spec.id);
    m["utility_ids"] = ids;
    ds.manifest = std::move(m);
    return ds;
}

void write_dataset(const Dataset& ds, const std::string& dir, const SchoolData& data) {
    const fs::path root(dir);
    fs::create_directories(root / "utilities");
    fs::create_directories(root / "agents");
    write_json(root / "manifest.json", ds.manifest);
    for (const auto& rec : ds.utilities) {
        nlohmann::json j = utility_to_json(rec.spec);
        j["seed_schedule"] = schedule_to_json(rec.seed_schedule, data);
        j["u_star"] = to_string(rec.u_star);
        j["profile"] = {{"time", to_double(rec.profile.f_time())}, {"load", rec.profile.load}, {"dev", rec.profile.dev}};
        j["persona"] = to_string(rec.persona);
        write_json(root / "utilities" / (rec.spec.id + ".json"), j);
    }
    for (const auto& a : ds.agents) write_json(root / "agents" / (a.id + ".json"), agent_to_json(a));
}

std::vector<DecisionAgentConfig> load_dataset_agents(const std::string& dir) {
    const fs::path agents = fs::path(dir) / "agents";
    if (!fs::is_directory(agents)) throw std::runtime_error("no agents/ directory under " + dir);
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(agents)) {
        if (e.path().extension() == ".json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<DecisionAgentConfig> out;
    for (const auto& f : files) {
        std::ifstream in(f);
        out.push_back(agent_from_json(nlohmann::json::parse(in)));
    }
    return out;
}

}  // namespace schoolopt
