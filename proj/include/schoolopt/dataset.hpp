#pragma once

#include "schoolopt/domain.hpp"
#include "schoolopt/utility.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace schoolopt {

enum class Persona { Principal, Parent, Administrator, TransportationCoordinator };
enum class CommStyle { Vague, Precise };
enum class PromptVariant { Default, OptimizationAware, NoContext };

std::string_view to_string(Persona p);
Persona parse_persona(std::string_view s);
std::string_view to_string(CommStyle c);
CommStyle parse_comm_style(std::string_view s);
std::string_view to_string(PromptVariant v);
PromptVariant parse_prompt_variant(std::string_view s);

struct GenerationConfig {
    std::uint64_t rng_seed = 7;
    std::vector<Rational> load_grid;  // hundreds, strictly ascending
    std::vector<Rational> dev_grid;   // minutes, strictly ascending
    int samples_per_cell = 10000;
    std::optional<int> max_utilities;

    /// L 19.5..29.0 and R 8.5..25.0, both in steps of 0.5.
    static GenerationConfig defaults();
    void validate() const;
};

struct DecisionAgentConfig {
    std::string id;
    UtilitySpec utility;
    Persona persona = Persona::Parent;
    CommStyle comm_style = CommStyle::Vague;
    FeedbackStyle feedback_style = FeedbackStyle::Binary;
    PromptVariant prompt_variant = PromptVariant::Default;
};

nlohmann::json agent_to_json(const DecisionAgentConfig& a);
DecisionAgentConfig agent_from_json(const nlohmann::json& j);

struct FrontierPoint {
    Schedule schedule;
    std::int64_t peak = 0;
    std::int64_t dev_sum = 0;
};

/// Non-dominated (peak, deviation) pairs with `school` fixed to `slot`, one
/// lexicographically smallest representative each, sorted by peak ascending.
std::vector<FrontierPoint> conditional_pareto_frontier(int school, int slot, const SchoolData& data);

/// Every attainable (school slot, peak, deviation) triple for one school with the
/// smallest schedule index attaining it. Feeds profile-set queries during synthesis.
class SchoolOutcomeTable {
public:
    SchoolOutcomeTable(int school, const SchoolData& data);

    int school() const noexcept { return school_; }
    /// Attainable utility profiles for (direction, L, R), sorted.
    std::vector<UtilityProfile> profiles(Direction direction, std::int64_t peak_cap, std::int64_t dev_cap) const;

private:
    struct Outcome {
        int slot;
        std::int64_t peak;
        std::int64_t dev_sum;
    };
    int school_;
    std::vector<Outcome> outcomes_;
};

/// Deterministic RNG stream per (seed, school, slot, seed index).
std::mt19937_64 make_stream(std::uint64_t rng_seed, int school, int slot, std::size_t seed_index);

/// Uniform double in [0, 1) from 53 random bits.
double uniform01(std::mt19937_64& rng);

enum class SynthesisOutcome { Accepted, NoCell };

struct SynthesisResult {
    SynthesisOutcome outcome = SynthesisOutcome::NoCell;
    UtilitySpec spec;
    std::size_t cells_tried = 0;
    std::size_t samples_drawn = 0;
};

/// Grid search over (L, R) ascending with up to samples_per_cell uniform simplex
/// draws per cell; accepts the first combination where the seed's profile is the
/// unique maximizing profile.
SynthesisResult synthesize_utility(const FrontierPoint& seed, int school, const SchoolOutcomeTable& table,
                                   const GenerationConfig& cfg, std::mt19937_64& rng, const SchoolData& data);

struct UtilityRecord {
    UtilitySpec spec;
    Schedule seed_schedule;
    int seed_slot = 0;
    Rational u_star;
    UtilityProfile profile;
    Persona persona = Persona::Parent;
};

struct Dataset {
    GenerationConfig config;
    std::vector<UtilityRecord> utilities;
    std::vector<DecisionAgentConfig> agents;
    nlohmann::json manifest;
};

class GenerationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

Dataset generate_dataset(const GenerationConfig& cfg, const SchoolData& data);

/// manifest.json, utilities/<id>.json, agents/<id>.json
void write_dataset(const Dataset& ds, const std::string& dir, const SchoolData& data);
/// Reads agents (and their embedded utilities) back from a dataset directory.
std::vector<DecisionAgentConfig> load_dataset_agents(const std::string& dir);

/// Second, independent check: full enumeration confirms the seed attains U* and
/// exactly one profile attains it.
bool verify_unique_profile(const UtilitySpec& spec, const Schedule& seed, const SchoolData& data);

}  // namespace schoolopt
