#include "schoolopt/utility.hpp"

#include "schoolopt/kernels.hpp"
#include "schoolopt/model.hpp"
#include "schoolopt/toolkit.hpp"

#include <algorithm>

namespace schoolopt {

std::string_view to_string(Direction d) { return d == Direction::Earlier ? "earlier" : "later"; }

Direction parse_direction(std::string_view s) {
    if (s == "earlier") return Direction::Earlier;
    if (s == "later") return Direction::Later;
    throw std::invalid_argument("direction must be 'earlier' or 'later', got '" + std::string(s) + "'");
}

std::string_view to_string(FeedbackStyle f) { return f == FeedbackStyle::Binary ? "binary" : "rich"; }

FeedbackStyle parse_feedback_style(std::string_view s) {
    if (s == "binary") return FeedbackStyle::Binary;
    if (s == "rich") return FeedbackStyle::Rich;
    throw std::invalid_argument("feedback style must be 'binary' or 'rich', got '" + std::string(s) + "'");
}

void validate_utility(const UtilitySpec& spec, const SchoolData& data) {
    if (spec.school < 1 || spec.school > static_cast<int>(data.num_schools())) {
        throw std::invalid_argument("utility " + spec.id + ": unknown school id " + std::to_string(spec.school));
    }
    if (spec.w_time < 0 || spec.w_load < 0 || spec.w_dev < 0) {
        throw std::invalid_argument("utility " + spec.id + ": weights must be non-negative");
    }
    const Rational gap = spec.w_time + spec.w_load + spec.w_dev - 1;
    if (gap > Rational(3, 2000) || gap < Rational(-3, 2000)) {
        throw std::invalid_argument("utility " + spec.id + ": weights must sum to 1");
    }
    if (spec.load_threshold < 0 || spec.dev_threshold < 0) {
        throw std::invalid_argument("utility " + spec.id + ": thresholds must be non-negative");
    }
    if (data.num_slots() != 3) throw std::invalid_argument("time preferences are defined for three start slots");
}

nlohmann::json utility_to_json(const UtilitySpec& spec) {
    return {{"schema_version", 1},
            {"id", spec.id},
            {"school_id", spec.school},
            {"direction", to_string(spec.direction)},
            {"weights",
             {{"time", to_double(spec.w_time)}, {"load", to_double(spec.w_load)}, {"dev", to_double(spec.w_dev)}}},
            {"load_threshold_hundreds", to_double(spec.load_threshold)},
            {"dev_threshold_minutes", to_double(spec.dev_threshold)}};
}

UtilitySpec utility_from_json(const nlohmann::json& j) {
    UtilitySpec s;
    s.id = j.at("id").get<std::string>();
    s.school = j.at("school_id").get<int>();
    s.direction = parse_direction(j.at("direction").get<std::string>());
    const auto& w = j.at("weights");
    s.w_time = rational_from_json(w.at("time"));
    s.w_load = rational_from_json(w.at("load"));
    s.w_dev = rational_from_json(w.at("dev"));
    s.load_threshold = rational_from_json(j.at("load_threshold_hundreds"));
    s.dev_threshold = rational_from_json(j.at("dev_threshold_minutes"));
    return s;
}

int time_score_halves(Direction direction, int slot, std::size_t num_slots) {
    if (num_slots != 3 || slot < 1 || slot > 3) throw std::invalid_argument("time preference needs three slots");
    const int earlier = 3 - slot;  // 2, 1, 0
    return direction == Direction::Earlier ? earlier : 2 - earlier;
}

Rational utility_of_profile(const UtilitySpec& spec, const UtilityProfile& p) {
    return spec.w_time * p.f_time() + spec.w_load * p.load + spec.w_dev * p.dev;
}

UtilityProfile profile_of(const UtilitySpec& spec, int school_slot, std::int64_t peak, std::int64_t dev_sum,
                          std::size_t num_schools) {
    UtilityProfile p;
    p.time_halves = time_score_halves(spec.direction, school_slot, 3);
    p.load = Rational(peak, 100) <= spec.load_threshold ? 1 : 0;
    p.dev = Rational(dev_sum, static_cast<std::int64_t>(num_schools)) <= spec.dev_threshold ? 1 : 0;
    return p;
}

UtilityEvaluation evaluate_utility(const UtilitySpec& spec, const Schedule& s, const SchoolData& data) {
    const ScheduleFeatures f = compute_features(s, data);
    UtilityEvaluation e;
    e.profile = profile_of(spec, s.slot_of(spec.school), f.peak_load, f.deviation_sum, data.num_schools());
    e.total = utility_of_profile(spec, e.profile);
    if (e.profile.time_halves == 2) e.satisfied.insert("time");
    if (e.profile.load) e.satisfied.insert("load");
    if (e.profile.dev) e.satisfied.insert("dev");
    return e;
}

OracleResult oracle_max(const UtilitySpec& spec, const SchoolData& data) {
    validate_utility(spec, data);
    const auto space = ScheduleSpace::full(data);
    const kernels::FeatureTables tables(data);
    const std::int64_t peak_cap = floor_int(spec.load_threshold * 100);
    const std::int64_t dev_cap = floor_int(spec.dev_threshold * static_cast<std::int64_t>(data.num_schools()));
    const std::size_t q = static_cast<std::size_t>(spec.school - 1);
    const Direction dir = spec.direction;

    const auto firsts = kernels::first_index_by_key_parallel(
        space, tables, [&](const std::uint8_t* slots, const kernels::PeakDev& f) -> std::uint64_t {
            const int th = time_score_halves(dir, slots[q], 3);
            return static_cast<std::uint64_t>(th * 4 + (f.peak <= peak_cap ? 2 : 0) + (f.dev_sum <= dev_cap ? 1 : 0));
        });

    OracleResult r;
    bool first = true;
    for (const auto& [key, index] : firsts) {
        UtilityProfile p{static_cast<int>(key / 4), static_cast<int>((key / 2) % 2), static_cast<int>(key % 2)};
        r.achievable.push_back({p, space.at(index)});
        const Rational u = utility_of_profile(spec, p);
        if (first || u > r.u_star) r.u_star = u;
        first = false;
    }
    for (const auto& pw : r.achievable) {
        if (utility_of_profile(spec, pw.profile) == r.u_star) r.maximizing.push_back(pw);
    }
    return r;
}

std::shared_ptr<const OracleResult> OracleCache::get(const UtilitySpec& spec, const SchoolData& data) {
    const auto key = std::make_pair(spec.id, data.fingerprint());
    {
        std::shared_lock lock(mutex_);
        if (auto it = entries_.find(key); it != entries_.end()) return it->second;
    }
    auto computed = std::make_shared<const OracleResult>(oracle_max(spec, data));
    std::unique_lock lock(mutex_);
    auto [it, _] = entries_.try_emplace(key, std::move(computed));
    return it->second;
}

std::size_t OracleCache::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

std::string format_hundreds(const Rational& v) {
    std::string s = to_string(v);
    if (s.find('.') == std::string::npos && s.find('/') == std::string::npos) s += ".0";
    return s;
}

nlohmann::json CheckFeedback::to_json() const {
    if (style == FeedbackStyle::Binary) return {{"is_max", is_max}};
    nlohmann::json j;
    j["is_max"] = is_max;
    j["total_utility"] = to_string(total);
    j["max_utility"] = to_string(u_star);
    j["satisfied"] = satisfied;
    j["unsatisfied"] = unsatisfied;
    j["guidance"] = guidance;
    return j;
}

CheckFeedback check_utility(const UtilitySpec& spec, const Schedule& s, FeedbackStyle style, const SchoolData& data,
                            const OracleResult& oracle) {
    const UtilityEvaluation e = evaluate_utility(spec, s, data);
    CheckFeedback fb;
    fb.style = style;
    fb.is_max = e.total == oracle.u_star;
    if (style == FeedbackStyle::Binary) return fb;

    fb.total = e.total;
    fb.u_star = oracle.u_star;
    fb.satisfied = e.satisfied;
    for (const char* c : {"time", "load", "dev"}) {
        if (!e.satisfied.count(c)) fb.unsatisfied.insert(c);
    }
    const auto& school = data.school(spec.school);
    if (fb.unsatisfied.count("time")) {
        const int best = spec.direction == Direction::Earlier ? 1 : static_cast<int>(data.num_slots());
        fb.guidance.push_back("move " + school.name + " to a " +
                              (spec.direction == Direction::Earlier ? "earlier" : "later") + " start (best: " +
                              data.slot(best).label + ")");
    }
    if (fb.unsatisfied.count("load")) {
        const Rational students = spec.load_threshold * 100;
        fb.guidance.push_back("bring peak load to at most " +
                              (students.denominator() == 1 ? format_thousands(students.numerator())
                                                           : to_string(students)) +
                              " students (student load balancing " + "\xE2\x89\xA4 " +
                              format_hundreds(spec.load_threshold) + ")");
    }
    if (fb.unsatisfied.count("dev")) {
        fb.guidance.push_back("bring the district-wide average schedule deviation to at most " +
                              to_string(spec.dev_threshold) + " minutes");
    }
    return fb;
}

Schedule parse_start_times(const nlohmann::json& start_times, const SchoolData& data) {
    if (!start_times.is_object()) throw std::invalid_argument("start_times must map school names to start times");
    Schedule s;
    s.slots.assign(data.num_schools(), 0);
    for (const auto& [name, value] : start_times.items()) {
        const int school = data.find_school(name);
        if (!school) throw std::invalid_argument("unknown school '" + name + "'");
        const std::string label = value.is_string() ? value.get<std::string>() : value.dump();
        const int slot = data.find_slot(label);
        if (!slot) throw std::invalid_argument("'" + label + "' is not a standardized time");
        s.slots[static_cast<std::size_t>(school - 1)] = static_cast<std::uint8_t>(slot);
    }
    for (const auto& school : data.schools()) {
        if (s.slots[static_cast<std::size_t>(school.id - 1)] == 0) {
            throw std::invalid_argument("the schedule is partial: missing " + school.name);
        }
    }
    return s;
}

Rational score(const Rational& utility, const Rational& u_star) {
    if (u_star <= 0) throw std::invalid_argument("maximum utility must be positive");
    return utility / u_star;
}

Rational score(const UtilitySpec& spec, const Schedule& s, const SchoolData& data, const OracleResult& oracle) {
    return score(evaluate_utility(spec, s, data).total, oracle.u_star);
}

}  // namespace schoolopt
