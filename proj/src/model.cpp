#include "schoolopt/model.hpp"

#include "schoolopt/kernels.hpp"

#include <boost/integer/common_factor_rt.hpp>

#include <sstream>

namespace schoolopt {

namespace {

constexpr std::string_view kLe = "\xE2\x89\xA4";  // ≤

std::int64_t lcm(std::int64_t a, std::int64_t b) { return boost::integer::lcm(a, b); }

std::int64_t scaled(const Rational& r, std::int64_t scale) {
    return r.numerator() * (scale / r.denominator());
}

ScheduleSpace admissible_space(const ModelState& m, const SchoolData& data) {
    std::vector<std::vector<std::uint8_t>> allowed(data.num_schools());
    for (const auto& school : data.schools()) {
        auto& a = allowed[static_cast<std::size_t>(school.id - 1)];
        if (auto it = m.fixed.find(school.id); it != m.fixed.end()) {
            if (!m.forbidden.count({school.id, it->second})) a.push_back(static_cast<std::uint8_t>(it->second));
            continue;
        }
        for (const auto& t : data.slots()) {
            if (!m.forbidden.count({school.id, t.index})) a.push_back(static_cast<std::uint8_t>(t.index));
        }
    }
    return ScheduleSpace(std::move(allowed), data);
}

void apply_bound(kernels::LinearObjective& obj, ObjectiveId id, const Rational& bound, const SchoolData& data) {
    if (id == ObjectiveId::StudentLoadBalancing) {
        obj.peak_cap = floor_int(bound * 100);
    } else {
        obj.dev_cap = floor_int(bound * static_cast<std::int64_t>(data.num_schools()));
    }
}

Rational feature_value(ObjectiveId id, const kernels::PeakDev& f, const SchoolData& data) {
    if (id == ObjectiveId::StudentLoadBalancing) return Rational(f.peak, 100);
    return Rational(f.dev_sum, static_cast<std::int64_t>(data.num_schools()));
}

// Minimum of `id` under fixes/forbids and, optionally, the other objective's bound.
std::optional<Rational> minimize_feature(ObjectiveId id, const ModelState& m, const SchoolData& data,
                                         bool honor_other_bound) {
    const ScheduleSpace space = admissible_space(m, data);
    kernels::LinearObjective obj;
    if (id == ObjectiveId::StudentLoadBalancing) obj.per_peak = 1; else obj.per_dev = 1;
    if (honor_other_bound) {
        for (const auto& [other, bound] : m.bounds) {
            if (other != id) apply_bound(obj, other, bound, data);
        }
    }
    const kernels::FeatureTables tables(data);
    const auto best = kernels::argmin_parallel(space, tables, obj);
    if (!best.found) return std::nullopt;
    return feature_value(id, best.features, data);
}

}  // namespace

std::string_view to_string(ObjectiveId id) {
    return id == ObjectiveId::StudentLoadBalancing ? "student_load_balancing" : "schedule_deviation";
}

std::optional<ObjectiveId> parse_objective(std::string_view s) {
    if (s == "student_load_balancing") return ObjectiveId::StudentLoadBalancing;
    if (s == "schedule_deviation") return ObjectiveId::ScheduleDeviation;
    return std::nullopt;
}

std::string fix_constraint_name(const SchoolData& data, int school) { return "fix_" + data.school(school).name; }

std::string forbid_constraint_name(const SchoolData& data, int school, int slot) {
    return "forbid_" + data.school(school).name + "_" + data.slot(slot).label;
}

std::string bound_constraint_name(ObjectiveId id) { return "bound_" + std::string(to_string(id)); }

std::vector<ConstraintInfo> ModelState::constraints(const SchoolData& data) const {
    std::vector<ConstraintInfo> out;
    for (const auto& [school, slot] : fixed) {
        out.push_back({fix_constraint_name(data, school), ConstraintKind::Fix, school, slot, {}, {}});
    }
    for (const auto& [school, slot] : forbidden) {
        out.push_back({forbid_constraint_name(data, school, slot), ConstraintKind::Forbid, school, slot, {}, {}});
    }
    for (const auto& [id, value] : bounds) {
        out.push_back({bound_constraint_name(id), ConstraintKind::Bound, 0, 0, id, value});
    }
    return out;
}

ModelState default_model() { return ModelState{}; }

void validate_model(const ModelState& m, const SchoolData& data) {
    if (m.alpha < 0 || m.beta < 0) throw ModelError("objective weights must be non-negative");
    const auto n_schools = static_cast<int>(data.num_schools());
    const auto n_slots = static_cast<int>(data.num_slots());
    auto check = [&](int school, int slot) {
        if (school < 1 || school > n_schools) throw ModelError("unknown school id " + std::to_string(school));
        if (slot < 1 || slot > n_slots) throw ModelError("unknown slot index " + std::to_string(slot));
    };
    for (const auto& [key, _] : m.gamma) check(key.first, key.second);
    for (const auto& [school, slot] : m.fixed) check(school, slot);
    for (const auto& [school, slot] : m.forbidden) {
        check(school, slot);
        if (auto it = m.fixed.find(school); it != m.fixed.end() && it->second == slot) {
            throw ModelError(data.school(school).name + " is both fixed to and forbidden from " +
                             data.slot(slot).label);
        }
    }
    for (const auto& [id, value] : m.bounds) {
        if (value < 0) throw ModelError("bound on " + std::string(to_string(id)) + " must be non-negative");
    }
}

Rational objective_value(const ModelState& m, const Schedule& s, const ScheduleFeatures& f) {
    Rational v = m.alpha * f.peak_load_hundreds() + m.beta * f.avg_deviation();
    for (const auto& [key, bonus] : m.gamma) {
        if (s.slot_of(key.first) == key.second) v -= bonus;
    }
    return v;
}

bool satisfies(const ModelState& m, const Schedule& s, const ScheduleFeatures& f) {
    for (const auto& [school, slot] : m.fixed) {
        if (s.slot_of(school) != slot) return false;
    }
    for (const auto& [school, slot] : m.forbidden) {
        if (s.slot_of(school) == slot) return false;
    }
    for (const auto& [id, bound] : m.bounds) {
        const Rational v = id == ObjectiveId::StudentLoadBalancing ? f.peak_load_hundreds() : f.avg_deviation();
        if (v > bound) return false;
    }
    return true;
}

SolveResult solve(const ModelState& m, const SchoolData& data) {
    validate_model(m, data);
    const ScheduleSpace space = admissible_space(m, data);

    const auto n = static_cast<std::int64_t>(data.num_schools());
    const Rational per_peak = m.alpha / 100;
    const Rational per_dev = m.beta / n;
    std::int64_t scale = lcm(per_peak.denominator(), per_dev.denominator());
    for (const auto& [_, g] : m.gamma) scale = lcm(scale, g.denominator());

    kernels::LinearObjective obj;
    obj.per_peak = scaled(per_peak, scale);
    obj.per_dev = scaled(per_dev, scale);
    if (!m.gamma.empty()) {
        obj.bonus.assign(data.num_schools() * data.num_slots(), 0);
        for (const auto& [key, g] : m.gamma) {
            obj.bonus[static_cast<std::size_t>(key.first - 1) * data.num_slots() +
                      static_cast<std::size_t>(key.second - 1)] = scaled(g, scale);
        }
    }
    for (const auto& [id, bound] : m.bounds) apply_bound(obj, id, bound, data);

    const kernels::FeatureTables tables(data);
    const auto best = kernels::argmin_parallel(space, tables, obj);

    SolveResult result;
    if (best.found) {
        result.status = SolveStatus::Optimal;
        result.schedule = space.at(best.index);
        result.features = compute_features(*result.schedule, data);
        result.objective_value = Rational(best.value, scale);
        return result;
    }

    result.status = SolveStatus::Infeasible;
    for (const auto& [id, bound] : m.bounds) {
        auto best_value = minimize_feature(id, m, data, true);
        if (!best_value) best_value = minimize_feature(id, m, data, false);
        if (best_value && *best_value > bound) result.infeasibility.violated_bounds.push_back({id, bound, *best_value});
    }
    return result;
}

Rational min_achievable(ObjectiveId objective, const ModelState& m, const SchoolData& data) {
    validate_model(m, data);
    auto v = minimize_feature(objective, m, data, true);
    if (!v) throw InfeasibleSpaceError(0, "no schedule satisfies the remaining constraints");
    return *v;
}

std::string model_summary(const ModelState& m, const SchoolData& data) {
    std::ostringstream out;
    out << "Model summary\n";
    out << "Objective weights: \xCE\xB1=" << to_string(m.alpha) << " (student_load_balancing), \xCE\xB2="
        << to_string(m.beta) << " (schedule_deviation)\n";
    const auto cs = m.constraints(data);
    if (cs.empty()) {
        out << "Active constraints: no active constraints\n";
    } else {
        out << "Active constraints:\n";
        for (const auto& c : cs) {
            out << "  - " << c.name << ": ";
            switch (c.kind) {
                case ConstraintKind::Fix:
                    out << data.school(c.school).name << " must start at " << data.slot(c.slot).label;
                    break;
                case ConstraintKind::Forbid:
                    out << data.school(c.school).name << " cannot start at " << data.slot(c.slot).label;
                    break;
                case ConstraintKind::Bound:
                    out << to_string(c.objective) << ' ' << kLe << ' ' << to_string(c.value)
                        << (c.objective == ObjectiveId::StudentLoadBalancing ? " (hundreds of students)"
                                                                             : " (minutes)");
                    break;
            }
            out << '\n';
        }
    }
    if (!m.gamma.empty()) {
        out << "School-time preference bonuses: " << m.gamma.size() << " configured\n";
    }
    return out.str();
}

ModelState parse_model_summary(const std::string& summary, const SchoolData& data) {
    ModelState m;
    std::istringstream in(summary);
    std::string line;
    const std::string alpha_tag = "\xCE\xB1=";
    const std::string beta_tag = "\xCE\xB2=";
    while (std::getline(in, line)) {
        if (line.rfind("Objective weights:", 0) == 0) {
            const auto a = line.find(alpha_tag) + alpha_tag.size();
            m.alpha = parse_rational(line.substr(a, line.find(' ', a) - a));
            const auto b = line.find(beta_tag) + beta_tag.size();
            m.beta = parse_rational(line.substr(b, line.find(' ', b) - b));
            continue;
        }
        if (line.rfind("  - ", 0) != 0) continue;
        const auto colon = line.find(": ", 4);
        if (colon == std::string::npos) throw ModelError("unreadable summary line: " + line);
        const std::string name = line.substr(4, colon - 4);
        if (name.rfind("fix_", 0) == 0) {
            const int school = data.find_school(name.substr(4));
            const auto at = line.rfind(" must start at ");
            const int slot = data.find_slot(line.substr(at + 15));
            if (!school || !slot) throw ModelError("unreadable fix: " + line);
            m.fixed[school] = slot;
        } else if (name.rfind("forbid_", 0) == 0) {
            const auto us = name.rfind('_');
            const int school = data.find_school(name.substr(7, us - 7));
            const int slot = data.find_slot(name.substr(us + 1));
            if (!school || !slot) throw ModelError("unreadable forbid: " + line);
            m.forbidden.insert({school, slot});
        } else if (name.rfind("bound_", 0) == 0) {
            const auto id = parse_objective(name.substr(6));
            const auto le = line.find(kLe);
            if (!id || le == std::string::npos) throw ModelError("unreadable bound: " + line);
            const auto start = le + kLe.size() + 1;
            m.bounds[*id] = parse_rational(line.substr(start, line.find(' ', start) - start));
        }
    }
    return m;
}

Rational rational_from_json(const nlohmann::json& j) {
    if (j.is_string()) return parse_rational(j.get<std::string>());
    if (j.is_number_integer()) return Rational(j.get<std::int64_t>());
    if (j.is_number()) return rational_from_double(j.get<double>());
    throw std::invalid_argument("expected a number, got " + j.dump());
}

namespace {

int school_from_json(const nlohmann::json& j, const SchoolData& data) {
    if (j.is_number_integer()) {
        const int id = j.get<int>();
        if (id < 1 || id > static_cast<int>(data.num_schools())) throw ModelError("unknown school id " + j.dump());
        return id;
    }
    const int id = data.find_school(j.get<std::string>());
    if (!id) throw ModelError("unknown school " + j.dump());
    return id;
}

int slot_from_json(const nlohmann::json& j, const SchoolData& data) {
    if (j.is_number_integer()) {
        const int idx = j.get<int>();
        if (idx < 1 || idx > static_cast<int>(data.num_slots())) throw ModelError("unknown slot " + j.dump());
        return idx;
    }
    const int idx = data.find_slot(j.get<std::string>());
    if (!idx) throw ModelError("unknown slot " + j.dump());
    return idx;
}

}  // namespace

nlohmann::json model_to_json(const ModelState& m, const SchoolData& data) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["alpha"] = to_string(m.alpha);
    j["beta"] = to_string(m.beta);
    j["gamma"] = nlohmann::json::array();
    for (const auto& [key, g] : m.gamma) {
        j["gamma"].push_back({{"school", key.first}, {"slot", data.slot(key.second).label}, {"value", to_string(g)}});
    }
    j["fixed"] = nlohmann::json::array();
    for (const auto& [school, slot] : m.fixed) {
        j["fixed"].push_back({{"school", school}, {"slot", data.slot(slot).label}});
    }
    j["forbidden"] = nlohmann::json::array();
    for (const auto& [school, slot] : m.forbidden) {
        j["forbidden"].push_back({{"school", school}, {"slot", data.slot(slot).label}});
    }
    j["bounds"] = nlohmann::json::object();
    for (const auto& [id, v] : m.bounds) j["bounds"][std::string(to_string(id))] = to_string(v);
    return j;
}

ModelState model_from_json(const nlohmann::json& j, const SchoolData& data) {
    ModelState m;
    if (j.contains("alpha")) m.alpha = rational_from_json(j.at("alpha"));
    if (j.contains("beta")) m.beta = rational_from_json(j.at("beta"));
    for (const auto& g : j.value("gamma", nlohmann::json::array())) {
        m.gamma[{school_from_json(g.at("school"), data), slot_from_json(g.at("slot"), data)}] =
            rational_from_json(g.at("value"));
    }
    for (const auto& f : j.value("fixed", nlohmann::json::array())) {
        m.fixed[school_from_json(f.at("school"), data)] = slot_from_json(f.at("slot"), data);
    }
    for (const auto& f : j.value("forbidden", nlohmann::json::array())) {
        m.forbidden.insert({school_from_json(f.at("school"), data), slot_from_json(f.at("slot"), data)});
    }
    const auto bounds = j.value("bounds", nlohmann::json::object());
    for (const auto& [key, v] : bounds.items()) {
        const auto id = parse_objective(key);
        if (!id) throw ModelError("unknown objective '" + key + "'");
        m.bounds[*id] = rational_from_json(v);
    }
    validate_model(m, data);
    return m;
}

nlohmann::json schedule_to_json(const Schedule& s, const SchoolData& data) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& school : data.schools()) {
        j.push_back({{"school", school.name}, {"start", data.slot(s.slot_of(school.id)).label}});
    }
    return j;
}

Schedule schedule_from_json(const nlohmann::json& j, const SchoolData& data) {
    Schedule s;
    s.slots.assign(data.num_schools(), 0);
    if (j.is_array()) {
        if (j.size() != data.num_schools()) throw std::invalid_argument("schedule must list every school");
        for (std::size_t i = 0; i < j.size(); ++i) {
            const auto& e = j[i];
            if (e.is_object()) {
                s.slots[static_cast<std::size_t>(school_from_json(e.at("school"), data) - 1)] =
                    static_cast<std::uint8_t>(slot_from_json(e.at("start"), data));
            } else {
                s.slots[i] = static_cast<std::uint8_t>(slot_from_json(e, data));
            }
        }
    } else if (j.is_object()) {
        for (const auto& [name, slot] : j.items()) {
            const int school = data.find_school(name);
            if (!school) throw std::invalid_argument("unknown school '" + name + "'");
            s.slots[static_cast<std::size_t>(school - 1)] = static_cast<std::uint8_t>(slot_from_json(slot, data));
        }
    } else {
        throw std::invalid_argument("schedule must be an object or array");
    }
    validate_schedule(s, data);
    return s;
}

nlohmann::json solve_result_to_json(const SolveResult& r, const SchoolData& data) {
    nlohmann::json j;
    j["status"] = r.status == SolveStatus::Optimal ? "optimal" : "infeasible";
    if (r.status == SolveStatus::Optimal) {
        j["schedule"] = schedule_to_json(*r.schedule, data);
        j["objective_value"] = to_string(r.objective_value);
        j["peak_load"] = r.features->peak_load;
        j["student_load_balancing"] = to_string(r.features->peak_load_hundreds());
        j["schedule_deviation"] = to_string(r.features->avg_deviation());
    } else {
        j["violated_bounds"] = nlohmann::json::array();
        for (const auto& v : r.infeasibility.violated_bounds) {
            j["violated_bounds"].push_back({{"objective", to_string(v.objective)},
                                            {"requested", to_string(v.requested)},
                                            {"min_achievable", to_string(v.min_achievable)}});
        }
    }
    return j;
}

}  // namespace schoolopt
