#include "support.hpp"

#include "schoolopt/kernels.hpp"
#include "schoolopt/model.hpp"
#include "schoolopt/toolkit.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace schoolopt;
using namespace schoolopt::testing;

TEST(Solver, DefaultModelReproducesPublishedDefault) {
    const auto r = solve(default_model(), canonical_data());
    ASSERT_EQ(r.status, SolveStatus::Optimal);
    EXPECT_EQ(*r.schedule, default_schedule());
    EXPECT_EQ(r.features->peak_load, 2565);
    EXPECT_EQ(r.features->avg_deviation(), Rational(17, 2));
    EXPECT_EQ(r.objective_value, Rational(2565, 100) + Rational(17, 2));
}

TEST(Solver, FixedOrtegaScenarios) {
    const auto& d = canonical_data();
    ModelState m = default_model();
    m.fixed[2] = 1;
    auto r = solve(m, d);
    ASSERT_EQ(r.status, SolveStatus::Optimal);
    EXPECT_EQ(*r.schedule, ortega_750());

    m.fixed[2] = 2;
    r = solve(m, d);
    ASSERT_EQ(r.status, SolveStatus::Optimal);
    EXPECT_EQ(*r.schedule, ortega_840());

    m.bounds[ObjectiveId::StudentLoadBalancing] = Rational(2564, 100);
    m.bounds[ObjectiveId::ScheduleDeviation] = Rational(16);
    r = solve(m, d);
    ASSERT_EQ(r.status, SolveStatus::Optimal);
    EXPECT_EQ(*r.schedule, option_one());

    ModelState fin = default_model();
    fin.bounds[ObjectiveId::StudentLoadBalancing] = Rational(25);
    fin.bounds[ObjectiveId::ScheduleDeviation] = Rational(23, 2);
    r = solve(fin, d);
    ASSERT_EQ(r.status, SolveStatus::Optimal);
    EXPECT_EQ(*r.schedule, final_ortega());
}

TEST(Solver, EverettLateWithTightDeviationIsInfeasible) {
    ModelState m = default_model();
    m.fixed[7] = 3;
    m.bounds[ObjectiveId::ScheduleDeviation] = Rational(16);
    const auto r = solve(m, canonical_data());
    ASSERT_EQ(r.status, SolveStatus::Infeasible);
    EXPECT_FALSE(r.schedule.has_value());
    ASSERT_EQ(r.infeasibility.violated_bounds.size(), 1u);
    const auto& v = r.infeasibility.violated_bounds[0];
    EXPECT_EQ(v.objective, ObjectiveId::ScheduleDeviation);
    EXPECT_EQ(v.requested, Rational(16));
    EXPECT_EQ(v.min_achievable, Rational(33, 2));
    EXPECT_EQ(min_achievable(ObjectiveId::ScheduleDeviation, m, canonical_data()), Rational(33, 2));
}

TEST(Solver, OrtegaEarlyWithTightDeviationIsInfeasible) {
    ModelState m = default_model();
    m.fixed[2] = 1;
    m.bounds[ObjectiveId::ScheduleDeviation] = Rational(12);
    const auto r = solve(m, canonical_data());
    ASSERT_EQ(r.status, SolveStatus::Infeasible);
    ASSERT_EQ(r.infeasibility.violated_bounds.size(), 1u);
    EXPECT_EQ(r.infeasibility.violated_bounds[0].min_achievable, Rational(33, 2));
}

TEST(Solver, MatchesBruteForceOnRandomModels) {
    std::mt19937_64 rng(20240611);
    const auto& d = canonical_data();
    int infeasible = 0;
    for (int i = 0; i < 100; ++i) {
        const ModelState m = random_model(rng);
        const auto got = solve(m, d);
        const auto want = brute_force(m, d);
        ASSERT_EQ(got.status == SolveStatus::Optimal, want.feasible) << "model " << i;
        if (!want.feasible) {
            ++infeasible;
            for (const auto& v : got.infeasibility.violated_bounds) EXPECT_GT(v.min_achievable, v.requested);
            continue;
        }
        EXPECT_EQ(got.objective_value, want.value) << "model " << i;
        EXPECT_EQ(*got.schedule, make_schedule(want.argmin)) << "model " << i;
        EXPECT_TRUE(satisfies(m, *got.schedule, *got.features));
        EXPECT_EQ(objective_value(m, *got.schedule, *got.features), got.objective_value);
    }
    EXPECT_GT(infeasible, 0) << "the random models should exercise infeasibility too";
}

TEST(Solver, EveryForbiddenSlotSurfacesAsError) {
    ModelState m = default_model();
    for (int t = 1; t <= 3; ++t) m.forbidden.insert({5, t});
    EXPECT_THROW(solve(m, canonical_data()), InfeasibleSpaceError);
}

TEST(Model, ValidationRejectsContradictions) {
    const auto& d = canonical_data();
    ModelState m = default_model();
    m.fixed[3] = 2;
    m.forbidden.insert({3, 2});
    EXPECT_THROW(validate_model(m, d), ModelError);
    ModelState neg = default_model();
    neg.alpha = Rational(-1);
    EXPECT_THROW(validate_model(neg, d), ModelError);
    ModelState bad = default_model();
    bad.fixed[11] = 1;
    EXPECT_THROW(validate_model(bad, d), ModelError);
}

TEST(Model, SummaryAndJsonRoundTrip) {
    std::mt19937_64 rng(5);
    const auto& d = canonical_data();
    for (int i = 0; i < 50; ++i) {
        ModelState m = random_model(rng);
        EXPECT_EQ(model_from_json(model_to_json(m, d), d), m);
        m.gamma.clear();  // the summary reports bonuses only as a count
        EXPECT_EQ(parse_model_summary(model_summary(m, d), d), m) << model_summary(m, d);
    }
}

TEST(Model, ConstraintNamesAreUnique) {
    const auto& d = canonical_data();
    ModelState m = default_model();
    m.fixed[2] = 1;
    m.forbidden.insert({7, 3});
    m.forbidden.insert({7, 2});
    m.bounds[ObjectiveId::ScheduleDeviation] = Rational(12);
    const auto cs = m.constraints(d);
    std::set<std::string> names;
    for (const auto& c : cs) names.insert(c.name);
    EXPECT_EQ(names.size(), cs.size());
    EXPECT_TRUE(names.count("fix_Ortega (Jose) PK"));
    EXPECT_TRUE(names.count("bound_schedule_deviation"));
}

TEST(Toolkit, EditsAreVisibleInSummary) {
    const auto& d = canonical_data();
    ModelState m = default_model();
    auto r = fix_start_time(m, d, "Ortega (Jose) PK", "7:50 AM", FixType::Fix);
    ASSERT_TRUE(r.ok) << r.message;
    EXPECT_NE(r.model_summary.find("fix_Ortega (Jose) PK"), std::string::npos);
    r = add_objective_upper_bound(m, d, ObjectiveId::ScheduleDeviation, Rational(12));
    ASSERT_TRUE(r.ok);
    r = call_solver(m, d);
    ASSERT_TRUE(r.ok);
    ASSERT_TRUE(r.solve_result.has_value());
    EXPECT_EQ(r.solve_result->status, SolveStatus::Infeasible);
    EXPECT_NE(r.to_tool_content().find("16.5 minutes"), std::string::npos);
    r = remove_constraint(m, d, "bound_schedule_deviation");
    ASSERT_TRUE(r.ok);
    EXPECT_EQ(m.bounds.count(ObjectiveId::ScheduleDeviation), 0u);
    r = remove_constraint(m, d, "bound_schedule_deviation");
    EXPECT_FALSE(r.ok);
    EXPECT_FALSE(r.model_summary.empty());
}

TEST(Toolkit, RejectsUnknownNamesWithoutMutation) {
    const auto& d = canonical_data();
    ModelState m = default_model();
    const ModelState before = m;
    EXPECT_FALSE(fix_start_time(m, d, "Nowhere High", "7:50 AM", FixType::Fix).ok);
    EXPECT_FALSE(fix_start_time(m, d, "Balboa HS", "6:00 AM", FixType::Fix).ok);
    EXPECT_FALSE(change_objective_weight(m, d, ObjectiveId::ScheduleDeviation, Rational(-2)).ok);
    EXPECT_FALSE(add_objective_upper_bound(m, d, ObjectiveId::StudentLoadBalancing, Rational(-1)).ok);
    EXPECT_EQ(m, before);
}

TEST(Toolkit, ExecuteToolFlagsSchemaErrors) {
    const auto& d = canonical_data();
    ModelState m = default_model();
    auto r = execute_tool(m, d, {"c1", "fix_start_time", {{"school", "Balboa HS"}}});
    EXPECT_TRUE(r.schema_error);
    r = execute_tool(m, d, {"c2", "teleport", nlohmann::json::object()});
    EXPECT_FALSE(r.ok);
    r = execute_tool(m, d, {"c3", "change_objective_weight", {{"objective", "schedule_deviation"}, {"weight", 2}}});
    EXPECT_TRUE(r.ok) << r.message;
    EXPECT_EQ(m.beta, Rational(2));
}

TEST(Toolkit, DisplaysObjectivesInBothUnits) {
    EXPECT_EQ(objective_display(ObjectiveId::StudentLoadBalancing, Rational(2565, 100)), "25.65 (2,565 students)");
    EXPECT_EQ(objective_display(ObjectiveId::ScheduleDeviation, Rational(17, 2)), "8.5 minutes");
    const auto table = render_solution(default_schedule(), compute_features(default_schedule(), canonical_data()),
                                       canonical_data());
    EXPECT_NE(table.find("| Ortega (Jose) PK | 9:30 AM |"), std::string::npos);
    EXPECT_NE(table.find("8.5 minutes"), std::string::npos);
}

TEST(Kernels, ParallelArgminMatchesSerial) {
    const auto& d = canonical_data();
    const kernels::FeatureTables tables(d);
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<std::int64_t> w(0, 9), cap(1953, 4000), dcap(0, 800);
    for (int i = 0; i < 20; ++i) {
        kernels::LinearObjective obj;
        obj.per_peak = w(rng);
        obj.per_dev = w(rng);
        if (i % 2) obj.peak_cap = cap(rng);
        if (i % 3 == 0) obj.dev_cap = dcap(rng);
        const auto space = ScheduleSpace::full(d);
        const auto a = kernels::argmin_serial(space, tables, obj);
        const auto b = kernels::argmin_parallel(space, tables, obj);
        ASSERT_EQ(a.found, b.found);
        if (!a.found) continue;
        EXPECT_EQ(a.index, b.index);
        EXPECT_EQ(a.value, b.value);
    }
}

TEST(Kernels, ParallelFirstIndexMatchesSerial) {
    const auto& d = canonical_data();
    const kernels::FeatureTables tables(d);
    const auto space = ScheduleSpace::full(d);
    auto key = [](const std::uint8_t* slots, const kernels::PeakDev& f) {
        return kernels::pack_slot_peak_dev(slots[1], static_cast<std::uint64_t>(f.peak),
                                           static_cast<std::uint64_t>(f.dev_sum));
    };
    const auto a = kernels::first_index_by_key_serial(space, tables, key);
    const auto b = kernels::first_index_by_key_parallel(space, tables, key);
    EXPECT_EQ(a, b);
    int slot = 0;
    std::int64_t peak = 0, dev = 0;
    kernels::unpack_slot_peak_dev(a.front().first, slot, peak, dev);
    EXPECT_GE(slot, 1);
    EXPECT_LE(slot, 3);
}
