// Serial reference vs OpenMP enumeration kernels. The argument is the number of
// schools: 10 is the district data, larger sizes replicate it to grow the space.
#include "schoolopt/kernels.hpp"

#include <benchmark/benchmark.h>

using namespace schoolopt;
using namespace schoolopt::kernels;

namespace {

SchoolData district(int n_schools) {
    const auto& base = canonical_data();
    std::vector<SchoolRecord> schools;
    for (int q = 0; q < n_schools; ++q) {
        SchoolRecord r = base.schools()[static_cast<std::size_t>(q) % base.num_schools()];
        r.id = q + 1;
        r.name += " #" + std::to_string(q + 1);
        schools.push_back(r);
    }
    return SchoolData(schools, base.slots());
}

LinearObjective default_objective(const SchoolData& d) {
    LinearObjective obj;
    obj.per_peak = static_cast<std::int64_t>(d.num_schools());
    obj.per_dev = 10;
    return obj;
}

std::uint64_t slot_peak_dev_key(const std::uint8_t* slots, const PeakDev& f) {
    return pack_slot_peak_dev(slots[1], static_cast<std::uint64_t>(f.peak), static_cast<std::uint64_t>(f.dev_sum));
}

template <bool Parallel>
void BM_Argmin(benchmark::State& state) {
    const auto d = district(static_cast<int>(state.range(0)));
    const auto space = ScheduleSpace::full(d);
    const FeatureTables tables(d);
    const auto obj = default_objective(d);
    for (auto _ : state) {
        auto r = Parallel ? argmin_parallel(space, tables, obj) : argmin_serial(space, tables, obj);
        benchmark::DoNotOptimize(r);
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * space.size()));
    state.counters["threads"] = Parallel ? max_threads() : 1;
}

template <bool Parallel>
void BM_FirstIndexByKey(benchmark::State& state) {
    const auto d = district(static_cast<int>(state.range(0)));
    const auto space = ScheduleSpace::full(d);
    const FeatureTables tables(d);
    for (auto _ : state) {
        auto r = Parallel ? first_index_by_key_parallel(space, tables, slot_peak_dev_key)
                          : first_index_by_key_serial(space, tables, slot_peak_dev_key);
        benchmark::DoNotOptimize(r);
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * space.size()));
    state.counters["threads"] = Parallel ? max_threads() : 1;
}

}  // namespace

BENCHMARK(BM_Argmin<false>)->Name("argmin/serial")->Arg(10)->Arg(12)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Argmin<true>)->Name("argmin/parallel")->Arg(10)->Arg(12)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_FirstIndexByKey<false>)->Name("first_index/serial")->Arg(10)->Arg(12)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_FirstIndexByKey<true>)->Name("first_index/parallel")->Arg(10)->Arg(12)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
