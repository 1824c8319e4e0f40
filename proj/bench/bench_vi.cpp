// Serial against OpenMP value iteration on expanded two-station models.

#include "ptacheck/reach.hpp"
#include "ptacheck/semantics.hpp"
#include "ptacheck/wlan.hpp"

#include <benchmark/benchmark.h>

#include <map>

using namespace ptacheck;

namespace {

struct Model {
    ProbSystem ps;
    std::vector<bool> targets;
};

const Model& model(std::int64_t k) {
    static std::map<std::int64_t, Model> cache;
    auto it = cache.find(k);
    if (it == cache.end()) {
        const auto pred = backoff_target(k, 2);
        ExpansionOptions opt;
        opt.absorbing = pred;
        ProbSystem ps = digital_semantics(time_scale(make_lan(Variant::Red, WlanParams{}), 50), opt);
        auto f = ps.mark(pred);
        it = cache.emplace(k, Model{std::move(ps), std::move(f)}).first;
    }
    return it->second;
}

void run(benchmark::State& state, Kernel kernel) {
    const Model& m = model(state.range(0));
    ReachQuery q;
    q.targets = m.targets;
    q.epsilon = 1e-8;
    q.kernel = kernel;
    if (kernel == Kernel::Parallel) q.threads = static_cast<int>(state.range(1));
    std::size_t iterations = 0;
    for (auto _ : state) {
        auto r = max_reach(m.ps, q);
        iterations = r.iterations;
        benchmark::DoNotOptimize(r.probability);
    }
    state.counters["states"] = static_cast<double>(m.ps.num_states());
    state.counters["sweeps"] = static_cast<double>(iterations);
}

void BM_Serial(benchmark::State& state) { run(state, Kernel::Serial); }
void BM_Parallel(benchmark::State& state) { run(state, Kernel::Parallel); }

} // namespace

BENCHMARK(BM_Serial)->Args({4, 1})->Args({5, 1})->Args({6, 1})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Parallel)
    ->ArgsProduct({{4, 5, 6}, {2, 4, 8}})
    ->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
