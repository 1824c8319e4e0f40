#include "doctest.h"

#include "ptacheck/errors.hpp"
#include "ptacheck/reach.hpp"

#include "support.hpp"

#include <cmath>

using namespace ptacheck;
using namespace testing_support;

namespace {

ReachQuery query(std::vector<bool> f, Direction d, double eps = 1e-12) {
    ReachQuery q;
    q.targets = std::move(f);
    q.direction = d;
    q.epsilon = eps;
    return q;
}

} // namespace

TEST_CASE("qualitative precomputation") {
    // 0 -> {1: target, 2: sink}; 3 isolated
    Spec spec;
    spec.states = {{{"coin", {{1, 1, 2}, {2, 1, 2}}}}, {}, {}, {}};
    const ProbSystem ps = build(spec);
    SUBCASE("every state is a target") {
        auto z = qualitative_zero(ps, std::vector<bool>(4, true));
        CHECK(std::count(z.begin(), z.end(), true) == 0);
    }
    SUBCASE("isolated absorbing non-target") {
        auto z = qualitative_zero(ps, {false, true, false, false});
        CHECK(z[3]);
        CHECK(z[2]);
        CHECK_FALSE(z[0]);
    }
}

TEST_CASE("max and min on hand-built systems") {
    SUBCASE("initial state is a target") {
        Spec spec;
        spec.states = {{dirac(1)}, {}};
        auto r = max_reach(build(spec), query({true, false}, Direction::Max));
        CHECK(r.probability == 1.0);
        CHECK(r.iterations == 0);
    }
    SUBCASE("fair coin into target or sink") {
        Spec spec;
        spec.states = {{{"coin", {{1, 1, 2}, {2, 1, 2}}}}, {}, {}};
        const ProbSystem ps = build(spec);
        CHECK(max_reach(ps, query({false, true, false}, Direction::Max)).probability == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(min_reach(ps, query({false, true, false}, Direction::Min)).probability == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("choice between target and sink") {
        Spec spec;
        spec.states = {{dirac(1), dirac(2)}, {}, {}};
        const ProbSystem ps = build(spec);
        const std::vector<bool> f{false, true, false};
        CHECK(max_reach(ps, query(f, Direction::Max)).probability == 1.0);
        CHECK(min_reach(ps, query(f, Direction::Min)).probability == 0.0);
        auto e = enumerate_adversaries(ps, f);
        CHECK(e.min == 0.0);
        CHECK(e.max == 1.0);
        CHECK(e.count == 2);
    }
    SUBCASE("min must not count an avoiding self-loop as progress") {
        // 0 may loop forever or flip a coin; min is 0 by looping.
        Spec spec;
        spec.states = {{dirac(0, "stay"), {"coin", {{1, 1, 2}, {2, 1, 2}}}}, {}, {dirac(0)}};
        const ProbSystem ps = build(spec);
        CHECK(min_reach(ps, query({false, true, false}, Direction::Min)).probability == 0.0);
        CHECK(max_reach(ps, query({false, true, false}, Direction::Max)).probability == doctest::Approx(1.0));
    }
    SUBCASE("verdict against lambda") {
        Spec spec;
        spec.states = {{{"coin", {{1, 1, 4}, {2, 3, 4}}}}, {}, {}};
        ReachQuery q = query({false, true, false}, Direction::Max);
        q.lambda = 0.3;
        CHECK(max_reach(build(spec), q).verdict == std::optional<bool>(true));
        q.comparator = Comparator::Ge;
        CHECK(max_reach(build(spec), q).verdict == std::optional<bool>(false));
    }
    SUBCASE("iteration cap") {
        // Geometric convergence towards 1/2 needs many sweeps at 1e-15.
        Spec spec;
        spec.states = {{{"c", {{0, 98, 100}, {1, 1, 100}, {2, 1, 100}}}}, {}, {}};
        ReachQuery q = query({false, true, false}, Direction::Max, 1e-15);
        q.max_iterations = 5;
        CHECK_THROWS_AS(max_reach(build(spec), q), NotConverged);
    }
}

TEST_CASE("Markov chain solving") {
    Fps chain;
    chain.rows = {{Transition{1, 1.0, Rational(1)}}, {}};
    CHECK(solve_fps(chain, {true, false}) == 1.0);
    CHECK(solve_fps(chain, {false, true}) == doctest::Approx(1.0));
    CHECK(solve_fps_exact(chain, {false, true}) == doctest::Approx(1.0));

    Fps loop;
    loop.rows = {{Transition{0, 0.5, Rational(1, 2)}, Transition{1, 0.25, Rational(1, 4)}, Transition{2, 0.25, Rational(1, 4)}},
                 {},
                 {}};
    CHECK(solve_fps_exact(loop, {false, true, false}) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(solve_fps(loop, {false, true, false}, 1e-12) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("random systems: value iteration matches the adversary oracle") {
    std::mt19937_64 rng(20240611);
    for (int trial = 0; trial < 120; ++trial) {
        const Spec spec = random_spec(rng);
        const ProbSystem ps = build(spec);
        const auto f = random_targets(rng, ps.num_states());
        const auto oracle = enumerate_adversaries(ps, f);
        const auto mx = max_reach(ps, query(f, Direction::Max));
        const auto mn = min_reach(ps, query(f, Direction::Min));
        INFO("trial " << trial);
        CHECK(std::abs(mx.probability - oracle.max) <= 1e-9);
        CHECK(std::abs(mn.probability - oracle.min) <= 1e-9);
        CHECK(mn.probability <= mx.probability + 1e-12);
        CHECK(mx.probability >= 0.0);
        CHECK(mx.probability <= 1.0);
    }
}

TEST_CASE("random systems: witnesses reproduce the extremum") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const ProbSystem ps = build(random_spec(rng));
        const auto f = random_targets(rng, ps.num_states());
        for (Direction d : {Direction::Max, Direction::Min}) {
            const auto r = reach(ps, query(f, d, 1e-10));
            const double induced = solve_fps_exact(induced_fps(ps, r.adversary), f);
            INFO("trial " << trial << (d == Direction::Max ? " max" : " min"));
            CHECK(std::abs(induced - r.probability) <= 2e-10 + 1e-9);
        }
    }
}

TEST_CASE("random systems: larger target sets never lower the maximum") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        const ProbSystem ps = build(random_spec(rng));
        auto f = random_targets(rng, ps.num_states());
        auto g = f;
        std::bernoulli_distribution coin(0.3);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] = g[i] || coin(rng);
        CHECK(max_reach(ps, query(f, Direction::Max)).probability <= max_reach(ps, query(g, Direction::Max)).probability + 1e-12);
        CHECK(min_reach(ps, query(f, Direction::Min)).probability <= min_reach(ps, query(g, Direction::Min)).probability + 1e-12);
    }
}

TEST_CASE("serial and parallel kernels agree bitwise") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 30; ++trial) {
        const ProbSystem ps = build(random_spec(rng, 40, 3));
        const auto f = random_targets(rng, ps.num_states());
        for (Direction d : {Direction::Max, Direction::Min}) {
            ReachQuery a = query(f, d, 1e-9);
            ReachQuery b = a;
            a.kernel = Kernel::Serial;
            b.kernel = Kernel::Parallel;
            b.threads = 3;
            const auto ra = reach(ps, a);
            const auto rb = reach(ps, b);
            CHECK(ra.values == rb.values);
            CHECK(ra.iterations == rb.iterations);
            CHECK(ra.adversary == rb.adversary);
        }
    }
}

TEST_CASE("enumeration cap") {
    Spec spec;
    spec.states.resize(30);
    for (StateIndex s = 0; s < 30; ++s) spec.states[s] = {dirac((s + 1) % 30), dirac(s)};
    CHECK_THROWS_AS(enumerate_adversaries(build(spec), std::vector<bool>(30, false), 1000), TooManyAdversaries);
}
