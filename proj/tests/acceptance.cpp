// Acceptance run: one PASS/FAIL line per criterion, details indented below.
// Exit status is nonzero when any criterion fails.

#include "ptacheck/experiment.hpp"
#include "ptacheck/reach.hpp"
#include "ptacheck/reduction.hpp"
#include "ptacheck/semantics.hpp"
#include "ptacheck/wlan.hpp"

#include "support.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace ptacheck;

namespace {

constexpr double kTable3Tol = 1e-6;
constexpr double kTable3Epsilon = 1e-6;
constexpr double kMinReduction = 5.0;
constexpr double kVariantTol = 2e-6;
constexpr double kParTol = 2e-6;
constexpr double kOracleTol = 1e-9;
constexpr double kCompressTol = 1e-9;
constexpr double kDeadlineTol = 2e-6;

struct CriterionResult {
    bool pass = false;
    std::string summary;
};

void detail(const std::string& line) { std::cout << "    " << line << "\n" << std::flush; }

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

double reach_value(const Network& net, const StatePredicate& pred, Direction d, double eps = 1e-10) {
    ExpansionOptions opt;
    opt.absorbing = pred;
    const ProbSystem ps = digital_semantics(net, opt);
    ReachQuery q;
    q.targets = ps.mark(pred);
    q.direction = d;
    q.epsilon = eps;
    return reach(ps, q).probability;
}

ModelStats full_size(const Network& net, StatePredicate absorbing = {}) {
    ExpansionStats st;
    ExpansionOptions opt;
    opt.stats = &st;
    opt.absorbing = std::move(absorbing);
    (void)digital_semantics(net, opt);
    return {st.states, st.transitions, st.choices};
}

// 1. Two-station backoff probabilities, maximised over the reduced
// transmission-length space.
CriterionResult table3() {
    const double expected[] = {1.0, 0.18359375, 0.01703262, 7.9424586e-4, 1.8566660e-5, 2.1729427e-7};
    TopologyConfig cfg;
    cfg.param_space = ParamSpace{ParamSpace::Kind::Reduced, 48};
    ReachQuery q;
    q.epsilon = kTable3Epsilon;
    q.relative = true;
    double worst = 0.0;
    for (int k = 1; k <= 6; ++k) {
        const QueryOutcome o = run_query(cfg, QuerySpec{QuerySpec::Kind::Backoff, k}, q);
        const double err = std::abs(o.result.probability - expected[k - 1]);
        worst = std::max(worst, err);
        detail("k=" + std::to_string(k) + " max=" + fmt(o.result.probability) + " expected=" + fmt(expected[k - 1]) +
               " abs_err=" + fmt(err) + " states=" + std::to_string(o.peak.states) +
               " iterations=" + std::to_string(o.result.iterations));
    }
    const bool pass = worst <= kTable3Tol;
    if (!pass) std::cout << model_summary(build_network(cfg, {258, 258}));
    return {pass, "worst absolute error " + fmt(worst) + " (tol " + fmt(kTable3Tol) + ")"};
}

// 2. Full two-station expansions: original model with nondeterministic
// packet lengths against the reduced model.
CriterionResult state_counts() {
    WlanParams nondet;
    nondet.tx_mode = TxMode::NonDet;
    const WlanParams fixed;
    const ModelStats abs_nd = full_size(time_scale(make_lan(Variant::Abs, nondet), 50));
    const ModelStats abs_fx = full_size(time_scale(make_lan(Variant::Abs, fixed), 50));
    const ModelStats red = full_size(time_scale(make_lan(Variant::Red, fixed), 50));
    auto row = [](const std::string& what, const ModelStats& s) {
        detail(what + ": states=" + std::to_string(s.states) + " transitions=" + std::to_string(s.transitions) +
               " choices=" + std::to_string(s.choices));
    };
    row("abs nondet-tx", abs_nd);
    row("abs fixed-tx", abs_fx);
    row("red fixed-tx", red);
    // Property-specific builds stop exploring at bc=6.
    const auto k6 = backoff_target(6, 2);
    const ModelStats abs_nd6 = full_size(time_scale(make_lan(Variant::Abs, nondet), 50), k6);
    const ModelStats red6 = full_size(time_scale(make_lan(Variant::Red, fixed), 50), k6);
    row("abs nondet-tx, absorbing at bc=6", abs_nd6);
    row("red fixed-tx, absorbing at bc=6", red6);
    detail("absorbing ratio " + fmt(double(abs_nd6.states) / double(red6.states)) +
           "; reference counts 5958233 (original) and 393958 (optimized)");
    const double ratio = double(abs_nd.states) / double(red.states);
    const bool pass = red.states < abs_nd.states && ratio >= kMinReduction;
    return {pass, "full-expansion ratio " + fmt(ratio) + " (need >= " + fmt(kMinReduction) + ")"};
}

WlanParams small_lan() {
    WlanParams p;
    p.bc_max = 3;
    p.TX_MAX = 500;
    return p;
}

// 3. Abs, Int and Red agree on small instances; the dominator check certifies a pair.
CriterionResult variants() {
    WlanParams p = small_lan();
    double worst = 0.0;
    std::size_t checks = 0;
    for (const auto& tx : enumerate_params({ParamSpace::Kind::Full, 121}, p)) {
        p.tx_lens = tx;
        for (std::int64_t k = 1; k <= 3; ++k) {
            const auto pred = backoff_target(k, 2);
            for (Direction d : {Direction::Max, Direction::Min}) {
                const double a = reach_value(time_scale(make_lan(Variant::Abs, p), 50), pred, d);
                const double i = reach_value(time_scale(make_lan(Variant::Int, p), 50), pred, d);
                const double r = reach_value(time_scale(make_lan(Variant::Red, p), 50), pred, d);
                worst = std::max({worst, std::abs(a - i), std::abs(a - r), std::abs(i - r)});
                ++checks;
            }
        }
    }
    detail(std::to_string(checks) + " max/min queries over 9 assignments, worst spread " + fmt(worst));

    p.tx_lens = {258, 306};
    const auto pred = backoff_target(2, 2);
    ReachQuery base;
    base.epsilon = 1e-10;
    bool certified = false;
    for (auto [v1, v2] : {std::pair{Variant::Abs, Variant::Int}, {Variant::Int, Variant::Red}, {Variant::Abs, Variant::Red}}) {
        ExpansionOptions opt;
        opt.absorbing = pred;
        const ProbSystem ps1 = digital_semantics(time_scale(make_lan(v1, p), 50), opt);
        const ProbSystem ps2 = digital_semantics(time_scale(make_lan(v2, p), 50), opt);
        const Comparison c = compare_systems(ps1, ps1.mark(pred), ps2, ps2.mark(pred), base, kVariantTol);
        detail(to_string(v1) + " vs " + to_string(v2) + ": " + c.verdict + ", " +
               std::to_string(c.report.ps_disagreements.size()) + " disagreements, " +
               std::to_string(c.report.condition1_violations.size()) + " without a shared dominator");
        certified = certified || c.verdict == "equivalent-certified";
    }
    const bool pass = worst <= kVariantTol && certified;
    return {pass, "spread " + fmt(worst) + " (tol " + fmt(kVariantTol) + "), certified pair: " + (certified ? "yes" : "no")};
}

// 4. Restricting transmission lengths does not change the maximum.
CriterionResult parameter_restriction() {
    TopologyConfig cfg;
    cfg.params = small_lan();
    cfg.params.TX_MAX = 450; // grid 258..450 step 48, five values
    ReachQuery q;
    q.epsilon = 1e-10;
    const QuerySpec spec{QuerySpec::Kind::Backoff, 2};
    cfg.param_space = ParamSpace{ParamSpace::Kind::Full, 48};
    const QueryOutcome full = run_query(cfg, spec, q);
    cfg.param_space = ParamSpace{ParamSpace::Kind::Reduced, 48};
    const QueryOutcome reduced = run_query(cfg, spec, q);
    detail("full: " + std::to_string(full.models) + " assignments, max " + fmt(full.result.probability));
    detail("reduced: " + std::to_string(reduced.models) + " assignments, max " + fmt(reduced.result.probability));
    const double diff = std::abs(full.result.probability - reduced.result.probability);
    return {diff <= kParTol, "difference " + fmt(diff) + " (tol " + fmt(kParTol) + ")"};
}

// 5. Value iteration against exhaustive adversary enumeration.
CriterionResult oracle() {
    std::mt19937_64 rng(2002);
    double worst = 0.0;
    const int trials = 150;
    for (int t = 0; t < trials; ++t) {
        const ProbSystem ps = testing_support::build(testing_support::random_spec(rng, 12, 3));
        const auto f = testing_support::random_targets(rng, ps.num_states());
        const auto ex = enumerate_adversaries(ps, f);
        ReachQuery q;
        q.targets = f;
        q.epsilon = 1e-12;
        const double mx = max_reach(ps, q).probability;
        q.direction = Direction::Min;
        const double mn = min_reach(ps, q).probability;
        worst = std::max({worst, std::abs(mx - ex.max), std::abs(mn - ex.min)});
    }
    return {worst <= kOracleTol, std::to_string(trials) + " systems, worst error " + fmt(worst)};
}

// 6. Compression is sound and idempotent.
CriterionResult compression() {
    std::mt19937_64 rng(2003);
    double worst = 0.0;
    std::size_t idempotent = 0, removed = 0;
    const int trials = 150;
    for (int t = 0; t < trials; ++t) {
        auto spec = testing_support::random_spec(rng, 12, 3);
        auto f = testing_support::random_targets(rng, spec.states.size());
        testing_support::inject_chains(rng, spec, f, 4);
        const ProbSystem ps = testing_support::build(spec);
        const auto once = compress(ps, f);
        const auto twice = compress(once.ps, once.targets);
        if (twice.ps.structurally_equal(once.ps) && twice.targets == once.targets) ++idempotent;
        removed += ps.num_states() - once.ps.num_states();
        for (Direction d : {Direction::Max, Direction::Min}) {
            ReachQuery q;
            q.direction = d;
            q.epsilon = 1e-13;
            q.targets = f;
            const double before = reach(ps, q).probability;
            q.targets = once.targets;
            worst = std::max(worst, std::abs(before - reach(once.ps, q).probability));
        }
    }
    detail(std::to_string(removed) + " states removed in total");
    const bool pass = worst <= kCompressTol && idempotent == static_cast<std::size_t>(trials);
    return {pass, std::to_string(trials) + " systems, worst error " + fmt(worst) + ", idempotent " +
                      std::to_string(idempotent) + "/" + std::to_string(trials)};
}

WlanParams tiny_deadline_lan() {
    WlanParams p;
    p.DIFS = 2;
    p.VULN = 1;
    p.SIFS = 1;
    p.ACK = 2;
    p.ACK_TO = 4;
    p.C = 1;
    p.slot = 1;
    p.TX_MIN = 3;
    p.TX_MAX = 4;
    p.bc_max = 2;
    p.tx_lens = {3, 4};
    return p;
}

double deadline_min(Variant v, std::int64_t d) {
    const auto phi = v == Variant::Red ? DeadlineSpec::Phi::Compensated : DeadlineSpec::Phi::Identity;
    const Network net = decorate_deadline(make_lan(v, tiny_deadline_lan()), DeadlineSpec{d, phi});
    return reach_value(net, deadline_target(2), Direction::Min);
}

// 7. Identity-phi Abs against compensated-phi Red on a small two-station LAN.
CriterionResult deadlines() {
    const std::int64_t lo = 15, hi = 45;
    std::vector<double> a, r;
    for (std::int64_t d = lo; d <= hi; ++d) {
        a.push_back(deadline_min(Variant::Abs, d));
        r.push_back(deadline_min(Variant::Red, d));
    }
    auto at = [&](const std::vector<double>& v, std::int64_t d) { return v[static_cast<std::size_t>(d - lo)]; };
    // One deadline per regime, read off the Abs curve.
    std::int64_t infeasible = -1, partial = -1, certain = -1;
    for (std::int64_t d = lo; d <= hi; ++d) {
        const double v = at(a, d);
        if (v == 0.0) infeasible = d;
        if (v > 0.0 && v < 1.0 && partial < 0) partial = d;
        if (v == 1.0 && certain < 0) certain = d;
    }
    if (infeasible < 0 || partial < 0 || certain < 0) return {false, "deadline range does not span all regimes"};
    bool pass = true;
    for (std::int64_t d : {infeasible, partial, certain}) {
        const double diff = std::abs(at(a, d) - at(r, d));
        pass = pass && diff <= kDeadlineTol;
        detail("deadline " + std::to_string(d) + ": abs identity " + fmt(at(a, d)) + ", red compensated " + fmt(at(r, d)));
    }
    // Smallest shift s with red(d + s) == abs(d) across the scanned range.
    std::optional<std::int64_t> shift;
    for (std::int64_t s = 0; s <= hi - lo && !shift; ++s) {
        bool ok = true;
        for (std::int64_t d = lo; d + s <= hi; ++d) ok = ok && std::abs(at(a, d) - at(r, d + s)) <= kDeadlineTol;
        if (ok) shift = s;
    }
    detail("red curve equals abs curve shifted by " + (shift ? std::to_string(*shift) : std::string("?")) +
           " time units (DIFS = " + std::to_string(tiny_deadline_lan().DIFS) + ")");
    return {pass, "deadlines " + std::to_string(infeasible) + "/" + std::to_string(partial) + "/" +
                      std::to_string(certain) + " (tol " + fmt(kDeadlineTol) + ")"};
}

// 8. Three-station smoke run. Constants are multiples of the slot so scaling
// is exact and the variants must agree.
CriterionResult three_stations() {
    WlanParams p;
    p.n_stations = 3;
    p.bc_max = 2;
    p.DIFS = 100;
    p.VULN = 50;
    p.SIFS = 50;
    p.ACK = 200;
    p.ACK_TO = 300;
    p.TX_MIN = 250;
    p.TX_MAX = 300;
    double worst = 0.0;
    for (const auto& tx : std::vector<std::vector<std::int64_t>>{{250, 250, 250}, {250, 300, 250}}) {
        p.tx_lens = tx;
        for (std::int64_t k = 1; k <= 2; ++k) {
            const auto pred = backoff_target(k, 3);
            for (Direction d : {Direction::Max, Direction::Min}) {
                double v[3];
                int i = 0;
                for (Variant var : {Variant::Abs, Variant::Int, Variant::Red}) v[i++] = reach_value(time_scale(make_lan(var, p), 50), pred, d);
                worst = std::max({worst, std::abs(v[0] - v[1]), std::abs(v[0] - v[2])});
                if (d == Direction::Max) detail("tx " + std::to_string(tx[1]) + " k=" + std::to_string(k) + " max " + fmt(v[0]));
            }
        }
    }
    // With the FHSS timings DIFS rounds to [2,3] slots and the bounds part ways.
    WlanParams fhss;
    fhss.n_stations = 3;
    fhss.bc_max = 2;
    fhss.tx_lens = {258, 258, 258};
    const auto k2 = backoff_target(2, 3);
    detail("FHSS timings, k=2 max: abs " + fmt(reach_value(time_scale(make_lan(Variant::Abs, fhss), 50), k2, Direction::Max)) +
           ", red " + fmt(reach_value(time_scale(make_lan(Variant::Red, fhss), 50), k2, Direction::Max)) +
           " (published three-station value 0.59643554)");
    return {worst <= kVariantTol, "worst spread " + fmt(worst) + " (tol " + fmt(kVariantTol) + ")"};
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<CriterionResult()>>> criteria{
        {"backoff probabilities, two stations", table3},
        {"state-count reduction", state_counts},
        {"variant equivalence", variants},
        {"parameter restriction", parameter_restriction},
        {"value iteration vs adversary oracle", oracle},
        {"compression soundness", compression},
        {"deadline compensation", deadlines},
        {"three-station smoke run", three_stations},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        std::printf("criterion %zu: %s\n", i + 1, criteria[i].first.c_str());
        std::fflush(stdout);
        const auto t0 = std::chrono::steady_clock::now();
        CriterionResult o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s criterion %zu: %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    o.summary.c_str(), secs);
        std::fflush(stdout);
        if (!o.pass) ++failed;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
