#include "ptacheck/reach.hpp"

#include "ptacheck/errors.hpp"

#include <Eigen/Dense>
#include <omp.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ptacheck {

namespace {

/// Predecessor lists in CSR form; each entry is (source state, global choice).
struct Reverse {
    std::vector<std::uint64_t> begin;
    std::vector<StateIndex> source;
    std::vector<std::uint64_t> choice;
};

Reverse reverse_graph(const ProbSystem& ps) {
    const std::size_t n = ps.num_states();
    Reverse r;
    r.begin.assign(n + 1, 0);
    for (const auto& t : ps.all_transitions()) ++r.begin[t.target + 1];
    for (std::size_t i = 0; i < n; ++i) r.begin[i + 1] += r.begin[i];
    r.source.resize(ps.num_transitions());
    r.choice.resize(ps.num_transitions());
    std::vector<std::uint64_t> fill(r.begin.begin(), r.begin.end() - 1);
    for (StateIndex s = 0; s < n; ++s) {
        const std::uint64_t first = ps.first_choice(s);
        auto cs = ps.choices(s);
        for (std::size_t k = 0; k < cs.size(); ++k) {
            for (const auto& t : ps.transitions(cs[k])) {
                auto slot = fill[t.target]++;
                r.source[slot] = s;
                r.choice[slot] = first + k;
            }
        }
    }
    return r;
}

/// Backward closure from `seed` through edges whose choice passes `use`.
template <class UseChoice>
std::vector<bool> backward(const ProbSystem& ps, const Reverse& rev, std::vector<bool> seed, const std::vector<bool>& allowed,
                           UseChoice use) {
    std::vector<StateIndex> stack;
    for (StateIndex s = 0; s < seed.size(); ++s) {
        if (seed[s]) stack.push_back(s);
    }
    while (!stack.empty()) {
        StateIndex t = stack.back();
        stack.pop_back();
        for (auto i = rev.begin[t]; i < rev.begin[t + 1]; ++i) {
            StateIndex s = rev.source[i];
            if (seed[s] || !allowed[s] || !use(rev.choice[i])) continue;
            seed[s] = true;
            stack.push_back(s);
        }
    }
    (void)ps;
    return seed;
}

std::vector<bool> check_targets(const ProbSystem& ps, const std::vector<bool>& targets) {
    if (targets.size() != ps.num_states()) throw Error("target mask size does not match the state count");
    return targets;
}

} // namespace

std::vector<bool> qualitative_zero(const ProbSystem& ps, const std::vector<bool>& targets) {
    auto f = check_targets(ps, targets);
    Reverse rev = reverse_graph(ps);
    std::vector<bool> all(ps.num_states(), true);
    auto reach = backward(ps, rev, f, all, [](std::uint64_t) { return true; });
    reach.flip();
    return reach;
}

std::vector<bool> qualitative_one_exists(const ProbSystem& ps, const std::vector<bool>& targets) {
    auto f = check_targets(ps, targets);
    const std::size_t n = ps.num_states();
    Reverse rev = reverse_graph(ps);
    std::vector<bool> u(n, true);
    const auto& choices = ps.all_choices();
    while (true) {
        // A choice qualifies when it stays inside u.
        std::vector<bool> inside(choices.size(), true);
        for (std::size_t c = 0; c < choices.size(); ++c) {
            for (const auto& t : ps.transitions(choices[c])) {
                if (!u[t.target]) {
                    inside[c] = false;
                    break;
                }
            }
        }
        std::vector<bool> all(n, true);
        auto next = backward(ps, rev, f, all, [&](std::uint64_t c) { return inside[c]; });
        if (next == u) return u;
        u = std::move(next);
    }
}

std::vector<bool> qualitative_avoid(const ProbSystem& ps, const std::vector<bool>& targets) {
    auto f = check_targets(ps, targets);
    const std::size_t n = ps.num_states();
    std::vector<bool> r(n);
    for (StateIndex s = 0; s < n; ++s) r[s] = !f[s];
    bool changed = true;
    while (changed) {
        changed = false;
        for (StateIndex s = 0; s < n; ++s) {
            if (!r[s]) continue;
            auto cs = ps.choices(s);
            if (cs.empty()) continue;
            bool keep = false;
            for (const auto& c : cs) {
                bool stays = true;
                for (const auto& t : ps.transitions(c)) {
                    if (!r[t.target]) {
                        stays = false;
                        break;
                    }
                }
                if (stays) {
                    keep = true;
                    break;
                }
            }
            if (!keep) {
                r[s] = false;
                changed = true;
            }
        }
    }
    return r;
}

std::vector<bool> qualitative_one_all(const ProbSystem& ps, const std::vector<bool>& targets) {
    auto f = check_targets(ps, targets);
    auto avoid = qualitative_avoid(ps, f);
    Reverse rev = reverse_graph(ps);
    std::vector<bool> not_f(f.size());
    for (std::size_t s = 0; s < f.size(); ++s) not_f[s] = !f[s];
    auto can_escape = backward(ps, rev, avoid, not_f, [](std::uint64_t) { return true; });
    can_escape.flip();
    return can_escape;
}

namespace {

struct Sweep {
    double diff = 0.0;
    bool decreased = false;
};

inline double choice_value(const ProbSystem& ps, const Choice& c, const std::vector<double>& x) {
    double v = 0.0;
    for (const auto& t : ps.transitions(c)) v += t.prob * x[t.target];
    return v;
}

inline double state_value(const ProbSystem& ps, StateIndex s, const std::vector<double>& x, bool maximize) {
    auto cs = ps.choices(s);
    double best = maximize ? 0.0 : 1.0;
    for (const auto& c : cs) {
        double v = choice_value(ps, c, x);
        best = maximize ? std::max(best, v) : std::min(best, v);
    }
    return best;
}

inline double change(double next, double prev, bool relative) {
    double d = next - prev;
    if (relative && next > 0.0) d /= next;
    return std::abs(d);
}

Sweep sweep_serial(const ProbSystem& ps, const std::vector<StateIndex>& work, const std::vector<double>& x,
                   std::vector<double>& y, bool maximize, bool relative) {
    Sweep out;
    for (std::size_t i = 0; i < work.size(); ++i) {
        StateIndex s = work[i];
        double v = state_value(ps, s, x, maximize);
        y[s] = v;
        if (v < x[s]) out.decreased = true;
        out.diff = std::max(out.diff, change(v, x[s], relative));
    }
    return out;
}

Sweep sweep_parallel(const ProbSystem& ps, const std::vector<StateIndex>& work, const std::vector<double>& x,
                     std::vector<double>& y, bool maximize, bool relative, int threads) {
    double diff = 0.0;
    int decreased = 0;
    const auto n = static_cast<std::int64_t>(work.size());
    const int nt = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(static, 1024) reduction(max : diff) reduction(| : decreased) num_threads(nt)
    for (std::int64_t i = 0; i < n; ++i) {
        StateIndex s = work[static_cast<std::size_t>(i)];
        double v = state_value(ps, s, x, maximize);
        y[s] = v;
        if (v < x[s]) decreased = 1;
        diff = std::max(diff, change(v, x[s], relative));
    }
    return {diff, decreased != 0};
}

void validate_query(const ProbSystem& ps, const ReachQuery& q) {
    if (!(q.epsilon > 0.0)) throw Error("epsilon must be positive");
    if (q.lambda && (*q.lambda < 0.0 || *q.lambda > 1.0)) throw Error("lambda must lie in [0,1]");
    if (q.targets.size() != ps.num_states()) throw Error("target mask size does not match the state count");
}

std::int64_t first_choice_or_none(const ProbSystem& ps, StateIndex s) {
    return ps.choices(s).empty() ? kNoChoice : 0;
}

/// Near-optimal choices for max, then backward layering from the targets so
/// the chosen choice always makes progress toward F.
std::vector<std::int64_t> max_witness(const ProbSystem& ps, const std::vector<bool>& f, const std::vector<double>& x,
                                      double tol) {
    const std::size_t n = ps.num_states();
    std::vector<std::int64_t> adv(n, kNoChoice);
    std::vector<bool> done(n, false);
    Reverse rev = reverse_graph(ps);
    std::vector<bool> optimal(ps.num_choices(), false);
    for (StateIndex s = 0; s < n; ++s) {
        auto cs = ps.choices(s);
        for (std::size_t k = 0; k < cs.size(); ++k) {
            if (choice_value(ps, cs[k], x) >= x[s] - tol) optimal[ps.first_choice(s) + k] = true;
        }
    }
    std::vector<StateIndex> layer;
    for (StateIndex s = 0; s < n; ++s) {
        if (f[s]) {
            done[s] = true;
            adv[s] = first_choice_or_none(ps, s);
            layer.push_back(s);
        }
    }
    while (!layer.empty()) {
        std::vector<StateIndex> next;
        for (StateIndex t : layer) {
            for (auto i = rev.begin[t]; i < rev.begin[t + 1]; ++i) {
                StateIndex s = rev.source[i];
                if (done[s] || x[s] <= 0.0 || !optimal[rev.choice[i]]) continue;
                done[s] = true;
                next.push_back(s);
            }
        }
        // Lowest choice index among the optimal ones reaching the previous layers.
        for (StateIndex s : next) {
            auto cs = ps.choices(s);
            for (std::size_t k = 0; k < cs.size() && adv[s] == kNoChoice; ++k) {
                if (!optimal[ps.first_choice(s) + k]) continue;
                for (const auto& t : ps.transitions(cs[k])) {
                    if (done[t.target] && (f[t.target] || adv[t.target] != kNoChoice)) {
                        adv[s] = static_cast<std::int64_t>(k);
                        break;
                    }
                }
            }
        }
        layer = std::move(next);
    }
    for (StateIndex s = 0; s < n; ++s) {
        if (adv[s] != kNoChoice || ps.choices(s).empty()) continue;
        auto cs = ps.choices(s);
        double best = -1.0;
        for (std::size_t k = 0; k < cs.size(); ++k) {
            double v = choice_value(ps, cs[k], x);
            if (v > best) {
                best = v;
                adv[s] = static_cast<std::int64_t>(k);
            }
        }
    }
    return adv;
}

std::vector<std::int64_t> min_witness(const ProbSystem& ps, const std::vector<bool>& avoid, const std::vector<double>& x) {
    const std::size_t n = ps.num_states();
    std::vector<std::int64_t> adv(n, kNoChoice);
    for (StateIndex s = 0; s < n; ++s) {
        auto cs = ps.choices(s);
        if (avoid[s]) {
            // Stay inside the avoiding set.
            for (std::size_t k = 0; k < cs.size(); ++k) {
                bool stays = true;
                for (const auto& t : ps.transitions(cs[k])) stays = stays && avoid[t.target];
                if (stays) {
                    adv[s] = static_cast<std::int64_t>(k);
                    break;
                }
            }
            continue;
        }
        double best = 2.0;
        for (std::size_t k = 0; k < cs.size(); ++k) {
            double v = choice_value(ps, cs[k], x);
            if (v < best) {
                best = v;
                adv[s] = static_cast<std::int64_t>(k);
            }
        }
    }
    return adv;
}

ReachResult value_iteration(const ProbSystem& ps, const ReachQuery& q, bool maximize) {
    validate_query(ps, q);
    const std::size_t n = ps.num_states();
    const auto& f = q.targets;
    std::vector<bool> zero, one;
    if (maximize) {
        zero = qualitative_zero(ps, f);
        one = qualitative_one_exists(ps, f);
    } else {
        zero = qualitative_avoid(ps, f);
        one = qualitative_one_all(ps, f);
    }
    std::vector<double> x(n, 0.0);
    std::vector<StateIndex> work;
    for (StateIndex s = 0; s < n; ++s) {
        if (f[s] || one[s]) {
            x[s] = 1.0;
        } else if (!zero[s]) {
            work.push_back(s);
        }
    }
    std::vector<double> y = x;
    ReachResult r;
    r.converged = true;
    if (!f[ps.initial()] && !work.empty()) {
        r.converged = false;
        double residual = 0.0;
        while (r.iterations < q.max_iterations) {
            Sweep sw = q.kernel == Kernel::Serial ? sweep_serial(ps, work, x, y, maximize, q.relative)
                                                   : sweep_parallel(ps, work, x, y, maximize, q.relative, q.threads);
            ++r.iterations;
            if (sw.decreased) throw std::logic_error("value iteration lost monotonicity");
            x.swap(y);
            residual = sw.diff;
            if (sw.diff < q.epsilon) {
                r.converged = true;
                break;
            }
        }
        if (!r.converged) throw NotConverged(q.max_iterations, residual);
    }
    r.probability = std::clamp(x[ps.initial()], 0.0, 1.0);
    r.adversary = maximize ? max_witness(ps, f, x, q.epsilon * 1e-3) : min_witness(ps, zero, x);
    if (q.lambda) r.verdict = compare(r.probability, q.comparator.value_or(maximize ? Comparator::Lt : Comparator::Gt), *q.lambda);
    r.values = std::move(x);
    return r;
}

} // namespace

bool compare(double value, Comparator cmp, double lambda) {
    switch (cmp) {
    case Comparator::Lt: return value < lambda;
    case Comparator::Le: return value <= lambda;
    case Comparator::Gt: return value > lambda;
    case Comparator::Ge: return value >= lambda;
    }
    return false;
}

ReachResult max_reach(const ProbSystem& ps, const ReachQuery& query) { return value_iteration(ps, query, true); }
ReachResult min_reach(const ProbSystem& ps, const ReachQuery& query) { return value_iteration(ps, query, false); }

ReachResult reach(const ProbSystem& ps, const ReachQuery& query) {
    return query.direction == Direction::Max ? max_reach(ps, query) : min_reach(ps, query);
}

nlohmann::json to_json(const ReachResult& r) {
    nlohmann::json j{{"probability", r.probability}, {"iterations", r.iterations}, {"converged", r.converged}};
    j["verdict"] = r.verdict ? nlohmann::json(*r.verdict) : nlohmann::json(nullptr);
    return j;
}

Fps induced_fps(const ProbSystem& ps, const std::vector<std::int64_t>& adversary) {
    if (adversary.size() != ps.num_states()) throw Error("adversary size does not match the state count");
    Fps fps;
    fps.initial = ps.initial();
    fps.rows.resize(ps.num_states());
    for (StateIndex s = 0; s < ps.num_states(); ++s) {
        auto cs = ps.choices(s);
        if (adversary[s] == kNoChoice) {
            if (!cs.empty()) throw Error("adversary leaves state " + std::to_string(s) + " undecided");
            continue;
        }
        const auto k = static_cast<std::size_t>(adversary[s]);
        if (k >= cs.size()) throw Error("adversary picks a missing choice");
        auto ts = ps.transitions(cs[k]);
        fps.rows[s].assign(ts.begin(), ts.end());
    }
    return fps;
}

namespace {

/// States of the chain that reach F with probability 0 and 1 respectively.
std::pair<std::vector<bool>, std::vector<bool>> fps_qualitative(const Fps& fps, const std::vector<bool>& f) {
    const std::size_t n = fps.num_states();
    std::vector<std::vector<StateIndex>> pred(n);
    for (StateIndex s = 0; s < n; ++s) {
        for (const auto& t : fps.rows[s]) pred[t.target].push_back(s);
    }
    auto closure = [&](std::vector<bool> seed, const std::vector<bool>& blocked) {
        std::vector<StateIndex> stack;
        for (StateIndex s = 0; s < n; ++s) {
            if (seed[s]) stack.push_back(s);
        }
        while (!stack.empty()) {
            StateIndex t = stack.back();
            stack.pop_back();
            for (StateIndex s : pred[t]) {
                if (seed[s] || blocked[s]) continue;
                seed[s] = true;
                stack.push_back(s);
            }
        }
        return seed;
    };
    std::vector<bool> none(n, false);
    auto reach = closure(f, none);
    std::vector<bool> zero(n);
    for (StateIndex s = 0; s < n; ++s) zero[s] = !reach[s];
    auto escape = closure(zero, f);
    std::vector<bool> one(n);
    for (StateIndex s = 0; s < n; ++s) one[s] = !escape[s];
    return {zero, one};
}

} // namespace

double solve_fps(const Fps& fps, const std::vector<bool>& targets, double epsilon, std::size_t max_iterations) {
    const std::size_t n = fps.num_states();
    if (targets.size() != n) throw Error("target mask size does not match the chain");
    if (targets[fps.initial]) return 1.0;
    auto [zero, one] = fps_qualitative(fps, targets);
    std::vector<double> x(n, 0.0);
    std::vector<StateIndex> work;
    for (StateIndex s = 0; s < n; ++s) {
        if (one[s]) x[s] = 1.0;
        else if (!zero[s]) work.push_back(s);
    }
    std::vector<double> y = x;
    double diff = 0.0;
    for (std::size_t it = 0; it < max_iterations; ++it) {
        diff = 0.0;
        for (StateIndex s : work) {
            double v = 0.0;
            for (const auto& t : fps.rows[s]) v += t.prob * x[t.target];
            y[s] = v;
            diff = std::max(diff, std::abs(v - x[s]));
        }
        x.swap(y);
        if (diff < epsilon) return x[fps.initial];
    }
    throw NotConverged(max_iterations, diff);
}

double solve_fps_exact(const Fps& fps, const std::vector<bool>& targets) {
    const std::size_t n = fps.num_states();
    if (targets.size() != n) throw Error("target mask size does not match the chain");
    auto [zero, one] = fps_qualitative(fps, targets);
    if (one[fps.initial]) return 1.0;
    if (zero[fps.initial]) return 0.0;
    std::vector<std::int64_t> index(n, -1);
    std::vector<StateIndex> unknown;
    for (StateIndex s = 0; s < n; ++s) {
        if (!one[s] && !zero[s]) {
            index[s] = static_cast<std::int64_t>(unknown.size());
            unknown.push_back(s);
        }
    }
    const auto m = static_cast<Eigen::Index>(unknown.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(m, m);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (const auto& t : fps.rows[unknown[static_cast<std::size_t>(i)]]) {
            if (one[t.target]) b(i) += t.prob;
            else if (index[t.target] >= 0) a(i, index[t.target]) -= t.prob;
        }
    }
    Eigen::VectorXd x = a.partialPivLu().solve(b);
    return std::clamp(x(index[fps.initial]), 0.0, 1.0);
}

AdversaryExtrema enumerate_adversaries(const ProbSystem& ps, const std::vector<bool>& targets, std::uint64_t cap) {
    const std::size_t n = ps.num_states();
    if (targets.size() != n) throw Error("target mask size does not match the state count");
    std::uint64_t count = 1;
    for (StateIndex s = 0; s < n; ++s) {
        auto k = ps.choices(s).size();
        if (k == 0) continue;
        if (count > cap / k) throw TooManyAdversaries(cap);
        count *= k;
    }
    if (count > cap) throw TooManyAdversaries(cap);

    std::vector<std::int64_t> adv(n, kNoChoice);
    for (StateIndex s = 0; s < n; ++s) adv[s] = first_choice_or_none(ps, s);
    AdversaryExtrema out{1.0, 0.0, count};
    for (std::uint64_t i = 0; i < count; ++i) {
        double v = solve_fps_exact(induced_fps(ps, adv), targets);
        out.min = std::min(out.min, v);
        out.max = std::max(out.max, v);
        // Mixed-radix increment.
        for (StateIndex s = 0; s < n; ++s) {
            auto k = static_cast<std::int64_t>(ps.choices(s).size());
            if (k == 0) continue;
            if (++adv[s] < k) break;
            adv[s] = 0;
        }
    }
    return out;
}

} // namespace ptacheck
