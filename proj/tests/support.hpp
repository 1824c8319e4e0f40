#pragma once

#include "ptacheck/prob_system.hpp"
#include "ptacheck/rational.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace testing_support {

using ptacheck::ProbSystem;
using ptacheck::ProbSystemBuilder;
using ptacheck::Rational;
using ptacheck::StateIndex;

/// choices[s] = list of (action, [(target, num, den)])
struct Spec {
    struct Out {
        StateIndex target;
        std::int64_t num;
        std::int64_t den;
    };
    struct Ch {
        std::string action;
        std::vector<Out> outs;
    };
    std::vector<std::vector<Ch>> states;
    StateIndex initial = 0;
    std::vector<std::string> names;
};

inline ProbSystem build(const Spec& spec) {
    ProbSystemBuilder b;
    for (const auto& st : spec.states) {
        b.begin_state();
        for (const auto& ch : st) {
            b.begin_choice(b.action(ch.action));
            for (const auto& o : ch.outs) b.add(o.target, Rational(o.num, o.den));
        }
    }
    if (!spec.names.empty()) b.set_names(spec.names);
    return b.finish(spec.initial, spec.states.size());
}

inline Spec::Ch dirac(StateIndex t, std::string action = "a") { return {std::move(action), {{t, 1, 1}}}; }

/// Random MDP with up to `max_states` states and `max_choices` choices per
/// state; distributions have 1..3 successors with small integer weights.
inline Spec random_spec(std::mt19937_64& rng, std::size_t max_states = 12, std::size_t max_choices = 3) {
    std::uniform_int_distribution<std::size_t> ns(2, max_states);
    const std::size_t n = ns(rng);
    std::uniform_int_distribution<std::size_t> nc(0, max_choices);
    std::uniform_int_distribution<std::size_t> nsucc(1, 3);
    std::uniform_int_distribution<StateIndex> tgt(0, static_cast<StateIndex>(n - 1));
    std::uniform_int_distribution<std::int64_t> w(1, 4);
    Spec spec;
    spec.states.resize(n);
    for (std::size_t s = 0; s < n; ++s) {
        const std::size_t c = nc(rng);
        for (std::size_t i = 0; i < c; ++i) {
            Spec::Ch ch;
            ch.action = "a" + std::to_string(i);
            const std::size_t k = nsucc(rng);
            std::vector<std::pair<StateIndex, std::int64_t>> picks;
            std::int64_t total = 0;
            for (std::size_t j = 0; j < k; ++j) {
                const StateIndex t = tgt(rng);
                bool dup = false;
                for (auto& p : picks) {
                    if (p.first == t) dup = true;
                }
                if (dup) continue;
                picks.push_back({t, w(rng)});
                total += picks.back().second;
            }
            for (auto& [t, wt] : picks) ch.outs.push_back({t, wt, total});
            spec.states[s].push_back(std::move(ch));
        }
    }
    return spec;
}

inline std::vector<bool> random_targets(std::mt19937_64& rng, std::size_t n) {
    std::bernoulli_distribution coin(0.2);
    std::vector<bool> f(n);
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
        f[i] = coin(rng);
        any = any || f[i];
    }
    if (!any) f[n - 1] = true;
    return f;
}

/// Splices Dirac chains of fresh states in front of random successors.
/// New states are never targets.
inline void inject_chains(std::mt19937_64& rng, Spec& spec, std::vector<bool>& targets, std::size_t chains = 3) {
    std::uniform_int_distribution<std::size_t> len(1, 4);
    for (std::size_t c = 0; c < chains; ++c) {
        std::vector<std::pair<std::size_t, std::size_t>> slots;
        for (std::size_t s = 0; s < spec.states.size(); ++s) {
            for (std::size_t i = 0; i < spec.states[s].size(); ++i) slots.push_back({s, i});
        }
        if (slots.empty()) return;
        std::uniform_int_distribution<std::size_t> pick(0, slots.size() - 1);
        auto [s, i] = slots[pick(rng)];
        auto& outs = spec.states[s][i].outs;
        std::uniform_int_distribution<std::size_t> which(0, outs.size() - 1);
        auto& o = outs[which(rng)];
        const StateIndex end = o.target;
        const std::size_t k = len(rng);
        const auto first = static_cast<StateIndex>(spec.states.size());
        for (std::size_t j = 0; j < k; ++j) {
            const StateIndex next = j + 1 < k ? static_cast<StateIndex>(first + j + 1) : end;
            spec.states.push_back({dirac(next, "c")});
            targets.push_back(false);
        }
        o.target = first;
    }
}

} // namespace testing_support
