#pragma once

#include "ptacheck/prob_system.hpp"
#include "ptacheck/pta.hpp"

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace ptacheck {

struct ExpansionStats {
    std::size_t states = 0;
    std::size_t choices = 0;
    std::size_t transitions = 0;
    /// Joint edges discarded because some outcome violated a target invariant.
    std::size_t blocked_edges = 0;
};

struct ExpansionOptions {
    std::size_t state_cap = 50'000'000;
    /// States matching this predicate keep an empty step set.
    StatePredicate absorbing;
    /// Called for every emitted time step with the packed source and target.
    std::function<void(const StateCodec&, std::span<const std::int32_t>, std::span<const std::int32_t>)> on_time_step;
    ExpansionStats* stats = nullptr;
};

/// Breadth-first expansion of the network under integer-time semantics.
/// Each state gets at most one unit time step ("tick") plus one choice per
/// enabled joint edge, in component/edge order. Clocks are capped one above
/// the largest constant of their component and pinned to zero in locations
/// where their value can never be observed before the next reset.
ProbSystem digital_semantics(const Network& net, const ExpansionOptions& options = {});

/// Per-location flag: can the clock value be observed before the next reset?
std::vector<bool> clock_activity(const Pta& pta);

} // namespace ptacheck
