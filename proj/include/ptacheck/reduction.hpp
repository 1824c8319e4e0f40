#pragma once

#include "ptacheck/prob_system.hpp"
#include "ptacheck/pta.hpp"

#include "json.hpp"

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace ptacheck {

/// States with strictly positive probability.
std::vector<StateIndex> support(std::span<const Transition> dist);

/// Distributions over one index space: equal supports and equal exact
/// probabilities pointwise.
bool dist_equiv(std::span<const Transition> d1, std::span<const Transition> d2);

/// Every distribution on either side has an equivalent partner on the other.
/// Action labels are ignored.
bool steps_equiv(const std::vector<std::vector<Transition>>& steps1, const std::vector<std::vector<Transition>>& steps2);

/// Deterministic dominators. `dominator[s] == s` when s has no nontrivial one.
struct DomMap {
    std::vector<StateIndex> dominator;
    /// Closed cycles of all-Dirac states; every member maps to the first entry.
    std::vector<std::vector<StateIndex>> cycles;
};

DomMap det_dominators(const ProbSystem& ps);

/// True iff s and every state it steps to is all-Dirac until t (replays the
/// inductive definition by a least fixpoint over the Dirac closure of s).
bool dominates(const ProbSystem& ps, StateIndex s, StateIndex t);

/// Index translation between two systems by canonical state name, or by
/// index when neither system carries names.
struct Correspondence {
    std::vector<std::int64_t> to2;
    std::vector<std::int64_t> to1;
};

Correspondence correspond(const ProbSystem& ps1, const ProbSystem& ps2);

/// Common states (indices in ps1) whose step sets are not dist-equivalent.
std::vector<StateIndex> points_of_disagreement_ps(const ProbSystem& ps1, const ProbSystem& ps2);
std::vector<StateIndex> points_of_disagreement_ps(const ProbSystem& ps1, const ProbSystem& ps2, const Correspondence& corr);

struct Condition2Violation {
    std::string system;  // "ps1" or "ps2"
    std::string disagreement;
    std::string dominator;
    std::string state;
};

struct DiffReport {
    // Component level.
    std::set<std::size_t> difference_set;
    std::map<std::size_t, std::set<std::string>> specific_difference_sets;

    // Probabilistic system level; states given by canonical name.
    std::vector<std::string> ps_disagreements;
    std::map<std::string, std::string> dominator_witnesses;
    std::vector<std::string> condition1_violations;
    std::vector<Condition2Violation> condition2_violations;
    std::vector<std::string> target_mismatches;

    bool clean() const {
        return condition1_violations.empty() && condition2_violations.empty() && target_mismatches.empty();
    }
};

nlohmann::json to_json(const DiffReport& r);

DiffReport check_theorem1(const ProbSystem& ps1, const std::vector<bool>& f1, const ProbSystem& ps2,
                          const std::vector<bool>& f2);

/// Component-wise comparison of two networks with equal arity; throws
/// ArityMismatch otherwise.
DiffReport specific_difference_sets(const Network& net1, const Network& net2);

struct CompressOptions {
    /// Accept deadline-decorated input.
    bool force = false;
};

struct CompressResult {
    ProbSystem ps;
    std::vector<bool> targets;
    /// Old index of every surviving state.
    std::vector<StateIndex> origin;
    std::size_t rewired = 0;
};

/// Replaces each deterministic chain s -> ... -> dominator(s) by one Dirac
/// step, keeps the chain when an interior state is a target and neither end
/// is, then drops unreachable states and renumbers breadth-first.
CompressResult compress(const ProbSystem& ps, const std::vector<bool>& targets, const CompressOptions& options = {});

} // namespace ptacheck
