#pragma once

#include "ptacheck/prob_system.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace ptacheck {

enum class Direction { Max, Min };
enum class Comparator { Lt, Le, Gt, Ge };

/// Which sweep implementation value iteration uses. Both produce bitwise
/// identical iterates; the serial one is kept as the reference.
enum class Kernel { Parallel, Serial };

struct ReachQuery {
    std::vector<bool> targets;
    Direction direction = Direction::Max;
    double epsilon = 1e-6;
    /// Stop on relative instead of absolute change.
    bool relative = false;
    std::size_t max_iterations = 1'000'000;
    std::optional<double> lambda;
    std::optional<Comparator> comparator;
    Kernel kernel = Kernel::Parallel;
    /// 0 keeps the OpenMP default.
    int threads = 0;
};

inline constexpr std::int64_t kNoChoice = -1;

struct ReachResult {
    double probability = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    /// Local choice index per state, kNoChoice where the state has no steps.
    std::vector<std::int64_t> adversary;
    std::optional<bool> verdict;
    std::vector<double> values;
};

nlohmann::json to_json(const ReachResult& r);

/// States from which no target is reachable in the underlying graph.
std::vector<bool> qualitative_zero(const ProbSystem& ps, const std::vector<bool>& targets);
/// States with some adversary reaching the targets with probability 1.
std::vector<bool> qualitative_one_exists(const ProbSystem& ps, const std::vector<bool>& targets);
/// States with some adversary avoiding the targets forever (min probability 0).
std::vector<bool> qualitative_avoid(const ProbSystem& ps, const std::vector<bool>& targets);
/// States where every adversary reaches the targets with probability 1.
std::vector<bool> qualitative_one_all(const ProbSystem& ps, const std::vector<bool>& targets);

ReachResult max_reach(const ProbSystem& ps, const ReachQuery& query);
ReachResult min_reach(const ProbSystem& ps, const ReachQuery& query);
/// Dispatches on query.direction.
ReachResult reach(const ProbSystem& ps, const ReachQuery& query);

bool compare(double value, Comparator cmp, double lambda);

/// Markov chain: at most one distribution per state; empty rows are absorbing.
struct Fps {
    std::vector<std::vector<Transition>> rows;
    StateIndex initial = 0;
    std::size_t num_states() const { return rows.size(); }
};

/// Chain induced by a simple adversary (one local choice index per state).
Fps induced_fps(const ProbSystem& ps, const std::vector<std::int64_t>& adversary);

/// Iterative solve; throws NotConverged.
double solve_fps(const Fps& fps, const std::vector<bool>& targets, double epsilon = 1e-6,
                 std::size_t max_iterations = 1'000'000);
/// Direct dense solve of the linear system on states with a probability
/// strictly between 0 and 1. Intended for small chains.
double solve_fps_exact(const Fps& fps, const std::vector<bool>& targets);

struct AdversaryExtrema {
    double min = 0.0;
    double max = 0.0;
    std::uint64_t count = 0;
};

/// Brute force over all simple adversaries; throws TooManyAdversaries when
/// their number exceeds `cap`.
AdversaryExtrema enumerate_adversaries(const ProbSystem& ps, const std::vector<bool>& targets,
                                       std::uint64_t cap = 1'000'000);

} // namespace ptacheck
