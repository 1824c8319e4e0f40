#pragma once

#include "ptacheck/prob_system.hpp"
#include "ptacheck/reach.hpp"
#include "ptacheck/reduction.hpp"
#include "ptacheck/semantics.hpp"
#include "ptacheck/wlan.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ptacheck {

inline constexpr const char* kToolkitVersion = "0.1.0";

/// Topology file contents: {variant, n_stations, params, tx_lens | param_space,
/// scale_slot, deadline}. Missing fields keep the WlanParams defaults.
struct TopologyConfig {
    Variant variant = Variant::Red;
    WlanParams params;
    /// When set, queries range over every assignment instead of params.tx_lens.
    std::optional<ParamSpace> param_space;
    /// 1 leaves the model in microseconds.
    std::int64_t scale_slot = 50;
    std::optional<DeadlineSpec> deadline;

    /// Throws BadParams / BadVariant on inconsistent settings.
    void validate() const;
};

TopologyConfig config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const TopologyConfig& cfg);
/// SHA-256 of the canonical JSON dump.
std::string config_digest(const TopologyConfig& cfg);

/// LAN for one transmission-length assignment: decorated first, then scaled.
Network build_network(const TopologyConfig& cfg, const std::vector<std::int64_t>& tx_lens);
/// Assignments a query ranges over: the param space, or just params.tx_lens.
std::vector<std::vector<std::int64_t>> assignments(const TopologyConfig& cfg);

struct QuerySpec {
    enum class Kind { Backoff, Deadline };
    Kind kind = Kind::Backoff;
    std::int64_t value = 0;
};

/// "backoff:<k>" or "deadline:<d>"; throws BadParams.
QuerySpec parse_query(const std::string& text);
std::string to_string(const QuerySpec& q);
/// Deadline queries install the deadline into the config (compensated phi
/// for the reduced variant, identity otherwise).
TopologyConfig apply_query(TopologyConfig cfg, const QuerySpec& q);
StatePredicate query_predicate(const QuerySpec& q, std::size_t n_stations);
/// Deadline queries ask for the minimum, backoff queries for the maximum.
Direction default_direction(const QuerySpec& q);

struct ModelStats {
    std::size_t states = 0;
    std::size_t transitions = 0;
    std::size_t choices = 0;
};

struct QueryOutcome {
    ReachResult result;
    /// Assignment attaining the reported extremum.
    std::vector<std::int64_t> tx_lens;
    /// Largest expansion seen.
    ModelStats peak;
    std::size_t models = 0;
    double seconds = 0.0;
};

/// Expansion of one assignment with the query's targets absorbing. With a
/// non-empty cache_dir the model file is reused when its key matches.
ProbSystem expand_model(const TopologyConfig& cfg, const std::vector<std::int64_t>& tx_lens, const QuerySpec& q,
                        std::size_t state_cap, const std::string& cache_dir = {});

/// Expands every assignment and returns the extremum across assignments in
/// the query direction.
QueryOutcome run_query(const TopologyConfig& cfg, const QuerySpec& q, ReachQuery options,
                       std::size_t state_cap = 50'000'000, const std::string& cache_dir = {});

struct Comparison {
    DiffReport report;
    /// max and min on each side, in that order.
    double max1 = 0.0, min1 = 0.0, max2 = 0.0, min2 = 0.0;
    std::string verdict;
};

/// Dominator-condition check plus independent numeric max/min on both systems.
/// Verdict: "equivalent-certified", "equivalent-numeric-only" or "different".
Comparison compare_systems(const ProbSystem& ps1, const std::vector<bool>& f1, const ProbSystem& ps2,
                           const std::vector<bool>& f2, const ReachQuery& base, double tolerance);
nlohmann::json to_json(const Comparison& c);

} // namespace ptacheck
