#pragma once

#include "ptacheck/rational.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace ptacheck {

using LocationId = std::uint32_t;

/// `coeff * var` added to the clock value before a constraint is tested.
/// This is how the deadline observer tests phi(y, X) = y + sum coeff * X.
struct OffsetTerm {
    std::string var;
    std::int64_t coeff = 0;
    bool operator==(const OffsetTerm&) const = default;
};

/// Closed interval constraint `lower <= x + offset <= upper` on the owning
/// automaton's clock. An absent upper bound means infinity.
struct ClockConstraint {
    std::int64_t lower = 0;
    std::optional<std::int64_t> upper;
    std::vector<OffsetTerm> offset;

    static ClockConstraint any() { return {}; }
    static ClockConstraint at_most(std::int64_t u) { return {0, u, {}}; }
    static ClockConstraint at_least(std::int64_t l) { return {l, std::nullopt, {}}; }
    static ClockConstraint exactly(std::int64_t c) { return {c, c, {}}; }
    static ClockConstraint between(std::int64_t l, std::int64_t u) { return {l, u, {}}; }

    bool trivial() const { return lower <= 0 && !upper && offset.empty(); }
    bool empty() const { return upper && lower > *upper; }
    /// Largest constant compared against the clock.
    std::int64_t max_constant() const { return upper ? std::max(lower, *upper) : lower; }

    bool operator==(const ClockConstraint&) const = default;
};

enum class CmpOp { Eq, Ne, Lt, Le, Gt, Ge };

struct VarCond {
    std::string var;
    CmpOp op = CmpOp::Eq;
    std::int64_t value = 0;
    bool operator==(const VarCond&) const = default;
};

enum class UpdateOp { Set, Add };

/// `var := value` or `var := var + value`; with `saturate` the result is
/// clamped into the variable's declared range instead of being an error.
struct Update {
    std::string var;
    UpdateOp op = UpdateOp::Set;
    std::int64_t value = 0;
    bool saturate = false;
    bool operator==(const Update&) const = default;
};

struct Outcome {
    Rational prob{1};
    bool reset = false;
    LocationId target = 0;
    std::vector<Update> updates;
    bool operator==(const Outcome&) const = default;
};

struct ProbEdge {
    LocationId source = 0;
    ClockConstraint guard;
    std::vector<VarCond> var_guard;
    std::string label;
    std::vector<Outcome> outcomes;
    bool operator==(const ProbEdge&) const = default;
};

struct Location {
    std::string name;
    ClockConstraint invariant;
    bool urgent = false;
    bool operator==(const Location&) const = default;
};

struct Variable {
    std::string name;
    std::int64_t min = 0;
    std::int64_t max = 0;
    std::int64_t init = 0;
    bool operator==(const Variable&) const = default;
};

/// One probabilistic timed automaton with a single local clock.
struct Pta {
    std::string name;
    std::vector<Location> locations;
    LocationId initial = 0;
    std::set<std::string> events;
    std::set<std::string> urgent_events;
    std::vector<ProbEdge> edges;
    std::vector<Variable> variables;

    LocationId add_location(std::string loc_name, ClockConstraint invariant = {}, bool urgent = false);
    std::optional<LocationId> find_location(const std::string& loc_name) const;
    LocationId location(const std::string& loc_name) const;
    const std::string& location_name(LocationId id) const { return locations.at(id).name; }

    /// Adds the edge and registers its label in `events`.
    ProbEdge& add_edge(ProbEdge edge);
    void add_variable(Variable v) { variables.push_back(std::move(v)); }

    bool operator==(const Pta&) const = default;
};

/// Components synchronise on every label that two or more of them declare.
/// Variables live in one namespace; each is declared by exactly one
/// component unless listed in `shared_variables`.
struct Network {
    std::vector<Pta> components;
    std::vector<std::string> shared_variables;
    std::map<std::string, std::string> tags;

    const Pta& component(const std::string& name) const;
    bool operator==(const Network&) const = default;
};

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

ValidationReport validate(const Pta& pta);
ValidationReport validate(const Network& net);

/// Rewrites urgent locations to invariant [0,0] and resets the clock on
/// every outcome that enters them.
Pta normalize_urgent(Pta pta);

std::string to_string(CmpOp op);
bool holds(CmpOp op, std::int64_t lhs, std::int64_t rhs);

} // namespace ptacheck
