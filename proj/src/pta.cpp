#include "ptacheck/pta.hpp"

#include "ptacheck/errors.hpp"

#include <algorithm>
#include <unordered_map>

namespace ptacheck {

LocationId Pta::add_location(std::string loc_name, ClockConstraint invariant, bool urgent) {
    if (find_location(loc_name)) throw ModelError("duplicate location '" + loc_name + "' in " + name);
    locations.push_back(Location{std::move(loc_name), std::move(invariant), urgent});
    return static_cast<LocationId>(locations.size() - 1);
}

std::optional<LocationId> Pta::find_location(const std::string& loc_name) const {
    for (std::size_t i = 0; i < locations.size(); ++i) {
        if (locations[i].name == loc_name) return static_cast<LocationId>(i);
    }
    return std::nullopt;
}

LocationId Pta::location(const std::string& loc_name) const {
    if (auto id = find_location(loc_name)) return *id;
    throw ModelError("unknown location '" + loc_name + "' in " + name);
}

ProbEdge& Pta::add_edge(ProbEdge edge) {
    events.insert(edge.label);
    edges.push_back(std::move(edge));
    return edges.back();
}

const Pta& Network::component(const std::string& comp_name) const {
    for (const auto& c : components) {
        if (c.name == comp_name) return c;
    }
    throw ModelError("no component named '" + comp_name + "'");
}

std::string to_string(CmpOp op) {
    switch (op) {
    case CmpOp::Eq: return "==";
    case CmpOp::Ne: return "!=";
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Gt: return ">";
    case CmpOp::Ge: return ">=";
    }
    return "?";
}

bool holds(CmpOp op, std::int64_t lhs, std::int64_t rhs) {
    switch (op) {
    case CmpOp::Eq: return lhs == rhs;
    case CmpOp::Ne: return lhs != rhs;
    case CmpOp::Lt: return lhs < rhs;
    case CmpOp::Le: return lhs <= rhs;
    case CmpOp::Gt: return lhs > rhs;
    case CmpOp::Ge: return lhs >= rhs;
    }
    return false;
}

namespace {

void check_constraint(const ClockConstraint& c, const std::string& where, ValidationReport& report) {
    if (c.lower < 0) report.violations.push_back(where + ": negative lower bound");
    if (c.empty()) {
        report.violations.push_back(where + ": empty constraint [" + std::to_string(c.lower) + "," +
                                    std::to_string(*c.upper) + "]");
    }
    for (const auto& term : c.offset) {
        if (term.coeff < 0) report.violations.push_back(where + ": negative offset coefficient on " + term.var);
    }
}

} // namespace

ValidationReport validate(const Pta& pta) {
    ValidationReport report;
    const std::string prefix = pta.name.empty() ? std::string("automaton") : pta.name;
    if (pta.locations.empty()) {
        report.violations.push_back(prefix + ": no locations");
        return report;
    }
    if (pta.initial >= pta.locations.size()) report.violations.push_back(prefix + ": initial location out of range");
    for (const auto& loc : pta.locations) {
        check_constraint(loc.invariant, prefix + "." + loc.name + " invariant", report);
    }
    for (const auto& ev : pta.urgent_events) {
        if (!pta.events.contains(ev)) report.violations.push_back(prefix + ": urgent event '" + ev + "' not declared");
    }
    for (const auto& v : pta.variables) {
        if (v.min > v.max) report.violations.push_back(prefix + ": variable " + v.name + " has empty range");
        if (v.init < v.min || v.init > v.max) {
            report.violations.push_back(prefix + ": variable " + v.name + " initial value out of range");
        }
    }
    for (std::size_t i = 0; i < pta.edges.size(); ++i) {
        const auto& e = pta.edges[i];
        const std::string where = prefix + " edge " + std::to_string(i) + " (" + e.label + ")";
        if (e.source >= pta.locations.size()) report.violations.push_back(where + ": source location out of range");
        if (!pta.events.contains(e.label)) report.violations.push_back(where + ": label not declared as event");
        check_constraint(e.guard, where + " guard", report);
        if (e.outcomes.empty()) {
            report.violations.push_back(where + ": no outcomes");
            continue;
        }
        Rational sum(0);
        for (const auto& o : e.outcomes) {
            if (o.prob <= Rational(0) || o.prob > Rational(1)) {
                report.violations.push_back(where + ": outcome probability " + o.prob.str() + " outside (0,1]");
            }
            sum += o.prob;
            if (o.target >= pta.locations.size()) report.violations.push_back(where + ": dangling target location");
        }
        if (!sum.is_one()) report.violations.push_back(where + ": distribution sums to " + sum.str());
    }
    return report;
}

ValidationReport validate(const Network& net) {
    ValidationReport report;
    std::unordered_map<std::string, const Variable*> declared;
    std::set<std::string> shared(net.shared_variables.begin(), net.shared_variables.end());
    for (const auto& c : net.components) {
        auto sub = validate(c);
        report.violations.insert(report.violations.end(), sub.violations.begin(), sub.violations.end());
        for (const auto& v : c.variables) {
            auto [it, fresh] = declared.emplace(v.name, &v);
            if (!fresh) {
                if (!shared.contains(v.name)) {
                    report.violations.push_back("variable " + v.name + " declared by more than one component");
                } else if (!(*it->second == v)) {
                    report.violations.push_back("shared variable " + v.name + " declared inconsistently");
                }
            }
        }
    }
    auto known = [&](const std::string& var, const std::string& where) {
        if (!declared.contains(var)) report.violations.push_back(where + ": undeclared variable " + var);
    };
    for (const auto& c : net.components) {
        for (const auto& loc : c.locations) {
            for (const auto& t : loc.invariant.offset) known(t.var, c.name + "." + loc.name);
        }
        for (const auto& e : c.edges) {
            const std::string where = c.name + " edge " + e.label;
            for (const auto& g : e.var_guard) known(g.var, where);
            for (const auto& t : e.guard.offset) known(t.var, where);
            for (const auto& o : e.outcomes) {
                for (const auto& u : o.updates) known(u.var, where);
            }
        }
    }
    std::set<std::string> names;
    for (const auto& c : net.components) {
        if (!names.insert(c.name).second) report.violations.push_back("duplicate component name " + c.name);
    }
    return report;
}

Pta normalize_urgent(Pta pta) {
    std::vector<bool> urgent(pta.locations.size(), false);
    for (std::size_t i = 0; i < pta.locations.size(); ++i) urgent[i] = pta.locations[i].urgent;
    for (auto& e : pta.edges) {
        for (auto& o : e.outcomes) {
            if (o.target < urgent.size() && urgent[o.target]) o.reset = true;
        }
    }
    for (auto& loc : pta.locations) {
        if (loc.urgent) {
            loc.invariant = ClockConstraint::at_most(0);
            loc.urgent = false;
        }
    }
    return pta;
}

} // namespace ptacheck
