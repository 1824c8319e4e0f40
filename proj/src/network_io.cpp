#include "ptacheck/network_io.hpp"

#include "ptacheck/errors.hpp"

namespace ptacheck {

using nlohmann::json;

json to_json(const ClockConstraint& c) {
    json j{{"lower", c.lower}, {"upper", c.upper ? json(*c.upper) : json(nullptr)}};
    if (!c.offset.empty()) {
        json terms = json::array();
        for (const auto& t : c.offset) terms.push_back({{"var", t.var}, {"coeff", t.coeff}});
        j["offset"] = std::move(terms);
    }
    return j;
}

ClockConstraint constraint_from_json(const json& j) {
    ClockConstraint c;
    c.lower = j.value("lower", std::int64_t{0});
    if (j.contains("upper") && !j["upper"].is_null()) c.upper = j["upper"].get<std::int64_t>();
    if (j.contains("offset")) {
        for (const auto& t : j["offset"]) c.offset.push_back(OffsetTerm{t.at("var"), t.at("coeff")});
    }
    return c;
}

namespace {

const char* op_name(CmpOp op) {
    switch (op) {
    case CmpOp::Eq: return "==";
    case CmpOp::Ne: return "!=";
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Gt: return ">";
    case CmpOp::Ge: return ">=";
    }
    return "==";
}

CmpOp op_from(const std::string& s) {
    if (s == "==") return CmpOp::Eq;
    if (s == "!=") return CmpOp::Ne;
    if (s == "<") return CmpOp::Lt;
    if (s == "<=") return CmpOp::Le;
    if (s == ">") return CmpOp::Gt;
    if (s == ">=") return CmpOp::Ge;
    throw ModelError("unknown comparison operator " + s);
}

json to_json(const Pta& pta) {
    json locs = json::array();
    for (const auto& l : pta.locations) {
        json jl{{"name", l.name}, {"invariant", to_json(l.invariant)}};
        if (l.urgent) jl["urgent"] = true;
        locs.push_back(std::move(jl));
    }
    json edges = json::array();
    for (const auto& e : pta.edges) {
        json outs = json::array();
        for (const auto& o : e.outcomes) {
            json ups = json::array();
            for (const auto& u : o.updates) {
                json ju{{"var", u.var}, {"op", u.op == UpdateOp::Set ? "set" : "add"}, {"value", u.value}};
                if (u.saturate) ju["saturate"] = true;
                ups.push_back(std::move(ju));
            }
            outs.push_back({{"prob", o.prob.str()}, {"reset", o.reset}, {"target", pta.location_name(o.target)},
                            {"updates", std::move(ups)}});
        }
        json guards = json::array();
        for (const auto& g : e.var_guard) guards.push_back({{"var", g.var}, {"op", op_name(g.op)}, {"value", g.value}});
        edges.push_back({{"source", pta.location_name(e.source)},
                         {"guard", to_json(e.guard)},
                         {"var_guard", std::move(guards)},
                         {"label", e.label},
                         {"outcomes", std::move(outs)}});
    }
    json vars = json::array();
    for (const auto& v : pta.variables) vars.push_back({{"name", v.name}, {"min", v.min}, {"max", v.max}, {"init", v.init}});
    return json{{"name", pta.name},
                {"initial", pta.location_name(pta.initial)},
                {"locations", std::move(locs)},
                {"events", pta.events},
                {"urgent_events", pta.urgent_events},
                {"edges", std::move(edges)},
                {"variables", std::move(vars)}};
}

LocationId lookup(const Pta& pta, const json& j) {
    const std::string name = j.get<std::string>();
    auto id = pta.find_location(name);
    if (!id) throw ModelError("component " + pta.name + " has no location " + name);
    return *id;
}

Pta pta_from_json(const json& j) {
    Pta pta;
    pta.name = j.at("name").get<std::string>();
    for (const auto& l : j.at("locations")) {
        pta.add_location(l.at("name").get<std::string>(), constraint_from_json(l.value("invariant", json::object())),
                         l.value("urgent", false));
    }
    pta.initial = lookup(pta, j.at("initial"));
    if (j.contains("events")) pta.events = j["events"].get<std::set<std::string>>();
    if (j.contains("urgent_events")) pta.urgent_events = j["urgent_events"].get<std::set<std::string>>();
    for (const auto& v : j.value("variables", json::array())) {
        pta.add_variable(Variable{v.at("name"), v.at("min"), v.at("max"), v.value("init", v.at("min").get<std::int64_t>())});
    }
    for (const auto& e : j.value("edges", json::array())) {
        ProbEdge edge;
        edge.source = lookup(pta, e.at("source"));
        edge.guard = constraint_from_json(e.value("guard", json::object()));
        edge.label = e.at("label").get<std::string>();
        for (const auto& g : e.value("var_guard", json::array())) {
            edge.var_guard.push_back(VarCond{g.at("var"), op_from(g.at("op")), g.at("value")});
        }
        for (const auto& o : e.at("outcomes")) {
            Outcome out;
            out.prob = Rational::parse(o.at("prob").get<std::string>());
            out.reset = o.value("reset", false);
            out.target = lookup(pta, o.at("target"));
            for (const auto& u : o.value("updates", json::array())) {
                const std::string op = u.value("op", "set");
                if (op != "set" && op != "add") throw ModelError("unknown update op " + op);
                out.updates.push_back(Update{u.at("var"), op == "set" ? UpdateOp::Set : UpdateOp::Add, u.at("value"),
                                             u.value("saturate", false)});
            }
            edge.outcomes.push_back(std::move(out));
        }
        pta.add_edge(std::move(edge));
    }
    return pta;
}

} // namespace

json to_json(const Network& net) {
    json comps = json::array();
    for (const auto& c : net.components) comps.push_back(to_json(c));
    return json{{"components", std::move(comps)}, {"shared_variables", net.shared_variables}, {"tags", net.tags}};
}

Network network_from_json(const json& doc) {
    try {
        Network net;
        for (const auto& c : doc.at("components")) net.components.push_back(pta_from_json(c));
        if (doc.contains("shared_variables")) net.shared_variables = doc["shared_variables"].get<std::vector<std::string>>();
        if (doc.contains("tags")) net.tags = doc["tags"].get<std::map<std::string, std::string>>();
        return net;
    } catch (const json::exception& e) {
        throw ModelError(std::string("malformed network document: ") + e.what());
    }
}

} // namespace ptacheck
