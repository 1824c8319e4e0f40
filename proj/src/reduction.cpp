#include "ptacheck/reduction.hpp"

#include "ptacheck/errors.hpp"

#include <algorithm>
#include <deque>
#include <sstream>
#include <unordered_map>

namespace ptacheck {

std::vector<StateIndex> support(std::span<const Transition> dist) {
    std::vector<StateIndex> out;
    for (const auto& t : dist) {
        if (t.exact > Rational(0)) out.push_back(t.target);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

namespace {

std::vector<std::pair<StateIndex, Rational>> canonical(std::span<const Transition> d) {
    std::vector<std::pair<StateIndex, Rational>> out;
    for (const auto& t : d) {
        if (t.exact > Rational(0)) out.emplace_back(t.target, t.exact);
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    // Merge repeated targets.
    std::vector<std::pair<StateIndex, Rational>> merged;
    for (const auto& e : out) {
        if (!merged.empty() && merged.back().first == e.first) merged.back().second += e.second;
        else merged.push_back(e);
    }
    return merged;
}

bool has_partner(const std::vector<Transition>& d, const std::vector<std::vector<Transition>>& steps) {
    for (const auto& e : steps) {
        if (dist_equiv(d, e)) return true;
    }
    return false;
}

} // namespace

bool dist_equiv(std::span<const Transition> d1, std::span<const Transition> d2) {
    return canonical(d1) == canonical(d2);
}

bool steps_equiv(const std::vector<std::vector<Transition>>& steps1, const std::vector<std::vector<Transition>>& steps2) {
    for (const auto& d : steps1) {
        if (!has_partner(d, steps2)) return false;
    }
    for (const auto& d : steps2) {
        if (!has_partner(d, steps1)) return false;
    }
    return true;
}

namespace {

bool all_dirac(const ProbSystem& ps, StateIndex s) {
    auto cs = ps.choices(s);
    if (cs.empty()) return false;
    for (const auto& c : cs) {
        if (c.size() != 1) return false;
    }
    return true;
}

/// Distinct successors of an all-Dirac state.
std::vector<StateIndex> dirac_successors(const ProbSystem& ps, StateIndex s) {
    std::vector<StateIndex> out;
    if (!all_dirac(ps, s)) return out;
    for (const auto& c : ps.choices(s)) out.push_back(ps.transitions(c)[0].target);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

/// States reachable from s through all-Dirac states, s first, BFS order;
/// `stop` is recorded but not expanded.
std::vector<StateIndex> dirac_closure(const ProbSystem& ps, StateIndex s, std::int64_t stop = -1) {
    std::vector<StateIndex> order{s};
    std::unordered_map<StateIndex, bool> seen{{s, true}};
    for (std::size_t i = 0; i < order.size(); ++i) {
        StateIndex u = order[i];
        if (static_cast<std::int64_t>(u) == stop && i > 0) continue;
        for (StateIndex x : dirac_successors(ps, u)) {
            if (seen.emplace(x, true).second) order.push_back(x);
        }
    }
    return order;
}

} // namespace

bool dominates(const ProbSystem& ps, StateIndex s, StateIndex t) {
    if (s == t) return true;
    // Least fixpoint: u joins once all of its Dirac successors have joined.
    auto region = dirac_closure(ps, s);
    if (std::find(region.begin(), region.end(), t) == region.end()) return false;
    std::unordered_map<StateIndex, std::size_t> pending;
    std::unordered_map<StateIndex, std::vector<StateIndex>> preds;
    for (StateIndex u : region) {
        auto succ = dirac_successors(ps, u);
        pending[u] = succ.empty() ? std::size_t(-1) : succ.size();
        for (StateIndex x : succ) preds[x].push_back(u);
    }
    std::vector<StateIndex> stack{t};
    std::unordered_map<StateIndex, bool> in{{t, true}};
    while (!stack.empty()) {
        StateIndex x = stack.back();
        stack.pop_back();
        for (StateIndex u : preds[x]) {
            if (in.contains(u)) continue;
            if (--pending[u] == 0) {
                if (u == s) return true;
                in[u] = true;
                stack.push_back(u);
            }
        }
    }
    return false;
}

DomMap det_dominators(const ProbSystem& ps) {
    const std::size_t n = ps.num_states();
    DomMap out;
    out.dominator.resize(n);
    for (StateIndex s = 0; s < n; ++s) out.dominator[s] = s;

    // Iterative Tarjan over the Dirac graph; components come out sinks first.
    constexpr std::uint32_t kUnvisited = std::uint32_t(-1);
    std::vector<std::uint32_t> index(n, kUnvisited), low(n, 0);
    std::vector<bool> on_stack(n, false);
    std::vector<StateIndex> scc_stack;
    std::vector<std::vector<StateIndex>> succ_cache(n);
    std::vector<bool> cached(n, false);
    auto succ = [&](StateIndex s) -> const std::vector<StateIndex>& {
        if (!cached[s]) {
            succ_cache[s] = dirac_successors(ps, s);
            cached[s] = true;
        }
        return succ_cache[s];
    };
    std::uint32_t counter = 0;
    struct Frame {
        StateIndex s;
        std::size_t next;
    };

    auto finish_component = [&](std::vector<StateIndex> comp) {
        if (comp.size() == 1) {
            StateIndex s = comp[0];
            const auto& xs = succ(s);
            if (xs.empty()) return;
            if (std::find(xs.begin(), xs.end(), s) == xs.end()) {
                StateIndex d = out.dominator[xs[0]];
                for (StateIndex x : xs) {
                    if (out.dominator[x] != d) return;
                }
                out.dominator[s] = d;
                return;
            }
        }
        std::sort(comp.begin(), comp.end());
        const StateIndex rep = comp[0];
        std::vector<StateIndex> members(comp);
        auto in_comp = [&](StateIndex x) { return std::binary_search(members.begin(), members.end(), x); };
        bool closed = true;
        for (StateIndex u : comp) {
            for (StateIndex x : succ(u)) closed = closed && in_comp(x);
        }
        // Members dominated by the representative, by least fixpoint.
        std::vector<StateIndex> joined{rep};
        bool grew = true;
        while (grew) {
            grew = false;
            for (StateIndex u : comp) {
                if (std::binary_search(joined.begin(), joined.end(), u)) continue;
                bool all_in = true;
                for (StateIndex x : succ(u)) all_in = all_in && std::binary_search(joined.begin(), joined.end(), x);
                if (all_in) {
                    joined.insert(std::upper_bound(joined.begin(), joined.end(), u), u);
                    grew = true;
                }
            }
        }
        for (StateIndex u : joined) out.dominator[u] = rep;
        if (closed) out.cycles.push_back(comp);
    };

    for (StateIndex root = 0; root < n; ++root) {
        if (index[root] != kUnvisited) continue;
        std::vector<Frame> stack{{root, 0}};
        index[root] = low[root] = counter++;
        scc_stack.push_back(root);
        on_stack[root] = true;
        while (!stack.empty()) {
            Frame& f = stack.back();
            const auto& xs = succ(f.s);
            if (f.next < xs.size()) {
                StateIndex x = xs[f.next++];
                if (index[x] == kUnvisited) {
                    index[x] = low[x] = counter++;
                    scc_stack.push_back(x);
                    on_stack[x] = true;
                    stack.push_back({x, 0});
                } else if (on_stack[x]) {
                    low[f.s] = std::min(low[f.s], index[x]);
                }
                continue;
            }
            StateIndex s = f.s;
            stack.pop_back();
            if (!stack.empty()) low[stack.back().s] = std::min(low[stack.back().s], low[s]);
            if (low[s] == index[s]) {
                std::vector<StateIndex> comp;
                while (true) {
                    StateIndex u = scc_stack.back();
                    scc_stack.pop_back();
                    on_stack[u] = false;
                    comp.push_back(u);
                    if (u == s) break;
                }
                finish_component(std::move(comp));
            }
        }
    }
    return out;
}

Correspondence correspond(const ProbSystem& ps1, const ProbSystem& ps2) {
    Correspondence c;
    const std::size_t n1 = ps1.num_states(), n2 = ps2.num_states();
    c.to2.assign(n1, -1);
    c.to1.assign(n2, -1);
    if (ps1.has_names() != ps2.has_names()) throw Error("cannot relate a named system to an unnamed one");
    if (!ps1.has_names()) {
        for (std::size_t s = 0; s < std::min(n1, n2); ++s) c.to2[s] = c.to1[s] = static_cast<std::int64_t>(s);
        return c;
    }
    std::unordered_map<std::string, StateIndex> names2;
    names2.reserve(n2);
    for (StateIndex s = 0; s < n2; ++s) names2.emplace(ps2.name(s), s);
    for (StateIndex s = 0; s < n1; ++s) {
        if (auto it = names2.find(ps1.name(s)); it != names2.end()) {
            c.to2[s] = it->second;
            c.to1[it->second] = s;
        }
    }
    return c;
}

namespace {

/// Step set of s in ps1, rewritten into ps2's index space. Targets without
/// a counterpart get indices past ps2's range so they never match.
std::vector<std::vector<Transition>> translated_steps(const ProbSystem& ps1, StateIndex s, const Correspondence& corr,
                                                      std::size_t n2) {
    std::vector<std::vector<Transition>> out;
    for (const auto& c : ps1.choices(s)) {
        std::vector<Transition> d;
        for (auto t : ps1.transitions(c)) {
            t.target = corr.to2[t.target] >= 0 ? static_cast<StateIndex>(corr.to2[t.target])
                                                : static_cast<StateIndex>(n2 + t.target);
            d.push_back(t);
        }
        out.push_back(std::move(d));
    }
    return out;
}

std::vector<std::vector<Transition>> own_steps(const ProbSystem& ps, StateIndex s) {
    std::vector<std::vector<Transition>> out;
    for (const auto& c : ps.choices(s)) {
        auto ts = ps.transitions(c);
        out.emplace_back(ts.begin(), ts.end());
    }
    return out;
}

std::string label(const ProbSystem& ps, StateIndex s) { return ps.has_names() ? ps.name(s) : std::to_string(s); }

/// States on paths from s up to (and including) t.
std::vector<StateIndex> between(const ProbSystem& ps, StateIndex s, StateIndex t) {
    std::vector<StateIndex> order{s};
    std::unordered_map<StateIndex, bool> seen{{s, true}};
    for (std::size_t i = 0; i < order.size(); ++i) {
        StateIndex u = order[i];
        if (u == t) continue;
        for (const auto& c : ps.choices(u)) {
            for (const auto& tr : ps.transitions(c)) {
                if (seen.emplace(tr.target, true).second) order.push_back(tr.target);
            }
        }
    }
    return order;
}

void condition2(const ProbSystem& ps, const std::vector<bool>& f, StateIndex s, StateIndex t, const char* sys,
                std::vector<Condition2Violation>& out) {
    if (f[s] || f[t]) return;
    for (StateIndex u : between(ps, s, t)) {
        if (f[u]) out.push_back({sys, label(ps, s), label(ps, t), label(ps, u)});
    }
}

} // namespace

std::vector<StateIndex> points_of_disagreement_ps(const ProbSystem& ps1, const ProbSystem& ps2, const Correspondence& corr) {
    std::vector<StateIndex> out;
    for (StateIndex s = 0; s < ps1.num_states(); ++s) {
        if (corr.to2[s] < 0) continue;
        auto s2 = static_cast<StateIndex>(corr.to2[s]);
        if (!steps_equiv(translated_steps(ps1, s, corr, ps2.num_states()), own_steps(ps2, s2))) out.push_back(s);
    }
    return out;
}

std::vector<StateIndex> points_of_disagreement_ps(const ProbSystem& ps1, const ProbSystem& ps2) {
    return points_of_disagreement_ps(ps1, ps2, correspond(ps1, ps2));
}

DiffReport check_theorem1(const ProbSystem& ps1, const std::vector<bool>& f1, const ProbSystem& ps2,
                          const std::vector<bool>& f2) {
    if (f1.size() != ps1.num_states() || f2.size() != ps2.num_states()) throw Error("target mask size mismatch");
    DiffReport report;
    Correspondence corr = correspond(ps1, ps2);
    for (StateIndex s = 0; s < ps1.num_states(); ++s) {
        if (corr.to2[s] >= 0 && f1[s] != f2[static_cast<std::size_t>(corr.to2[s])]) {
            report.target_mismatches.push_back(label(ps1, s));
        }
    }
    auto dis = points_of_disagreement_ps(ps1, ps2, corr);
    std::vector<bool> is_dis(ps1.num_states(), false);
    for (StateIndex s : dis) is_dis[s] = true;

    for (StateIndex s : dis) {
        report.ps_disagreements.push_back(label(ps1, s));
        const auto s2 = static_cast<StateIndex>(corr.to2[s]);
        std::vector<Condition2Violation> first_failure;
        bool found_cond1 = false;
        bool certified = false;
        for (StateIndex t : dirac_closure(ps1, s)) {
            if (t == s || corr.to2[t] < 0 || is_dis[t]) continue;
            const auto t2 = static_cast<StateIndex>(corr.to2[t]);
            if (!dominates(ps1, s, t) || !dominates(ps2, s2, t2)) continue;
            std::vector<Condition2Violation> v;
            condition2(ps1, f1, s, t, "ps1", v);
            condition2(ps2, f2, s2, t2, "ps2", v);
            if (!found_cond1) {
                found_cond1 = true;
                first_failure = v;
                report.dominator_witnesses[label(ps1, s)] = label(ps1, t);
            }
            if (v.empty()) {
                report.dominator_witnesses[label(ps1, s)] = label(ps1, t);
                certified = true;
                break;
            }
        }
        if (!found_cond1) {
            report.condition1_violations.push_back(label(ps1, s));
        } else if (!certified) {
            report.condition2_violations.insert(report.condition2_violations.end(), first_failure.begin(),
                                                first_failure.end());
        }
    }
    return report;
}

namespace {

std::string describe(const ClockConstraint& c) {
    std::ostringstream os;
    os << '[' << c.lower << ',' << (c.upper ? std::to_string(*c.upper) : "inf") << ']';
    for (const auto& t : c.offset) os << '+' << t.coeff << '*' << t.var;
    return os.str();
}

std::string describe(const Pta& pta, const ProbEdge& e) {
    std::ostringstream os;
    os << e.label << ' ' << describe(e.guard);
    for (const auto& g : e.var_guard) os << ' ' << g.var << to_string(g.op) << g.value;
    std::vector<std::string> outs;
    for (const auto& o : e.outcomes) {
        std::ostringstream oo;
        oo << o.prob << (o.reset ? " reset " : " keep ") << pta.location_name(o.target);
        for (const auto& u : o.updates) {
            oo << ' ' << u.var << (u.op == UpdateOp::Set ? ":=" : "+=") << u.value << (u.saturate ? "s" : "");
        }
        outs.push_back(oo.str());
    }
    std::sort(outs.begin(), outs.end());
    for (const auto& o : outs) os << " {" << o << '}';
    return os.str();
}

std::multiset<std::string> outgoing(const Pta& pta, LocationId l) {
    std::multiset<std::string> out;
    for (const auto& e : pta.edges) {
        if (e.source == l) out.insert(describe(pta, e));
    }
    return out;
}

} // namespace

DiffReport specific_difference_sets(const Network& net1, const Network& net2) {
    if (net1.components.size() != net2.components.size()) {
        throw ArityMismatch("networks have " + std::to_string(net1.components.size()) + " and " +
                            std::to_string(net2.components.size()) + " components");
    }
    DiffReport report;
    for (std::size_t i = 0; i < net1.components.size(); ++i) {
        const Pta& a = net1.components[i];
        const Pta& b = net2.components[i];
        if (a.events != b.events || a.urgent_events != b.urgent_events) {
            throw ArityMismatch("component " + std::to_string(i) + " has different event sets");
        }
        if (a == b) continue;
        report.difference_set.insert(i);
        auto& di = report.specific_difference_sets[i];
        for (LocationId la = 0; la < a.locations.size(); ++la) {
            auto lb = b.find_location(a.locations[la].name);
            if (!lb) continue;
            const auto& x = a.locations[la];
            const auto& y = b.locations[*lb];
            if (!(x.invariant == y.invariant) || x.urgent != y.urgent || outgoing(a, la) != outgoing(b, *lb)) {
                di.insert(x.name);
            }
        }
    }
    return report;
}

nlohmann::json to_json(const DiffReport& r) {
    using nlohmann::json;
    json sds = json::object();
    for (const auto& [i, locs] : r.specific_difference_sets) sds[std::to_string(i)] = locs;
    json c2 = json::array();
    for (const auto& v : r.condition2_violations) {
        c2.push_back({{"system", v.system}, {"disagreement", v.disagreement}, {"dominator", v.dominator}, {"state", v.state}});
    }
    return json{{"difference_set", r.difference_set},
                {"specific_difference_sets", sds},
                {"ps_disagreements", r.ps_disagreements},
                {"dominator_witnesses", r.dominator_witnesses},
                {"condition1_violations", r.condition1_violations},
                {"condition2_violations", c2},
                {"target_mismatches", r.target_mismatches},
                {"clean", r.clean()}};
}

CompressResult compress(const ProbSystem& ps, const std::vector<bool>& targets, const CompressOptions& options) {
    if (ps.decorated() && !options.force) {
        throw DecoratedInput("refusing to compress a deadline-decorated system; chains carry elapsed time");
    }
    const std::size_t n = ps.num_states();
    if (targets.size() != n) throw Error("target mask size does not match the state count");
    DomMap dom = det_dominators(ps);
    std::vector<bool> closed_rep(n, false);
    for (const auto& cyc : dom.cycles) closed_rep[cyc[0]] = true;

    // Rewire target per state, or -1 to keep the original steps.
    std::vector<std::int64_t> rewire(n, -1);
    CompressResult out;
    for (StateIndex s = 0; s < n; ++s) {
        const StateIndex t = dom.dominator[s];
        if (t == s && !closed_rep[s]) continue;
        auto cs = ps.choices(s);
        if (cs.size() == 1 && cs[0].size() == 1 && ps.transitions(cs[0])[0].target == t) continue;
        if (!targets[s] && !targets[t]) {
            bool interior_target = false;
            for (StateIndex u : dirac_closure(ps, s, t)) {
                if (u != s && u != t && targets[u]) {
                    interior_target = true;
                    break;
                }
            }
            if (interior_target) continue;
        }
        rewire[s] = t;
        ++out.rewired;
    }

    // Keep reachable states, in their original relative order.
    std::vector<bool> live(n, false);
    std::vector<StateIndex> stack{ps.initial()};
    live[ps.initial()] = true;
    auto visit = [&](StateIndex x) {
        if (!live[x]) {
            live[x] = true;
            stack.push_back(x);
        }
    };
    while (!stack.empty()) {
        StateIndex s = stack.back();
        stack.pop_back();
        if (rewire[s] >= 0) {
            visit(static_cast<StateIndex>(rewire[s]));
            continue;
        }
        for (const auto& c : ps.choices(s)) {
            for (const auto& t : ps.transitions(c)) visit(t.target);
        }
    }
    std::vector<StateIndex> renum(n, 0);
    for (StateIndex s = 0; s < n; ++s) {
        if (!live[s]) continue;
        renum[s] = static_cast<StateIndex>(out.origin.size());
        out.origin.push_back(s);
    }

    ProbSystemBuilder b;
    for (const auto& a : ps.actions()) b.action(a);
    for (StateIndex old : out.origin) {
        b.begin_state();
        auto cs = ps.choices(old);
        if (rewire[old] >= 0) {
            b.begin_choice(cs[0].action);
            b.add_unique(renum[static_cast<std::size_t>(rewire[old])], Rational(1));
            continue;
        }
        for (const auto& c : cs) {
            b.begin_choice(c.action);
            for (const auto& t : ps.transitions(c)) b.add_unique(renum[t.target], t.exact);
        }
    }
    if (ps.codec()) {
        std::vector<std::int32_t> packed;
        packed.reserve(out.origin.size() * ps.codec()->width());
        for (StateIndex old : out.origin) {
            auto p = ps.packed(old);
            packed.insert(packed.end(), p.begin(), p.end());
        }
        b.set_codec(ps.codec(), std::move(packed));
    } else if (ps.has_names()) {
        std::vector<std::string> names;
        for (StateIndex old : out.origin) names.push_back(ps.name(old));
        b.set_names(std::move(names));
    }
    out.ps = b.finish(renum[ps.initial()], out.origin.size());
    out.ps.set_decorated(ps.decorated());
    out.targets.resize(out.origin.size());
    for (std::size_t i = 0; i < out.origin.size(); ++i) out.targets[i] = targets[out.origin[i]];
    if (ps.stored_targets()) {
        std::vector<StateIndex> kept;
        for (StateIndex t : *ps.stored_targets()) {
            if (live[t]) kept.push_back(renum[t]);
        }
        out.ps.set_stored_targets(std::move(kept));
    }
    return out;
}

} // namespace ptacheck
