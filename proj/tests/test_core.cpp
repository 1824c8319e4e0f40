#include "doctest.h"

#include "ptacheck/errors.hpp"
#include "ptacheck/mdp_io.hpp"
#include "ptacheck/network_io.hpp"
#include "ptacheck/product.hpp"
#include "ptacheck/semantics.hpp"
#include "ptacheck/wlan.hpp"

#include "support.hpp"

#include <algorithm>
#include <map>
#include <set>

using namespace ptacheck;
using namespace testing_support;

namespace {

ProbEdge dirac_edge(LocationId src, const std::string& label, LocationId dst, ClockConstraint guard = {}) {
    ProbEdge e;
    e.source = src;
    e.label = label;
    e.guard = guard;
    e.outcomes.push_back(Outcome{Rational(1), true, dst, {}});
    return e;
}

Pta two_location(const std::string& name, const std::string& label) {
    Pta p;
    p.name = name;
    auto a = p.add_location("A", ClockConstraint::at_most(3));
    auto b = p.add_location("B");
    p.initial = a;
    p.add_edge(dirac_edge(a, label, b, ClockConstraint::between(1, 3)));
    return p;
}

/// Canonical form of a named system: for every state name the sorted list of
/// (action, sorted successors by name).
std::map<std::string, std::vector<std::string>> canonical(const ProbSystem& ps) {
    std::map<std::string, std::vector<std::string>> out;
    for (StateIndex s = 0; s < ps.num_states(); ++s) {
        std::vector<std::string> steps;
        for (const auto& c : ps.choices(s)) {
            std::vector<std::string> succ;
            for (const auto& t : ps.transitions(c)) succ.push_back(ps.name(t.target) + "@" + t.exact.str());
            std::sort(succ.begin(), succ.end());
            std::string key = ps.action_name(c.action);
            for (auto& x : succ) key += "|" + x;
            steps.push_back(key);
        }
        std::sort(steps.begin(), steps.end());
        out[ps.name(s)] = steps;
    }
    return out;
}

} // namespace

TEST_CASE("rational arithmetic is exact and normalised") {
    CHECK(Rational(1, 2) + Rational(1, 3) == Rational(5, 6));
    CHECK(Rational::parse("3/6") == Rational(1, 2));
    CHECK(Rational(2, 4).str() == "1/2");
    CHECK(Rational(1, 1024) * Rational(1024) == Rational(1));
    CHECK(Rational(1, 3) < Rational(1, 2));
}

TEST_CASE("validate reports broken automata") {
    SUBCASE("well-formed automaton") { CHECK(validate(two_location("P", "go")).ok()); }
    SUBCASE("distribution that does not sum to one") {
        Pta p = two_location("P", "go");
        p.edges[0].outcomes = {Outcome{Rational(1, 2), false, 1, {}}, Outcome{Rational(1, 3), false, 0, {}}};
        auto r = validate(p);
        REQUIRE_FALSE(r.ok());
        CHECK(r.violations[0].find("distribution sums to 5/6") != std::string::npos);
    }
    SUBCASE("empty guard") {
        Pta p = two_location("P", "go");
        p.edges[0].guard = ClockConstraint::between(5, 3);
        auto r = validate(p);
        REQUIRE_FALSE(r.ok());
        CHECK(r.violations[0].find("empty constraint") != std::string::npos);
    }
    SUBCASE("dangling target") {
        Pta p = two_location("P", "go");
        p.edges[0].outcomes[0].target = 7;
        CHECK_FALSE(validate(p).ok());
    }
}

TEST_CASE("composition") {
    SUBCASE("a single automaton is its own product") {
        Network net;
        net.components.push_back(two_location("P", "go"));
        ProductView view(net);
        LocationId locs[] = {0};
        auto edges = view.joint_edges(locs);
        REQUIRE(edges.size() == 1);
        CHECK(edges[0].parts.size() == 1);
        CHECK(view.joint_distribution(edges[0]).size() == 1);
    }
    SUBCASE("shared label fires jointly") {
        Network net;
        net.components.push_back(two_location("P", "send"));
        net.components.push_back(two_location("Q", "send"));
        ProductView view(net);
        LocationId locs[] = {0, 0};
        auto edges = view.joint_edges(locs);
        REQUIRE(edges.size() == 1);
        CHECK(edges[0].parts.size() == 2);
        auto dist = view.joint_distribution(edges[0]);
        REQUIRE(dist.size() == 1);
        CHECK(dist[0].prob == Rational(1));
    }
    SUBCASE("uniform station edge against a Dirac channel edge") {
        Pta stn;
        stn.name = "S";
        auto a = stn.add_location("A");
        auto b = stn.add_location("B");
        ProbEdge e;
        e.source = a;
        e.label = "tx";
        for (int i = 0; i < 32; ++i) e.outcomes.push_back(Outcome{Rational(1, 32), true, b, {}});
        stn.add_edge(e);
        Network net;
        net.components.push_back(stn);
        net.components.push_back(two_location("C", "tx"));
        ProductView view(net);
        LocationId locs[] = {0, 0};
        auto edges = view.joint_edges(locs);
        REQUIRE(edges.size() == 1);
        auto dist = view.joint_distribution(edges[0]);
        CHECK(dist.size() == 32);
        Rational sum(0);
        for (const auto& o : dist) {
            CHECK(o.prob == Rational(1, 32));
            sum += o.prob;
        }
        CHECK(sum == Rational(1));
    }
    SUBCASE("label used without being declared") {
        Network net;
        Pta p = two_location("P", "go");
        p.events.clear();
        net.components.push_back(p);
        CHECK_THROWS_AS(compose(net), SharedEventArityMismatch);
    }
}

TEST_CASE("integer-time semantics on tiny automata") {
    SUBCASE("invariant [0,2] gives a three-state tick chain") {
        Pta p;
        p.name = "P";
        p.add_location("L", ClockConstraint::at_most(2));
        Network net;
        net.components.push_back(p);
        ProbSystem ps = digital_semantics(net);
        REQUIRE(ps.num_states() == 3);
        for (StateIndex s = 0; s < 2; ++s) {
            REQUIRE(ps.choices(s).size() == 1);
            CHECK(ps.action_name(ps.choices(s)[0].action) == kTickAction);
        }
        CHECK(ps.choices(2).empty());
    }
    SUBCASE("enabled urgent edge suppresses the tick") {
        Pta p;
        p.name = "P";
        auto a = p.add_location("A");
        auto b = p.add_location("B");
        p.add_edge(dirac_edge(a, "now", b));
        p.urgent_events = {"now"};
        Network net;
        net.components.push_back(p);
        ProbSystem ps = digital_semantics(net);
        for (const auto& c : ps.choices(ps.initial())) CHECK(ps.action_name(c.action) != kTickAction);
    }
    SUBCASE("state cap") {
        ExpansionOptions opt;
        opt.state_cap = 10;
        WlanParams params;
        CHECK_THROWS_AS(digital_semantics(time_scale(make_lan(Variant::Red, params), 50), opt), StateSpaceLimitExceeded);
    }
}

TEST_CASE("semantic properties on a small LAN") {
    WlanParams p;
    p.bc_max = 2;
    p.TX_MAX = 500;
    const Network net = time_scale(make_lan(Variant::Abs, p), 50);
    ExpansionOptions opt;
    opt.on_time_step = backoff_freeze_check();
    const ProbSystem ps = digital_semantics(net, opt);
    const ProductView view(net);

    for (StateIndex s = 0; s < ps.num_states(); ++s) {
        std::size_t ticks = 0;
        for (const auto& c : ps.choices(s)) {
            Rational sum(0);
            for (const auto& t : ps.transitions(c)) sum += t.exact;
            CHECK(sum == Rational(1));
            if (ps.action_name(c.action) == kTickAction) {
                ++ticks;
                CHECK(c.size() == 1);
            }
        }
        CHECK(ticks <= 1);
        if (ticks == 1) {
            // No urgent label may be enabled where time passes.
            for (const auto& c : ps.choices(s)) {
                const auto& a = ps.action_name(c.action);
                if (a != kTickAction) CHECK_FALSE(view.is_urgent(a));
            }
        }
    }
}

TEST_CASE("component order does not change the semantics") {
    WlanParams p;
    p.bc_max = 2;
    p.TX_MAX = 500;
    p.tx_lens = {258, 306};
    Network ab = time_scale(make_lan(Variant::Red, p), 50);
    Network ba = ab;
    std::reverse(ba.components.begin(), ba.components.end());
    const ProbSystem p1 = digital_semantics(ab);
    const ProbSystem p2 = digital_semantics(ba);
    CHECK(p1.num_states() == p2.num_states());
    CHECK(p1.num_transitions() == p2.num_transitions());
    CHECK(canonical(p1) == canonical(p2));
}

TEST_CASE("MDP interchange format") {
    Spec spec;
    spec.states = {{dirac(1), {"coin", {{1, 1, 2}, {2, 1, 2}}}}, {}, {dirac(2, "loop")}};
    spec.names = {"s0", "s1", "s2"};
    const ProbSystem ps = build(spec);

    SUBCASE("round trip, including empty step sets") {
        const std::string text = write_ps(ps);
        const ProbSystem back = read_ps(text);
        CHECK(back.structurally_equal(ps));
        CHECK(back.choices(1).empty());
        CHECK(write_ps(back) == text);
    }
    SUBCASE("flags and targets survive") {
        ProbSystem marked = ps;
        marked.set_decorated(true);
        marked.set_stored_targets(std::vector<StateIndex>{2});
        const ProbSystem back = read_ps(write_ps(marked));
        CHECK(back.decorated());
        REQUIRE(back.stored_targets());
        CHECK(*back.stored_targets() == std::vector<StateIndex>{2});
    }
    SUBCASE("distribution summing to 0.9") {
        std::string body = "STATES 2 INIT 0\nS 0\nA a\n1 9/10\nS 1\n";
        std::string text = body + "SHA256 " + sha256_hex(body) + "\n";
        try {
            (void)read_ps(text);
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find("bad distribution") != std::string::npos);
        }
    }
    SUBCASE("tampered body") {
        std::string text = write_ps(ps);
        text.replace(text.find("1/2"), 3, "1/3");
        CHECK_THROWS_AS(read_ps(text), ChecksumMismatch);
    }
}

TEST_CASE("network JSON round trip") {
    WlanParams p;
    p.n_stations = 3;
    p.tx_lens = {258, 258, 300};
    for (Variant v : {Variant::Abs, Variant::Int, Variant::Red}) {
        Network net = decorate_deadline(make_lan(v, p), DeadlineSpec{5000, DeadlineSpec::Phi::Identity});
        CHECK(network_from_json(to_json(net)) == net);
    }
    CHECK_THROWS_AS(network_from_json(nlohmann::json::parse("{\"components\": 3}")), ModelError);
}
