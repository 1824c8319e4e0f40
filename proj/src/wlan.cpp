#include "ptacheck/wlan.hpp"

#include "ptacheck/errors.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

namespace ptacheck {

std::string to_string(Variant v) {
    switch (v) {
    case Variant::Abs: return "abs";
    case Variant::Int: return "int";
    case Variant::Red: return "red";
    }
    return "?";
}

Variant parse_variant(const std::string& s) {
    if (s == "abs") return Variant::Abs;
    if (s == "int") return Variant::Int;
    if (s == "red") return Variant::Red;
    throw BadVariant("unknown variant '" + s + "' (expected abs, int or red)");
}

void WlanParams::validate() const {
    auto fail = [](const std::string& m) { throw BadParams(m); };
    if (n_stations == 0) fail("n_stations must be at least 1");
    for (auto [v, name] : {std::pair{DIFS, "DIFS"}, {VULN, "VULN"}, {SIFS, "SIFS"}, {ACK, "ACK"}, {ACK_TO, "ACK_TO"},
                           {C, "C"}, {TX_MIN, "TX_MIN"}, {TX_MAX, "TX_MAX"}, {bc_max, "bc_max"}, {retry_limit, "retry_limit"}}) {
        if (v < 0) fail(std::string(name) + " must be non-negative");
    }
    if (slot < 1) fail("slot must be positive");
    if (TX_MIN > TX_MAX) fail("TX_MIN exceeds TX_MAX");
    if (ACK_TO < DIFS) fail("ACK_TO must be at least DIFS");
    if (bc_max > 20) fail("bc_max too large for an explicit model");
    if (tx_mode == TxMode::Fixed) {
        if (tx_lens.size() != n_stations) fail("tx_lens must give one length per station");
        for (auto t : tx_lens) {
            if (t < TX_MIN || t > TX_MAX) fail("transmission length " + std::to_string(t) + " outside [TX_MIN, TX_MAX]");
        }
    }
}

WlanParams WlanParams::par_section_profile() {
    WlanParams p;
    p.TX_MIN = 315;
    p.TX_MAX = 15717;
    p.tx_lens = {315, 315};
    return p;
}

std::string station_name(std::size_t id) { return "Stn" + std::to_string(id); }

namespace {

std::string sub(const char* base, std::size_t id) { return std::string(base) + "_" + std::to_string(id); }

ProbEdge edge(LocationId src, ClockConstraint guard, std::string label, LocationId target, bool reset = true) {
    ProbEdge e;
    e.source = src;
    e.guard = std::move(guard);
    e.label = std::move(label);
    e.outcomes.push_back(Outcome{Rational(1), reset, target, {}});
    return e;
}

/// Labels a station may use, declared identically in every variant so that
/// variants compare location by location.
std::vector<std::string> station_labels(std::size_t id) {
    std::vector<std::string> out;
    for (const char* base : {"send", "finish_correct", "finish_garbled", "busy", "free", "ack_send", "ack_finish", "tau"}) {
        out.push_back(sub(base, id));
    }
    return out;
}

} // namespace

Pta make_station(Variant variant, const WlanParams& params, std::size_t id) {
    params.validate();
    if (id == 0 || id > params.n_stations) throw BadParams("station id out of range");
    const auto& p = params;
    const std::string bc = "bc" + std::to_string(id);
    const std::string backoff = "backoff" + std::to_string(id);
    const std::int64_t window_max = (p.C + 1) * (std::int64_t{1} << p.bc_max) - 1;

    Pta s;
    s.name = station_name(id);
    for (const auto& l : station_labels(id)) s.events.insert(l);
    s.urgent_events = {sub("busy", id), sub("free", id)};
    s.add_variable({bc, 0, p.bc_max, 0});
    s.add_variable({backoff, 0, window_max, 0});

    const std::int64_t tx_hi = p.tx_mode == TxMode::Fixed ? p.tx_lens[id - 1] : p.TX_MAX;
    const std::int64_t tx_lo = p.tx_mode == TxMode::Fixed ? p.tx_lens[id - 1] : p.TX_MIN;
    // The reduced station skips the DIFS re-wait on the busy paths, so the
    // post-collision wait is shortened to keep the two timelines aligned.
    const std::int64_t ack_to = variant == Variant::Red ? p.ACK_TO - p.DIFS : p.ACK_TO;

    const auto sense = s.add_location("Sense", ClockConstraint::at_most(p.DIFS));
    const auto wuf = s.add_location("Wait_until_free");
    const auto wfd = s.add_location("Wait_for_DIFS", ClockConstraint::at_most(p.DIFS));
    const auto bo = s.add_location("Backoff", ClockConstraint::at_most(p.slot));
    const auto wuf2 = s.add_location("Wait_until_free_II");
    const auto wfd2 = s.add_location("Wait_for_DIFS_II", ClockConstraint::at_most(p.DIFS));
    const auto vuln = s.add_location("Vulnerable", ClockConstraint::at_most(p.VULN));
    const auto tx = s.add_location("Transmit", ClockConstraint::at_most(tx_hi));
    const auto test = s.add_location("Test_channel", {}, true);
    LocationId sifs = 0, ack = 0;
    if (variant == Variant::Abs) {
        sifs = s.add_location("Wait_for_SIFS", ClockConstraint::at_most(p.SIFS));
        ack = s.add_location("Wait_for_ACK", ClockConstraint::at_most(p.ACK));
    }
    const auto ackto = s.add_location("Wait_for_ACK_TO", ClockConstraint::at_most(ack_to));
    const auto done = s.add_location("Done");
    s.initial = sense;

    const Update reset_bc{bc, UpdateOp::Set, 0, false};

    // Draw backoff := RANDOM(bc) uniformly from the contention window and
    // bump the counter; with a retry limit the station gives up instead.
    auto add_draw = [&](LocationId src, ClockConstraint guard, const std::string& label) {
        for (std::int64_t k = 0; k <= p.bc_max; ++k) {
            ProbEdge e;
            e.source = src;
            e.guard = guard;
            e.label = label;
            e.var_guard.push_back({bc, CmpOp::Eq, k});
            if (p.retry_limit > 0 && k >= p.retry_limit) {
                e.outcomes.push_back(Outcome{Rational(1), true, done, {reset_bc}});
                s.add_edge(std::move(e));
                continue;
            }
            const std::int64_t window = (p.C + 1) << k;
            const std::int64_t next_bc = std::min(k + 1, p.bc_max);
            for (std::int64_t b = 0; b < window; ++b) {
                e.outcomes.push_back(Outcome{Rational(1, window), true, bo,
                                             {{backoff, UpdateOp::Set, b, false}, {bc, UpdateOp::Set, next_bc, false}}});
            }
            s.add_edge(std::move(e));
        }
    };

    const std::string tau = sub("tau", id), busy = sub("busy", id), free = sub("free", id);

    // Sense: channel free for DIFS, then start the vulnerable period.
    s.add_edge(edge(sense, ClockConstraint::exactly(p.DIFS), tau, vuln));
    s.add_edge(edge(sense, {}, busy, wuf));

    // Wait until free, then either wait DIFS before drawing or draw at once.
    if (variant == Variant::Red) {
        add_draw(wuf, {}, free);
    } else {
        s.add_edge(edge(wuf, {}, free, wfd));
    }
    s.add_edge(edge(wfd, {}, busy, wuf));
    add_draw(wfd, ClockConstraint::exactly(p.DIFS), tau);

    // Backoff counts slots and freezes on a busy channel.
    {
        ProbEdge dec = edge(bo, ClockConstraint::exactly(p.slot), tau, bo);
        dec.var_guard.push_back({backoff, CmpOp::Gt, 0});
        dec.outcomes[0].updates.push_back({backoff, UpdateOp::Add, -1, false});
        s.add_edge(std::move(dec));
        ProbEdge go = edge(bo, ClockConstraint::exactly(p.slot), tau, vuln);
        go.var_guard.push_back({backoff, CmpOp::Eq, 0});
        s.add_edge(std::move(go));
    }
    s.add_edge(edge(bo, {}, busy, wuf2));
    s.add_edge(edge(wuf2, {}, free, variant == Variant::Red ? bo : wfd2));
    s.add_edge(edge(wfd2, ClockConstraint::exactly(p.DIFS), tau, bo));
    s.add_edge(edge(wfd2, {}, busy, wuf2));

    s.add_edge(edge(vuln, ClockConstraint::exactly(p.VULN), sub("send", id), tx));
    s.add_edge(edge(tx, ClockConstraint::between(tx_lo, tx_hi), sub("finish_correct", id), test));
    s.add_edge(edge(tx, ClockConstraint::between(tx_lo, tx_hi), sub("finish_garbled", id), ackto));

    if (variant == Variant::Abs) {
        s.add_edge(edge(test, {}, free, sifs));
        s.add_edge(edge(test, {}, busy, wuf));
        s.add_edge(edge(sifs, ClockConstraint::exactly(0), busy, wuf));
        s.add_edge(edge(sifs, ClockConstraint::exactly(p.SIFS), sub("ack_send", id), ack));
        ProbEdge fin = edge(ack, ClockConstraint::exactly(p.ACK), sub("ack_finish", id), done);
        fin.outcomes[0].updates.push_back(reset_bc);
        s.add_edge(std::move(fin));
    } else {
        ProbEdge fin = edge(test, {}, tau, done);
        fin.outcomes[0].updates.push_back(reset_bc);
        s.add_edge(std::move(fin));
    }

    s.add_edge(edge(ackto, ClockConstraint::exactly(0), busy, wuf));
    s.add_edge(edge(ackto, ClockConstraint::exactly(ack_to), tau, wfd));
    return s;
}

Pta make_channel(const WlanParams& params) {
    params.validate();
    const std::size_t n = params.n_stations;
    Pta c;
    c.name = kChannelName;
    const auto free_loc = c.add_location("Free");
    const auto busy_loc = c.add_location("Busy");
    std::vector<LocationId> garbled(n + 2, 0);
    for (std::size_t k = 1; k <= n; ++k) garbled[k] = c.add_location("Garbled_" + std::to_string(k));
    c.initial = free_loc;

    // Location after one more transmitter joins, by occupancy.
    auto join = [&](LocationId from) -> std::optional<LocationId> {
        if (from == free_loc) return busy_loc;
        if (from == busy_loc) return n >= 2 ? std::optional(garbled[2]) : std::nullopt;
        for (std::size_t k = 1; k < n; ++k) {
            if (from == garbled[k]) return garbled[k + 1];
        }
        return std::nullopt;
    };
    auto leave_garbled = [&](std::size_t k) { return k == 1 ? free_loc : garbled[k - 1]; };

    std::vector<LocationId> occupied{busy_loc};
    for (std::size_t k = 1; k <= n; ++k) occupied.push_back(garbled[k]);

    for (std::size_t i = 1; i <= n; ++i) {
        for (const auto& l : station_labels(i)) {
            if (l != sub("tau", i)) c.events.insert(l);
        }
        for (const char* start : {"send", "ack_send"}) {
            for (LocationId from : {free_loc, busy_loc}) {
                if (auto to = join(from)) c.add_edge(edge(from, {}, sub(start, i), *to, false));
            }
            for (std::size_t k = 1; k <= n; ++k) {
                if (auto to = join(garbled[k])) c.add_edge(edge(garbled[k], {}, sub(start, i), *to, false));
            }
        }
        c.add_edge(edge(busy_loc, {}, sub("finish_correct", i), free_loc, false));
        for (std::size_t k = 1; k <= n; ++k) {
            c.add_edge(edge(garbled[k], {}, sub("finish_garbled", i), leave_garbled(k), false));
        }
        c.add_edge(edge(busy_loc, {}, sub("ack_finish", i), free_loc, false));
        for (std::size_t k = 1; k <= n; ++k) {
            c.add_edge(edge(garbled[k], {}, sub("ack_finish", i), leave_garbled(k), false));
        }
        for (LocationId l : occupied) c.add_edge(edge(l, {}, sub("busy", i), l, false));
        c.add_edge(edge(free_loc, {}, sub("free", i), free_loc, false));
    }
    return c;
}

Network make_lan(Variant variant, const WlanParams& params) {
    params.validate();
    Network net;
    for (std::size_t i = 1; i <= params.n_stations; ++i) net.components.push_back(make_station(variant, params, i));
    net.components.push_back(make_channel(params));
    net.tags["variant"] = to_string(variant);
    net.tags["n_stations"] = std::to_string(params.n_stations);
    net.tags["DIFS"] = std::to_string(params.DIFS);
    net.tags["SIFS"] = std::to_string(params.SIFS);
    net.tags["ACK"] = std::to_string(params.ACK);
    net.tags["TX_MIN"] = std::to_string(params.TX_MIN);
    net.tags["slot"] = std::to_string(params.slot);
    return net;
}

std::vector<std::vector<std::int64_t>> enumerate_params(const ParamSpace& space, const WlanParams& params) {
    if (space.granularity < 1) throw BadParams("granularity must be positive");
    if (params.n_stations == 0) throw BadParams("n_stations must be at least 1");
    std::vector<std::int64_t> grid;
    for (std::int64_t v = params.TX_MIN; v <= params.TX_MAX; v += space.granularity) grid.push_back(v);
    if (grid.empty()) throw EmptySpace("empty transmission-length grid");
    const std::size_t n = params.n_stations;
    std::vector<std::vector<std::int64_t>> out;
    std::vector<std::size_t> idx(n, 0);
    while (true) {
        std::vector<std::int64_t> a(n);
        for (std::size_t i = 0; i < n; ++i) a[i] = grid[idx[i]];
        bool keep = true;
        if (space.kind == ParamSpace::Kind::Reduced) {
            keep = a[0] == params.TX_MIN;
            for (std::size_t i = 0; keep && i + 1 < n; ++i) keep = a[i] <= a[i + 1] && a[i + 1] - a[i] <= params.VULN;
        }
        if (keep) out.push_back(std::move(a));
        std::size_t k = n;
        while (k > 0 && ++idx[k - 1] == grid.size()) idx[--k] = 0;
        if (k == 0) break;
    }
    if (out.empty()) throw EmptySpace("no parameterisation satisfies the constraints");
    return out;
}

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }
std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return -floor_div(-a, b); }

ClockConstraint scale(const ClockConstraint& c, std::int64_t slot) {
    ClockConstraint out;
    out.lower = floor_div(c.lower, slot);
    if (c.upper) out.upper = ceil_div(*c.upper, slot);
    for (const auto& t : c.offset) out.offset.push_back({t.var, ceil_div(t.coeff, slot)});
    return out;
}

} // namespace

Network time_scale(const Network& net, std::int64_t slot) {
    if (slot < 1) throw BadParams("slot must be positive");
    Network out = net;
    for (auto& c : out.components) {
        for (auto& l : c.locations) l.invariant = scale(l.invariant, slot);
        for (auto& e : c.edges) e.guard = scale(e.guard, slot);
    }
    out.tags["scaled_by"] = std::to_string(slot);
    return out;
}

Network decorate_deadline(const Network& net, const DeadlineSpec& spec) {
    auto tag = [&](const char* k) -> std::int64_t {
        auto it = net.tags.find(k);
        if (it == net.tags.end()) throw UnsupportedVariant(std::string("network lacks the '") + k + "' tag of a LAN model");
        return std::stoll(it->second);
    };
    auto vit = net.tags.find("variant");
    if (vit == net.tags.end()) throw UnsupportedVariant("deadline decoration needs a LAN model");
    if (net.tags.contains("scaled_by")) throw UnsupportedVariant("decorate before time scaling");
    if (spec.phi == DeadlineSpec::Phi::Compensated && vit->second != "red") {
        throw UnsupportedVariant("compensated phi only matches the segments removed by the reduced variant");
    }
    if (spec.deadline < 0) throw BadParams("deadline must be non-negative");

    Network out = net;
    Pta* chan = nullptr;
    for (auto& c : out.components) {
        if (c.name == kChannelName) chan = &c;
    }
    if (!chan) throw UnsupportedVariant("network has no channel");

    // Each transmission lasts at least TX_MIN, so this bound is never hit
    // before the deadline; saturation keeps the range finite regardless.
    const std::int64_t n = tag("n_stations");
    const std::int64_t cap = spec.deadline / std::max<std::int64_t>(1, tag("TX_MIN")) + n + 1;
    chan->add_variable({"transmissions", 0, cap, 0});
    chan->add_variable({"successes", 0, cap, 0});
    for (auto& e : chan->edges) {
        const bool correct = e.label.starts_with("finish_correct_");
        const bool garbled = e.label.starts_with("finish_garbled_");
        if (!correct && !garbled) continue;
        for (auto& o : e.outcomes) {
            o.updates.push_back({"transmissions", UpdateOp::Add, 1, true});
            if (correct) o.updates.push_back({"successes", UpdateOp::Add, 1, true});
        }
    }

    std::vector<OffsetTerm> phi;
    if (spec.phi == DeadlineSpec::Phi::Compensated) {
        phi.push_back({"successes", tag("SIFS") + tag("ACK")});
        phi.push_back({"transmissions", tag("DIFS")});
    }
    Pta obs;
    obs.name = kDeadlineName;
    const auto running = obs.add_location("Running", ClockConstraint{0, spec.deadline, phi});
    const auto exceeded = obs.add_location("Deadline_exceeded");
    obs.initial = running;
    obs.add_edge(edge(running, ClockConstraint{spec.deadline, std::nullopt, phi}, "deadline_escape", exceeded, false));
    out.components.push_back(std::move(obs));
    out.tags["deadline"] = std::to_string(spec.deadline);
    out.tags["phi"] = spec.phi == DeadlineSpec::Phi::Compensated ? "compensated" : "identity";
    return out;
}

StatePredicate backoff_target(std::int64_t k, std::size_t n_stations) {
    std::vector<std::string> vars;
    for (std::size_t i = 1; i <= n_stations; ++i) vars.push_back("bc" + std::to_string(i));
    return [k, vars](const StateView& s) {
        for (const auto& v : vars) {
            if (s.var(v) == k) return true;
        }
        return false;
    };
}

StatePredicate deadline_target(std::size_t n_stations) {
    std::vector<std::string> stations;
    for (std::size_t i = 1; i <= n_stations; ++i) stations.push_back(station_name(i));
    return [stations](const StateView& s) {
        if (s.location(kDeadlineName) != std::optional<std::string_view>("Running")) return false;
        for (const auto& st : stations) {
            if (s.location(st) != std::optional<std::string_view>("Done")) return false;
        }
        return true;
    };
}

std::function<void(const StateCodec&, std::span<const std::int32_t>, std::span<const std::int32_t>)>
backoff_freeze_check() {
    return [](const StateCodec& codec, std::span<const std::int32_t> from, std::span<const std::int32_t>) {
        PackedStateView v(codec, from);
        auto chan = v.location(kChannelName);
        if (!chan || *chan == "Free") return;
        for (const auto& comp : codec.components) {
            if (comp.starts_with("Stn") && v.location(comp) == std::optional<std::string_view>("Backoff")) {
                throw ModelError("backoff of " + comp + " counts down while the channel is " + std::string(*chan));
            }
        }
    };
}

std::string model_summary(const Network& net) {
    std::ostringstream os;
    auto show = [](const ClockConstraint& c) {
        std::ostringstream o;
        if (c.trivial()) return std::string("true");
        o << c.lower << " <= x";
        for (const auto& t : c.offset) o << " + " << t.coeff << "*" << t.var;
        if (c.upper) o << " <= " << *c.upper;
        return o.str();
    };
    for (const auto& [k, v] : net.tags) os << "# " << k << " = " << v << "\n";
    for (const auto& c : net.components) {
        os << "component " << c.name << " (" << c.locations.size() << " locations, " << c.edges.size() << " edges)\n";
        for (LocationId l = 0; l < c.locations.size(); ++l) {
            const auto& loc = c.locations[l];
            os << "  " << (l == c.initial ? "*" : " ") << loc.name << (loc.urgent ? " [urgent]" : "")
               << "  inv: " << show(loc.invariant) << "\n";
            for (const auto& e : c.edges) {
                if (e.source != l) continue;
                os << "      --" << e.label << (c.urgent_events.contains(e.label) ? "!" : "") << "-- guard " << show(e.guard);
                for (const auto& g : e.var_guard) os << " & " << g.var << to_string(g.op) << g.value;
                if (e.outcomes.size() == 1) {
                    os << " -> " << c.location_name(e.outcomes[0].target) << (e.outcomes[0].reset ? " (reset)" : "");
                } else {
                    os << " -> " << e.outcomes.size() << " outcomes of " << e.outcomes[0].prob << " into "
                       << c.location_name(e.outcomes[0].target);
                }
                os << "\n";
            }
        }
    }
    return os.str();
}

} // namespace ptacheck
