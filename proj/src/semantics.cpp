#include "ptacheck/semantics.hpp"

#include "ptacheck/errors.hpp"
#include "ptacheck/product.hpp"

#include <algorithm>
#include <limits>
#include <memory>
#include <unordered_map>

namespace ptacheck {

namespace {

constexpr std::int64_t kNoUpper = std::numeric_limits<std::int64_t>::max();

struct CTerm {
    std::uint32_t var;
    std::int64_t coeff;
};

struct CConstraint {
    std::int64_t lower = 0;
    std::int64_t upper = kNoUpper;
    std::vector<CTerm> offset;
    bool trivial = true;

    bool holds(std::int64_t clock, const std::int32_t* vars) const {
        if (trivial) return true;
        std::int64_t v = clock;
        for (const auto& t : offset) v += t.coeff * vars[t.var];
        return v >= lower && v <= upper;
    }
};

struct CVarCond {
    std::uint32_t var;
    CmpOp op;
    std::int64_t value;
};

struct CUpdate {
    std::uint32_t var;
    UpdateOp op;
    std::int64_t value;
    bool saturate;
};

struct COutcome {
    Rational prob;
    bool reset;
    LocationId target;
    std::vector<CUpdate> updates;
};

struct CEdge {
    std::uint32_t label;
    CConstraint guard;
    std::vector<CVarCond> var_guard;
    std::vector<COutcome> outcomes;
};

struct CComponent {
    std::vector<CConstraint> invariant;
    std::vector<bool> active;
    std::vector<std::vector<CEdge>> edges_by_location;
    std::int64_t clock_cap = 0;
};

struct CVariable {
    std::int64_t min, max;
};

/// Open-addressing set of packed states stored in a flat arena.
class StateTable {
public:
    explicit StateTable(std::size_t width) : width_(width), slots_(1u << 16, kEmpty) {}

    std::size_t size() const { return count_; }
    const std::int32_t* at(std::size_t i) const { return arena_.data() + i * width_; }
    std::vector<std::int32_t> take_arena() { return std::move(arena_); }

    /// Returns (index, inserted).
    std::pair<StateIndex, bool> insert(const std::int32_t* key) {
        if ((count_ + 1) * 2 > slots_.size()) grow();
        std::size_t mask = slots_.size() - 1;
        std::size_t pos = hash(key) & mask;
        while (true) {
            std::uint32_t s = slots_[pos];
            if (s == kEmpty) {
                slots_[pos] = static_cast<std::uint32_t>(count_);
                arena_.insert(arena_.end(), key, key + width_);
                return {static_cast<StateIndex>(count_++), true};
            }
            if (std::equal(key, key + width_, at(s))) return {s, false};
            pos = (pos + 1) & mask;
        }
    }

private:
    static constexpr std::uint32_t kEmpty = std::numeric_limits<std::uint32_t>::max();

    std::size_t hash(const std::int32_t* key) const {
        std::uint64_t h = 0x9e3779b97f4a7c15ULL;
        for (std::size_t i = 0; i < width_; ++i) {
            h ^= static_cast<std::uint32_t>(key[i]);
            h *= 0xbf58476d1ce4e5b9ULL;
            h ^= h >> 31;
        }
        return static_cast<std::size_t>(h);
    }

    void grow() {
        std::vector<std::uint32_t> next(slots_.size() * 2, kEmpty);
        std::size_t mask = next.size() - 1;
        for (std::size_t i = 0; i < count_; ++i) {
            std::size_t pos = hash(at(i)) & mask;
            while (next[pos] != kEmpty) pos = (pos + 1) & mask;
            next[pos] = static_cast<std::uint32_t>(i);
        }
        slots_ = std::move(next);
    }

    std::size_t width_;
    std::vector<std::int32_t> arena_;
    std::vector<std::uint32_t> slots_;
    std::size_t count_ = 0;
};

bool constraint_trivial(const ClockConstraint& c) { return c.trivial(); }

class Expander {
public:
    Expander(const Network& input, const ExpansionOptions& options) : view_(input), options_(options) {
        const Network& net = view_.network();
        ncomp_ = net.components.size();
        auto codec = std::make_shared<StateCodec>();
        for (const auto& c : net.components) {
            codec->components.push_back(c.name);
            std::vector<std::string> locs;
            for (const auto& l : c.locations) locs.push_back(l.name);
            codec->location_names.push_back(std::move(locs));
            for (const auto& v : c.variables) {
                if (var_index_.contains(v.name)) continue;
                var_index_.emplace(v.name, static_cast<std::uint32_t>(vars_.size()));
                vars_.push_back(CVariable{v.min, v.max});
                init_vars_.push_back(v.init);
                codec->variables.push_back(v.name);
            }
        }
        for (const auto& v : vars_) {
            if (v.min < std::numeric_limits<std::int32_t>::min() || v.max > std::numeric_limits<std::int32_t>::max()) {
                throw ModelError("variable range exceeds 32 bits");
            }
        }
        codec_ = codec;
        width_ = codec_->width();

        const auto& labels = view_.labels();
        for (std::uint32_t l = 0; l < labels.size(); ++l) {
            participants_.push_back(view_.participants(labels[l]));
            urgent_.push_back(view_.is_urgent(labels[l]));
        }
        for (const auto& c : net.components) comps_.push_back(compile(c));
    }

    ProbSystem run() {
        const Network& net = view_.network();
        StateTable table(width_);
        std::vector<std::int32_t> init(width_, 0);
        for (std::size_t c = 0; c < ncomp_; ++c) init[c] = static_cast<std::int32_t>(net.components[c].initial);
        for (std::size_t v = 0; v < vars_.size(); ++v) init[2 * ncomp_ + v] = static_cast<std::int32_t>(init_vars_[v]);
        normalize(init.data());
        if (!invariants_hold(init.data())) throw ModelError("initial state violates an invariant");
        table.insert(init.data());

        ProbSystemBuilder builder;
        const ActionId tick = builder.action(kTickAction);
        std::vector<ActionId> label_action;
        for (const auto& l : view_.labels()) label_action.push_back(builder.action(l));

        std::vector<std::int32_t> cur(width_);
        std::vector<std::vector<std::uint32_t>> enabled(ncomp_);
        std::vector<std::int32_t> succ_buf;
        std::vector<Rational> succ_prob;
        std::vector<std::pair<StateIndex, Rational>> dist;
        ExpansionStats stats;

        for (std::size_t s = 0; s < table.size(); ++s) {
            builder.begin_state();
            std::copy(table.at(s), table.at(s) + width_, cur.begin());
            const std::int32_t* vars = cur.data() + 2 * ncomp_;
            if (options_.absorbing && options_.absorbing(PackedStateView(*codec_, cur))) continue;

            // Enabled component edges (guards only).
            for (std::size_t c = 0; c < ncomp_; ++c) {
                enabled[c].clear();
                const auto& edges = comps_[c].edges_by_location[static_cast<std::size_t>(cur[c])];
                for (std::uint32_t e = 0; e < edges.size(); ++e) {
                    if (guard_holds(edges[e], cur[ncomp_ + c], vars)) enabled[c].push_back(e);
                }
            }

            // Time step.
            bool urgent_enabled = false;
            for (std::size_t c = 0; c < ncomp_ && !urgent_enabled; ++c) {
                const auto& edges = comps_[c].edges_by_location[static_cast<std::size_t>(cur[c])];
                for (auto e : enabled[c]) {
                    std::uint32_t label = edges[e].label;
                    if (urgent_[label] && participants_[label].front() == c && joint_possible(label, cur, enabled)) {
                        urgent_enabled = true;
                        break;
                    }
                }
            }
            if (!urgent_enabled) {
                std::vector<std::int32_t> next(cur);
                bool ok = true;
                for (std::size_t c = 0; c < ncomp_ && ok; ++c) {
                    const auto loc = static_cast<std::size_t>(cur[c]);
                    if (!comps_[c].active[loc]) continue;
                    std::int64_t clk = static_cast<std::int64_t>(cur[ncomp_ + c]) + 1;
                    if (!comps_[c].invariant[loc].holds(clk, vars)) ok = false;
                    next[ncomp_ + c] = static_cast<std::int32_t>(std::min(clk, comps_[c].clock_cap));
                }
                if (ok) {
                    auto [idx, fresh] = table.insert(next.data());
                    if (fresh) check_cap(table.size());
                    if (options_.on_time_step) {
                        options_.on_time_step(*codec_, std::span<const std::int32_t>(cur),
                                              std::span<const std::int32_t>(next));
                    }
                    builder.begin_choice(tick);
                    builder.add_unique(idx, Rational(1));
                }
            }

            // Discrete steps, one per joint edge, led by the first participant.
            for (std::uint32_t c = 0; c < ncomp_; ++c) {
                const auto& edges = comps_[c].edges_by_location[static_cast<std::size_t>(cur[c])];
                for (auto e : enabled[c]) {
                    std::uint32_t label = edges[e].label;
                    const auto& parts = participants_[label];
                    if (parts.front() != c) continue;
                    std::vector<std::vector<std::uint32_t>> options(parts.size());
                    options[0] = {e};
                    bool blocked = false;
                    for (std::size_t k = 1; k < parts.size() && !blocked; ++k) {
                        const auto& oedges = comps_[parts[k]].edges_by_location[static_cast<std::size_t>(cur[parts[k]])];
                        for (auto oe : enabled[parts[k]]) {
                            if (oedges[oe].label == label) options[k].push_back(oe);
                        }
                        blocked = options[k].empty();
                    }
                    if (blocked) continue;
                    std::vector<std::size_t> pick(parts.size(), 0);
                    while (true) {
                        if (expand_joint(cur, parts, options, pick, succ_buf, succ_prob)) {
                            dist.clear();
                            for (std::size_t k = 0; k < succ_prob.size(); ++k) {
                                auto [idx, fresh] = table.insert(succ_buf.data() + k * width_);
                                if (fresh) check_cap(table.size());
                                dist.emplace_back(idx, succ_prob[k]);
                            }
                            std::sort(dist.begin(), dist.end(),
                                      [](const auto& a, const auto& b) { return a.first < b.first; });
                            builder.begin_choice(label_action[label]);
                            for (std::size_t k = 0; k < dist.size();) {
                                Rational p = dist[k].second;
                                std::size_t j = k + 1;
                                while (j < dist.size() && dist[j].first == dist[k].first) p += dist[j++].second;
                                builder.add_unique(dist[k].first, p);
                                k = j;
                            }
                        } else {
                            ++stats.blocked_edges;
                        }
                        std::size_t k = 1;
                        while (k < pick.size() && ++pick[k] == options[k].size()) pick[k++] = 0;
                        if (k >= pick.size()) break;
                    }
                }
            }
        }

        const std::size_t n = table.size();
        builder.set_codec(codec_, table.take_arena());
        ProbSystem ps = builder.finish(0, n);
        // Deadline observers make elapsed time observable.
        ps.set_decorated(view_.network().tags.contains("deadline"));
        if (options_.stats) {
            stats.states = ps.num_states();
            stats.choices = ps.num_choices();
            stats.transitions = ps.num_transitions();
            *options_.stats = stats;
        }
        return ps;
    }

private:
    CConstraint compile(const ClockConstraint& c) const {
        CConstraint out;
        out.lower = c.lower;
        out.upper = c.upper ? *c.upper : kNoUpper;
        for (const auto& t : c.offset) out.offset.push_back(CTerm{var_index_.at(t.var), t.coeff});
        out.trivial = constraint_trivial(c);
        return out;
    }

    CComponent compile(const Pta& pta) const {
        CComponent out;
        out.active = clock_activity(pta);
        out.edges_by_location.resize(pta.locations.size());
        std::int64_t max_const = 0;
        for (const auto& l : pta.locations) {
            out.invariant.push_back(compile(l.invariant));
            max_const = std::max(max_const, l.invariant.max_constant());
        }
        for (const auto& e : pta.edges) {
            CEdge ce;
            auto it = std::find(view_.labels().begin(), view_.labels().end(), e.label);
            ce.label = static_cast<std::uint32_t>(it - view_.labels().begin());
            ce.guard = compile(e.guard);
            max_const = std::max(max_const, e.guard.max_constant());
            for (const auto& g : e.var_guard) ce.var_guard.push_back(CVarCond{var_index_.at(g.var), g.op, g.value});
            for (const auto& o : e.outcomes) {
                COutcome co{o.prob, o.reset, o.target, {}};
                for (const auto& u : o.updates) co.updates.push_back(CUpdate{var_index_.at(u.var), u.op, u.value, u.saturate});
                ce.outcomes.push_back(std::move(co));
            }
            out.edges_by_location[e.source].push_back(std::move(ce));
        }
        out.clock_cap = max_const + 1;
        if (out.clock_cap > std::numeric_limits<std::int32_t>::max()) throw ModelError("clock constant too large");
        return out;
    }

    static bool guard_holds(const CEdge& e, std::int32_t clock, const std::int32_t* vars) {
        for (const auto& g : e.var_guard) {
            if (!holds(g.op, vars[g.var], g.value)) return false;
        }
        return e.guard.holds(clock, vars);
    }

    bool joint_possible(std::uint32_t label, const std::vector<std::int32_t>& cur,
                        const std::vector<std::vector<std::uint32_t>>& enabled) const {
        for (auto p : participants_[label]) {
            const auto& edges = comps_[p].edges_by_location[static_cast<std::size_t>(cur[p])];
            bool any = false;
            for (auto e : enabled[p]) {
                if (edges[e].label == label) {
                    any = true;
                    break;
                }
            }
            if (!any) return false;
        }
        return true;
    }

    void normalize(std::int32_t* st) const {
        for (std::size_t c = 0; c < ncomp_; ++c) {
            const auto loc = static_cast<std::size_t>(st[c]);
            std::int32_t& clk = st[ncomp_ + c];
            if (!comps_[c].active[loc]) {
                clk = 0;
            } else if (clk > comps_[c].clock_cap) {
                clk = static_cast<std::int32_t>(comps_[c].clock_cap);
            }
        }
    }

    bool invariants_hold(const std::int32_t* st) const {
        const std::int32_t* vars = st + 2 * ncomp_;
        for (std::size_t c = 0; c < ncomp_; ++c) {
            if (!comps_[c].invariant[static_cast<std::size_t>(st[c])].holds(st[ncomp_ + c], vars)) return false;
        }
        return true;
    }

    /// Fills successor states for the joint edge `pick`; false when any
    /// outcome lands in a state violating an invariant.
    bool expand_joint(const std::vector<std::int32_t>& cur, const std::vector<std::uint32_t>& parts,
                      const std::vector<std::vector<std::uint32_t>>& options, const std::vector<std::size_t>& pick,
                      std::vector<std::int32_t>& succ_buf, std::vector<Rational>& succ_prob) const {
        succ_buf.clear();
        succ_prob.clear();
        std::vector<const CEdge*> edges(parts.size());
        for (std::size_t k = 0; k < parts.size(); ++k) {
            edges[k] = &comps_[parts[k]].edges_by_location[static_cast<std::size_t>(cur[parts[k]])][options[k][pick[k]]];
        }
        const std::int32_t* old_vars = cur.data() + 2 * ncomp_;
        std::vector<std::size_t> out_idx(parts.size(), 0);
        std::vector<std::int32_t> next(width_);
        while (true) {
            next = cur;
            Rational p(1);
            for (std::size_t k = 0; k < parts.size(); ++k) {
                const COutcome& o = edges[k]->outcomes[out_idx[k]];
                const std::uint32_t c = parts[k];
                p *= o.prob;
                next[c] = static_cast<std::int32_t>(o.target);
                if (o.reset) next[ncomp_ + c] = 0;
                for (const auto& u : o.updates) {
                    std::int64_t v = u.op == UpdateOp::Set ? u.value : old_vars[u.var] + u.value;
                    const auto& range = vars_[u.var];
                    if (v < range.min || v > range.max) {
                        if (!u.saturate) {
                            throw ModelError("update drives variable " + codec_->variables[u.var] + " out of range");
                        }
                        v = std::clamp(v, range.min, range.max);
                    }
                    next[2 * ncomp_ + u.var] = static_cast<std::int32_t>(v);
                }
            }
            normalize(next.data());
            if (!invariants_hold(next.data())) return false;
            succ_buf.insert(succ_buf.end(), next.begin(), next.end());
            succ_prob.push_back(p);
            std::size_t k = 0;
            while (k < out_idx.size() && ++out_idx[k] == edges[k]->outcomes.size()) out_idx[k++] = 0;
            if (k == out_idx.size()) break;
        }
        return true;
    }

    void check_cap(std::size_t n) const {
        if (n > options_.state_cap) throw StateSpaceLimitExceeded(options_.state_cap);
    }

    ProductView view_;
    const ExpansionOptions& options_;
    std::size_t ncomp_ = 0;
    std::size_t width_ = 0;
    std::shared_ptr<const StateCodec> codec_;
    std::unordered_map<std::string, std::uint32_t> var_index_;
    std::vector<CVariable> vars_;
    std::vector<std::int64_t> init_vars_;
    std::vector<std::vector<std::uint32_t>> participants_;
    std::vector<bool> urgent_;
    std::vector<CComponent> comps_;
};

} // namespace

std::vector<bool> clock_activity(const Pta& pta) {
    std::vector<bool> active(pta.locations.size(), false);
    for (std::size_t l = 0; l < pta.locations.size(); ++l) {
        if (!pta.locations[l].invariant.trivial() || pta.locations[l].urgent) active[l] = true;
    }
    for (const auto& e : pta.edges) {
        if (!e.guard.trivial()) active[e.source] = true;
    }
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& e : pta.edges) {
            if (active[e.source]) continue;
            for (const auto& o : e.outcomes) {
                if (!o.reset && active[o.target]) {
                    active[e.source] = true;
                    changed = true;
                    break;
                }
            }
        }
    }
    return active;
}

ProbSystem digital_semantics(const Network& net, const ExpansionOptions& options) {
    Expander expander(net, options);
    return expander.run();
}

} // namespace ptacheck
