#include "ptacheck/prob_system.hpp"

#include "ptacheck/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace ptacheck {

std::string StateCodec::name(std::span<const std::int32_t> packed) const {
    const std::size_t n = components.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return components[a] < components[b]; });
    std::string out;
    out.reserve(16 * (n + variables.size()));
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t c = order[k];
        if (k) out += '|';
        out += components[c];
        out += ':';
        out += location_names[c].at(static_cast<std::size_t>(packed[c]));
        out += '/';
        out += std::to_string(packed[n + c]);
    }
    if (!variables.empty()) {
        std::vector<std::size_t> vorder(variables.size());
        std::iota(vorder.begin(), vorder.end(), 0);
        std::sort(vorder.begin(), vorder.end(), [&](std::size_t a, std::size_t b) { return variables[a] < variables[b]; });
        out += '|';
        for (std::size_t k = 0; k < vorder.size(); ++k) {
            if (k) out += ',';
            out += variables[vorder[k]];
            out += '=';
            out += std::to_string(packed[2 * n + vorder[k]]);
        }
    }
    return out;
}

std::optional<ActionId> ProbSystem::find_action(std::string_view name) const {
    for (std::size_t i = 0; i < actions_.size(); ++i) {
        if (actions_[i] == name) return static_cast<ActionId>(i);
    }
    return std::nullopt;
}

std::string ProbSystem::name(StateIndex s) const {
    if (codec_) return codec_->name(packed(s));
    if (!names_.empty()) return names_.at(s);
    return {};
}

std::span<const std::int32_t> ProbSystem::packed(StateIndex s) const {
    if (!codec_) return {};
    const std::size_t w = codec_->width();
    return {packed_.data() + static_cast<std::size_t>(s) * w, w};
}

std::vector<bool> ProbSystem::mark(const StatePredicate& pred) const {
    std::vector<bool> out(num_states(), false);
    if (codec_) {
        for (StateIndex s = 0; s < num_states(); ++s) out[s] = pred(PackedStateView(*codec_, packed(s)));
    } else if (!names_.empty()) {
        for (StateIndex s = 0; s < num_states(); ++s) out[s] = pred(NamedStateView(names_[s]));
    } else {
        throw Error("state predicate needs named states");
    }
    return out;
}

bool ProbSystem::structurally_equal(const ProbSystem& other) const {
    if (num_states() != other.num_states() || initial_ != other.initial_ || decorated_ != other.decorated_) return false;
    if (num_choices() != other.num_choices() || num_transitions() != other.num_transitions()) return false;
    if (targets_ != other.targets_) return false;
    for (StateIndex s = 0; s < num_states(); ++s) {
        auto a = choices(s);
        auto b = other.choices(s);
        if (a.size() != b.size()) return false;
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (action_name(a[i].action) != other.action_name(b[i].action)) return false;
            auto ta = transitions(a[i]);
            auto tb = other.transitions(b[i]);
            if (ta.size() != tb.size()) return false;
            for (std::size_t j = 0; j < ta.size(); ++j) {
                if (ta[j].target != tb[j].target || !(ta[j].exact == tb[j].exact)) return false;
            }
        }
        if (has_names() && other.has_names() && name(s) != other.name(s)) return false;
    }
    return true;
}

ActionId ProbSystemBuilder::action(std::string_view name) {
    if (auto id = ps_.find_action(name)) return *id;
    ps_.actions_.emplace_back(name);
    return static_cast<ActionId>(ps_.actions_.size() - 1);
}

void ProbSystemBuilder::begin_state() {
    close_choice();
    ps_.state_begin_.push_back(ps_.choices_.size());
}

void ProbSystemBuilder::begin_choice(ActionId a) {
    if (ps_.state_begin_.empty()) throw Error("begin_choice before begin_state");
    close_choice();
    ps_.choices_.push_back(Choice{a, ps_.transitions_.size(), ps_.transitions_.size()});
    choice_open_ = true;
    index_.clear();
}

void ProbSystemBuilder::add(StateIndex target, const Rational& p) {
    if (!choice_open_) throw Error("add outside of a choice");
    Choice& c = ps_.choices_.back();
    constexpr std::uint64_t kLinearScan = 32;
    std::optional<std::uint64_t> hit;
    if (c.end - c.begin <= kLinearScan) {
        for (std::uint64_t i = c.begin; i < c.end; ++i) {
            if (ps_.transitions_[i].target == target) {
                hit = i;
                break;
            }
        }
    } else {
        if (index_.empty()) {
            for (std::uint64_t i = c.begin; i < c.end; ++i) index_.emplace(ps_.transitions_[i].target, i);
        }
        if (auto it = index_.find(target); it != index_.end()) hit = it->second;
    }
    if (hit) {
        auto& t = ps_.transitions_[*hit];
        t.exact += p;
        t.prob = t.exact.to_double();
        return;
    }
    ps_.transitions_.push_back(Transition{target, p.to_double(), p});
    c.end = ps_.transitions_.size();
    if (!index_.empty()) index_.emplace(target, c.end - 1);
}

void ProbSystemBuilder::add_unique(StateIndex target, const Rational& p) {
    ps_.transitions_.push_back(Transition{target, p.to_double(), p});
    ps_.choices_.back().end = ps_.transitions_.size();
}

void ProbSystemBuilder::close_choice() {
    if (!choice_open_) return;
    choice_open_ = false;
    Choice& c = ps_.choices_.back();
    std::sort(ps_.transitions_.begin() + static_cast<std::ptrdiff_t>(c.begin),
              ps_.transitions_.begin() + static_cast<std::ptrdiff_t>(c.end),
              [](const Transition& a, const Transition& b) { return a.target < b.target; });
}

void ProbSystemBuilder::set_codec(std::shared_ptr<const StateCodec> codec, std::vector<std::int32_t> packed) {
    ps_.codec_ = std::move(codec);
    ps_.packed_ = std::move(packed);
}

void ProbSystemBuilder::set_names(std::vector<std::string> names) { ps_.names_ = std::move(names); }

ProbSystem ProbSystemBuilder::finish(StateIndex initial, std::size_t num_states) {
    close_choice();
    while (ps_.state_begin_.size() < num_states) ps_.state_begin_.push_back(ps_.choices_.size());
    if (ps_.state_begin_.size() != num_states) throw Error("more states opened than declared");
    ps_.state_begin_.push_back(ps_.choices_.size());
    if (num_states == 0 || initial >= num_states) throw Error("initial state out of range");
    ps_.initial_ = initial;
    for (const auto& c : ps_.choices_) {
        if (c.begin == c.end) throw Error("empty distribution");
        Rational sum(0);
        double fsum = 0.0;
        for (std::uint64_t i = c.begin; i < c.end; ++i) {
            const auto& t = ps_.transitions_[i];
            if (t.target >= num_states) throw Error("transition target out of range");
            if (t.exact <= Rational(0)) throw Error("non-positive probability");
            sum += t.exact;
            fsum += t.prob;
        }
        if (!sum.is_one()) throw Error("distribution sums to " + sum.str());
        if (std::abs(fsum - 1.0) > 1e-12) throw Error("floating-point distribution sum drifts from 1");
    }
    if (!ps_.names_.empty() && ps_.names_.size() != num_states) throw Error("name table size mismatch");
    if (ps_.codec_ && ps_.packed_.size() != num_states * ps_.codec_->width()) throw Error("packed state size mismatch");
    ProbSystem out = std::move(ps_);
    ps_ = ProbSystem{};
    return out;
}

namespace {

std::int64_t to_int(std::string_view s) {
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw Error("bad integer in state name: " + std::string(s));
    return v;
}

} // namespace

NamedStateView::NamedStateView(std::string_view name) {
    std::size_t pos = 0;
    while (pos <= name.size() && !name.empty()) {
        std::size_t bar = name.find('|', pos);
        std::string_view seg = name.substr(pos, bar == std::string_view::npos ? std::string_view::npos : bar - pos);
        if (auto colon = seg.find(':'); colon != std::string_view::npos) {
            auto slash = seg.rfind('/');
            if (slash == std::string_view::npos || slash < colon) throw Error("malformed state name segment");
            parts_.push_back(Part{std::string(seg.substr(0, colon)), std::string(seg.substr(colon + 1, slash - colon - 1)),
                                  to_int(seg.substr(slash + 1))});
        } else if (!seg.empty()) {
            std::size_t p = 0;
            while (p <= seg.size()) {
                std::size_t comma = seg.find(',', p);
                std::string_view kv = seg.substr(p, comma == std::string_view::npos ? std::string_view::npos : comma - p);
                auto eq = kv.find('=');
                if (eq == std::string_view::npos) throw Error("malformed variable in state name");
                vars_.emplace_back(std::string(kv.substr(0, eq)), to_int(kv.substr(eq + 1)));
                if (comma == std::string_view::npos) break;
                p = comma + 1;
            }
        }
        if (bar == std::string_view::npos) break;
        pos = bar + 1;
    }
}

std::optional<std::string_view> NamedStateView::location(std::string_view component) const {
    for (const auto& p : parts_) {
        if (p.component == component) return p.location;
    }
    return std::nullopt;
}

std::optional<std::int64_t> NamedStateView::clock(std::string_view component) const {
    for (const auto& p : parts_) {
        if (p.component == component) return p.clock;
    }
    return std::nullopt;
}

std::optional<std::int64_t> NamedStateView::var(std::string_view name) const {
    for (const auto& [k, v] : vars_) {
        if (k == name) return v;
    }
    return std::nullopt;
}

std::optional<std::string_view> PackedStateView::location(std::string_view component) const {
    for (std::size_t c = 0; c < codec_.components.size(); ++c) {
        if (codec_.components[c] == component) return codec_.location_names[c][static_cast<std::size_t>(packed_[c])];
    }
    return std::nullopt;
}

std::optional<std::int64_t> PackedStateView::clock(std::string_view component) const {
    for (std::size_t c = 0; c < codec_.components.size(); ++c) {
        if (codec_.components[c] == component) return packed_[codec_.components.size() + c];
    }
    return std::nullopt;
}

std::optional<std::int64_t> PackedStateView::var(std::string_view name) const {
    for (std::size_t v = 0; v < codec_.variables.size(); ++v) {
        if (codec_.variables[v] == name) return packed_[2 * codec_.components.size() + v];
    }
    return std::nullopt;
}

} // namespace ptacheck
