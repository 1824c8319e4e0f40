#pragma once

#include "ptacheck/rational.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ptacheck {

using StateIndex = std::uint32_t;
using ActionId = std::uint32_t;

inline constexpr std::string_view kTickAction = "tick";

struct Transition {
    StateIndex target = 0;
    double prob = 0.0;
    Rational exact;
};

/// One (action, distribution) pair of a state; indexes into the flat
/// transition array.
struct Choice {
    ActionId action = 0;
    std::uint64_t begin = 0;
    std::uint64_t end = 0;
    std::size_t size() const { return static_cast<std::size_t>(end - begin); }
};

/// Layout of a packed semantic state: one location index and one clock
/// value per component, then all variable values.
struct StateCodec {
    std::vector<std::string> components;
    std::vector<std::vector<std::string>> location_names;
    std::vector<std::string> variables;

    std::size_t width() const { return 2 * components.size() + variables.size(); }
    /// Canonical name: components sorted by name, then variables sorted by
    /// name. Independent of component order, so it names states across systems.
    std::string name(std::span<const std::int32_t> packed) const;
};

/// Read-only view of one state's semantic content, either from a packed
/// vector or parsed back from a canonical name.
class StateView {
public:
    virtual ~StateView() = default;
    virtual std::optional<std::string_view> location(std::string_view component) const = 0;
    virtual std::optional<std::int64_t> clock(std::string_view component) const = 0;
    virtual std::optional<std::int64_t> var(std::string_view name) const = 0;
};

using StatePredicate = std::function<bool(const StateView&)>;

/// Explicit probabilistic system (MDP) in compressed sparse layout.
/// Immutable after construction.
class ProbSystem {
public:
    ProbSystem() = default;

    std::size_t num_states() const { return state_begin_.empty() ? 0 : state_begin_.size() - 1; }
    std::size_t num_choices() const { return choices_.size(); }
    std::size_t num_transitions() const { return transitions_.size(); }
    StateIndex initial() const { return initial_; }

    std::span<const Choice> choices(StateIndex s) const {
        return {choices_.data() + state_begin_[s], choices_.data() + state_begin_[s + 1]};
    }
    std::span<const Transition> transitions(const Choice& c) const {
        return {transitions_.data() + c.begin, transitions_.data() + c.end};
    }
    std::uint64_t first_choice(StateIndex s) const { return state_begin_[s]; }
    const std::vector<Choice>& all_choices() const { return choices_; }
    const std::vector<Transition>& all_transitions() const { return transitions_; }

    const std::vector<std::string>& actions() const { return actions_; }
    const std::string& action_name(ActionId a) const { return actions_.at(a); }
    std::optional<ActionId> find_action(std::string_view name) const;

    bool has_names() const { return codec_ != nullptr || !names_.empty(); }
    std::string name(StateIndex s) const;
    const std::shared_ptr<const StateCodec>& codec() const { return codec_; }
    std::span<const std::int32_t> packed(StateIndex s) const;

    /// Evaluates `pred` on every state; requires names or a codec.
    std::vector<bool> mark(const StatePredicate& pred) const;

    bool decorated() const { return decorated_; }
    void set_decorated(bool d) { decorated_ = d; }

    /// Optional target set carried by interchange files.
    const std::optional<std::vector<StateIndex>>& stored_targets() const { return targets_; }
    void set_stored_targets(std::optional<std::vector<StateIndex>> t) { targets_ = std::move(t); }

    /// Same steps and names; used by round-trip and idempotence checks.
    bool structurally_equal(const ProbSystem& other) const;

private:
    friend class ProbSystemBuilder;

    std::vector<std::uint64_t> state_begin_;
    std::vector<Choice> choices_;
    std::vector<Transition> transitions_;
    std::vector<std::string> actions_;
    StateIndex initial_ = 0;
    bool decorated_ = false;

    std::shared_ptr<const StateCodec> codec_;
    std::vector<std::int32_t> packed_;
    std::vector<std::string> names_;
    std::optional<std::vector<StateIndex>> targets_;
};

/// Incremental construction: states must be opened in index order.
class ProbSystemBuilder {
public:
    ActionId action(std::string_view name);

    void begin_state();
    void begin_choice(ActionId action);
    /// Probabilities for repeated targets within one choice are summed.
    void add(StateIndex target, const Rational& p);
    /// Caller guarantees `target` does not yet occur in the open choice.
    void add_unique(StateIndex target, const Rational& p);

    void set_codec(std::shared_ptr<const StateCodec> codec, std::vector<std::int32_t> packed);
    void set_names(std::vector<std::string> names);

    std::size_t states_opened() const { return ps_.state_begin_.size(); }

    /// Validates every distribution (exact sum 1, float sum within 1e-12,
    /// strictly positive entries, targets in range) and seals the system.
    ProbSystem finish(StateIndex initial, std::size_t num_states);

private:
    void close_choice();

    ProbSystem ps_;
    bool choice_open_ = false;
    std::unordered_map<StateIndex, std::uint64_t> index_;
};

/// State view over a canonical name produced by StateCodec::name.
class NamedStateView final : public StateView {
public:
    explicit NamedStateView(std::string_view name);
    std::optional<std::string_view> location(std::string_view component) const override;
    std::optional<std::int64_t> clock(std::string_view component) const override;
    std::optional<std::int64_t> var(std::string_view name) const override;

private:
    struct Part {
        std::string component;
        std::string location;
        std::int64_t clock = 0;
    };
    std::vector<Part> parts_;
    std::vector<std::pair<std::string, std::int64_t>> vars_;
};

/// State view over a packed vector.
class PackedStateView final : public StateView {
public:
    PackedStateView(const StateCodec& codec, std::span<const std::int32_t> packed) : codec_(codec), packed_(packed) {}
    std::optional<std::string_view> location(std::string_view component) const override;
    std::optional<std::int64_t> clock(std::string_view component) const override;
    std::optional<std::int64_t> var(std::string_view name) const override;

private:
    const StateCodec& codec_;
    std::span<const std::int32_t> packed_;
};

} // namespace ptacheck
