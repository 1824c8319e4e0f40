#pragma once

#include "ptacheck/pta.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ptacheck {

/// One component edge taking part in a joint edge.
struct EdgeRef {
    std::uint32_t component = 0;
    std::uint32_t edge = 0;
    bool operator==(const EdgeRef&) const = default;
};

/// Outcome of a joint edge: one chosen outcome index per participating edge.
struct JointOutcome {
    Rational prob{1};
    std::vector<std::uint32_t> choice;
};

/// Edge of the product automaton built from one edge per participant.
struct JointEdge {
    std::string label;
    bool urgent = false;
    std::vector<EdgeRef> parts;
};

/// Logical product of a network. Nothing is materialised; edges of a
/// composed location are enumerated on demand.
class ProductView {
public:
    /// Validates the network, normalises urgent locations, and fixes the
    /// synchronisation set of every label.
    explicit ProductView(Network net);

    const Network& network() const { return net_; }
    std::size_t num_components() const { return net_.components.size(); }

    /// Components that synchronise on `label` (declared it as an event).
    const std::vector<std::uint32_t>& participants(const std::string& label) const;
    bool is_urgent(const std::string& label) const;

    /// All joint edges leaving the composed location, guards ignored.
    /// Shared labels produce one joint edge per combination of participant
    /// edges; non-shared labels interleave.
    std::vector<JointEdge> joint_edges(std::span<const LocationId> locations) const;

    /// Product distribution of a joint edge; probabilities multiply exactly.
    std::vector<JointOutcome> joint_distribution(const JointEdge& edge) const;

    const std::vector<std::string>& labels() const { return labels_; }

private:
    Network net_;
    std::vector<std::string> labels_;
    std::vector<std::vector<std::uint32_t>> participants_;
    std::vector<bool> urgent_;
    std::size_t label_index(const std::string& label) const;
};

/// Builds the product view; throws SharedEventArityMismatch when an edge
/// label is not part of its component's declared synchronisation set.
ProductView compose(const Network& net);

} // namespace ptacheck
