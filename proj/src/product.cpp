#include "ptacheck/product.hpp"

#include "ptacheck/errors.hpp"

#include <algorithm>

namespace ptacheck {

ProductView::ProductView(Network net) : net_(std::move(net)) {
    for (std::uint32_t c = 0; c < net_.components.size(); ++c) {
        const Pta& pta = net_.components[c];
        for (const auto& e : pta.edges) {
            if (!pta.events.contains(e.label)) {
                throw SharedEventArityMismatch("label '" + e.label + "' used by " + pta.name +
                                               " without being declared in its event set");
            }
        }
    }
    auto report = validate(net_);
    if (!report.ok()) throw ModelError("invalid network: " + report.violations.front());
    for (auto& c : net_.components) c = normalize_urgent(std::move(c));

    for (std::uint32_t c = 0; c < net_.components.size(); ++c) {
        for (const auto& ev : net_.components[c].events) {
            auto it = std::find(labels_.begin(), labels_.end(), ev);
            std::size_t idx = static_cast<std::size_t>(it - labels_.begin());
            if (it == labels_.end()) {
                labels_.push_back(ev);
                participants_.emplace_back();
                urgent_.push_back(false);
            }
            participants_[idx].push_back(c);
            if (net_.components[c].urgent_events.contains(ev)) urgent_[idx] = true;
        }
    }
}

std::size_t ProductView::label_index(const std::string& label) const {
    auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end()) throw ModelError("unknown label '" + label + "'");
    return static_cast<std::size_t>(it - labels_.begin());
}

const std::vector<std::uint32_t>& ProductView::participants(const std::string& label) const {
    return participants_[label_index(label)];
}

bool ProductView::is_urgent(const std::string& label) const { return urgent_[label_index(label)]; }

std::vector<JointEdge> ProductView::joint_edges(std::span<const LocationId> locations) const {
    std::vector<JointEdge> out;
    const std::size_t n = net_.components.size();
    if (locations.size() != n) throw ModelError("composed location has wrong arity");
    for (std::uint32_t c = 0; c < n; ++c) {
        const Pta& pta = net_.components[c];
        for (std::uint32_t e = 0; e < pta.edges.size(); ++e) {
            const ProbEdge& edge = pta.edges[e];
            if (edge.source != locations[c]) continue;
            std::size_t li = label_index(edge.label);
            const auto& parts = participants_[li];
            if (parts.front() != c) continue;
            // Cartesian product over the other participants' edges with this label.
            std::vector<std::vector<std::uint32_t>> options;
            bool blocked = false;
            for (std::size_t k = 1; k < parts.size(); ++k) {
                const Pta& other = net_.components[parts[k]];
                std::vector<std::uint32_t> mine;
                for (std::uint32_t oe = 0; oe < other.edges.size(); ++oe) {
                    if (other.edges[oe].source == locations[parts[k]] && other.edges[oe].label == edge.label) {
                        mine.push_back(oe);
                    }
                }
                if (mine.empty()) {
                    blocked = true;
                    break;
                }
                options.push_back(std::move(mine));
            }
            if (blocked) continue;
            std::vector<std::size_t> idx(options.size(), 0);
            while (true) {
                JointEdge j{edge.label, urgent_[li], {EdgeRef{c, e}}};
                for (std::size_t k = 0; k < options.size(); ++k) {
                    j.parts.push_back(EdgeRef{parts[k + 1], options[k][idx[k]]});
                }
                out.push_back(std::move(j));
                std::size_t k = 0;
                while (k < idx.size() && ++idx[k] == options[k].size()) idx[k++] = 0;
                if (k == idx.size()) break;
            }
        }
    }
    return out;
}

std::vector<JointOutcome> ProductView::joint_distribution(const JointEdge& edge) const {
    std::vector<JointOutcome> out{JointOutcome{Rational(1), {}}};
    for (const auto& part : edge.parts) {
        const auto& outcomes = net_.components[part.component].edges[part.edge].outcomes;
        std::vector<JointOutcome> next;
        next.reserve(out.size() * outcomes.size());
        for (const auto& prefix : out) {
            for (std::uint32_t o = 0; o < outcomes.size(); ++o) {
                JointOutcome j{prefix.prob * outcomes[o].prob, prefix.choice};
                j.choice.push_back(o);
                next.push_back(std::move(j));
            }
        }
        out = std::move(next);
    }
    return out;
}

ProductView compose(const Network& net) { return ProductView(net); }

} // namespace ptacheck
