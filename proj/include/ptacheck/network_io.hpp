#pragma once

#include "ptacheck/pta.hpp"

#include "json.hpp"

namespace ptacheck {

/// PTA network document: {components: [...], shared_variables: [...], tags: {...}}.
/// Constraints are {lower, upper|null[, offset: [{var, coeff}]]} and
/// probabilities are "num/den" strings.
nlohmann::json to_json(const Network& net);
Network network_from_json(const nlohmann::json& doc);

nlohmann::json to_json(const ClockConstraint& c);
ClockConstraint constraint_from_json(const nlohmann::json& j);

} // namespace ptacheck
