#pragma once

#include "ptacheck/prob_system.hpp"
#include "ptacheck/pta.hpp"
#include "ptacheck/semantics.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ptacheck {

enum class Variant { Abs, Int, Red };

std::string to_string(Variant v);
/// Accepts "abs", "int", "red"; throws BadVariant.
Variant parse_variant(const std::string& s);

/// How a station picks its transmission time.
enum class TxMode {
    /// Fixed per-station length from tx_lens (the parameterised models).
    Fixed,
    /// Any length in [TX_MIN, TX_MAX], chosen anew on every transmission.
    NonDet,
};

/// 802.11 FHSS timing in microseconds unless scaled.
struct WlanParams {
    std::size_t n_stations = 2;
    std::int64_t DIFS = 128;
    std::int64_t VULN = 48;
    std::int64_t SIFS = 28;
    std::int64_t ACK = 183;
    std::int64_t ACK_TO = 300;
    std::int64_t C = 15;
    std::int64_t slot = 50;
    std::int64_t TX_MIN = 258;
    std::int64_t TX_MAX = 15750;
    std::int64_t bc_max = 6;
    /// 0 retries forever at the capped window; otherwise a station whose
    /// counter has reached this value gives up instead of drawing again.
    std::int64_t retry_limit = 0;
    std::vector<std::int64_t> tx_lens{258, 258};
    TxMode tx_mode = TxMode::Fixed;

    /// Checks ranges and tx_lens; throws BadParams.
    void validate() const;
    /// Transmission range used by the parameter-restriction section.
    static WlanParams par_section_profile();
};

struct ParamSpace {
    enum class Kind { Full, Reduced };
    Kind kind = Kind::Reduced;
    std::int64_t granularity = 48;
};

struct DeadlineSpec {
    enum class Phi { Identity, Compensated };
    std::int64_t deadline = 0;
    Phi phi = Phi::Identity;
};

std::string station_name(std::size_t id);
inline constexpr const char* kChannelName = "Chan";
inline constexpr const char* kDeadlineName = "Deadline";

/// Station automaton `Stn<id>`, 1-based id.
Pta make_station(Variant variant, const WlanParams& params, std::size_t id);
/// Shared medium, linear in the number of stations.
Pta make_channel(const WlanParams& params);
/// Stations 1..n followed by the channel; constants in microseconds.
Network make_lan(Variant variant, const WlanParams& params);

/// Transmission-length assignments; throws EmptySpace.
std::vector<std::vector<std::int64_t>> enumerate_params(const ParamSpace& space, const WlanParams& params);

/// Divides every constraint by `slot`, rounding lower bounds down and upper
/// bounds up; offset coefficients are rounded up. Probabilities computed on
/// the result are bounds, not exact values.
Network time_scale(const Network& net, std::int64_t slot);

/// Adds the observer `Deadline` with global clock y and the channel counters
/// `transmissions` and `successes`. Throws UnsupportedVariant for a
/// compensated phi on anything but the reduced variant.
Network decorate_deadline(const Network& net, const DeadlineSpec& spec);

/// Any station's counter bc<i> equals k.
StatePredicate backoff_target(std::int64_t k, std::size_t n_stations);
/// Every station in Done and the deadline observer still running.
StatePredicate deadline_target(std::size_t n_stations);

/// Fails an expansion whose time step lets a station count down its backoff
/// while the channel is occupied.
std::function<void(const StateCodec&, std::span<const std::int32_t>, std::span<const std::int32_t>)>
backoff_freeze_check();

/// Readable listing of locations, invariants and edges.
std::string model_summary(const Network& net);

} // namespace ptacheck
