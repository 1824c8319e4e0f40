#include "ptacheck/experiment.hpp"

#include "ptacheck/errors.hpp"
#include "ptacheck/mdp_io.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <charconv>

namespace ptacheck {

namespace {

using nlohmann::json;

const char* const kParamNames[] = {"DIFS", "VULN", "SIFS", "ACK", "ACK_TO", "C", "slot", "TX_MIN", "TX_MAX", "bc_max",
                                   "retry_limit"};

std::int64_t& param_ref(WlanParams& p, const std::string& name) {
    if (name == "DIFS") return p.DIFS;
    if (name == "VULN") return p.VULN;
    if (name == "SIFS") return p.SIFS;
    if (name == "ACK") return p.ACK;
    if (name == "ACK_TO") return p.ACK_TO;
    if (name == "C") return p.C;
    if (name == "slot") return p.slot;
    if (name == "TX_MIN") return p.TX_MIN;
    if (name == "TX_MAX") return p.TX_MAX;
    if (name == "bc_max") return p.bc_max;
    if (name == "retry_limit") return p.retry_limit;
    throw BadParams("unknown parameter '" + name + "'");
}

} // namespace

void TopologyConfig::validate() const {
    params.validate();
    if (scale_slot < 1) throw BadParams("scale_slot must be positive");
    if (param_space && params.tx_mode == TxMode::NonDet) {
        throw BadParams("a parameter space needs fixed transmission lengths");
    }
    if (deadline && deadline->phi == DeadlineSpec::Phi::Compensated && variant != Variant::Red) {
        throw UnsupportedVariant("compensated phi is only defined for the reduced variant");
    }
}

TopologyConfig config_from_json(const json& doc) {
    TopologyConfig cfg;
    try {
        if (!doc.is_object()) throw BadParams("config must be a JSON object");
        if (doc.contains("params")) {
            const auto& p = doc.at("params");
            if (p.value("profile", std::string()) == "par-section") cfg.params = WlanParams::par_section_profile();
            for (auto it = p.begin(); it != p.end(); ++it) {
                if (it.key() == "profile") continue;
                if (it.key() == "tx_mode") {
                    const auto mode = it.value().get<std::string>();
                    if (mode == "fixed") cfg.params.tx_mode = TxMode::Fixed;
                    else if (mode == "nondet") cfg.params.tx_mode = TxMode::NonDet;
                    else throw BadParams("tx_mode must be 'fixed' or 'nondet'");
                    continue;
                }
                param_ref(cfg.params, it.key()) = it.value().get<std::int64_t>();
            }
        }
        if (doc.contains("variant")) cfg.variant = parse_variant(doc.at("variant").get<std::string>());
        if (doc.contains("n_stations")) {
            const auto n = doc.at("n_stations").get<std::int64_t>();
            if (n < 1) throw BadParams("n_stations must be at least 1");
            cfg.params.n_stations = static_cast<std::size_t>(n);
            cfg.params.tx_lens.assign(cfg.params.n_stations, cfg.params.TX_MIN);
        }
        if (doc.contains("tx_lens")) cfg.params.tx_lens = doc.at("tx_lens").get<std::vector<std::int64_t>>();
        if (doc.contains("param_space") && !doc.at("param_space").is_null()) {
            const auto& s = doc.at("param_space");
            ParamSpace space;
            const auto kind = s.value("kind", std::string("reduced"));
            if (kind == "full") space.kind = ParamSpace::Kind::Full;
            else if (kind == "reduced") space.kind = ParamSpace::Kind::Reduced;
            else throw BadParams("param_space.kind must be 'full' or 'reduced'");
            space.granularity = s.value("granularity", space.granularity);
            cfg.param_space = space;
        }
        if (doc.contains("scale_slot")) cfg.scale_slot = doc.at("scale_slot").get<std::int64_t>();
        if (doc.contains("deadline") && !doc.at("deadline").is_null()) {
            const auto& d = doc.at("deadline");
            DeadlineSpec spec;
            spec.deadline = d.at("value").get<std::int64_t>();
            const auto phi = d.value("phi", std::string(cfg.variant == Variant::Red ? "compensated" : "identity"));
            if (phi == "identity") spec.phi = DeadlineSpec::Phi::Identity;
            else if (phi == "compensated") spec.phi = DeadlineSpec::Phi::Compensated;
            else throw BadParams("deadline.phi must be 'identity' or 'compensated'");
            cfg.deadline = spec;
        }
    } catch (const json::exception& e) {
        throw BadParams(std::string("malformed config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

json to_json(const TopologyConfig& cfg) {
    json params = json::object();
    WlanParams p = cfg.params;
    for (const char* name : kParamNames) params[name] = param_ref(p, name);
    params["tx_mode"] = p.tx_mode == TxMode::Fixed ? "fixed" : "nondet";
    json doc = {{"variant", to_string(cfg.variant)},
                {"n_stations", p.n_stations},
                {"params", params},
                {"tx_lens", p.tx_lens},
                {"scale_slot", cfg.scale_slot}};
    doc["param_space"] = nullptr;
    if (cfg.param_space) {
        doc["param_space"] = {{"kind", cfg.param_space->kind == ParamSpace::Kind::Full ? "full" : "reduced"},
                              {"granularity", cfg.param_space->granularity}};
    }
    doc["deadline"] = nullptr;
    if (cfg.deadline) {
        doc["deadline"] = {{"value", cfg.deadline->deadline},
                           {"phi", cfg.deadline->phi == DeadlineSpec::Phi::Compensated ? "compensated" : "identity"}};
    }
    return doc;
}

std::string config_digest(const TopologyConfig& cfg) { return sha256_hex(to_json(cfg).dump()); }

Network build_network(const TopologyConfig& cfg, const std::vector<std::int64_t>& tx_lens) {
    WlanParams p = cfg.params;
    p.tx_lens = tx_lens;
    Network net = make_lan(cfg.variant, p);
    if (cfg.deadline) net = decorate_deadline(net, *cfg.deadline);
    if (cfg.scale_slot > 1) net = time_scale(net, cfg.scale_slot);
    return net;
}

std::vector<std::vector<std::int64_t>> assignments(const TopologyConfig& cfg) {
    if (cfg.param_space) return enumerate_params(*cfg.param_space, cfg.params);
    return {cfg.params.tx_lens};
}

QuerySpec parse_query(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw BadParams("query must look like backoff:<k> or deadline:<d>");
    QuerySpec q;
    const std::string kind = text.substr(0, colon);
    if (kind == "backoff") q.kind = QuerySpec::Kind::Backoff;
    else if (kind == "deadline") q.kind = QuerySpec::Kind::Deadline;
    else throw BadParams("unknown query kind '" + kind + "'");
    const char* first = text.data() + colon + 1;
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, q.value);
    if (ec != std::errc() || ptr != last || q.value < 0) throw BadParams("bad query value in '" + text + "'");
    return q;
}

std::string to_string(const QuerySpec& q) {
    return std::string(q.kind == QuerySpec::Kind::Backoff ? "backoff:" : "deadline:") + std::to_string(q.value);
}

TopologyConfig apply_query(TopologyConfig cfg, const QuerySpec& q) {
    if (q.kind == QuerySpec::Kind::Deadline) {
        DeadlineSpec spec;
        spec.deadline = q.value;
        spec.phi = cfg.deadline ? cfg.deadline->phi
                                : (cfg.variant == Variant::Red ? DeadlineSpec::Phi::Compensated : DeadlineSpec::Phi::Identity);
        cfg.deadline = spec;
    } else if (q.value > cfg.params.bc_max + 1) {
        throw BadParams("backoff query beyond bc_max + 1");
    }
    return cfg;
}

StatePredicate query_predicate(const QuerySpec& q, std::size_t n_stations) {
    if (q.kind == QuerySpec::Kind::Backoff) return backoff_target(q.value, n_stations);
    return deadline_target(n_stations);
}

Direction default_direction(const QuerySpec& q) {
    return q.kind == QuerySpec::Kind::Deadline ? Direction::Min : Direction::Max;
}

ProbSystem expand_model(const TopologyConfig& cfg, const std::vector<std::int64_t>& tx_lens, const QuerySpec& q,
                        std::size_t state_cap, const std::string& cache_dir) {
    std::filesystem::path cached;
    if (!cache_dir.empty()) {
        TopologyConfig key = cfg;
        key.params.tx_lens = tx_lens;
        key.param_space.reset();
        const auto digest = sha256_hex(to_json(key).dump() + "|" + to_string(q) + "|" + kToolkitVersion);
        cached = std::filesystem::path(cache_dir) / (digest + ".mdp");
        if (std::filesystem::exists(cached)) {
            try {
                return read_ps_file(cached);
            } catch (const Error&) {
                // Corrupt entries are rebuilt below.
            }
        }
    }
    const auto pred = query_predicate(q, cfg.params.n_stations);
    ExpansionOptions eo;
    eo.state_cap = state_cap;
    eo.absorbing = pred;
    ProbSystem ps = digital_semantics(build_network(cfg, tx_lens), eo);
    if (!cached.empty()) {
        std::filesystem::create_directories(cached.parent_path());
        const auto tmp = cached.string() + ".tmp";
        write_ps_file(ps, tmp);
        std::filesystem::rename(tmp, cached);
    }
    return ps;
}

QueryOutcome run_query(const TopologyConfig& cfg0, const QuerySpec& q, ReachQuery options, std::size_t state_cap,
                       const std::string& cache_dir) {
    const TopologyConfig cfg = apply_query(cfg0, q);
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const auto pred = query_predicate(q, cfg.params.n_stations);

    QueryOutcome out;
    bool first = true;
    for (const auto& tx : assignments(cfg)) {
        ProbSystem ps = expand_model(cfg, tx, q, state_cap, cache_dir);
        ReachQuery rq = options;
        rq.targets = ps.mark(pred);
        ReachResult r = reach(ps, rq);
        ++out.models;
        if (ps.num_states() > out.peak.states) out.peak = {ps.num_states(), ps.num_transitions(), ps.num_choices()};
        const bool better = options.direction == Direction::Max ? r.probability > out.result.probability
                                                                : r.probability < out.result.probability;
        if (first || better) {
            out.result = std::move(r);
            out.tx_lens = tx;
            first = false;
        }
    }
    // The verdict applies to the extremum, not to the last assignment.
    if (options.lambda) {
        const Comparator cmp = options.comparator.value_or(options.direction == Direction::Max ? Comparator::Lt : Comparator::Gt);
        out.result.verdict = compare(out.result.probability, cmp, *options.lambda);
    }
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

Comparison compare_systems(const ProbSystem& ps1, const std::vector<bool>& f1, const ProbSystem& ps2,
                           const std::vector<bool>& f2, const ReachQuery& base, double tolerance) {
    Comparison c;
    c.report = check_theorem1(ps1, f1, ps2, f2);
    auto solve = [&](const ProbSystem& ps, const std::vector<bool>& f, Direction d) {
        ReachQuery q = base;
        q.targets = f;
        q.direction = d;
        q.lambda.reset();
        return reach(ps, q).probability;
    };
    c.max1 = solve(ps1, f1, Direction::Max);
    c.min1 = solve(ps1, f1, Direction::Min);
    c.max2 = solve(ps2, f2, Direction::Max);
    c.min2 = solve(ps2, f2, Direction::Min);
    const bool numeric = std::abs(c.max1 - c.max2) <= tolerance && std::abs(c.min1 - c.min2) <= tolerance;
    if (!numeric) c.verdict = "different";
    else c.verdict = c.report.clean() ? "equivalent-certified" : "equivalent-numeric-only";
    return c;
}

nlohmann::json to_json(const Comparison& c) {
    return {{"verdict", c.verdict},
            {"max", {c.max1, c.max2}},
            {"min", {c.min1, c.min2}},
            {"conditions", to_json(c.report)}};
}

} // namespace ptacheck
