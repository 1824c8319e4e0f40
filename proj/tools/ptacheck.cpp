// ptacheck: build, check, compare, compress and sweep 802.11 MAC models.
//
// Exit codes: 0 ok, 1 internal error, 2 config error, 3 state cap hit,
// 4 value iteration did not converge, 5 compare found a difference,
// 6 decorated model given to compress without --force.

#include "ptacheck/errors.hpp"
#include "ptacheck/experiment.hpp"
#include "ptacheck/mdp_io.hpp"
#include "ptacheck/network_io.hpp"
#include "ptacheck/reach.hpp"
#include "ptacheck/reduction.hpp"
#include "ptacheck/semantics.hpp"
#include "ptacheck/wlan.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace ptacheck;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kInternal = 1, kConfig = 2, kCap = 3, kNoConverge = 4, kDifferent = 5, kDecorated = 6 };

struct ConfigFlags {
    std::string config_file;
    std::string variant;
    int stations = 0;
    std::string tx_lens;
    std::string param_space;
    std::int64_t scale = 0;
    bool nondet = false;

    void attach(CLI::App* app) {
        app->add_option("--config", config_file, "topology JSON file");
        app->add_option("--variant", variant, "abs | int | red");
        app->add_option("--stations", stations, "number of stations");
        app->add_option("--tx-lens", tx_lens, "comma-separated transmission times in microseconds");
        app->add_option("--param-space", param_space, "full | reduced, optionally :granularity");
        app->add_option("--scale", scale, "time unit in microseconds (1 = unscaled)");
        app->add_flag("--nondet-tx", nondet, "transmission length chosen nondeterministically in [TX_MIN, TX_MAX]");
    }

    TopologyConfig resolve() const {
        json doc = json::object();
        if (!config_file.empty()) {
            std::ifstream in(config_file);
            if (!in) throw BadParams("cannot open config " + config_file);
            try {
                doc = json::parse(in);
            } catch (const json::exception& e) {
                throw BadParams(std::string("config is not valid JSON: ") + e.what());
            }
        }
        if (!variant.empty()) doc["variant"] = variant;
        if (stations > 0) {
            doc["n_stations"] = stations;
            if (!doc.contains("tx_lens") || doc["tx_lens"].size() != static_cast<std::size_t>(stations)) doc.erase("tx_lens");
        }
        if (!tx_lens.empty()) {
            std::vector<std::int64_t> v;
            std::stringstream ss(tx_lens);
            std::string item;
            while (std::getline(ss, item, ',')) {
                try {
                    v.push_back(std::stoll(item));
                } catch (const std::exception&) {
                    throw BadParams("bad --tx-lens entry '" + item + "'");
                }
            }
            doc["tx_lens"] = v;
        }
        if (!param_space.empty()) {
            const auto colon = param_space.find(':');
            json s = {{"kind", param_space.substr(0, colon)}};
            if (colon != std::string::npos) s["granularity"] = std::stoll(param_space.substr(colon + 1));
            doc["param_space"] = s;
        }
        if (scale > 0) doc["scale_slot"] = scale;
        if (nondet) doc["params"]["tx_mode"] = "nondet";
        return config_from_json(doc);
    }
};

struct EngineFlags {
    std::string direction;
    double epsilon = 1e-6;
    bool relative = false;
    std::optional<double> lambda;
    std::string comparator;
    int threads = 0;
    bool serial = false;
    std::size_t max_iterations = 1'000'000;

    void attach(CLI::App* app) {
        app->add_option("--direction", direction, "max | min (default depends on the query)");
        app->add_option("--epsilon", epsilon, "convergence threshold");
        app->add_flag("--relative", relative, "stop on relative rather than absolute change");
        app->add_option("--lambda", lambda, "probability bound for a verdict");
        app->add_option("--compare", comparator, "lt | le | gt | ge against --lambda");
        app->add_option("--threads", threads, "OpenMP threads (0 = runtime default)");
        app->add_flag("--serial", serial, "use the serial reference kernel");
        app->add_option("--max-iterations", max_iterations, "value iteration cap");
    }

    ReachQuery query(std::optional<Direction> fallback) const {
        ReachQuery q;
        if (direction == "max") q.direction = Direction::Max;
        else if (direction == "min") q.direction = Direction::Min;
        else if (!direction.empty()) throw BadParams("--direction must be max or min");
        else if (fallback) q.direction = *fallback;
        q.epsilon = epsilon;
        q.relative = relative;
        q.lambda = lambda;
        if (!comparator.empty()) {
            static const std::map<std::string, Comparator> names{
                {"lt", Comparator::Lt}, {"le", Comparator::Le}, {"gt", Comparator::Gt}, {"ge", Comparator::Ge}};
            auto it = names.find(comparator);
            if (it == names.end()) throw BadParams("--compare must be lt, le, gt or ge");
            q.comparator = it->second;
        }
        q.threads = threads;
        q.kernel = serial ? Kernel::Serial : Kernel::Parallel;
        q.max_iterations = max_iterations;
        return q;
    }
};

std::string cache_dir() {
    const char* dir = std::getenv("PTACHECK_CACHE_DIR");
    return dir ? dir : "";
}

std::vector<bool> model_targets(const ProbSystem& ps, const std::string& query, std::size_t& n_stations_hint) {
    if (!query.empty()) {
        const QuerySpec q = parse_query(query);
        if (!ps.has_names()) throw BadParams("a query needs a model with state names");
        if (n_stations_hint == 0) {
            // Count station components from the first name.
            const std::string first = ps.name(ps.initial());
            for (std::size_t pos = first.find("Stn"); pos != std::string::npos; pos = first.find("Stn", pos + 1)) ++n_stations_hint;
        }
        return ps.mark(query_predicate(q, n_stations_hint));
    }
    std::vector<bool> f(ps.num_states(), false);
    if (!ps.stored_targets()) throw BadParams("model has no stored targets; pass --query");
    for (auto t : *ps.stored_targets()) f[t] = true;
    return f;
}

ProbSystem with_targets(const ProbSystem& ps, const std::vector<bool>& f) {
    ProbSystem out = ps;
    std::vector<StateIndex> t;
    for (std::size_t s = 0; s < f.size(); ++s) {
        if (f[s]) t.push_back(static_cast<StateIndex>(s));
    }
    out.set_stored_targets(std::move(t));
    return out;
}

struct Manifest {
    std::string command;
    std::string digest;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    std::size_t peak_states = 0;

    json finish(json results) const {
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return {{"command", command},
                {"config_digest", digest},
                {"version", kToolkitVersion},
                {"wall_time_s", secs},
                {"peak_states", peak_states},
                {"results", std::move(results)}};
    }
};

void log(const std::string& msg) { std::cerr << "ptacheck: " << msg << "\n"; }

// ---------------------------------------------------------------- build

int cmd_build(const ConfigFlags& cf, const std::string& out_dir, const std::string& query, std::size_t cap, bool do_compress,
              Manifest& m) {
    TopologyConfig cfg = cf.resolve();
    std::optional<QuerySpec> q;
    if (!query.empty()) {
        q = parse_query(query);
        cfg = apply_query(cfg, *q);
    }
    if (cfg.param_space) log("param space ignored by build; using tx_lens");
    m.digest = config_digest(cfg);

    const Network net = build_network(cfg, cfg.params.tx_lens);
    ExpansionOptions eo;
    eo.state_cap = cap;
    StatePredicate pred;
    if (q) {
        pred = query_predicate(*q, cfg.params.n_stations);
        eo.absorbing = pred;
    }
    ProbSystem ps = digital_semantics(net, eo);
    if (q) ps = with_targets(ps, ps.mark(pred));
    m.peak_states = ps.num_states();
    json stats = {{"states", ps.num_states()}, {"transitions", ps.num_transitions()}, {"choices", ps.num_choices()}};

    if (do_compress) {
        const std::vector<bool> f = q ? ps.mark(pred) : std::vector<bool>(ps.num_states(), false);
        auto r = compress(ps, f);
        ps = with_targets(r.ps, r.targets);
        stats["compressed"] = {{"states", ps.num_states()}, {"transitions", ps.num_transitions()}, {"choices", ps.num_choices()}};
    }

    fs::create_directories(out_dir);
    {
        std::ofstream n(fs::path(out_dir) / "network.json");
        n << to_json(net).dump(2) << "\n";
    }
    {
        std::ofstream s(fs::path(out_dir) / "summary.txt");
        s << model_summary(net);
    }
    const std::string text = write_ps(ps);
    {
        std::ofstream f(fs::path(out_dir) / "model.mdp", std::ios::binary);
        f << text;
    }
    stats["model_sha256"] = sha256_hex(text);
    stats["scaled_by"] = cfg.scale_slot;
    json result = m.finish(stats);
    {
        std::ofstream f(fs::path(out_dir) / "manifest.json");
        f << result.dump(2) << "\n";
    }
    std::cout << result.dump(2) << "\n";
    return kOk;
}

// ---------------------------------------------------------------- check

json outcome_json(const QueryOutcome& o, const QuerySpec& q, const ReachQuery& rq) {
    json j = to_json(o.result);
    j["query"] = to_string(q);
    j["direction"] = rq.direction == Direction::Max ? "max" : "min";
    j["tx_lens"] = o.tx_lens;
    j["models"] = o.models;
    j["states"] = o.peak.states;
    j["transitions"] = o.peak.transitions;
    j["choices"] = o.peak.choices;
    j["seconds"] = o.seconds;
    return j;
}

int cmd_check(const ConfigFlags& cf, const EngineFlags& ef, const std::string& model, const std::string& query,
              std::size_t cap, Manifest& m) {
    if (!model.empty()) {
        ProbSystem ps = read_ps_file(model);
        m.digest = sha256_hex(write_ps(ps));
        m.peak_states = ps.num_states();
        std::size_t n = cf.stations > 0 ? static_cast<std::size_t>(cf.stations) : 0;
        ReachQuery rq = ef.query(query.empty() ? std::nullopt : std::optional(default_direction(parse_query(query))));
        rq.targets = model_targets(ps, query, n);
        ReachResult r = reach(ps, rq);
        json j = to_json(r);
        j["direction"] = rq.direction == Direction::Max ? "max" : "min";
        std::cout << m.finish(j).dump(2) << "\n";
        return kOk;
    }
    if (query.empty()) throw BadParams("check needs --query or --model");
    const TopologyConfig cfg = cf.resolve();
    const QuerySpec q = parse_query(query);
    m.digest = config_digest(apply_query(cfg, q));
    ReachQuery rq = ef.query(default_direction(q));
    QueryOutcome o = run_query(cfg, q, rq, cap, cache_dir());
    m.peak_states = o.peak.states;
    std::cout << m.finish(outcome_json(o, q, rq)).dump(2) << "\n";
    return kOk;
}

// ---------------------------------------------------------------- compare

int cmd_compare(const EngineFlags& ef, const std::string& a, const std::string& b, const std::string& query, double tol,
                Manifest& m) {
    const ProbSystem p1 = read_ps_file(a);
    const ProbSystem p2 = read_ps_file(b);
    m.digest = sha256_hex(write_ps(p1) + write_ps(p2));
    m.peak_states = std::max(p1.num_states(), p2.num_states());
    std::size_t n1 = 0, n2 = 0;
    const auto f1 = model_targets(p1, query, n1);
    const auto f2 = model_targets(p2, query, n2);
    const Comparison c = compare_systems(p1, f1, p2, f2, ef.query(std::nullopt), tol);
    log("verdict " + c.verdict);
    std::cout << m.finish(to_json(c)).dump(2) << "\n";
    return c.verdict == "different" ? kDifferent : kOk;
}

// ---------------------------------------------------------------- compress

int cmd_compress(const std::string& model, const std::string& out, const std::string& query, bool force, Manifest& m) {
    const ProbSystem ps = read_ps_file(model);
    m.digest = sha256_hex(write_ps(ps));
    m.peak_states = ps.num_states();
    std::size_t n = 0;
    const auto f = model_targets(ps, query, n);
    CompressOptions opt;
    opt.force = force;
    const CompressResult r = compress(ps, f, opt);
    const ProbSystem reduced = with_targets(r.ps, r.targets);
    const std::string text = write_ps(reduced);
    if (!out.empty()) {
        std::ofstream o(out, std::ios::binary);
        o << text;
    }
    const double ratio = reduced.num_states() ? double(ps.num_states()) / double(reduced.num_states()) : 1.0;
    json j = {{"states_before", ps.num_states()},
              {"states_after", reduced.num_states()},
              {"ratio", ratio},
              {"rewired", r.rewired},
              {"model_sha256", sha256_hex(text)}};
    std::cout << m.finish(j).dump(2) << "\n";
    return kOk;
}

// ---------------------------------------------------------------- sweep

std::vector<std::int64_t> parse_range(const std::string& text) {
    // a..b, or a:b:step
    std::vector<std::int64_t> out;
    std::int64_t a = 0, b = 0, step = 1;
    char sep1 = 0, sep2 = 0;
    std::stringstream ss(text);
    if (text.find("..") != std::string::npos) {
        ss >> a >> sep1 >> sep2 >> b;
        if (ss.fail() || sep1 != '.' || sep2 != '.') throw BadParams("bad range '" + text + "'");
    } else {
        ss >> a >> sep1 >> b >> sep2 >> step;
        if (ss.fail() || sep1 != ':' || sep2 != ':' || step < 1) throw BadParams("bad range '" + text + "'");
    }
    for (std::int64_t v = a; v <= b; v += step) out.push_back(v);
    if (out.empty()) throw BadParams("empty range '" + text + "'");
    return out;
}

int cmd_sweep(const ConfigFlags& cf, const EngineFlags& ef, const std::string& ks, const std::string& deadlines,
              const std::string& out, std::size_t cap, Manifest& m) {
    if (ks.empty() == deadlines.empty()) throw BadParams("sweep needs exactly one of --k or --deadlines");
    const TopologyConfig cfg = cf.resolve();
    m.digest = config_digest(cfg);
    std::vector<QuerySpec> queries;
    for (auto v : parse_range(ks.empty() ? deadlines : ks)) {
        queries.push_back({ks.empty() ? QuerySpec::Kind::Deadline : QuerySpec::Kind::Backoff, v});
    }

    std::ostringstream csv;
    csv << "query,direction,probability,iterations,converged,states,transitions,choices,seconds,tx_lens\n";
    json rows = json::array();
    for (const auto& q : queries) {
        ReachQuery rq = ef.query(default_direction(q));
        QueryOutcome o = run_query(cfg, q, rq, cap, cache_dir());
        m.peak_states = std::max(m.peak_states, o.peak.states);
        std::string tx;
        for (std::size_t i = 0; i < o.tx_lens.size(); ++i) tx += (i ? ";" : "") + std::to_string(o.tx_lens[i]);
        char prob[64];
        std::snprintf(prob, sizeof prob, "%.10g", o.result.probability);
        csv << to_string(q) << ',' << (rq.direction == Direction::Max ? "max" : "min") << ',' << prob << ','
            << o.result.iterations << ',' << (o.result.converged ? 1 : 0) << ',' << o.peak.states << ','
            << o.peak.transitions << ',' << o.peak.choices << ',' << o.seconds << ',' << tx << "\n";
        rows.push_back(outcome_json(o, q, rq));
        log(to_string(q) + " -> " + prob);
    }
    const json manifest = m.finish(rows);
    if (!out.empty()) {
        std::ofstream f(out);
        f << "# " << m.finish(json::array()).dump() << "\n" << csv.str();
        std::cout << manifest.dump(2) << "\n";
    } else {
        std::cout << "# " << m.finish(json::array()).dump() << "\n" << csv.str();
    }
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Probabilistic timed automata toolkit for 802.11 MAC models"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolkitVersion);

    std::size_t cap = 50'000'000;
    std::string query, model, out;
    bool force = false, do_compress = false;
    double tol = 2e-6;
    std::string ks, deadlines, model_b;

    ConfigFlags cf;
    EngineFlags ef;

    auto* build = app.add_subcommand("build", "generate the network and expand it to an MDP file");
    cf.attach(build);
    build->add_option("--out", out, "output directory")->required();
    build->add_option("--query", query, "backoff:<k> | deadline:<d>; targets become absorbing");
    build->add_option("--state-cap", cap, "abort above this many states");
    build->add_flag("--compress", do_compress, "compress deterministic chains before writing");

    auto* check = app.add_subcommand("check", "maximum/minimum reachability");
    cf.attach(check);
    ef.attach(check);
    check->add_option("--model", model, "MDP file instead of a topology");
    check->add_option("--query", query, "backoff:<k> | deadline:<d>");
    check->add_option("--state-cap", cap, "abort above this many states");

    auto* cmp = app.add_subcommand("compare", "dominator conditions and numeric agreement of two models");
    ef.attach(cmp);
    cmp->add_option("model_a", model, "first MDP file")->required();
    cmp->add_option("model_b", model_b, "second MDP file")->required();
    cmp->add_option("--query", query, "target predicate (default: stored targets)");
    cmp->add_option("--tolerance", tol, "numeric agreement tolerance");

    auto* comp = app.add_subcommand("compress", "deterministic path compression");
    comp->add_option("model", model, "MDP file")->required();
    comp->add_option("--out", out, "output MDP file");
    comp->add_option("--query", query, "target predicate (default: stored targets)");
    comp->add_flag("--force", force, "accept deadline-decorated input");

    auto* sweep = app.add_subcommand("sweep", "one row per backoff value or deadline");
    cf.attach(sweep);
    ef.attach(sweep);
    sweep->add_option("--k", ks, "backoff range a..b");
    sweep->add_option("--deadlines", deadlines, "deadline range a:b:step");
    sweep->add_option("--out", out, "CSV file (default stdout)");
    sweep->add_option("--state-cap", cap, "abort above this many states");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfig;
    }

    Manifest m;
    for (int i = 0; i < argc; ++i) m.command += (i ? " " : "") + std::string(argv[i]);

    try {
        if (*build) return cmd_build(cf, out, query, cap, do_compress, m);
        if (*check) return cmd_check(cf, ef, model, query, cap, m);
        if (*cmp) return cmd_compare(ef, model, model_b, query, tol, m);
        if (*comp) return cmd_compress(model, out, query, force, m);
        if (*sweep) return cmd_sweep(cf, ef, ks, deadlines, out, cap, m);
    } catch (const StateSpaceLimitExceeded& e) {
        log(e.what());
        return kCap;
    } catch (const NotConverged& e) {
        log(e.what());
        return kNoConverge;
    } catch (const DecoratedInput& e) {
        log(e.what());
        return kDecorated;
    } catch (const BadParams& e) {
        log(e.what());
        return kConfig;
    } catch (const BadVariant& e) {
        log(e.what());
        return kConfig;
    } catch (const UnsupportedVariant& e) {
        log(e.what());
        return kConfig;
    } catch (const EmptySpace& e) {
        log(e.what());
        return kConfig;
    } catch (const ParseError& e) {
        log(e.what());
        return kConfig;
    } catch (const ChecksumMismatch& e) {
        log(e.what());
        return kConfig;
    } catch (const std::exception& e) {
        log(std::string("error: ") + e.what());
        return kInternal;
    }
    return kInternal;
}
