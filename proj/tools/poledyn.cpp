// poledyn -- command-line driver for the rational map family
//   f(x) = x - sum_i alpha_i / (x - beta_i)
//
// Subcommands expose orbits with shadow verification, first-hitting times,
// interval pullbacks with the measure-preservation check (Glasser's master
// theorem), hitting-set density and scaling studies, disjointness sweeps,
// and doubling-map conjugacy diagnostics for the single-pole map.
//
// Exit codes: 0 success, 2 validation error, 3 precision exhaustion,
// 4 budget exceeded, 1 internal error.

#include <CLI11.hpp>

#include <poledyn/poledyn.hpp>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace poledyn;
namespace fs = std::filesystem;

namespace {

long default_bits() {
    if (const char* env = std::getenv("POLEDYN_DEFAULT_BITS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end && *end == '\0' && v >= 64) return v;
        std::cerr << "poledyn: ignoring invalid POLEDYN_DEFAULT_BITS='" << env << "'\n";
    }
    return 256;
}

struct CommonOpts {
    std::string map_path;
    std::string out_dir = "poledyn-out";
    long bits = default_bits();
    std::string mode = "bigfloat";
    long shadow_margin = 128;
    double shadow_tol = 1e-12;
    bool no_shadow = false;
    long rational_bit_budget = 1L << 20;

    PrecisionPolicy policy() const {
        PrecisionPolicy p;
        if (mode == "bigfloat") {
            p.mode = NumberMode::big_float;
        } else if (mode == "rational") {
            p.mode = NumberMode::exact_rational;
        } else {
            throw InvariantViolationError("--mode must be 'bigfloat' or 'rational'");
        }
        p.bits = bits;
        p.shadow_margin_bits = shadow_margin;
        p.shadow_agreement_tol = shadow_tol;
        p.shadow = !no_shadow;
        p.rational_bit_budget = rational_bit_budget;
        p.validate();
        return p;
    }

    nlohmann::json echo() const {
        return {{"map", map_path},
                {"out", out_dir},
                {"bits", bits},
                {"mode", mode},
                {"shadow_margin_bits", shadow_margin},
                {"shadow_agreement_tol", shadow_tol},
                {"shadow", !no_shadow},
                {"rational_bit_budget", rational_bit_budget}};
    }
};

// JSON config files: a flat object whose keys are long option names,
// e.g. {"y": [20, 50], "samples": 2000, "seed": 42, "bits": 256}.
// Keys already given as explicit flags are skipped, so flags win.
std::vector<std::string> expand_config(std::vector<std::string> args) {
    std::string path;
    for (size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[i + 1];
            args.erase(args.begin() + i, args.begin() + i + 2);
            break;
        }
        if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
            args.erase(args.begin() + i);
            break;
        }
    }
    if (path.empty()) return args;

    std::ifstream in(path);
    if (!in) throw InvariantViolationError("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InvariantViolationError(std::string("config file: ") + e.what());
    }
    if (!j.is_object())
        throw InvariantViolationError("config file must be a JSON object of option values");
    for (auto& [key, value] : j.items()) {
        bool given = false;
        for (const std::string& a : args)
            given = given || a == "--" + key || a.rfind("--" + key + "=", 0) == 0;
        if (given) continue;
        auto push = [&](const nlohmann::json& v) {
            args.push_back("--" + key);
            args.push_back(v.is_string() ? v.get<std::string>() : v.dump());
        };
        if (value.is_array())
            for (const auto& el : value) push(el);
        else if (value.is_boolean()) {
            if (value.get<bool>()) args.push_back("--" + key);
        } else
            push(value);
    }
    return args;
}

void add_common(CLI::App* cmd, CommonOpts& o) {
    static std::string config_doc; // handled by expand_config before parsing
    cmd->add_option("--config", config_doc,
                    "JSON config file: an object keyed by long option names; "
                    "explicit flags take precedence");
    cmd->add_option("--map", o.map_path, "Map file: {\"alphas\": [..], \"betas\": [..]} "
                                         "with decimal-string entries")
        ->required();
    cmd->add_option("-o,--out", o.out_dir, "Output directory for artifacts + manifest.json");
    cmd->add_option("--bits", o.bits,
                    "Working precision in bits (default: POLEDYN_DEFAULT_BITS or 256)");
    cmd->add_option("--mode", o.mode, "Arithmetic: 'bigfloat' (default) or 'rational' (exact)");
    cmd->add_option("--shadow-margin", o.shadow_margin, "Extra bits for the shadow orbit");
    cmd->add_option("--shadow-tol", o.shadow_tol,
                    "Absolute base/shadow divergence that ends the verified prefix");
    cmd->add_flag("--no-shadow", o.no_shadow, "Opt out of shadow verification");
    cmd->add_option("--rational-bit-budget", o.rational_bit_budget,
                    "Bit cap for exact-rational orbit growth");
}

class ArtifactWriter {
public:
    ArtifactWriter(const CommonOpts& opts, std::string subcommand, nlohmann::json extra_config)
        : out_(opts.out_dir),
          subcommand_(std::move(subcommand)),
          t0_(std::chrono::steady_clock::now()) {
        config_ = opts.echo();
        for (auto& [key, value] : extra_config.items()) config_[key] = value;
        fs::create_directories(out_);
    }

    void write(const std::string& name, const std::string& content) {
        std::ofstream f(out_ / name, std::ios::binary);
        if (!f) throw Error("cannot write " + (out_ / name).string());
        f << content;
        names_.push_back(name);
    }

    void finish(const nlohmann::json& summary = nlohmann::json::object()) {
        double wall_ms = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - t0_)
                             .count();
        nlohmann::json manifest{{"tool", "poledyn"},
                                {"subcommand", subcommand_},
                                {"config", config_},
                                {"outputs", names_},
                                {"wall_ms", wall_ms}};
        if (!summary.empty()) manifest["summary"] = summary;
        std::ofstream f(out_ / "manifest.json", std::ios::binary);
        f << manifest.dump(2) << '\n';
        std::cout << subcommand_ << ": wrote " << names_.size() << " artifact(s) + manifest to "
                  << out_.string() << "\n";
    }

private:
    fs::path out_;
    std::string subcommand_;
    nlohmann::json config_;
    std::vector<std::string> names_;
    std::chrono::steady_clock::time_point t0_;
};

IntervalSet<BigFloat> parse_interval_list(const std::string& text, long bits) {
    std::vector<Interval<BigFloat>> raw;
    size_t pos = 0;
    while (pos < text.size()) {
        size_t comma = text.find(',', pos);
        std::string piece =
            text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        size_t colon = piece.find(':');
        if (colon == std::string::npos)
            throw InvariantViolationError("--intervals expects 'a:b,c:d,...' decimal pairs");
        raw.push_back({BigFloat::parse(piece.substr(0, colon), bits),
                       BigFloat::parse(piece.substr(colon + 1), bits)});
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (raw.empty()) throw InvariantViolationError("--intervals is empty");
    return IntervalSet<BigFloat>::normalized(std::move(raw));
}

int run_orbit(const CommonOpts& opts, const std::string& x0_str, long n) {
    PrecisionPolicy policy = opts.policy();
    MapSpec<Rational> map = load_map_file(opts.map_path);
    Rational x0 = Rational::parse(x0_str);
    if (map.is_pole(x0))
        throw InvariantViolationError("seed " + x0_str + " is a pole of the map");
    ArtifactWriter out(opts, "orbit", {{"x0", x0_str}, {"n", n}});
    nlohmann::json summary;
    std::ostringstream csv;
    if (policy.mode == NumberMode::exact_rational) {
        Orbit<Rational> orbit = iterate<Rational>(map, x0, n, policy);
        write_orbit_csv(csv, orbit);
        summary = orbit_summary_json(orbit);
    } else {
        Orbit<BigFloat> orbit = iterate<BigFloat>(map, x0, n, policy);
        write_orbit_csv(csv, orbit);
        summary = orbit_summary_json(orbit);
    }
    out.write("orbit.csv", csv.str());
    out.write("orbit.json", summary.dump(2) + "\n");
    out.finish(summary);
    return 0;
}

int run_hit(const CommonOpts& opts, const std::string& x0_str, const std::string& eps_str,
            long n_max) {
    PrecisionPolicy policy = opts.policy();
    MapSpec<Rational> map = load_map_file(opts.map_path);
    Rational x0 = Rational::parse(x0_str);
    if (map.is_pole(x0))
        throw InvariantViolationError("seed " + x0_str + " is a pole of the map");
    ArtifactWriter out(opts, "hit", {{"x0", x0_str}, {"eps", eps_str}, {"n_max", n_max}});
    nlohmann::json j;
    bool unverified = false;
    if (policy.mode == NumberMode::exact_rational) {
        HitRecord<Rational> rec =
            first_hit<Rational>(map, x0, Rational::parse(eps_str), n_max, policy);
        j = hit_record_json(rec);
        unverified = rec.outcome == HitOutcome::unverified;
    } else {
        HitRecord<BigFloat> rec =
            first_hit<BigFloat>(map, x0, Rational::parse(eps_str), n_max, policy);
        j = hit_record_json(rec);
        unverified = rec.outcome == HitOutcome::unverified;
    }
    std::string csv = "x0,eps,n_max,outcome,n_hit,pole_index,distance\n";
    auto cell = [&](const char* key) {
        return j[key].is_null() ? std::string() : (j[key].is_string() ? j[key].get<std::string>()
                                                                      : j[key].dump());
    };
    csv += cell("x0") + "," + cell("eps") + "," + cell("n_max") + "," + cell("outcome") + "," +
           cell("n_hit") + "," + cell("pole_index") + "," + cell("distance") + "\n";
    out.write("hit.csv", csv);
    out.write("hit.json", j.dump(2) + "\n");
    out.finish(j);
    if (unverified) {
        std::cerr << "hit: shadow verification failed before resolution; retry with more bits\n";
        return 3;
    }
    return 0;
}

int run_pullback(const CommonOpts& opts, const std::string& eps_str, int k, long max_intervals) {
    PrecisionPolicy policy = opts.policy();
    MapSpec<Rational> map = load_map_file(opts.map_path);
    MapSpec<BigFloat> spec = materialize<BigFloat>(map, policy.bits);
    ArtifactWriter out(opts, "pullback",
                       {{"eps", eps_str}, {"k", k}, {"max_intervals", max_intervals}});
    PullbackOptions po;
    po.max_intervals = max_intervals;
    auto levels = pullback(spec, BigFloat::parse(eps_str, policy.bits), k, policy, po);
    nlohmann::json j = pullback_json(spec, levels, policy);
    out.write("pullback.json", j.dump(2) + "\n");
    out.write("intervals.csv", intervals_csv(levels));
    out.finish(j);
    return 0;
}

int run_glasser(const CommonOpts& opts, const std::string& eps_str,
                const std::string& intervals) {
    PrecisionPolicy policy = opts.policy();
    MapSpec<Rational> map = load_map_file(opts.map_path);
    MapSpec<BigFloat> spec = materialize<BigFloat>(map, policy.bits);
    if (eps_str.empty() == intervals.empty())
        throw InvariantViolationError("glasser: give exactly one of --eps or --intervals");
    ArtifactWriter out(opts, "glasser", {{"eps", eps_str}, {"intervals", intervals}});
    IntervalSet<BigFloat> S = intervals.empty()
                                  ? build_I0(spec, BigFloat::parse(eps_str, policy.bits))
                                  : parse_interval_list(intervals, policy.bits);
    IntervalSet<BigFloat> pre = preimage_interval_set(spec, S, policy);
    BigFloat discrepancy = abs(pre.measure() - S.measure());
    nlohmann::json j{{"set_measure", S.measure().str()},
                     {"preimage_measure", pre.measure().str()},
                     {"discrepancy", discrepancy.str()},
                     {"set_intervals", S.size()},
                     {"preimage_intervals", pre.size()},
                     {"merge_events", pre.merge_events()},
                     {"policy", detail::policy_json(policy)}};
    out.write("glasser.json", j.dump(2) + "\n");
    out.finish(j);
    return 0;
}

int run_density(const CommonOpts& opts, ExperimentConfig config, bool logsq) {
    config.policy = opts.policy();
    config.map = load_map_file(opts.map_path);
    ArtifactWriter out(opts, logsq ? "probe-logsq" : "density",
                       {{"seed", config.seed},
                        {"samples", config.samples},
                        {"c1", config.c1},
                        {"y", config.y_values},
                        {"threads", config.threads}});
    DensityReport report = logsq ? logsq_conjecture_probe(config) : density_estimate(config);
    out.write(logsq ? "probe.json" : "density.json", report.to_json(false).dump(2) + "\n");
    out.write(logsq ? "probe.csv" : "density.csv", report.to_csv());
    out.finish(report.to_json(true));
    return 0;
}

int run_scaling(const CommonOpts& opts, ExperimentConfig config) {
    config.policy = opts.policy();
    config.map = load_map_file(opts.map_path);
    ArtifactWriter out(opts, "scaling", {{"x0", config.x0_values}});
    ScalingReport report = hitting_scaling_study(config);
    out.write("scaling.json", report.to_json(false).dump(2) + "\n");
    out.write("scaling.csv", report.to_csv());
    out.finish(report.to_json(true));
    return 0;
}

int run_disjoint(const CommonOpts& opts, std::vector<double> eps_values, int k_max,
                 long max_intervals) {
    PrecisionPolicy policy = opts.policy();
    MapSpec<Rational> map = load_map_file(opts.map_path);
    ArtifactWriter out(opts, "disjoint",
                       {{"eps", eps_values}, {"k_max", k_max}, {"max_intervals", max_intervals}});
    PullbackOptions po;
    po.max_intervals = max_intervals;
    DisjointReport report = disjointness_sweep(map, eps_values, k_max, policy, po);
    out.write("disjoint.json", report.to_json(false).dump(2) + "\n");
    out.write("disjoint.csv", report.to_csv());
    out.finish(report.to_json(true));
    return 0;
}

int run_conjugacy(const CommonOpts& opts, const std::string& x0_str, long n) {
    PrecisionPolicy policy = opts.policy();
    MapSpec<Rational> map = load_map_file(opts.map_path);
    Rational x0 = Rational::parse(x0_str);
    ArtifactWriter out(opts, "conjugacy", {{"x0", x0_str}, {"n", n}});

    std::vector<int> bits;
    nlohmann::json summary;
    std::ostringstream csv;
    csv << "step,value,bit\n";
    if (policy.mode == NumberMode::exact_rational) {
        Orbit<Rational> orbit = iterate<Rational>(map, x0, n, policy);
        bits = itinerary<Rational>(map, x0, n, policy);
        for (size_t i = 0; i < bits.size(); ++i)
            csv << i << ',' << orbit.values[i].str() << ',' << bits[i] << '\n';
        summary["theta"] = theta_estimate<Rational>(map, x0, n, policy).str();
    } else {
        Orbit<BigFloat> orbit = iterate<BigFloat>(map, x0, n, policy);
        bits = itinerary<BigFloat>(map, x0, n, policy);
        for (size_t i = 0; i < bits.size(); ++i)
            csv << i << ',' << orbit.values[i].str() << ',' << bits[i] << '\n';
        summary["theta"] = theta_estimate<BigFloat>(map, x0, n, policy).str();
    }
    long ones = 0;
    for (int b : bits) ones += b;
    summary["bits"] = static_cast<long>(bits.size());
    summary["ones"] = ones;
    summary["monobit_fraction"] = static_cast<double>(ones) / static_cast<double>(bits.size());
    out.write("itinerary.csv", csv.str());
    out.write("conjugacy.json", summary.dump(2) + "\n");
    out.finish(summary);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"poledyn: dynamics of f(x) = x - sum_i alpha_i/(x - beta_i) -- "
                 "verified orbits, pole-neighborhood pullbacks, measure preservation "
                 "(Glasser's master theorem), hitting-set density and disjointness"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string x0_str = "2", eps_str = "0.1", intervals_str;
    long n = 10, n_max = 100;
    int k = 5, k_max = 8;
    long max_intervals = 1'000'000;
    ExperimentConfig config;
    std::vector<double> eps_list;

    auto* orbit_cmd = app.add_subcommand(
        "orbit", "Iterate the map with shadow-precision verification; emits step/value CSV. "
                 "Far seeds descend quadratically toward the poles.");
    add_common(orbit_cmd, opts);
    orbit_cmd->add_option("--x0", x0_str, "Seed (decimal string)")->required();
    orbit_cmd->add_option("--n", n, "Number of steps")->required();

    auto* hit_cmd = app.add_subcommand(
        "hit", "First-hitting time of the eps-neighborhood of the poles (hits count from "
               "step 1; the slow-approach bound makes ~x^2 steps necessary from far seeds).");
    add_common(hit_cmd, opts);
    hit_cmd->add_option("--x0", x0_str, "Seed (decimal string)")->required();
    hit_cmd->add_option("--eps", eps_str, "Hit distance (decimal string)")->required();
    hit_cmd->add_option("--n-max", n_max, "Step budget")->required();

    auto* pull_cmd = app.add_subcommand(
        "pullback", "Hitting sets I_k = f^{-k}(I_0) as exact interval unions; every level "
                    "keeps |I_k| = |I_0| by measure preservation (Glasser's master theorem).");
    add_common(pull_cmd, opts);
    pull_cmd->add_option("--eps", eps_str, "Pole-neighborhood radius (decimal string)")
        ->required();
    pull_cmd->add_option("--k", k, "Deepest pullback level")->required();
    pull_cmd->add_option("--max-intervals", max_intervals, "Interval-count budget");

    auto* glasser_cmd = app.add_subcommand(
        "glasser", "Measure-preservation check |f^{-1}(S)| = |S| (Glasser's master theorem; "
                   "the Cauchy-Schloemilch identity for the single-pole map).");
    add_common(glasser_cmd, opts);
    glasser_cmd->add_option("--eps", eps_str, "Use S = I_0(eps)")->default_val("");
    glasser_cmd->add_option("--intervals", intervals_str, "Explicit S as 'a:b,c:d,...'");

    auto* density_cmd = app.add_subcommand(
        "density", "Fraction of seeds in [-y, y] whose orbit comes within 1/|x| of a pole "
                   "within c1 x^2 steps -- the positive-density hitting set.");
    add_common(density_cmd, opts);
    density_cmd->add_option("--y", config.y_values, "Window half-widths (repeatable)")
        ->required();
    density_cmd->add_option("--samples", config.samples, "Samples per y");
    density_cmd->add_option("--c1", config.c1, "Budget coefficient");
    density_cmd->add_option("--seed", config.seed, "RNG seed");
    density_cmd->add_option("--threads", config.threads, "Worker threads (results identical)");
    density_cmd->add_option("--max-bits", config.max_bits, "Adaptive precision cap");

    auto* scaling_cmd = app.add_subcommand(
        "scaling", "First-entry step into [beta_1 - 1, beta_m + 1] vs seed size; fits the "
                   "quadratic hitting-time exponent and the 2*sum(alpha) descent rate.");
    add_common(scaling_cmd, opts);
    scaling_cmd->add_option("--x0", config.x0_values, "Seeds (repeatable)")->required();

    auto* disjoint_cmd = app.add_subcommand(
        "disjoint", "Disjointness window of the hitting sets: largest w with I_k and I_l "
                    "disjoint for all |k - l| <= w (eps must stay below the certified eps0).");
    add_common(disjoint_cmd, opts);
    disjoint_cmd->add_option("--eps", eps_list, "Radii to sweep (repeatable)")->required();
    disjoint_cmd->add_option("--k-max", k_max, "Deepest level");
    disjoint_cmd->add_option("--max-intervals", max_intervals, "Interval-count budget");

    auto* conj_cmd = app.add_subcommand(
        "conjugacy", "Doubling-map conjugacy diagnostics for the single-pole map: sign "
                     "itinerary, theta readout (theta(f(x)) = 2 theta(x) mod 1), monobit.");
    add_common(conj_cmd, opts);
    conj_cmd->add_option("--x0", x0_str, "Seed (decimal string)")->required();
    conj_cmd->add_option("--n", n, "Itinerary length minus one")->required();

    auto* probe_cmd = app.add_subcommand(
        "probe-logsq", "Exploratory probe: the same hitting predicate under the x (log x)^2 "
                       "budget. No acceptance rests on its numbers.");
    add_common(probe_cmd, opts);
    probe_cmd->add_option("--y", config.y_values, "Window half-widths (repeatable)")->required();
    probe_cmd->add_option("--samples", config.samples, "Samples per y");
    probe_cmd->add_option("--seed", config.seed, "RNG seed");
    probe_cmd->add_option("--threads", config.threads, "Worker threads");
    probe_cmd->add_option("--max-bits", config.max_bits, "Adaptive precision cap");

    try {
        std::vector<std::string> args =
            expand_config(std::vector<std::string>(argv + 1, argv + argc));
        std::reverse(args.begin(), args.end()); // CLI11 takes a reversed vector
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const InvariantViolationError& e) {
        std::cerr << "poledyn: " << e.what() << "\n";
        return 2;
    }

    try {
        if (orbit_cmd->parsed()) return run_orbit(opts, x0_str, n);
        if (hit_cmd->parsed()) return run_hit(opts, x0_str, eps_str, n_max);
        if (pull_cmd->parsed()) return run_pullback(opts, eps_str, k, max_intervals);
        if (glasser_cmd->parsed()) return run_glasser(opts, eps_str, intervals_str);
        if (density_cmd->parsed()) return run_density(opts, config, false);
        if (scaling_cmd->parsed()) return run_scaling(opts, config);
        if (disjoint_cmd->parsed()) return run_disjoint(opts, eps_list, k_max, max_intervals);
        if (conj_cmd->parsed()) return run_conjugacy(opts, x0_str, n);
        if (probe_cmd->parsed()) return run_density(opts, config, true);
        return 2;
    } catch (const PoleEvaluationError& e) {
        std::cerr << "poledyn: " << e.what() << "\n";
        return 2;
    } catch (const InvariantViolationError& e) {
        std::cerr << "poledyn: " << e.what() << "\n";
        return 2;
    } catch (const EpsilonTooLargeError& e) {
        std::cerr << "poledyn: " << e.what() << "\n";
        return 2;
    } catch (const PrecisionExhaustedError& e) {
        std::cerr << "poledyn: " << e.what() << "\n";
        return 3;
    } catch (const BudgetExceededError& e) {
        std::cerr << "poledyn: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "poledyn: internal error: " << e.what() << "\n";
        return 1;
    }
}
