#pragma once

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "interval_set.hpp"
#include "map.hpp"
#include "orbit.hpp"
#include "precision.hpp"
#include "rng.hpp"

namespace poledyn {

/// Seeded experiment setup. A fixed config (including seed and policy)
/// produces byte-identical report payloads regardless of thread count:
/// samples are drawn from a counter-based stream and aggregated by index.
struct ExperimentConfig {
    MapSpec<Rational> map;
    std::uint64_t seed = 42;
    long samples = 2000;
    std::vector<double> y_values;   // density / logsq probe cells
    std::vector<double> x0_values;  // scaling study seeds
    double c1 = 2.0;                // iteration-budget coefficient (n_max = c1 x^2)
    PrecisionPolicy policy{};
    int threads = 1;
    long max_bits = 1L << 20;       // adaptive precision ladder cap
    long max_budget_steps = 10'000'000;

    void validate() const {
        if (map.m() < 1) throw InvariantViolationError("config: map is empty");
        if (samples < 1) throw InvariantViolationError("config: samples must be >= 1");
        if (!(c1 > 0)) throw InvariantViolationError("config: c1 must be > 0");
        if (threads < 1) throw InvariantViolationError("config: threads must be >= 1");
        policy.validate();
    }
};

/// Iteration budget of the hitting-set predicate: floor(c1 x^2).
inline long density_budget(double x, double c1) {
    return static_cast<long>(std::floor(c1 * x * x));
}

/// Budget of the exploratory probe: floor(|x| (log |x|)^2), natural log.
inline long logsq_budget(double x) {
    const double ax = std::abs(x);
    if (ax == 0.0) return 0;
    const double lg = std::log(ax);
    return static_cast<long>(std::floor(ax * lg * lg));
}

namespace detail {

template <typename Fn>
void parallel_for(long n, int threads, Fn&& fn) {
    threads = static_cast<int>(std::min<long>(threads, n));
    if (threads <= 1) {
        for (long i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<long> next{0};
    auto worker = [&] {
        for (long i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    };
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

inline std::pair<double, double> wilson95(long hits, long n) {
    if (n <= 0) return {0.0, 1.0};
    const double z = 1.959963984540054;
    const double p = static_cast<double>(hits) / static_cast<double>(n);
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double hw = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    return {std::max(0.0, center - hw), std::min(1.0, center + hw)};
}

inline double quantile(const std::vector<long>& sorted, double q) {
    if (sorted.empty()) return std::nan("");
    size_t idx = static_cast<size_t>(q * static_cast<double>(sorted.size() - 1));
    return static_cast<double>(sorted[std::min(idx, sorted.size() - 1)]);
}

enum class SampleKind { hit, miss, excluded_pole, excluded_precision };

struct SampleResult {
    SampleKind kind;
    long n_hit = -1;
};

/// Certified membership test: does the orbit of x0 come within eps of a
/// pole in at most n_max steps? In big-float mode this climbs a precision
/// ladder (shadow at twice the base bits each rung) until the answer is
/// verified or the bit cap is hit; chaos costs about one bit per step only
/// in the pole region, so most samples certify far below n_max + margin
/// bits.
inline SampleResult hitting_sample(const MapSpec<Rational>& map, const Rational& x0,
                                   const Rational& eps, long n_max,
                                   const PrecisionPolicy& start, long max_bits) {
    if (map.is_pole(x0)) return {SampleKind::excluded_pole};
    if (n_max < 1) return {SampleKind::miss};
    if (start.mode == NumberMode::exact_rational) {
        HitRecord<Rational> rec = first_hit<Rational>(map, x0, eps, n_max, start);
        if (rec.outcome == HitOutcome::hit) return {SampleKind::hit, rec.n_hit};
        if (rec.outcome == HitOutcome::none) return {SampleKind::miss};
        return {SampleKind::excluded_precision};
    }
    PrecisionPolicy p = start;
    p.shadow = true;
    p.bits = std::max<long>(p.bits, 64);
    while (true) {
        p.shadow_margin_bits = p.bits; // shadow at 2x base bits
        HitRecord<BigFloat> rec = first_hit<BigFloat>(map, x0, eps, n_max, p);
        if (rec.outcome == HitOutcome::hit) return {SampleKind::hit, rec.n_hit};
        if (rec.outcome == HitOutcome::none) return {SampleKind::miss};
        if (2 * p.bits > max_bits) return {SampleKind::excluded_precision};
        p.bits *= 2;
    }
}

nlohmann::json policy_json(const PrecisionPolicy& p);

} // namespace detail

struct DensityCell {
    double y = 0;
    long hits = 0, misses = 0, excluded_pole = 0, excluded_precision = 0;
    double fraction = 0, wilson_low = 0, wilson_high = 0;
    double hit_q25 = 0, hit_q50 = 0, hit_q75 = 0, hit_q90 = 0;

    long used() const { return hits + misses; }
    long excluded() const { return excluded_pole + excluded_precision; }
};

struct DensityReport {
    std::string experiment; // "density" | "logsq-probe"
    std::vector<std::string> map_alphas, map_betas;
    std::uint64_t seed = 0;
    long samples = 0;
    double c1 = 0;
    PrecisionPolicy policy{};
    std::vector<DensityCell> cells;
    double wall_ms = 0;

    nlohmann::json to_json(bool include_timing = true) const;
    std::string to_csv() const;
};

struct ScalingRow {
    double x0 = 0;
    long steps = 0;
    double x_entry = 0;      // first iterate inside [beta_1 - 1, beta_m + 1]
    double descent_rate = 0; // (x0^2 - x_entry^2) / steps, expected ~ 2 alpha_sum
};

struct ScalingReport {
    std::vector<std::string> map_alphas, map_betas;
    double entry_low = 0, entry_high = 0;
    std::vector<ScalingRow> rows;
    double exponent = 0;  // least-squares slope of log steps vs log x0
    double amplitude = 0;
    double expected_rate = 0;
    double max_rate_rel_dev = 0;
    PrecisionPolicy policy{};
    double wall_ms = 0;

    nlohmann::json to_json(bool include_timing = true) const;
    std::string to_csv() const;
};

struct DisjointRow {
    double eps = 0;
    int window = 0; // largest w with all pairs |k - l| <= w, k != l, disjoint
    int levels = 0;
    long total_intervals = 0;
    int merge_events = 0;
    std::vector<std::vector<bool>> disjoint; // full matrix
};

struct DisjointReport {
    std::vector<std::string> map_alphas, map_betas;
    std::string epsilon0; // reported threshold (decimal string)
    int k_max = 0;
    std::vector<DisjointRow> rows;
    bool window_monotone = true; // w never shrinks as eps decreases
    PrecisionPolicy policy{};
    double wall_ms = 0;

    nlohmann::json to_json(bool include_timing = true) const;
    std::string to_csv() const;
};

namespace detail {

inline std::vector<std::string> string_list(const std::vector<Rational>& xs) {
    std::vector<std::string> out;
    out.reserve(xs.size());
    for (const Rational& x : xs) out.push_back(x.str());
    return out;
}

inline DensityReport run_density_like(const ExperimentConfig& config, bool logsq_budget) {
    config.validate();
    if (config.y_values.empty())
        throw InvariantViolationError("density: at least one y value required");
    const auto t0 = std::chrono::steady_clock::now();

    DensityReport report;
    report.experiment = logsq_budget ? "logsq-probe" : "density";
    report.map_alphas = string_list(config.map.alphas);
    report.map_betas = string_list(config.map.betas);
    report.seed = config.seed;
    report.samples = config.samples;
    report.c1 = config.c1;
    report.policy = config.policy;

    CounterRng root{config.seed};
    for (size_t ci = 0; ci < config.y_values.size(); ++ci) {
        const double y = config.y_values[ci];
        if (!(y > 0)) throw InvariantViolationError("density: y values must be > 0");
        {
            double worst = logsq_budget
                               ? y * std::log(std::max(y, 1.0)) * std::log(std::max(y, 1.0))
                               : config.c1 * y * y;
            if (worst > static_cast<double>(config.max_budget_steps))
                throw BudgetExceededError("density: per-sample budget above max_budget_steps");
        }
        // derive the cell stream from y itself so a cell's samples do not
        // depend on the composition of y_values
        CounterRng rng = root.derive(std::bit_cast<std::uint64_t>(y));
        std::vector<SampleResult> results(config.samples);
        parallel_for(config.samples, config.threads, [&](long i) {
            const double xd = rng.symmetric(static_cast<std::uint64_t>(i), y);
            const Rational x0 = Rational::from_double(xd);
            if (x0.is_zero()) {
                results[i] = {SampleKind::excluded_pole};
                return;
            }
            const long budget = logsq_budget ? poledyn::logsq_budget(xd)
                                             : poledyn::density_budget(xd, config.c1);
            const Rational eps = Rational(1) / abs(x0);
            results[i] =
                hitting_sample(config.map, x0, eps, budget, config.policy, config.max_bits);
        });

        DensityCell cell;
        cell.y = y;
        std::vector<long> hit_steps;
        for (const SampleResult& r : results) {
            switch (r.kind) {
                case SampleKind::hit:
                    ++cell.hits;
                    hit_steps.push_back(r.n_hit);
                    break;
                case SampleKind::miss: ++cell.misses; break;
                case SampleKind::excluded_pole: ++cell.excluded_pole; break;
                case SampleKind::excluded_precision: ++cell.excluded_precision; break;
            }
        }
        std::sort(hit_steps.begin(), hit_steps.end());
        cell.fraction = cell.used() ? static_cast<double>(cell.hits) / cell.used() : 0.0;
        std::tie(cell.wilson_low, cell.wilson_high) = wilson95(cell.hits, cell.used());
        cell.hit_q25 = quantile(hit_steps, 0.25);
        cell.hit_q50 = quantile(hit_steps, 0.50);
        cell.hit_q75 = quantile(hit_steps, 0.75);
        cell.hit_q90 = quantile(hit_steps, 0.90);
        report.cells.push_back(cell);
    }
    report.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

} // namespace detail

/// Fraction of seeded uniform x in [-y, y] whose orbit comes within 1/|x|
/// of a pole in at most c1 x^2 steps -- the density of the hitting set,
/// with a Wilson 95% interval per cell.
inline DensityReport density_estimate(const ExperimentConfig& config) {
    return detail::run_density_like(config, /*logsq_budget=*/false);
}

/// Exploratory variant: same membership predicate under the much smaller
/// budget x (log x)^2. No acceptance rests on this probe.
inline DensityReport logsq_conjecture_probe(const ExperimentConfig& config) {
    return detail::run_density_like(config, /*logsq_budget=*/true);
}

/// First-entry step into [beta_1 - 1, beta_m + 1] for each seed, with a
/// log-log least-squares fit of steps ~ A x0^p and the descent-rate check
/// against 2 alpha_sum.
inline ScalingReport hitting_scaling_study(const ExperimentConfig& config) {
    config.validate();
    if (config.x0_values.empty())
        throw InvariantViolationError("scaling: at least one x0 value required");
    const auto t0 = std::chrono::steady_clock::now();

    ScalingReport report;
    report.map_alphas = detail::string_list(config.map.alphas);
    report.map_betas = detail::string_list(config.map.betas);
    report.policy = config.policy;
    const Rational entry_low = config.map.betas.front() - Rational(1);
    const Rational entry_high = config.map.betas.back() + Rational(1);
    report.entry_low = entry_low.to_double();
    report.entry_high = entry_high.to_double();
    report.expected_rate = 2.0 * config.map.alpha_sum.to_double();

    const Rational c1 =
        Rational(2) * (config.map.betas.back() - config.map.betas.front()) + Rational(1);
    for (double x0d : config.x0_values) {
        const Rational x0 = Rational::from_double(x0d);
        if (!(x0 > config.map.betas.back() + c1))
            throw InvariantViolationError(
                "scaling: x0 must lie beyond beta_m + 2(beta_m - beta_1) + 1");
        const long cap = static_cast<long>(
                             4.0 * x0d * x0d / std::max(config.map.alpha_sum.to_double(), 1e-9)) +
                         1024;

        PrecisionPolicy p = config.policy;
        p.shadow = true;
        ScalingRow row;
        row.x0 = x0d;
        while (true) {
            p.shadow_margin_bits = p.bits;
            detail::OrbitStream<BigFloat> stream(config.map, x0, p);
            const BigFloat lo = entry_low.to_bigfloat(p.bits);
            const BigFloat hi = entry_high.to_bigfloat(p.bits);
            long entered = -1;
            while (stream.index() < cap) {
                if (!stream.advance()) break;
                if (lo <= stream.value() && stream.value() <= hi) {
                    entered = stream.index();
                    row.x_entry = stream.value().to_double();
                    break;
                }
            }
            if (entered >= 0) {
                row.steps = entered;
                break;
            }
            if (stream.state() == detail::StreamState::running)
                throw BudgetExceededError("scaling: entry step exceeded its cap (internal)");
            if (2 * p.bits > config.max_bits)
                throw PrecisionExhaustedError("scaling: bit cap reached before entry resolved");
            p.bits *= 2;
        }
        row.descent_rate =
            row.steps > 0 ? (x0d * x0d - row.x_entry * row.x_entry) / row.steps : 0.0;
        report.rows.push_back(row);
    }

    // log-log least squares for steps ~ A x0^p
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(report.rows.size());
    for (const ScalingRow& r : report.rows) {
        const double lx = std::log(r.x0), ly = std::log(static_cast<double>(std::max(r.steps, 1L)));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double denom = n * sxx - sx * sx;
    report.exponent = denom != 0 ? (n * sxy - sx * sy) / denom : 0.0;
    report.amplitude = std::exp((sy - report.exponent * sx) / n);
    for (const ScalingRow& r : report.rows)
        report.max_rate_rel_dev = std::max(
            report.max_rate_rel_dev, std::abs(r.descent_rate / report.expected_rate - 1.0));
    report.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

/// For each eps below the certified epsilon0: pull back to k_max and
/// report the largest window w such that every pair of levels at distance
/// <= w is disjoint. The window should not shrink as eps decreases.
inline DisjointReport disjointness_sweep(const MapSpec<Rational>& map,
                                         const std::vector<double>& eps_values, int k_max,
                                         const PrecisionPolicy& policy,
                                         const PullbackOptions& options = {}) {
    policy.validate();
    if (eps_values.empty())
        throw InvariantViolationError("disjoint: at least one eps required");
    const auto t0 = std::chrono::steady_clock::now();

    DisjointReport report;
    report.map_alphas = detail::string_list(map.alphas);
    report.map_betas = detail::string_list(map.betas);
    report.k_max = k_max;
    report.policy = policy;
    const Rational eps0 = epsilon0(map);
    report.epsilon0 = eps0.str();

    const MapSpec<BigFloat> spec = materialize<BigFloat>(map, policy.bits);
    for (double epsd : eps_values) {
        const Rational eps_exact = Rational::from_double(epsd);
        if (!(eps_exact < eps0))
            throw EpsilonTooLargeError("disjoint: eps " + std::to_string(epsd) +
                                       " is not below epsilon0 = " + eps0.str());
        DisjointRow row;
        row.eps = epsd;
        const BigFloat eps = eps_exact.to_bigfloat(policy.bits);
        auto levels = pullback(spec, eps, k_max, policy, options);
        row.levels = static_cast<int>(levels.size());
        for (const auto& s : levels) {
            row.total_intervals += static_cast<long>(s.size());
            row.merge_events += s.merge_events();
        }
        row.disjoint = pairwise_disjoint(levels);
        int w = k_max;
        for (int d = 1; d <= k_max && w == k_max; ++d)
            for (size_t k = 0; k + d < levels.size(); ++k)
                if (!row.disjoint[k][k + d]) {
                    w = d - 1;
                    break;
                }
        row.window = w;
        report.rows.push_back(std::move(row));
    }

    // Check monotonicity over decreasing eps regardless of input order.
    std::vector<size_t> order(report.rows.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return report.rows[a].eps > report.rows[b].eps;
    });
    for (size_t i = 1; i < order.size(); ++i)
        if (report.rows[order[i]].window < report.rows[order[i - 1]].window)
            report.window_monotone = false;
    report.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

// ---- JSON / CSV serialization ----

namespace detail {
inline nlohmann::json policy_json(const PrecisionPolicy& p) {
    return {{"mode", p.mode == NumberMode::big_float ? "bigfloat" : "rational"},
            {"bits", p.bits},
            {"shadow_margin_bits", p.shadow_margin_bits},
            {"shadow_agreement_tol", p.shadow_agreement_tol},
            {"shadow", p.shadow},
            {"rational_bit_budget", p.rational_bit_budget}};
}
} // namespace detail

inline nlohmann::json DensityReport::to_json(bool include_timing) const {
    nlohmann::json cells_json = nlohmann::json::array();
    for (const DensityCell& c : cells) {
        cells_json.push_back({{"y", c.y},
                              {"hits", c.hits},
                              {"misses", c.misses},
                              {"excluded_pole", c.excluded_pole},
                              {"excluded_precision", c.excluded_precision},
                              {"fraction", c.fraction},
                              {"wilson_low", c.wilson_low},
                              {"wilson_high", c.wilson_high},
                              {"hit_step_q25", c.hit_q25},
                              {"hit_step_q50", c.hit_q50},
                              {"hit_step_q75", c.hit_q75},
                              {"hit_step_q90", c.hit_q90}});
    }
    nlohmann::json j{{"experiment", experiment},
                     {"map", {{"alphas", map_alphas}, {"betas", map_betas}}},
                     {"seed", seed},
                     {"samples", samples},
                     {"c1", c1},
                     {"policy", detail::policy_json(policy)},
                     {"cells", cells_json}};
    if (include_timing) j["timing"] = {{"wall_ms", wall_ms}};
    return j;
}

inline std::string DensityReport::to_csv() const {
    std::string out =
        "y,hits,misses,excluded_pole,excluded_precision,fraction,wilson_low,wilson_high,"
        "hit_step_q25,hit_step_q50,hit_step_q75,hit_step_q90\n";
    for (const DensityCell& c : cells) {
        nlohmann::json row = {c.y,          c.hits,       c.misses,  c.excluded_pole,
                              c.excluded_precision,       c.fraction, c.wilson_low,
                              c.wilson_high, c.hit_q25,   c.hit_q50, c.hit_q75,
                              c.hit_q90};
        std::string line = row.dump();
        out += line.substr(1, line.size() - 2) + "\n";
    }
    return out;
}

inline nlohmann::json ScalingReport::to_json(bool include_timing) const {
    nlohmann::json rows_json = nlohmann::json::array();
    for (const ScalingRow& r : rows)
        rows_json.push_back({{"x0", r.x0},
                             {"steps", r.steps},
                             {"x_entry", r.x_entry},
                             {"descent_rate", r.descent_rate}});
    nlohmann::json j{{"experiment", "scaling"},
                     {"map", {{"alphas", map_alphas}, {"betas", map_betas}}},
                     {"entry_interval", {entry_low, entry_high}},
                     {"rows", rows_json},
                     {"fit", {{"exponent", exponent}, {"amplitude", amplitude}}},
                     {"descent",
                      {{"expected_rate", expected_rate}, {"max_rel_dev", max_rate_rel_dev}}},
                     {"policy", detail::policy_json(policy)}};
    if (include_timing) j["timing"] = {{"wall_ms", wall_ms}};
    return j;
}

inline std::string ScalingReport::to_csv() const {
    std::string out = "x0,steps,x_entry,descent_rate\n";
    for (const ScalingRow& r : rows) {
        nlohmann::json row = {r.x0, r.steps, r.x_entry, r.descent_rate};
        std::string line = row.dump();
        out += line.substr(1, line.size() - 2) + "\n";
    }
    return out;
}

inline nlohmann::json DisjointReport::to_json(bool include_timing) const {
    nlohmann::json rows_json = nlohmann::json::array();
    for (const DisjointRow& r : rows) {
        nlohmann::json matrix = nlohmann::json::array();
        for (const auto& mr : r.disjoint) matrix.push_back(mr);
        rows_json.push_back({{"eps", r.eps},
                             {"window", r.window},
                             {"levels", r.levels},
                             {"total_intervals", r.total_intervals},
                             {"merge_events", r.merge_events},
                             {"disjoint_matrix", matrix}});
    }
    nlohmann::json j{{"experiment", "disjoint"},
                     {"map", {{"alphas", map_alphas}, {"betas", map_betas}}},
                     {"epsilon0", epsilon0},
                     {"k_max", k_max},
                     {"rows", rows_json},
                     {"window_monotone", window_monotone},
                     {"policy", detail::policy_json(policy)}};
    if (include_timing) j["timing"] = {{"wall_ms", wall_ms}};
    return j;
}

inline std::string DisjointReport::to_csv() const {
    std::string out = "eps,window,levels,total_intervals,merge_events\n";
    for (const DisjointRow& r : rows) {
        nlohmann::json row = {r.eps, r.window, r.levels, r.total_intervals, r.merge_events};
        std::string line = row.dump();
        out += line.substr(1, line.size() - 2) + "\n";
    }
    return out;
}

} // namespace poledyn
