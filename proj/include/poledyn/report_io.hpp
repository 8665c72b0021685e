#pragma once

#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "experiments.hpp"
#include "interval_set.hpp"
#include "orbit.hpp"

namespace poledyn {

/// Orbit rows with values as decimal strings at full working precision
/// (exact p/q strings in rational mode).
template <typename T>
void write_orbit_csv(std::ostream& out, const Orbit<T>& orbit) {
    out << "step,value\n";
    for (size_t i = 0; i < orbit.values.size(); ++i)
        out << i << ',' << to_display_string(orbit.values[i]) << '\n';
}

inline const char* orbit_status_name(OrbitStatus s) {
    switch (s) {
        case OrbitStatus::ok: return "ok";
        case OrbitStatus::pole_hit: return "pole_hit";
        case OrbitStatus::precision_exhausted: return "precision_exhausted";
    }
    return "unknown";
}

template <typename T>
nlohmann::json orbit_summary_json(const Orbit<T>& orbit) {
    nlohmann::json j{{"x0", to_display_string(orbit.x0)},
                     {"steps", orbit.steps()},
                     {"status", orbit_status_name(orbit.status)},
                     {"verified_through", orbit.verified_through},
                     {"shadow_checked", orbit.shadow_checked},
                     {"policy", detail::policy_json(orbit.policy)}};
    if (orbit.status == OrbitStatus::pole_hit) {
        j["pole_step"] = orbit.pole_step;
        j["pole_index"] = orbit.pole_index;
    }
    if (!orbit.values.empty()) j["last_value"] = to_display_string(orbit.values.back());
    return j;
}

template <typename T>
nlohmann::json hit_record_json(const HitRecord<T>& rec) {
    nlohmann::json j{{"x0", rec.x0.str()},
                     {"eps", rec.eps.str()},
                     {"n_max", rec.n_max}};
    switch (rec.outcome) {
        case HitOutcome::hit:
            j["outcome"] = "hit";
            j["n_hit"] = rec.n_hit;
            j["pole_index"] = rec.pole_index;
            j["distance"] = to_display_string(*rec.distance);
            break;
        case HitOutcome::none:
            j["outcome"] = "none";
            j["n_hit"] = nullptr;
            j["pole_index"] = nullptr;
            j["distance"] = nullptr;
            break;
        case HitOutcome::unverified:
            j["outcome"] = "unverified";
            j["n_hit"] = nullptr;
            j["pole_index"] = nullptr;
            j["distance"] = nullptr;
            j["failed_step"] = rec.failed_step;
            break;
    }
    return j;
}

/// One row per interval across all pullback levels.
template <typename T>
std::string intervals_csv(const std::vector<IntervalSet<T>>& levels) {
    std::string out = "level,index,a,b\n";
    for (size_t k = 0; k < levels.size(); ++k) {
        const auto& ivs = levels[k].intervals();
        for (size_t i = 0; i < ivs.size(); ++i)
            out += std::to_string(k) + "," + std::to_string(i) + "," +
                   to_display_string(ivs[i].a) + "," + to_display_string(ivs[i].b) + "\n";
    }
    return out;
}

/// Per-level pullback summary: counts, exact-precision measures, the
/// containment radius R_k (and the reported constant max R_k/sqrt(k)),
/// merge events, and a coarse outward-rounding inflation bound.
template <typename T>
nlohmann::json pullback_json(const MapSpec<T>& spec, const std::vector<IntervalSet<T>>& levels,
                             const PrecisionPolicy& policy) {
    nlohmann::json level_rows = nlohmann::json::array();
    double containment = 0.0;
    const double tol = std::pow(2.0, -static_cast<double>(policy.bits / 2));
    for (size_t k = 0; k < levels.size(); ++k) {
        const IntervalSet<T>& s = levels[k];
        const double r = s.max_abs_endpoint().to_double();
        double r_over_sqrt_k = k > 0 ? r / std::sqrt(static_cast<double>(k)) : 0.0;
        containment = std::max(containment, r_over_sqrt_k);
        const double endpoints = 2.0 * static_cast<double>(s.size());
        nlohmann::json row{{"k", k},
                           {"count", s.size()},
                           {"measure", s.measure().str()},
                           {"r_max", s.max_abs_endpoint().str()},
                           {"r_over_sqrt_k", r_over_sqrt_k},
                           {"merge_events", s.merge_events()},
                           {"inflation_bound", endpoints * (tol * std::max(1.0, r) +
                                                            std::pow(2.0, -double(policy.bits)))}};
        level_rows.push_back(row);
    }
    bool clean = true;
    for (const auto& s : levels) clean = clean && s.merge_events() == 0;
    return nlohmann::json{{"m", spec.m()},
                          {"levels", level_rows},
                          {"containment_constant", containment},
                          {"all_levels_merge_free", clean},
                          {"policy", detail::policy_json(policy)}};
}

} // namespace poledyn
