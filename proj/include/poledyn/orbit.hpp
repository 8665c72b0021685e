#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bigfloat.hpp"
#include "errors.hpp"
#include "map.hpp"
#include "precision.hpp"
#include "rational.hpp"

namespace poledyn {

enum class OrbitStatus { ok, pole_hit, precision_exhausted };

template <typename T>
struct Orbit {
    T x0;
    std::vector<T> values;       // x_0 .. x_n; truncated on pole / rational budget
    PrecisionPolicy policy;
    OrbitStatus status = OrbitStatus::ok;
    long pole_step = -1;         // index whose value equals a pole exactly
    int pole_index = -1;
    long verified_through = 0;   // last index certified by the shadow orbit
    bool shadow_checked = false; // false when verification was opted out

    long steps() const { return static_cast<long>(values.size()) - 1; }
};

namespace detail {

enum class StreamState { running, pole, diverged, rational_budget };

/// Streaming iteration of the base orbit with an optional shadow orbit at
/// bits + shadow_margin_bits. The exposed values are the base orbit (the
/// orbit "at policy precision"); the shadow only certifies its prefix.
/// With stop_on_divergence the stream halts on the first unverifiable
/// step; otherwise the base continues and verified_through stays frozen.
template <typename T>
class OrbitStream {
public:
    OrbitStream(const MapSpec<Rational>& map, const Rational& x0, const PrecisionPolicy& policy,
                bool stop_on_divergence = true)
        : policy_(policy), stop_on_divergence_(stop_on_divergence) {
        policy_.validate();
        if constexpr (std::is_same_v<T, Rational>) {
            spec_ = map;
            value_ = x0;
            shadow_live_ = false;
            verified_ = true; // exact arithmetic is self-verifying
        } else {
            spec_ = materialize<BigFloat>(map, policy_.bits);
            value_ = x0.to_bigfloat(policy_.bits);
            shadow_live_ = policy_.shadow;
            verified_ = shadow_live_;
            if (shadow_live_) {
                shadow_spec_ = materialize<BigFloat>(map, policy_.shadow_bits());
                shadow_value_ = x0.to_bigfloat(policy_.shadow_bits());
                tol_ = BigFloat::from_double(policy_.shadow_agreement_tol, 64);
            }
        }
        if (spec_.is_pole(value_)) {
            state_ = StreamState::pole;
            pole_index_ = spec_.pole_index_of(value_);
        }
        if (verified_) verified_through_ = 0;
    }

    const MapSpec<T>& spec() const { return spec_; }
    const T& value() const { return value_; }
    long index() const { return index_; }
    StreamState state() const { return state_; }
    int pole_index() const { return pole_index_; }
    long verified_through() const { return verified_through_; }
    bool verification_on() const { return verified_; }
    long failed_step() const { return failed_step_; }

    /// Advance to x_{n+1}. Returns false when the stream has stopped
    /// (state() says why); on a pole landing the pole value itself is
    /// still produced and the *next* call returns false.
    bool advance() {
        if (state_ != StreamState::running) return false;
        if constexpr (std::is_same_v<T, Rational>) {
            Rational next = eval_map(spec_, value_);
            if (next.bit_length() > policy_.rational_bit_budget) {
                state_ = StreamState::rational_budget;
                failed_step_ = index_ + 1;
                return false;
            }
            value_ = std::move(next);
            ++index_;
            verified_through_ = index_;
        } else {
            BigFloat next = eval_map(spec_, value_);
            if (shadow_live_) {
                if (shadow_spec_.is_pole(shadow_value_)) {
                    // Base and shadow disagree about hitting a pole; the
                    // prefix beyond this point cannot be certified.
                    shadow_live_ = false;
                    failed_step_ = index_ + 1;
                    if (stop_on_divergence_) {
                        state_ = StreamState::diverged;
                        return false;
                    }
                } else {
                    BigFloat shadow_next = eval_map(shadow_spec_, shadow_value_);
                    if (abs(next - shadow_next) > tol_) {
                        shadow_live_ = false;
                        failed_step_ = index_ + 1;
                        if (stop_on_divergence_) {
                            state_ = StreamState::diverged;
                            return false;
                        }
                    } else {
                        shadow_value_ = std::move(shadow_next);
                    }
                }
            }
            value_ = std::move(next);
            ++index_;
            if (shadow_live_) verified_through_ = index_;
        }
        if (spec_.is_pole(value_)) {
            state_ = StreamState::pole;
            pole_index_ = spec_.pole_index_of(value_);
        }
        return true;
    }

private:
    PrecisionPolicy policy_;
    bool stop_on_divergence_;
    MapSpec<T> spec_;
    T value_{};
    long index_ = 0;
    StreamState state_ = StreamState::running;
    int pole_index_ = -1;
    bool verified_ = false;   // whether any verification applies
    bool shadow_live_ = false;
    long verified_through_ = 0;
    long failed_step_ = -1;
    MapSpec<BigFloat> shadow_spec_;
    BigFloat shadow_value_;
    BigFloat tol_;
};

} // namespace detail

/// Iterate x_{n+1} = f(x_n) for n steps. The full base orbit is produced
/// unless an iterate lands exactly on a pole (truncated, status pole_hit)
/// or exact-rational growth exceeds its bit budget (truncated, status
/// precision_exhausted). verified_through reports the shadow-certified
/// prefix; iteration continues past a shadow divergence.
template <typename T>
Orbit<T> iterate(const MapSpec<Rational>& map, const Rational& x0, long n,
                 const PrecisionPolicy& policy) {
    if (n < 0) throw InvariantViolationError("iterate: n must be >= 0");
    detail::OrbitStream<T> stream(map, x0, policy, /*stop_on_divergence=*/false);
    if (stream.state() == detail::StreamState::pole && stream.index() == 0)
        throw PoleEvaluationError("iterate: seed is a pole", stream.pole_index());

    Orbit<T> orbit;
    orbit.policy = policy;
    orbit.shadow_checked = stream.verification_on();
    orbit.values.reserve(n + 1);
    orbit.values.push_back(stream.value());
    while (stream.index() < n && stream.advance()) orbit.values.push_back(stream.value());

    orbit.x0 = orbit.values.front();
    orbit.verified_through = stream.verified_through();
    if (stream.state() == detail::StreamState::pole) {
        orbit.status = OrbitStatus::pole_hit;
        orbit.pole_step = stream.index();
        orbit.pole_index = stream.pole_index();
    } else if (stream.state() == detail::StreamState::rational_budget) {
        orbit.status = OrbitStatus::precision_exhausted;
    }
    return orbit;
}

/// Largest k such that base and shadow orbits agree within the policy
/// tolerance at every index <= k.
template <typename T>
long shadow_verify(const MapSpec<Rational>& map, const Rational& x0, long n,
                   const PrecisionPolicy& policy) {
    PrecisionPolicy p = policy;
    p.shadow = true;
    return iterate<T>(map, x0, n, p).verified_through;
}

enum class HitOutcome { hit, none, unverified };

template <typename T>
struct HitRecord {
    Rational x0;
    Rational eps;
    long n_max = 0;
    HitOutcome outcome = HitOutcome::none;
    long n_hit = -1;               // earliest n in [1, n_max] with dist <= eps
    int pole_index = -1;
    std::optional<T> distance;
    long failed_step = -1;         // first unverified step (outcome == unverified)
};

/// Earliest n in [1, n_max] with min_i |x_n - beta_i| <= eps. Hits are
/// counted from n = 1; the seed's own distance does not count. An exact
/// pole landing is a hit at distance zero. If verification fails before
/// the question is resolved the record says so instead of guessing.
template <typename T>
HitRecord<T> first_hit(const MapSpec<Rational>& map, const Rational& x0, const Rational& eps,
                       long n_max, const PrecisionPolicy& policy) {
    if (!(eps > Rational(0))) throw InvariantViolationError("first_hit: eps must be > 0");
    if (n_max < 1) throw InvariantViolationError("first_hit: n_max must be >= 1");
    detail::OrbitStream<T> stream(map, x0, policy);
    if (stream.state() == detail::StreamState::pole)
        throw PoleEvaluationError("first_hit: seed is a pole", stream.pole_index());

    HitRecord<T> rec;
    rec.x0 = x0;
    rec.eps = eps;
    rec.n_max = n_max;
    const T eps_t = detail::convert_scalar(eps, policy.bits, static_cast<const T*>(nullptr));
    while (stream.index() < n_max) {
        if (!stream.advance()) {
            rec.outcome = HitOutcome::unverified;
            rec.failed_step = stream.failed_step();
            return rec;
        }
        auto [dist, idx] = stream.spec().pole_distance(stream.value());
        if (dist <= eps_t) {
            rec.outcome = HitOutcome::hit;
            rec.n_hit = stream.index();
            rec.pole_index = idx;
            rec.distance = std::move(dist);
            return rec;
        }
    }
    rec.outcome = HitOutcome::none;
    return rec;
}

/// First j >= 1 with min_i |x_j - beta_i| < (1/2) min_i |x_0 - beta_i|.
/// Requires the seed at distance >= c1 = 2 (beta_m - beta_1) + 1 from the
/// poles, so it starts outside the pole region.
template <typename T>
long halving_time(const MapSpec<Rational>& map, const Rational& x0,
                  const PrecisionPolicy& policy) {
    Rational d0 = map.pole_distance(x0).first;
    Rational c1 = Rational(2) * (map.betas.back() - map.betas.front()) + Rational(1);
    if (d0 < c1)
        throw InvariantViolationError(
            "halving_time: seed must start at pole distance >= 2(beta_m - beta_1) + 1");

    // Descent removes about 2*alpha_sum from x^2 per step; 4x that is a
    // generous stop.
    double d0d = d0.to_double();
    long cap = static_cast<long>(4.0 * d0d * d0d / std::max(map.alpha_sum.to_double(), 1e-9)) + 1024;

    detail::OrbitStream<T> stream(map, x0, policy);
    const T target =
        half(detail::convert_scalar(d0, policy.bits, static_cast<const T*>(nullptr)));
    while (stream.index() < cap) {
        if (!stream.advance()) {
            if (stream.state() == detail::StreamState::pole) return stream.index();
            throw PrecisionExhaustedError("halving_time: verification failed at step " +
                                          std::to_string(stream.failed_step()));
        }
        if (stream.spec().pole_distance(stream.value()).first < target) return stream.index();
    }
    throw BudgetExceededError("halving_time: budget exhausted before halving (internal)");
}

/// |f(beta_j + delta)|. Contract: >= alpha_j / (2 |delta|) whenever
/// |delta| <= epsilon0(spec). delta may be negative to probe the left side.
template <typename T>
T escape_magnitude(const MapSpec<Rational>& map, int pole, const Rational& delta,
                   const PrecisionPolicy& policy) {
    if (pole < 0 || pole >= map.m())
        throw InvariantViolationError("escape_magnitude: pole index out of range");
    if (delta.is_zero()) throw InvariantViolationError("escape_magnitude: delta must be nonzero");
    Rational mag = abs(delta);
    if (map.pole_gap && !(mag < half(*map.pole_gap)))
        throw InvariantViolationError("escape_magnitude: |delta| must be below pole_gap / 2");
    if (!(mag <= epsilon0(map)))
        throw InvariantViolationError("escape_magnitude: |delta| must be below epsilon0");
    MapSpec<T> spec = materialize<T>(map, policy.bits);
    T x = detail::convert_scalar(map.betas[pole] + delta, policy.bits,
                                 static_cast<const T*>(nullptr));
    return abs(eval_map(spec, x));
}

inline bool is_graham(const MapSpec<Rational>& map) {
    return map.m() == 1 && map.alphas[0] == Rational(1) && map.betas[0] == Rational(0);
}

/// Sign itinerary of a Graham-map orbit: bit k is 0 when x_k > 0 and 1
/// when x_k < 0. Only defined for f(x) = x - 1/x, whose dynamics is
/// conjugate to the doubling map; the bits behave like binary digits of
/// the conjugated angle. Unverified bits are refused rather than returned.
template <typename T>
std::vector<int> itinerary(const MapSpec<Rational>& map, const Rational& x0, long n,
                           const PrecisionPolicy& policy) {
    if (!is_graham(map))
        throw InvariantViolationError("itinerary: defined only for the Graham map (alpha=1, beta=0)");
    Orbit<T> orbit = iterate<T>(map, x0, n, policy);
    if (orbit.status == OrbitStatus::pole_hit)
        throw PoleEvaluationError("itinerary: iterate " + std::to_string(orbit.pole_step) +
                                  " is exactly 0");
    if (orbit.status == OrbitStatus::precision_exhausted ||
        (orbit.shadow_checked && orbit.verified_through < n))
        throw PrecisionExhaustedError("itinerary: orbit not verified through step " +
                                      std::to_string(n));
    std::vector<int> bits;
    bits.reserve(orbit.values.size());
    for (const T& v : orbit.values) bits.push_back(v.sign() < 0 ? 1 : 0);
    return bits;
}

/// Binary-expansion readout of the itinerary:
/// theta = sum_k bit_k 2^{-k-1} in [0, 1). Computed exactly (dyadic).
template <typename T>
T theta_estimate(const MapSpec<Rational>& map, const Rational& x0, long n,
                 const PrecisionPolicy& policy) {
    std::vector<int> bits = itinerary<T>(map, x0, n, policy);
    long prec = std::max<long>(policy.bits, n + 8);
    T theta = [&] {
        if constexpr (std::is_same_v<T, Rational>)
            return Rational(0);
        else
            return BigFloat(0, prec);
    }();
    T one = make_scalar(theta, 1);
    for (size_t k = 0; k < bits.size(); ++k)
        if (bits[k]) theta += mul_pow2(one, -static_cast<long>(k) - 1);
    return theta;
}

} // namespace poledyn
