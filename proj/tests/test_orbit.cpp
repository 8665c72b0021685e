#include <doctest.h>

#include <poledyn/map.hpp>
#include <poledyn/orbit.hpp>
#include <poledyn/rng.hpp>

#include <cmath>
#include <vector>

using namespace poledyn;

namespace {

MapSpec<Rational> graham() {
    return MapSpec<Rational>::create({Rational(1)}, {Rational(0)});
}

MapSpec<Rational> two_pole() {
    return MapSpec<Rational>::create({Rational(1), Rational(1)}, {Rational(-1), Rational(1)});
}

PrecisionPolicy rational_policy() {
    PrecisionPolicy p;
    p.mode = NumberMode::exact_rational;
    return p;
}

// Independent double-precision descent oracle: first n >= 1 with |x_n| <= eps.
long double_first_hit(double x0, double eps, long n_max) {
    double x = x0;
    for (long n = 1; n <= n_max; ++n) {
        x = x - 1.0 / x;
        if (std::abs(x) <= eps) return n;
    }
    return -1;
}

} // namespace

TEST_CASE("iterate exact rational example") {
    Orbit<Rational> orbit = iterate<Rational>(graham(), Rational(2), 3, rational_policy());
    REQUIRE(orbit.values.size() == 4);
    CHECK(orbit.values[0] == Rational(2));
    CHECK(orbit.values[1] == Rational(3, 2));
    CHECK(orbit.values[2] == Rational(5, 6));
    CHECK(orbit.values[3] == Rational(-11, 30));
    CHECK(orbit.status == OrbitStatus::ok);
    CHECK(orbit.verified_through == 3); // exact arithmetic is self-verifying
}

TEST_CASE("iterate big float matches the exact orbit") {
    PrecisionPolicy p;
    p.bits = 256;
    Orbit<BigFloat> orbit = iterate<BigFloat>(graham(), Rational(2), 3, p);
    REQUIRE(orbit.values.size() == 4);
    CHECK(abs(orbit.values[3] - Rational(-11, 30).to_bigfloat(256)) <= BigFloat::pow2(-240, 64));
    CHECK(orbit.shadow_checked);
    CHECK(orbit.verified_through == 3);
    // per-step invariant: values[k+1] is exactly eval_map(values[k]) at working precision
    MapSpec<BigFloat> gb = materialize<BigFloat>(graham(), 256);
    for (size_t k = 0; k + 1 < orbit.values.size(); ++k)
        CHECK(eval_map(gb, orbit.values[k]) == orbit.values[k + 1]);
}

TEST_CASE("far seeds move toward the poles") {
    for (double x0 : {50.0, 300.0, 7.25}) {
        Orbit<Rational> orbit =
            iterate<Rational>(graham(), Rational::from_double(x0), 1, rational_policy());
        CHECK(orbit.values[1] < orbit.values[0]);
    }
    Orbit<Rational> tp =
        iterate<Rational>(two_pole(), Rational(25), 1, rational_policy());
    CHECK(tp.values[1] < tp.values[0]);
}

TEST_CASE("iterate truncates on an exact pole landing") {
    Orbit<Rational> orbit = iterate<Rational>(graham(), Rational(1), 2, rational_policy());
    REQUIRE(orbit.values.size() == 2); // f(1) = 0 is the pole; f(0) undefined
    CHECK(orbit.values[1] == Rational(0));
    CHECK(orbit.status == OrbitStatus::pole_hit);
    CHECK(orbit.pole_step == 1);
    CHECK(orbit.pole_index == 0);

    PrecisionPolicy p;
    p.bits = 128;
    Orbit<BigFloat> ob = iterate<BigFloat>(graham(), Rational(1), 2, p);
    CHECK(ob.status == OrbitStatus::pole_hit);
    CHECK(ob.values.size() == 2);

    CHECK_THROWS_AS(iterate<Rational>(graham(), Rational(0), 1, rational_policy()),
                    PoleEvaluationError);
}

TEST_CASE("exact mode stops at the bit budget") {
    PrecisionPolicy p = rational_policy();
    p.rational_bit_budget = 256;
    Orbit<Rational> orbit = iterate<Rational>(graham(), Rational(2), 500, p);
    CHECK(orbit.status == OrbitStatus::precision_exhausted);
    CHECK(orbit.steps() < 500);
    CHECK(orbit.steps() > 2);
}

TEST_CASE("shadow_verify full agreement and chaotic divergence") {
    PrecisionPolicy p;
    p.bits = 256;
    p.shadow_margin_bits = 128;
    CHECK(shadow_verify<BigFloat>(graham(), Rational(2), 20, p) == 20);
    CHECK(shadow_verify<BigFloat>(graham(), Rational(2), 0, p) == 0);

    // The orbit of 2 bounces in the pole region for ~20 steps (losing a bit
    // per step), then rides a long quadratic descent from |x| ~ 24.6 where
    // almost nothing is lost. Agreement at near-full 128-bit accuracy
    // therefore breaks in the chaotic transient, not at step ~128.
    PrecisionPolicy low;
    low.bits = 128;
    low.shadow_margin_bits = 384;
    low.shadow_agreement_tol = std::pow(2.0, -100);
    long verified = shadow_verify<BigFloat>(graham(), Rational(2), 300, low);
    CHECK(verified < 300);
    CHECK(verified >= 10);
    CHECK(verified <= 40);
}

TEST_CASE("first_hit examples") {
    PrecisionPolicy p;
    p.bits = 256;

    HitRecord<BigFloat> rec =
        first_hit<BigFloat>(graham(), Rational(2), Rational(1, 2), 10, p);
    CHECK(rec.outcome == HitOutcome::hit);
    CHECK(rec.n_hit == 3);
    CHECK(rec.pole_index == 0);
    REQUIRE(rec.distance.has_value());
    CHECK(abs(*rec.distance - Rational(11, 30).to_bigfloat(256)) <= BigFloat::pow2(-240, 64));

    HitRecord<Rational> rex =
        first_hit<Rational>(graham(), Rational(2), Rational(1, 2), 10, rational_policy());
    CHECK(rex.outcome == HitOutcome::hit);
    CHECK(*rex.distance == Rational(11, 30));

    CHECK(first_hit<BigFloat>(graham(), Rational(2), Rational(1, 100), 1, p).outcome ==
          HitOutcome::none);

    // x0 = 10, eps = 1: the x^2 heuristic predicts ~(100-1)/2 steps
    HitRecord<BigFloat> far = first_hit<BigFloat>(graham(), Rational(10), Rational(1), 200, p);
    CHECK(far.outcome == HitOutcome::hit);
    CHECK(far.n_hit >= 40);
    CHECK(far.n_hit <= 60);
    CHECK(far.n_hit == double_first_hit(10.0, 1.0, 200)); // descent oracle
}

TEST_CASE("first_hit counts hits from n = 1 only") {
    // Seed already within eps of the pole, but the first *iterate* is far.
    PrecisionPolicy p;
    p.bits = 128;
    HitRecord<BigFloat> rec =
        first_hit<BigFloat>(graham(), Rational(1, 100), Rational(1, 10), 1, p);
    CHECK(rec.outcome == HitOutcome::none); // f(0.01) ~ -99.99
}

TEST_CASE("first_hit reports unverified instead of guessing") {
    PrecisionPolicy low;
    low.bits = 64;
    low.shadow_margin_bits = 64;
    HitRecord<BigFloat> rec =
        first_hit<BigFloat>(graham(), Rational(2), Rational(1, 1000000), 5000, low);
    CHECK(rec.outcome == HitOutcome::unverified);
    CHECK(rec.failed_step > 0);
}

TEST_CASE("halving_time obeys the slow-approach lower bound") {
    // x^2/(4 alpha_sum) steps are needed before the pole distance halves.
    PrecisionPolicy p;
    p.bits = 512;
    for (double x0 : {10.0, 20.0}) {
        long j = halving_time<BigFloat>(graham(), Rational::from_double(x0), p);
        CHECK(j >= static_cast<long>(x0 * x0 / 4.0));
        CHECK(j >= static_cast<long>(0.3 * x0 * x0));
        CHECK(j <= static_cast<long>(0.5 * x0 * x0));
        // oracle: x^2 drops by about 2 per step until distance halves
        double x = x0;
        long oracle = 0;
        while (std::abs(x) >= x0 / 2.0) {
            x -= 1.0 / x;
            ++oracle;
        }
        CHECK(j == oracle);
    }
    // odd symmetry: f is odd for the single-pole map at beta = 0
    CHECK(halving_time<BigFloat>(graham(), Rational(-10), p) ==
          halving_time<BigFloat>(graham(), Rational(10), p));
    CHECK_THROWS_AS(halving_time<BigFloat>(graham(), Rational(1, 2), p),
                    InvariantViolationError);
}

TEST_CASE("escape magnitude near poles") {
    PrecisionPolicy p = rational_policy();
    // |f(0.01)| = 99.99 >= 1/(2 * 0.01) = 50
    Rational e1 = escape_magnitude<Rational>(graham(), 0, Rational(1, 100), p);
    CHECK(e1 == Rational(9999, 100));
    CHECK(e1 >= Rational(50));
    Rational e2 = escape_magnitude<Rational>(graham(), 0, Rational(1, 1000), p);
    CHECK(e2 == Rational(999999, 1000));
    CHECK(e2 >= Rational(500));
    // left side
    CHECK(escape_magnitude<Rational>(graham(), 0, Rational(-1, 100), p) == Rational(9999, 100));

    // two-pole map near beta = 1
    Rational e3 = escape_magnitude<Rational>(two_pole(), 1, Rational(1, 100), p);
    CHECK(e3 >= Rational(50));
    CHECK(std::abs(e3.to_double() - 99.4875) < 0.01);

    CHECK_THROWS_AS(escape_magnitude<Rational>(graham(), 0, Rational(1), p),
                    InvariantViolationError); // above epsilon0
    CHECK_THROWS_AS(escape_magnitude<Rational>(graham(), 2, Rational(1, 100), p),
                    InvariantViolationError); // bad pole index
}

TEST_CASE("itinerary and theta examples") {
    PrecisionPolicy p = rational_policy();
    CHECK(itinerary<Rational>(graham(), Rational(2), 3, p) == std::vector<int>{0, 0, 0, 1});
    CHECK(itinerary<Rational>(graham(), Rational(-2), 3, p) == std::vector<int>{1, 1, 1, 0});
    CHECK(itinerary<Rational>(graham(), Rational(2), 0, p) == std::vector<int>{0});
    CHECK_THROWS_AS(itinerary<Rational>(graham(), Rational(1), 3, p), PoleEvaluationError);
    CHECK_THROWS_AS(itinerary<Rational>(two_pole(), Rational(2), 3, p),
                    InvariantViolationError);

    CHECK(theta_estimate<Rational>(graham(), Rational(2), 3, p) == Rational(1, 16));

    PrecisionPolicy pb;
    pb.bits = 256;
    CHECK(theta_estimate<BigFloat>(graham(), Rational(2), 3, pb) ==
          Rational(1, 16).to_bigfloat(64));
}

TEST_CASE("theta doubles under the map (shift identity)") {
    PrecisionPolicy p = rational_policy();
    p.rational_bit_budget = 1L << 23; // exact orbit bits double per step
    for (long n : {12L, 20L}) {
        Rational theta_x = theta_estimate<Rational>(graham(), Rational(2), n, p);
        Rational fx = eval_map(graham(), Rational(2));
        Rational theta_fx = theta_estimate<Rational>(graham(), fx, n, p);
        Rational doubled = Rational(2) * theta_x;
        if (doubled >= Rational(1)) doubled -= Rational(1);
        CHECK(abs(theta_fx - doubled) <= mul_pow2(Rational(1), -n));
    }
    // big-float route reaches n = 30 comfortably: the seed f(2) rounded at
    // 256 bits has the same first 31 itinerary bits as the exact value
    PrecisionPolicy pb;
    pb.bits = 256;
    BigFloat theta_x = theta_estimate<BigFloat>(graham(), Rational(2), 30, pb);
    BigFloat theta_fx = theta_estimate<BigFloat>(graham(), Rational(3, 2), 30, pb);
    BigFloat doubled = mul_pow2(theta_x, 1);
    if (doubled >= BigFloat(1, 64)) doubled -= BigFloat(1, 256);
    CHECK(abs(theta_fx - doubled) <= BigFloat::pow2(-30, 64));
    // odd symmetry swaps all bits: theta(-x) = 1 - 2^{-n-1} - theta(x)
    long n = 12;
    Rational t = theta_estimate<Rational>(graham(), Rational(2), n, p);
    Rational tn = theta_estimate<Rational>(graham(), Rational(-2), n, p);
    CHECK(tn == Rational(1) - mul_pow2(Rational(1), -n - 1) - t);
}

TEST_CASE("theta is weakly monotone along the circle ordering of seeds") {
    // Empirically theta decreases from ~1/2 to 0 as x runs through
    // (0, inf), and from ~1 to 1/2 on (-inf, 0); the two arcs join into a
    // single monotone sweep of the circle. Checked, not proven.
    PrecisionPolicy p;
    p.bits = 256;
    MapSpec<Rational> g = graham();
    const double grid[] = {0.05, 0.2, 0.5, 0.9, 1.3, 2.0, 3.5, 6.0, 12.0, 40.0};
    const BigFloat slack = BigFloat::pow2(-18, 64); // finite-n ties wobble
    BigFloat prev_pos(2, 64), prev_neg(-1, 64);
    for (double s : grid) {
        // walking s upward runs x = s down the positive arc (theta falls
        // 1/2 -> 0) and x = -s down the negative arc (theta rises 1/2 -> 1)
        BigFloat tp = theta_estimate<BigFloat>(g, Rational::from_double(s), 20, p);
        BigFloat tn = theta_estimate<BigFloat>(g, Rational::from_double(-s), 20, p);
        CHECK(tp <= prev_pos + slack);
        CHECK(tn >= prev_neg - slack);
        CHECK(tp < half(BigFloat(1, 64)).nudged_up());
        CHECK(tn >= half(BigFloat(1, 64)).nudged_down());
        prev_pos = tp;
        prev_neg = tn;
    }
}

TEST_CASE("shift commutation of itineraries") {
    PrecisionPolicy p = rational_policy();
    p.rational_bit_budget = 1L << 22;
    CounterRng rng{101};
    int tested = 0;
    for (int i = 0; i < 30 && tested < 20; ++i) {
        // small rational seeds keep the exact orbit bit growth tame
        long num = static_cast<long>(rng.word(2 * i) % 6000) - 3000;
        long den = 1 + static_cast<long>(rng.word(2 * i + 1) % 1000);
        if (num == 0) continue;
        Rational x0(num, den);
        std::vector<int> full, shifted;
        try {
            full = itinerary<Rational>(graham(), x0, 12, p);
            shifted = itinerary<Rational>(graham(), eval_map(graham(), x0), 11, p);
        } catch (const PoleEvaluationError&) {
            continue;
        }
        REQUIRE(full.size() == 13);
        REQUIRE(shifted.size() == 12);
        for (size_t k = 0; k < shifted.size(); ++k) CHECK(shifted[k] == full[k + 1]);
        ++tested;
    }
    CHECK(tested >= 20);
}

TEST_CASE("odd symmetry of the single-pole orbit (exact)") {
    PrecisionPolicy p = rational_policy();
    CounterRng rng{55};
    for (int i = 0; i < 10; ++i) {
        Rational x0 = Rational::from_double(rng.symmetric(i, 5.0) + 6.0); // avoid tiny seeds
        Orbit<Rational> plus = iterate<Rational>(graham(), x0, 12, p);
        Orbit<Rational> minus = iterate<Rational>(graham(), -x0, 12, p);
        REQUIRE(plus.values.size() == minus.values.size());
        for (size_t k = 0; k < plus.values.size(); ++k)
            CHECK(minus.values[k] == -plus.values[k]);
    }
}

TEST_CASE("quadratic descent: x_n^2 + 2 alpha_sum n tracks x0^2") {
    PrecisionPolicy p;
    p.bits = 256;
    const double x0 = 12.0; // beyond beta_m + 10 alpha_sum
    Orbit<BigFloat> orbit = iterate<BigFloat>(graham(), Rational(12), 80, p);
    const BigFloat two(2, 256);
    const BigFloat threshold(2, 256); // beta_m + 2
    const BigFloat budget = BigFloat::from_double(0.25 * x0 * x0, 256);
    const BigFloat x0sq = BigFloat::from_double(x0 * x0, 256);
    for (size_t n = 0; n < orbit.values.size(); ++n) {
        if (orbit.values[n] <= threshold) break;
        BigFloat drift =
            abs(orbit.values[n] * orbit.values[n] + two * BigFloat(static_cast<long>(n), 256) -
                x0sq);
        CHECK(drift <= budget);
    }
}

TEST_CASE("exact mode reproduces big-float mode on descent orbits") {
    // Seeds in the descent regime lose almost no precision, so the two
    // modes agree to 2^(-bits+4) relative over a few dozen steps. (Exact
    // orbits double their bit length per step; n = 24 keeps values small.)
    PrecisionPolicy pb;
    pb.bits = 256;
    PrecisionPolicy pr = rational_policy();
    pr.rational_bit_budget = 1L << 26;
    const long n = 20;
    for (const Rational& x0 : {Rational(10), Rational(25, 2), Rational(-31, 3)}) {
        Orbit<BigFloat> fb = iterate<BigFloat>(graham(), x0, n, pb);
        Orbit<Rational> fr = iterate<Rational>(graham(), x0, n, pr);
        REQUIRE(fb.values.size() == static_cast<size_t>(n + 1));
        REQUIRE(fr.values.size() == static_cast<size_t>(n + 1));
        for (size_t k = 0; k < fb.values.size(); ++k) {
            BigFloat exact = fr.values[k].to_bigfloat(512);
            BigFloat scale = std::max(abs(exact), BigFloat(1, 64));
            CHECK(abs(fb.values[k] - exact) <= mul_pow2(scale, -pb.bits + 4));
        }
    }
}

TEST_CASE("monobit fractions: symmetric mean, arcsine-like spread") {
    // The sign process is null recurrent (long constant-sign descents), so
    // per-seed 1-bit fractions over a 200-step window spread toward 0 and
    // 1 rather than concentrating at 1/2. What *is* stable: the mean over
    // a symmetric seed ensemble, by the map's odd symmetry.
    PrecisionPolicy p = PrecisionPolicy::for_steps(200);
    CounterRng rng{777};
    double sum = 0, lo = 1, hi = 0;
    int total = 0;
    for (int i = 0; total < 20 && i < 30; ++i) {
        Rational x0 = Rational::from_double(rng.symmetric(i, 3.0));
        if (x0.is_zero()) continue;
        std::vector<int> bits;
        try {
            bits = itinerary<BigFloat>(graham(), x0, 200, p);
        } catch (const PoleEvaluationError&) {
            continue;
        }
        ++total;
        long ones = 0;
        for (int b : bits) ones += b;
        double frac = static_cast<double>(ones) / static_cast<double>(bits.size());
        sum += frac;
        lo = std::min(lo, frac);
        hi = std::max(hi, frac);
    }
    CHECK(total == 20);
    CHECK(sum / total >= 0.25);
    CHECK(sum / total <= 0.75);
    CHECK(hi - lo >= 0.2); // occupation-time spread, not CLT concentration
}
