#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bigfloat.hpp"
#include "errors.hpp"
#include "precision.hpp"
#include "rational.hpp"

namespace poledyn {

/// Parameters of f(x) = x - sum_i alpha_i / (x - beta_i), with cached
/// derived constants. Immutable after creation; validation happens in
/// create(). The exact-rational instantiation MapSpec<Rational> is the
/// canonical description; big-float instantiations are derived from it at
/// a chosen precision (see materialize()).
template <typename T>
struct MapSpec {
    std::vector<T> alphas;      // all > 0
    std::vector<T> betas;       // strictly increasing
    T alpha_sum;                // sum of alphas
    std::optional<T> pole_gap;  // min consecutive pole distance; empty when m == 1 (infinite)

    int m() const { return static_cast<int>(alphas.size()); }

    static MapSpec create(std::vector<T> alphas, std::vector<T> betas) {
        if (alphas.empty() || alphas.size() != betas.size())
            throw InvariantViolationError(
                "MapSpec: alphas and betas must be non-empty lists of equal length");
        MapSpec spec;
        T zero = make_scalar(alphas.front(), 0);
        for (size_t i = 0; i < alphas.size(); ++i) {
            if (!(alphas[i] > zero))
                throw InvariantViolationError("MapSpec: alphas[" + std::to_string(i) +
                                              "] must be > 0 (maps like x + 1/x are excluded)");
        }
        for (size_t i = 1; i < betas.size(); ++i) {
            if (!(betas[i - 1] < betas[i]))
                throw InvariantViolationError(
                    "MapSpec: betas must be strictly increasing and distinct; "
                    "sort them ascending and remove duplicates");
        }
        spec.alpha_sum = zero;
        for (const T& a : alphas) spec.alpha_sum += a;
        if (betas.size() >= 2) {
            T gap = betas[1] - betas[0];
            for (size_t i = 2; i < betas.size(); ++i) gap = std::min(gap, betas[i] - betas[i - 1]);
            spec.pole_gap = gap;
        }
        spec.alphas = std::move(alphas);
        spec.betas = std::move(betas);
        return spec;
    }

    bool is_pole(const T& x) const {
        for (const T& b : betas)
            if (x == b) return true;
        return false;
    }

    /// Index of the pole equal to x, or -1.
    int pole_index_of(const T& x) const {
        for (size_t i = 0; i < betas.size(); ++i)
            if (x == betas[i]) return static_cast<int>(i);
        return -1;
    }

    /// min_i |x - beta_i| together with the achieving index.
    std::pair<T, int> pole_distance(const T& x) const {
        T best = abs(x - betas[0]);
        int idx = 0;
        for (size_t i = 1; i < betas.size(); ++i) {
            T d = abs(x - betas[i]);
            if (d < best) {
                best = d;
                idx = static_cast<int>(i);
            }
        }
        return {std::move(best), idx};
    }
};

namespace detail {
inline BigFloat convert_scalar(const Rational& x, long bits, const BigFloat*) {
    return x.to_bigfloat(bits);
}
inline Rational convert_scalar(const Rational& x, long, const Rational*) { return x; }
} // namespace detail

/// Instantiate an exact map description at a working precision.
template <typename T>
MapSpec<T> materialize(const MapSpec<Rational>& exact, long bits) {
    std::vector<T> alphas, betas;
    alphas.reserve(exact.alphas.size());
    betas.reserve(exact.betas.size());
    for (const Rational& a : exact.alphas)
        alphas.push_back(detail::convert_scalar(a, bits, static_cast<const T*>(nullptr)));
    for (const Rational& b : exact.betas)
        betas.push_back(detail::convert_scalar(b, bits, static_cast<const T*>(nullptr)));
    try {
        return MapSpec<T>::create(std::move(alphas), std::move(betas));
    } catch (const InvariantViolationError& e) {
        throw PrecisionExhaustedError(std::string("map parameters degenerate at ") +
                                      std::to_string(bits) + " bits: " + e.what());
    }
}

/// One of the m+1 maximal open intervals between consecutive poles (or
/// beyond the extreme poles). On each branch f' = 1 + sum alpha_i/(x-beta_i)^2
/// exceeds 1, so f is strictly increasing there, and f runs from -inf (at the
/// left end: pole asymptote or x -> -inf) to +inf (right end); every branch is
/// therefore a bijection onto the reals. That monotonicity is what makes
/// bracketed bisection a total, spurious-root-free preimage algorithm.
template <typename T>
struct Branch {
    int index = 0;            // 0..m
    std::optional<T> lower;   // beta[index-1], empty for index 0
    std::optional<T> upper;   // beta[index], empty for index m
};

template <typename T>
Branch<T> branch_at(const MapSpec<T>& spec, int index) {
    Branch<T> br;
    br.index = index;
    if (index < 0 || index > spec.m())
        throw InvariantViolationError("branch index out of range");
    if (index > 0) br.lower = spec.betas[index - 1];
    if (index < spec.m()) br.upper = spec.betas[index];
    return br;
}

/// f(x). Throws PoleEvaluationError when x equals a pole exactly.
template <typename T>
T eval_map(const MapSpec<T>& spec, const T& x) {
    T acc = x;
    for (size_t i = 0; i < spec.alphas.size(); ++i) {
        T d = x - spec.betas[i];
        if (d.is_zero())
            throw PoleEvaluationError("f evaluated at pole beta[" + std::to_string(i) + "]",
                                      static_cast<int>(i));
        acc -= spec.alphas[i] / d;
    }
    return acc;
}

/// f'(x) = 1 + sum alpha_i/(x - beta_i)^2 > 1.
template <typename T>
T eval_derivative(const MapSpec<T>& spec, const T& x) {
    T acc = make_scalar(x, 1);
    for (size_t i = 0; i < spec.alphas.size(); ++i) {
        T d = x - spec.betas[i];
        if (d.is_zero())
            throw PoleEvaluationError("f' evaluated at pole beta[" + std::to_string(i) + "]",
                                      static_cast<int>(i));
        acc += spec.alphas[i] / (d * d);
    }
    return acc;
}

/// The unique branch whose open interval contains x.
template <typename T>
Branch<T> branch_of(const MapSpec<T>& spec, const T& x) {
    if (spec.is_pole(x))
        throw PoleEvaluationError("branch_of at pole", spec.pole_index_of(x));
    auto it = std::upper_bound(spec.betas.begin(), spec.betas.end(), x);
    return branch_at(spec, static_cast<int>(it - spec.betas.begin()));
}

template <typename T>
struct PreimageResult {
    T point;  // best approximation of f^{-1}(y) in the branch
    T lo, hi; // final bisection bracket, point in [lo, hi]
};

namespace detail {

// Residual target |f(x) - y| <= 2^(-bits/2) * max(1, |y|).
template <typename T>
T residual_target(const T& y, long bits) {
    T one = make_scalar(y, 1);
    T scale = abs(y);
    if (scale < one) scale = one;
    return mul_pow2(scale, -(bits / 2));
}

// Shrink toward the pole `p` from starting offset `w` until pred(p +- w)
// holds; used on the branch side whose wall is a pole asymptote.
template <typename T, typename Pred>
T approach_pole(const T& p, T w, bool from_above, Pred&& pred, long max_steps) {
    for (long step = 0; step < max_steps; ++step) {
        T c = from_above ? p + w : p - w;
        if (c == p)
            throw PrecisionExhaustedError(
                "bracket endpoint collapsed onto a pole at this precision");
        if (pred(c)) return c;
        w = half(w);
    }
    throw BracketFailureError("bracket search toward a pole exceeded its step bound");
}

// Expand outward from the extreme pole until pred(p +- w) holds; used on
// the two unbounded branch sides where f(x) ~ x.
template <typename T, typename Pred>
T expand_outward(const T& p, T w, bool upward, Pred&& pred, long max_steps) {
    for (long step = 0; step < max_steps; ++step) {
        T c = upward ? p + w : p - w;
        if (pred(c)) return c;
        w = w + w;
    }
    throw BracketFailureError("outward bracket expansion exceeded its step bound");
}

} // namespace detail

/// The unique x in the branch with f(x) = y, by bisection with a bracket
/// that is guaranteed to exist (each branch is increasing and onto).
/// Residual contract: |f(point) - y| <= 2^(-bits/2) * max(1, |y|).
template <typename T>
PreimageResult<T> preimage_bracket_in_branch(const MapSpec<T>& spec, const T& y,
                                             const Branch<T>& br,
                                             const PrecisionPolicy& policy) {
    const long max_steps = 16384 + 4 * policy.bits;
    const T tol = detail::residual_target(y, policy.bits);
    auto f_le_y = [&](const T& c) { return eval_map(spec, c) <= y; };
    auto f_ge_y = [&](const T& c) { return eval_map(spec, c) >= y; };

    // Starting offset: half the pole gap, or 1 for the single-pole family.
    T start = spec.pole_gap ? half(*spec.pole_gap) : make_scalar(y, 1);

    T lo = make_scalar(y, 0), hi = lo;
    if (br.lower && br.upper) {
        T mid_w = half(half(*br.upper - *br.lower));
        T mid = *br.lower + mid_w + mid_w; // branch midpoint
        if (mid == *br.lower || mid == *br.upper)
            throw PrecisionExhaustedError(
                "branch too narrow to represent interior points at this precision");
        lo = f_le_y(mid) ? mid : detail::approach_pole(*br.lower, mid_w, true, f_le_y, max_steps);
        hi = f_ge_y(mid) ? mid : detail::approach_pole(*br.upper, mid_w, false, f_ge_y, max_steps);
    } else if (br.lower) { // (beta_m, +inf)
        lo = detail::approach_pole(*br.lower, start, true, f_le_y, max_steps);
        hi = detail::expand_outward(*br.lower, start, true, f_ge_y, max_steps);
    } else if (br.upper) { // (-inf, beta_1)
        lo = detail::expand_outward(*br.upper, start, false, f_le_y, max_steps);
        hi = detail::approach_pole(*br.upper, start, false, f_ge_y, max_steps);
    } else {
        throw InvariantViolationError("branch without bounds");
    }
    if (hi < lo) std::swap(lo, hi); // both sides may have stopped at the same probe

    // |f(x) - y| <= tol and f' > 1 pin the root inside [x - tol, x + tol],
    // so the returned bracket is at most 2 tol wide however early the
    // residual target is met.
    auto accept = [&](const T& x) -> PreimageResult<T> {
        T lo_t = std::max(lo, x - tol);
        T hi_t = std::min(hi, x + tol);
        return {x, std::move(lo_t), std::move(hi_t)};
    };
    for (long step = 0; step < max_steps; ++step) {
        T mid = half(lo + hi);
        if (!(lo < mid) || !(mid < hi)) {
            // Bracket cannot shrink further at this precision.
            for (const T* c : {&lo, &hi}) {
                T r = abs(eval_map(spec, *c) - y);
                if (r <= tol) return accept(*c);
            }
            throw PrecisionExhaustedError(
                "preimage residual target unreachable at this precision");
        }
        T fm = eval_map(spec, mid);
        if (abs(fm - y) <= tol) return accept(mid);
        if (fm < y)
            lo = std::move(mid);
        else
            hi = std::move(mid);
    }
    throw BracketFailureError("bisection exceeded its step bound");
}

template <typename T>
T preimage_in_branch(const MapSpec<T>& spec, const T& y, const Branch<T>& br,
                     const PrecisionPolicy& policy) {
    return preimage_bracket_in_branch(spec, y, br, policy).point;
}

/// All m+1 preimages of y, one per branch, sorted increasing and strictly
/// interlaced with the poles: x_0 < beta_1 < x_1 < ... < beta_m < x_m.
template <typename T>
std::vector<T> preimages_all(const MapSpec<T>& spec, const T& y, const PrecisionPolicy& policy) {
    std::vector<T> out;
    out.reserve(spec.m() + 1);
    for (int i = 0; i <= spec.m(); ++i)
        out.push_back(preimage_in_branch(spec, y, branch_at(spec, i), policy));
    for (int i = 0; i < spec.m(); ++i) {
        if (!(out[i] < spec.betas[i]) || !(spec.betas[i] < out[i + 1]))
            throw BracketFailureError("preimages failed to interlace the poles (internal)");
    }
    return out;
}

/// Certified escape threshold eps0: for every pole j and every
/// 0 < delta <= eps0, |f(beta_j +- delta)| >= alpha_j / (2 delta).
///
/// Near beta_j, f(beta_j +- delta) = -+ alpha_j/delta + NS where
/// |NS| <= |beta_j| + delta + sum_{i != j} alpha_i / (|beta_j - beta_i| - delta).
/// delta * NS(delta) is increasing in delta, so certifying
/// eps0 * NS(eps0) <= alpha_j / 2 certifies every smaller delta. The
/// candidate starts from a closed-form bound and is halved until the
/// certificate holds; the certified value is what gets reported.
template <typename T>
T epsilon0(const MapSpec<T>& spec) {
    const int m = spec.m();
    if (m < 1) throw InvariantViolationError("epsilon0: map has no poles");
    const T one = make_scalar(spec.alpha_sum, 1);
    const T four = make_scalar(spec.alpha_sum, 4);

    T beta_abs_max = abs(spec.betas[0]);
    for (const T& b : spec.betas) beta_abs_max = std::max(beta_abs_max, abs(b));

    T candidate = spec.alphas[0];
    for (int j = 0; j < m; ++j) {
        T denom = one + beta_abs_max;
        if (spec.pole_gap)
            for (int i = 0; i < m; ++i)
                if (i != j) denom += spec.alphas[i] / *spec.pole_gap;
        T cj = spec.alphas[j] / (four * denom);
        if (j == 0 || cj < candidate) candidate = cj;
    }
    if (spec.pole_gap) candidate = std::min(candidate, half(half(*spec.pole_gap)));

    auto certified = [&](const T& eps) {
        for (int j = 0; j < m; ++j) {
            T ns = abs(spec.betas[j]) + eps;
            for (int i = 0; i < m; ++i) {
                if (i == j) continue;
                T d = abs(spec.betas[j] - spec.betas[i]) - eps;
                if (!(d > make_scalar(eps, 0))) return false;
                ns += spec.alphas[i] / d;
            }
            if (eps * ns > half(spec.alphas[j])) return false;
        }
        return true;
    };
    for (int round = 0; round < 512; ++round) {
        if (certified(candidate)) return candidate;
        candidate = half(candidate);
    }
    throw Error("epsilon0 certification failed to converge (internal)");
}

} // namespace poledyn
