#pragma once

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "map.hpp"
#include "precision.hpp"

namespace poledyn {

template <typename T>
struct Interval {
    T a, b; // closed, a <= b
};

/// Finite union of disjoint closed intervals, sorted, with cached total
/// measure. Construction merges overlapping or nearly-touching pieces:
/// endpoints separated by at most 4 ulps are considered indistinguishable
/// at working precision, and such merges are counted so callers can flag a
/// run whose precision was insufficient (exact-rational sets only merge on
/// genuine overlap).
template <typename T>
class IntervalSet {
public:
    IntervalSet() = default;

    static IntervalSet empty() { return IntervalSet(); }

    static IntervalSet normalized(std::vector<Interval<T>> raw) {
        IntervalSet set;
        if (raw.empty()) return set;
        for (const auto& iv : raw)
            if (iv.b < iv.a) throw InvariantViolationError("interval with b < a");
        std::sort(raw.begin(), raw.end(),
                  [](const Interval<T>& x, const Interval<T>& y) {
                      return x.a < y.a || (x.a == y.a && x.b < y.b);
                  });
        Interval<T> cur = raw.front();
        const T four = make_scalar(cur.a, 4);
        for (size_t i = 1; i < raw.size(); ++i) {
            const Interval<T>& nxt = raw[i];
            bool merge = false;
            if (nxt.a <= cur.b) {
                merge = true;
            } else {
                T gap = nxt.a - cur.b;
                T scale = std::max(abs(cur.b), abs(nxt.a));
                if (gap <= four * ulp_at(scale)) merge = true;
            }
            if (merge) {
                if (cur.b < nxt.b) cur.b = nxt.b;
                ++set.merge_events_;
            } else {
                set.intervals_.push_back(std::move(cur));
                cur = nxt;
            }
        }
        set.intervals_.push_back(std::move(cur));
        set.recompute_measure();
        return set;
    }

    const std::vector<Interval<T>>& intervals() const { return intervals_; }
    size_t size() const { return intervals_.size(); }
    bool is_empty() const { return intervals_.empty(); }
    const T& measure() const { return measure_; }
    int merge_events() const { return merge_events_; }

    bool contains(const T& x) const {
        auto it = std::upper_bound(intervals_.begin(), intervals_.end(), x,
                                   [](const T& v, const Interval<T>& iv) { return v < iv.a; });
        if (it == intervals_.begin()) return false;
        --it;
        return x <= it->b;
    }

    /// Whether x lies within `ulps` representable steps of any endpoint;
    /// the exclusion test for cross-oracle membership comparisons.
    bool near_endpoint(const T& x, long ulps) const {
        if (intervals_.empty()) return false;
        auto it = std::upper_bound(intervals_.begin(), intervals_.end(), x,
                                   [](const T& v, const Interval<T>& iv) { return v < iv.a; });
        size_t hi_idx = static_cast<size_t>(it - intervals_.begin());
        T k = make_scalar(x, ulps);
        for (size_t idx = hi_idx > 1 ? hi_idx - 2 : 0;
             idx < intervals_.size() && idx <= hi_idx + 1; ++idx) {
            for (const T* e : {&intervals_[idx].a, &intervals_[idx].b})
                if (abs(x - *e) <= k * ulp_at(*e)) return true;
        }
        return false;
    }

    bool intersects(const IntervalSet& other) const {
        size_t i = 0, j = 0;
        while (i < intervals_.size() && j < other.intervals_.size()) {
            const Interval<T>& p = intervals_[i];
            const Interval<T>& q = other.intervals_[j];
            if (p.a <= q.b && q.a <= p.b) return true; // closed-interval overlap
            if (p.b < q.b)
                ++i;
            else
                ++j;
        }
        return false;
    }

    /// Largest |endpoint|; 0 for the empty set.
    T max_abs_endpoint() const {
        if (intervals_.empty()) return T{};
        return std::max(abs(intervals_.front().a), abs(intervals_.back().b));
    }

private:
    void recompute_measure() {
        measure_ = intervals_.empty() ? T{} : make_scalar(intervals_.front().a, 0);
        for (const auto& iv : intervals_) measure_ += iv.b - iv.a;
    }

    std::vector<Interval<T>> intervals_;
    T measure_{};
    int merge_events_ = 0;
};

/// I_0: the union of the eps-neighborhoods of the poles. Requires eps
/// strictly below half the minimal pole gap so the pieces cannot touch.
template <typename T>
IntervalSet<T> build_I0(const MapSpec<T>& spec, const T& eps) {
    if (!(eps > make_scalar(eps, 0)))
        throw InvariantViolationError("build_I0: eps must be > 0");
    if (spec.pole_gap && !(eps < half(*spec.pole_gap)))
        throw EpsilonTooLargeError("eps must be smaller than half the minimal pole distance");
    std::vector<Interval<T>> raw;
    raw.reserve(spec.betas.size());
    for (const T& b : spec.betas) raw.push_back({b - eps, b + eps});
    return IntervalSet<T>::normalized(std::move(raw));
}

/// f^{-1}(S): each interval pulls back to one interval per branch
/// (monotone bijections), endpoints taken from the enclosing bisection
/// bracket and nudged one ulp outward so the computed set is a
/// conservative superset of the true preimage.
template <typename T>
IntervalSet<T> preimage_interval_set(const MapSpec<T>& spec, const IntervalSet<T>& S,
                                     const PrecisionPolicy& policy) {
    std::vector<Interval<T>> raw;
    raw.reserve((spec.m() + 1) * S.size());
    for (int bi = 0; bi <= spec.m(); ++bi) {
        Branch<T> br = branch_at(spec, bi);
        for (const Interval<T>& iv : S.intervals()) {
            PreimageResult<T> ra = preimage_bracket_in_branch(spec, iv.a, br, policy);
            PreimageResult<T> rb = (iv.a == iv.b)
                                       ? ra
                                       : preimage_bracket_in_branch(spec, iv.b, br, policy);
            raw.push_back({ra.lo.nudged_down(), rb.hi.nudged_up()});
        }
    }
    return IntervalSet<T>::normalized(std::move(raw));
}

struct PullbackOptions {
    long max_intervals = 1'000'000;
};

/// I_0 .. I_k where I_{j+1} = f^{-1}(I_j). Interval counts grow as
/// m (m+1)^j; the options budget caps the run before it degenerates.
template <typename T>
std::vector<IntervalSet<T>> pullback(const MapSpec<T>& spec, const T& eps, int k,
                                     const PrecisionPolicy& policy,
                                     const PullbackOptions& options = {}) {
    if (k < 0) throw InvariantViolationError("pullback: k must be >= 0");
    std::vector<IntervalSet<T>> levels;
    levels.reserve(k + 1);
    levels.push_back(build_I0(spec, eps));
    for (int level = 1; level <= k; ++level) {
        long projected = static_cast<long>(levels.back().size()) * (spec.m() + 1);
        if (projected > options.max_intervals)
            throw BudgetExceededError("pullback level " + std::to_string(level) + " needs " +
                                      std::to_string(projected) + " intervals (budget " +
                                      std::to_string(options.max_intervals) + ")");
        levels.push_back(preimage_interval_set(spec, levels.back(), policy));
    }
    return levels;
}

/// Disjointness matrix: entry (k, l) is true iff sets[k] and sets[l] do not
/// intersect. The diagonal is false for nonempty sets.
template <typename T>
std::vector<std::vector<bool>> pairwise_disjoint(const std::vector<IntervalSet<T>>& sets) {
    const size_t n = sets.size();
    std::vector<std::vector<bool>> out(n, std::vector<bool>(n, true));
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i; j < n; ++j) {
            bool disjoint = !sets[i].intersects(sets[j]);
            out[i][j] = disjoint;
            out[j][i] = disjoint;
        }
    return out;
}

/// | |f^{-1}(S)| - |S| |. Zero in exact arithmetic for this family
/// (the measure-preservation form of Glasser's master theorem).
template <typename T>
T glasser_measure_check(const MapSpec<T>& spec, const IntervalSet<T>& S,
                        const PrecisionPolicy& policy) {
    if (S.is_empty()) return T{};
    return abs(preimage_interval_set(spec, S, policy).measure() - S.measure());
}

} // namespace poledyn
