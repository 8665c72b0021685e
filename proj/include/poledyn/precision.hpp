#pragma once

#include <algorithm>

#include "errors.hpp"

namespace poledyn {

enum class NumberMode { big_float, exact_rational };

/// How real arithmetic is performed, and how orbits are certified.
///
/// Iterating these maps is chaotic in the core region: roughly one bit of
/// working precision is lost per step there, so every orbit-producing
/// operation recomputes a shadow orbit at `bits + shadow_margin_bits` and
/// reports the longest prefix on which base and shadow agree within
/// `shadow_agreement_tol`. Exact-rational arithmetic does not round and is
/// self-verifying, but its operand bit length roughly doubles per step;
/// `rational_bit_budget` caps that growth.
struct PrecisionPolicy {
    NumberMode mode = NumberMode::big_float;
    long bits = 256;                     // >= 64; also sets root-finder residual targets
    long shadow_margin_bits = 128;
    double shadow_agreement_tol = 1e-12; // absolute divergence that invalidates a prefix
    bool shadow = true;                  // verification is opt-out
    long rational_bit_budget = 1L << 20;

    void validate() const {
        if (mode == NumberMode::big_float && bits < 64)
            throw InvariantViolationError("PrecisionPolicy: bits must be >= 64 in big-float mode");
        if (shadow_margin_bits < 0)
            throw InvariantViolationError("PrecisionPolicy: shadow_margin_bits must be >= 0");
        if (!(shadow_agreement_tol > 0))
            throw InvariantViolationError("PrecisionPolicy: shadow_agreement_tol must be > 0");
        if (rational_bit_budget < 64)
            throw InvariantViolationError("PrecisionPolicy: rational_bit_budget must be >= 64");
    }

    /// Default working precision for a planned number of iteration steps
    /// (the doubling-map conjugacy costs about one bit per step).
    static long bits_for_steps(long n_steps) { return std::max<long>(128, n_steps + 64); }

    static PrecisionPolicy for_steps(long n_steps) {
        PrecisionPolicy p;
        p.bits = bits_for_steps(n_steps);
        return p;
    }

    long shadow_bits() const { return bits + shadow_margin_bits; }
};

} // namespace poledyn
