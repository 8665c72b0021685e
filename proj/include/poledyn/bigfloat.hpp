#pragma once

#include <mpfr.h>

#include <algorithm>
#include <string>
#include <string_view>
#include <utility>

#include "errors.hpp"

namespace poledyn {

/// Arbitrary-precision binary float with value semantics.
///
/// Every value carries its own precision. Binary operations round to the
/// wider of the two operand precisions (round to nearest); comparisons are
/// exact. Decimal I/O round-trips: parse(x.str(), x.precision()) == x.
class BigFloat {
public:
    BigFloat() { mpfr_init2(v_, 64); mpfr_set_zero(v_, 1); }

    explicit BigFloat(long value, long prec = 64) {
        mpfr_init2(v_, clamp_prec(prec));
        mpfr_set_si(v_, value, MPFR_RNDN);
    }

    BigFloat(const BigFloat& o) {
        mpfr_init2(v_, mpfr_get_prec(o.v_));
        mpfr_set(v_, o.v_, MPFR_RNDN);
    }

    BigFloat(BigFloat&& o) noexcept {
        mpfr_init2(v_, MPFR_PREC_MIN);
        mpfr_swap(v_, o.v_);
    }

    BigFloat& operator=(const BigFloat& o) {
        if (this != &o) {
            mpfr_set_prec(v_, mpfr_get_prec(o.v_));
            mpfr_set(v_, o.v_, MPFR_RNDN);
        }
        return *this;
    }

    BigFloat& operator=(BigFloat&& o) noexcept {
        mpfr_swap(v_, o.v_);
        return *this;
    }

    ~BigFloat() { mpfr_clear(v_); }

    /// Parse a decimal string ("2", "-0.05", "1.5e-3") at the given precision.
    static BigFloat parse(std::string_view text, long prec) {
        std::string s(text);
        BigFloat r(0, prec);
        char* end = nullptr;
        mpfr_strtofr(r.v_, s.c_str(), &end, 10, MPFR_RNDN);
        if (s.empty() || end != s.c_str() + s.size())
            throw InvariantViolationError("not a decimal number: '" + s + "'");
        if (!mpfr_number_p(r.v_))
            throw InvariantViolationError("not a finite number: '" + s + "'");
        return r;
    }

    static BigFloat from_double(double value, long prec = 64) {
        BigFloat r(0, prec);
        mpfr_set_d(r.v_, value, MPFR_RNDN);
        return r;
    }

    /// 2^e, exact.
    static BigFloat pow2(long e, long prec = 64) {
        BigFloat r(0, prec);
        mpfr_set_ui_2exp(r.v_, 1, e, MPFR_RNDN);
        return r;
    }

    long precision() const { return mpfr_get_prec(v_); }

    /// Same value rounded to a different precision.
    BigFloat round_to(long prec) const {
        BigFloat r(0, prec);
        mpfr_set(r.v_, v_, MPFR_RNDN);
        return r;
    }

    int sign() const { return mpfr_sgn(v_); }
    bool is_zero() const { return mpfr_zero_p(v_) != 0; }
    double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }

    /// Shortest decimal string that parses back to this exact value at the
    /// same precision. Normalized scientific form except for exponent 0.
    std::string str() const {
        if (mpfr_zero_p(v_)) return "0";
        mpfr_exp_t e;
        char* raw = mpfr_get_str(nullptr, &e, 10, 0, v_, MPFR_RNDN);
        std::string digits(raw);
        mpfr_free_str(raw);
        bool neg = !digits.empty() && digits[0] == '-';
        if (neg) digits.erase(0, 1);
        while (digits.size() > 1 && digits.back() == '0') digits.pop_back();
        std::string out = neg ? "-" : "";
        out += digits.substr(0, 1);
        if (digits.size() > 1) {
            out += '.';
            out += digits.substr(1);
        }
        long exp10 = static_cast<long>(e) - 1;
        if (exp10 != 0) {
            out += 'e';
            out += std::to_string(exp10);
        }
        return out;
    }

    /// One representable step down / up at this value's precision.
    BigFloat nudged_down() const {
        BigFloat r(*this);
        mpfr_nextbelow(r.v_);
        return r;
    }
    BigFloat nudged_up() const {
        BigFloat r(*this);
        mpfr_nextabove(r.v_);
        return r;
    }

    BigFloat operator-() const {
        BigFloat r(0, precision());
        mpfr_neg(r.v_, v_, MPFR_RNDN);
        return r;
    }

    friend BigFloat operator+(const BigFloat& a, const BigFloat& b) { return binop(mpfr_add, a, b); }
    friend BigFloat operator-(const BigFloat& a, const BigFloat& b) { return binop(mpfr_sub, a, b); }
    friend BigFloat operator*(const BigFloat& a, const BigFloat& b) { return binop(mpfr_mul, a, b); }
    friend BigFloat operator/(const BigFloat& a, const BigFloat& b) {
        if (mpfr_zero_p(b.v_)) throw Error("BigFloat division by zero");
        return binop(mpfr_div, a, b);
    }

    BigFloat& operator+=(const BigFloat& o) { return *this = *this + o; }
    BigFloat& operator-=(const BigFloat& o) { return *this = *this - o; }
    BigFloat& operator*=(const BigFloat& o) { return *this = *this * o; }
    BigFloat& operator/=(const BigFloat& o) { return *this = *this / o; }

    friend bool operator==(const BigFloat& a, const BigFloat& b) { return mpfr_cmp(a.v_, b.v_) == 0; }
    friend bool operator!=(const BigFloat& a, const BigFloat& b) { return mpfr_cmp(a.v_, b.v_) != 0; }
    friend bool operator<(const BigFloat& a, const BigFloat& b) { return mpfr_cmp(a.v_, b.v_) < 0; }
    friend bool operator<=(const BigFloat& a, const BigFloat& b) { return mpfr_cmp(a.v_, b.v_) <= 0; }
    friend bool operator>(const BigFloat& a, const BigFloat& b) { return mpfr_cmp(a.v_, b.v_) > 0; }
    friend bool operator>=(const BigFloat& a, const BigFloat& b) { return mpfr_cmp(a.v_, b.v_) >= 0; }

    friend BigFloat abs(const BigFloat& x) {
        BigFloat r(0, x.precision());
        mpfr_abs(r.v_, x.v_, MPFR_RNDN);
        return r;
    }

    friend BigFloat sqrt(const BigFloat& x) {
        if (x.sign() < 0) throw Error("BigFloat sqrt of negative value");
        BigFloat r(0, x.precision());
        mpfr_sqrt(r.v_, x.v_, MPFR_RNDN);
        return r;
    }

    /// x / 2, exact.
    friend BigFloat half(const BigFloat& x) {
        BigFloat r(0, x.precision());
        mpfr_div_2ui(r.v_, x.v_, 1, MPFR_RNDN);
        return r;
    }

    /// x * 2^e, exact.
    friend BigFloat mul_pow2(const BigFloat& x, long e) {
        BigFloat r(0, x.precision());
        mpfr_mul_2si(r.v_, x.v_, e, MPFR_RNDN);
        return r;
    }

    mpfr_srcptr raw() const { return v_; }
    mpfr_ptr raw_mut() { return v_; }

private:
    static long clamp_prec(long prec) { return std::max<long>(prec, MPFR_PREC_MIN); }

    using BinF = int (*)(mpfr_ptr, mpfr_srcptr, mpfr_srcptr, mpfr_rnd_t);
    static BigFloat binop(BinF f, const BigFloat& a, const BigFloat& b) {
        BigFloat r(0, std::max(a.precision(), b.precision()));
        f(r.v_, a.v_, b.v_, MPFR_RNDN);
        return r;
    }

    mpfr_t v_;
};

/// Unit in the last place at x's own precision and magnitude; the noise
/// scale for endpoint comparisons. ulp_at(0) falls back to 2^(1-prec).
inline BigFloat ulp_at(const BigFloat& x) {
    if (x.is_zero()) return BigFloat::pow2(1 - x.precision(), x.precision());
    BigFloat a = abs(x);
    return a.nudged_up() - a;
}

/// Scalar of the same kind (and precision) as `model`.
inline BigFloat make_scalar(const BigFloat& model, long value) {
    return BigFloat(value, model.precision());
}

inline std::string to_display_string(const BigFloat& x) { return x.str(); }

} // namespace poledyn
