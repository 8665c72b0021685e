#pragma once

#include <gmp.h>

#include <cctype>
#include <cstdlib>
#include <string>
#include <string_view>
#include <utility>

#include "bigfloat.hpp"
#include "errors.hpp"

namespace poledyn {

/// Exact rational number. Arithmetic never rounds; decimal strings parse
/// exactly ("0.05" is 1/20). The numerator/denominator bit length is
/// queryable so orbit drivers can guard against the per-step blow-up of
/// exact iteration.
class Rational {
public:
    Rational() { mpq_init(v_); }

    Rational(long value) { // NOLINT: implicit by design, mirrors integer literals
        mpq_init(v_);
        mpq_set_si(v_, value, 1);
    }

    Rational(long num, long den) {
        if (den == 0) throw Error("Rational with zero denominator");
        mpq_init(v_);
        if (den < 0) num = -num;
        unsigned long uden = den < 0 ? -static_cast<unsigned long>(den)
                                     : static_cast<unsigned long>(den);
        mpq_set_si(v_, num, uden);
        mpq_canonicalize(v_);
    }

    Rational(const Rational& o) {
        mpq_init(v_);
        mpq_set(v_, o.v_);
    }

    Rational(Rational&& o) noexcept {
        mpq_init(v_);
        mpq_swap(v_, o.v_);
    }

    Rational& operator=(const Rational& o) {
        if (this != &o) mpq_set(v_, o.v_);
        return *this;
    }

    Rational& operator=(Rational&& o) noexcept {
        mpq_swap(v_, o.v_);
        return *this;
    }

    ~Rational() { mpq_clear(v_); }

    /// Exact decimal parse: [+-]digits[.digits][(e|E)[+-]digits].
    static Rational parse(std::string_view text) {
        const std::string s(text);
        size_t i = 0;
        bool neg = false;
        if (i < s.size() && (s[i] == '+' || s[i] == '-')) {
            neg = s[i] == '-';
            ++i;
        }
        std::string digits;
        long frac_digits = 0;
        bool seen_digit = false, seen_point = false;
        for (; i < s.size(); ++i) {
            char c = s[i];
            if (std::isdigit(static_cast<unsigned char>(c))) {
                digits += c;
                seen_digit = true;
                if (seen_point) ++frac_digits;
            } else if (c == '.' && !seen_point) {
                seen_point = true;
            } else {
                break;
            }
        }
        long exp10 = 0;
        if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
            ++i;
            bool eneg = false;
            if (i < s.size() && (s[i] == '+' || s[i] == '-')) {
                eneg = s[i] == '-';
                ++i;
            }
            bool any = false;
            for (; i < s.size() && std::isdigit(static_cast<unsigned char>(s[i])); ++i) {
                any = true;
                if (exp10 < 1000000) exp10 = exp10 * 10 + (s[i] - '0');
            }
            if (!any) throw InvariantViolationError("malformed exponent in '" + s + "'");
            if (eneg) exp10 = -exp10;
        }
        if (!seen_digit || i != s.size())
            throw InvariantViolationError("not a decimal number: '" + s + "'");

        Rational r;
        mpz_set_str(mpq_numref(r.v_), digits.c_str(), 10);
        long p10 = exp10 - frac_digits;
        mpz_t pow;
        mpz_init(pow);
        mpz_ui_pow_ui(pow, 10, static_cast<unsigned long>(p10 < 0 ? -p10 : p10));
        if (p10 >= 0)
            mpz_mul(mpq_numref(r.v_), mpq_numref(r.v_), pow);
        else
            mpz_set(mpq_denref(r.v_), pow);
        mpz_clear(pow);
        mpq_canonicalize(r.v_);
        if (neg) mpq_neg(r.v_, r.v_);
        return r;
    }

    /// Exact conversion of a binary double.
    static Rational from_double(double value) {
        Rational r;
        mpq_set_d(r.v_, value);
        return r;
    }

    int sign() const { return mpq_sgn(v_); }
    bool is_zero() const { return mpq_sgn(v_) == 0; }

    /// Bits of numerator plus denominator; the blow-up measure.
    long bit_length() const {
        return static_cast<long>(mpz_sizeinbase(mpq_numref(v_), 2) +
                                 mpz_sizeinbase(mpq_denref(v_), 2));
    }

    double to_double() const { return mpq_get_d(v_); }

    BigFloat to_bigfloat(long prec) const {
        BigFloat r(0, prec);
        mpfr_set_q(r.raw_mut(), v_, MPFR_RNDN);
        return r;
    }

    /// Outward rounding is a no-op for exact values.
    Rational nudged_down() const { return *this; }
    Rational nudged_up() const { return *this; }

    /// "p/q", or "p" when the denominator is 1.
    std::string str() const {
        char* raw = mpq_get_str(nullptr, 10, v_);
        std::string out(raw);
        std::free(raw);
        return out;
    }

    Rational operator-() const {
        Rational r;
        mpq_neg(r.v_, v_);
        return r;
    }

    friend Rational operator+(const Rational& a, const Rational& b) {
        Rational r;
        mpq_add(r.v_, a.v_, b.v_);
        return r;
    }
    friend Rational operator-(const Rational& a, const Rational& b) {
        Rational r;
        mpq_sub(r.v_, a.v_, b.v_);
        return r;
    }
    friend Rational operator*(const Rational& a, const Rational& b) {
        Rational r;
        mpq_mul(r.v_, a.v_, b.v_);
        return r;
    }
    friend Rational operator/(const Rational& a, const Rational& b) {
        if (b.is_zero()) throw Error("Rational division by zero");
        Rational r;
        mpq_div(r.v_, a.v_, b.v_);
        return r;
    }

    Rational& operator+=(const Rational& o) { mpq_add(v_, v_, o.v_); return *this; }
    Rational& operator-=(const Rational& o) { mpq_sub(v_, v_, o.v_); return *this; }
    Rational& operator*=(const Rational& o) { mpq_mul(v_, v_, o.v_); return *this; }
    Rational& operator/=(const Rational& o) { return *this = *this / o; }

    friend bool operator==(const Rational& a, const Rational& b) { return mpq_equal(a.v_, b.v_) != 0; }
    friend bool operator!=(const Rational& a, const Rational& b) { return mpq_equal(a.v_, b.v_) == 0; }
    friend bool operator<(const Rational& a, const Rational& b) { return mpq_cmp(a.v_, b.v_) < 0; }
    friend bool operator<=(const Rational& a, const Rational& b) { return mpq_cmp(a.v_, b.v_) <= 0; }
    friend bool operator>(const Rational& a, const Rational& b) { return mpq_cmp(a.v_, b.v_) > 0; }
    friend bool operator>=(const Rational& a, const Rational& b) { return mpq_cmp(a.v_, b.v_) >= 0; }

    friend Rational abs(const Rational& x) {
        Rational r;
        mpq_abs(r.v_, x.v_);
        return r;
    }

    friend Rational half(const Rational& x) {
        Rational r(x);
        mpz_mul_2exp(mpq_denref(r.v_), mpq_denref(r.v_), 1);
        mpq_canonicalize(r.v_);
        return r;
    }

    friend Rational mul_pow2(const Rational& x, long e) {
        Rational r(x);
        if (e >= 0)
            mpz_mul_2exp(mpq_numref(r.v_), mpq_numref(r.v_), static_cast<unsigned long>(e));
        else
            mpz_mul_2exp(mpq_denref(r.v_), mpq_denref(r.v_), static_cast<unsigned long>(-e));
        mpq_canonicalize(r.v_);
        return r;
    }

    mpq_srcptr raw() const { return v_; }

private:
    mpq_t v_;
};

// Exact arithmetic: no representation noise, so outward rounding and
// near-gap merging degenerate to no-ops.
inline Rational ulp_at(const Rational&) { return Rational(0); }

inline Rational make_scalar(const Rational&, long value) { return Rational(value); }

inline std::string to_display_string(const Rational& x) { return x.str(); }

} // namespace poledyn
