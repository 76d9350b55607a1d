#pragma once

#include <gmpxx.h>
#include <mpfr.h>

#include <cstdint>
#include <string>
#include <variant>

namespace hnet {

using Rational = mpq_class;
using Integer = mpz_class;

constexpr long kDefaultBits = 256;
constexpr long kMinBits = 64;

// Owning MPFR value with its own precision.
class BigFloat {
public:
    explicit BigFloat(long bits = kDefaultBits);
    BigFloat(const Rational& q, long bits);
    BigFloat(long v, long bits);
    BigFloat(const BigFloat& o);
    BigFloat(BigFloat&& o) noexcept;
    BigFloat& operator=(const BigFloat& o);
    BigFloat& operator=(BigFloat&& o) noexcept;
    ~BigFloat();

    mpfr_ptr get() { return v_; }
    mpfr_srcptr get() const { return v_; }
    long bits() const { return mpfr_get_prec(v_); }

    void set(const Rational& q) { mpfr_set_q(v_, q.get_mpq_t(), MPFR_RNDN); }
    void set(const BigFloat& o) { mpfr_set(v_, o.v_, MPFR_RNDN); }

    bool is_zero() const { return mpfr_zero_p(v_) != 0; }
    int sign() const { return mpfr_sgn(v_); }
    double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }
    // exact: every finite binary float is a dyadic rational
    Rational to_rational() const;

    // mantissa * 2^exp, mantissa as signed hex
    std::string mantissa_hex() const;
    long exponent() const;
    static BigFloat from_hex(const std::string& mant, long exp, long bits);

    int cmp(const BigFloat& o) const { return mpfr_cmp(v_, o.v_); }
    bool operator==(const BigFloat& o) const { return bits() == o.bits() && mpfr_equal_p(v_, o.v_); }

private:
    void init_move(BigFloat&& o) noexcept;
    mpfr_ptr v_ = nullptr;
    __mpfr_struct store_[1];
};

enum class ScalarKind { rational, bigfloat };

struct EvalMode {
    ScalarKind kind = ScalarKind::rational;
    long bits = kDefaultBits;

    static EvalMode exact() { return {ScalarKind::rational, 0}; }
    static EvalMode big(long b = kDefaultBits) { return {ScalarKind::bigfloat, b}; }
};

// Weight or sample value: exact rational or big float.
class ExactScalar {
public:
    ExactScalar() : v_(Rational(0)) {}
    ExactScalar(const Rational& q) : v_(q) {}
    ExactScalar(long v) : v_(Rational(v)) {}
    ExactScalar(const BigFloat& f) : v_(f) {}

    bool is_rational() const { return std::holds_alternative<Rational>(v_); }
    const Rational& rational() const { return std::get<Rational>(v_); }
    const BigFloat& bigfloat() const { return std::get<BigFloat>(v_); }

    Rational to_rational() const;
    BigFloat to_bigfloat(long bits) const;
    double to_double() const;
    bool is_zero() const;
    std::string str() const;

    bool operator==(const ExactScalar& o) const;

private:
    std::variant<Rational, BigFloat> v_;
};

// canonical rational, throws on malformed text
Rational parse_rational(const std::string& text);
std::string rational_str(const Rational& q);
// exact rational from a double
Rational rational_from_double(double v);
// nearest rational with denominator 2^bits
Rational dyadic_round(const Rational& q, long bits);
Rational rpow(const Rational& base, long e);
Integer ipow(long base, long e);
// canonical num/den
Rational frac_q(const Integer& num, const Integer& den);
Rational floor_q(const Rational& q);
Rational ceil_q(const Rational& q);
Rational abs_q(const Rational& q);
// smallest k with 2^k >= q, for q > 0
long ceil_log2(const Rational& q);

}  // namespace hnet
