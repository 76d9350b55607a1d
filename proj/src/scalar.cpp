#include "hnet/scalar.hpp"

#include <cmath>
#include <stdexcept>

namespace hnet {

BigFloat::BigFloat(long bits) {
    v_ = store_;
    mpfr_init2(v_, bits);
    mpfr_set_zero(v_, 1);
}

BigFloat::BigFloat(const Rational& q, long bits) : BigFloat(bits) { set(q); }

BigFloat::BigFloat(long v, long bits) : BigFloat(bits) { mpfr_set_si(v_, v, MPFR_RNDN); }

BigFloat::BigFloat(const BigFloat& o) : BigFloat(o.bits()) { mpfr_set(v_, o.v_, MPFR_RNDN); }

void BigFloat::init_move(BigFloat&& o) noexcept {
    if (!o.v_) {
        v_ = nullptr;
        return;
    }
    store_[0] = o.store_[0];
    v_ = store_;
    o.v_ = nullptr;
}

BigFloat::BigFloat(BigFloat&& o) noexcept { init_move(std::move(o)); }

BigFloat& BigFloat::operator=(const BigFloat& o) {
    if (this == &o) return *this;
    if (!v_) {
        v_ = store_;
        mpfr_init2(v_, o.bits());
    } else if (bits() != o.bits()) {
        mpfr_set_prec(v_, o.bits());
    }
    mpfr_set(v_, o.v_, MPFR_RNDN);
    return *this;
}

BigFloat& BigFloat::operator=(BigFloat&& o) noexcept {
    if (this == &o) return *this;
    if (v_) mpfr_clear(v_);
    init_move(std::move(o));
    return *this;
}

BigFloat::~BigFloat() {
    if (v_) mpfr_clear(v_);
}

Rational BigFloat::to_rational() const {
    if (!mpfr_number_p(v_)) throw std::domain_error("non-finite big float");
    if (mpfr_zero_p(v_)) return Rational(0);
    Integer m;
    long e = mpfr_get_z_2exp(m.get_mpz_t(), v_);
    Rational q(m);
    if (e >= 0) {
        mpq_mul_2exp(q.get_mpq_t(), q.get_mpq_t(), static_cast<unsigned long>(e));
    } else {
        mpq_div_2exp(q.get_mpq_t(), q.get_mpq_t(), static_cast<unsigned long>(-e));
    }
    q.canonicalize();
    return q;
}

std::string BigFloat::mantissa_hex() const {
    if (mpfr_zero_p(v_)) return "0";
    Integer m;
    mpfr_get_z_2exp(m.get_mpz_t(), v_);
    return m.get_str(16);
}

long BigFloat::exponent() const {
    if (mpfr_zero_p(v_)) return 0;
    Integer m;
    return mpfr_get_z_2exp(m.get_mpz_t(), v_);
}

BigFloat BigFloat::from_hex(const std::string& mant, long exp, long bits) {
    Integer m;
    if (m.set_str(mant, 16) != 0) throw std::invalid_argument("bad hex mantissa: " + mant);
    BigFloat f(bits);
    mpfr_set_z_2exp(f.v_, m.get_mpz_t(), exp, MPFR_RNDN);
    return f;
}

Rational ExactScalar::to_rational() const {
    if (is_rational()) return rational();
    return bigfloat().to_rational();
}

BigFloat ExactScalar::to_bigfloat(long bits) const {
    if (is_rational()) return BigFloat(rational(), bits);
    BigFloat f(bits);
    f.set(bigfloat());
    return f;
}

double ExactScalar::to_double() const {
    if (is_rational()) return rational().get_d();
    return bigfloat().to_double();
}

bool ExactScalar::is_zero() const {
    if (is_rational()) return sgn(rational()) == 0;
    return bigfloat().is_zero();
}

std::string ExactScalar::str() const {
    if (is_rational()) return rational_str(rational());
    return "0x" + bigfloat().mantissa_hex() + "p" + std::to_string(bigfloat().exponent());
}

bool ExactScalar::operator==(const ExactScalar& o) const {
    if (is_rational() != o.is_rational()) return false;
    if (is_rational()) return rational() == o.rational();
    return bigfloat() == o.bigfloat();
}

Rational parse_rational(const std::string& text) {
    Rational q;
    auto slash = text.find('/');
    auto dot = text.find('.');
    if (dot != std::string::npos && slash == std::string::npos) {
        std::string s = text;
        bool neg = false;
        if (!s.empty() && (s[0] == '-' || s[0] == '+')) {
            neg = s[0] == '-';
            s = s.substr(1);
        }
        auto d = s.find('.');
        std::string ip = s.substr(0, d), fp = s.substr(d + 1);
        std::string exp_part;
        auto e = fp.find_first_of("eE");
        if (e != std::string::npos) {
            exp_part = fp.substr(e + 1);
            fp = fp.substr(0, e);
        }
        Integer num;
        if (num.set_str((ip.empty() ? "0" : ip) + fp, 10) != 0) throw std::invalid_argument("bad number: " + text);
        q = Rational(num, ipow(10, static_cast<long>(fp.size())));
        if (!exp_part.empty()) {
            long ex = std::stol(exp_part);
            q *= rpow(Rational(10), ex);
        }
        if (neg) q = -q;
        q.canonicalize();
        return q;
    }
    if (text.find_first_of("eE") != std::string::npos && slash == std::string::npos) {
        auto e = text.find_first_of("eE");
        Rational m = parse_rational(text.substr(0, e));
        return m * rpow(Rational(10), std::stol(text.substr(e + 1)));
    }
    if (q.set_str(text, 10) != 0) throw std::invalid_argument("bad rational: " + text);
    if (sgn(q.get_den()) == 0) throw std::invalid_argument("zero denominator: " + text);
    q.canonicalize();
    return q;
}

std::string rational_str(const Rational& q) { return q.get_str(10); }

Rational rational_from_double(double v) {
    if (!std::isfinite(v)) throw std::domain_error("non-finite double");
    Rational q(v);
    q.canonicalize();
    return q;
}

Rational dyadic_round(const Rational& q, long bits) {
    Integer scale = ipow(2, bits);
    Rational s = q * scale;
    Integer fl;
    mpz_fdiv_q(fl.get_mpz_t(), s.get_num_mpz_t(), s.get_den_mpz_t());
    Rational frac = s - fl;
    if (frac * 2 >= 1) fl += 1;
    return frac_q(fl, scale);
}

Rational rpow(const Rational& base, long e) {
    if (e == 0) return Rational(1);
    Rational b = base;
    if (e < 0) {
        if (sgn(b) == 0) throw std::domain_error("zero to negative power");
        b = 1 / b;
        e = -e;
    }
    Integer n, d;
    mpz_pow_ui(n.get_mpz_t(), b.get_num_mpz_t(), static_cast<unsigned long>(e));
    mpz_pow_ui(d.get_mpz_t(), b.get_den_mpz_t(), static_cast<unsigned long>(e));
    Rational r(n, d);
    r.canonicalize();
    return r;
}

Integer ipow(long base, long e) {
    Integer r;
    mpz_ui_pow_ui(r.get_mpz_t(), static_cast<unsigned long>(std::labs(base)), static_cast<unsigned long>(e));
    if (base < 0 && (e % 2)) r = -r;
    return r;
}

Rational frac_q(const Integer& num, const Integer& den) {
    if (sgn(den) == 0) throw std::domain_error("zero denominator");
    Rational q(num, den);
    q.canonicalize();
    return q;
}

Rational floor_q(const Rational& q) {
    Integer f;
    mpz_fdiv_q(f.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
    return Rational(f);
}

Rational ceil_q(const Rational& q) {
    Integer f;
    mpz_cdiv_q(f.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
    return Rational(f);
}

Rational abs_q(const Rational& q) { return sgn(q) < 0 ? Rational(-q) : q; }

long ceil_log2(const Rational& q) {
    if (sgn(q) <= 0) throw std::domain_error("ceil_log2 of nonpositive");
    long k = 0;
    Rational p(1);
    if (q > 1) {
        while (p < q) {
            p *= 2;
            ++k;
        }
    } else {
        while (p / 2 >= q) {
            p /= 2;
            --k;
        }
    }
    return k;
}

}  // namespace hnet
