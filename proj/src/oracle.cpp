#include "hnet/oracle.hpp"

#include "hnet/sigma.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

namespace hnet {

namespace {

constexpr int kUnlimited = 64;

bool is_integer(const Rational& q) { return q.get_den() == 1; }

Rational poly_derivative(const std::vector<Rational>& c, int n, const Rational& x) {
    Rational acc(0);
    for (size_t i = c.size(); i-- > static_cast<size_t>(n);) {
        Integer fall(1);
        for (int j = 0; j < n; ++j) fall *= static_cast<long>(i) - j;
        acc = acc * x + c[i] * fall;
    }
    return acc;
}

double poly_derivative_d(const std::vector<Rational>& c, int n, double x) {
    double acc = 0;
    for (size_t i = c.size(); i-- > static_cast<size_t>(n);) {
        double fall = 1;
        for (int j = 0; j < n; ++j) fall *= static_cast<double>(i) - j;
        acc = acc * x + c[i].get_d() * fall;
    }
    return acc;
}

// exact value of sin(π u) when 6u is an integer and the value is rational
bool sine_exact(const Rational& u, Rational& out) {
    Rational t = u - 2 * floor_q(u / 2);
    Rational six = t * 6;
    if (!is_integer(six)) return false;
    long k = six.get_num().get_si();
    switch (k) {
        case 0: case 6: out = 0; return true;
        case 3: out = 1; return true;
        case 9: out = -1; return true;
        case 1: case 5: out = frac_q(1, 2); return true;
        case 7: case 11: out = frac_q(-1, 2); return true;
        default: return false;
    }
}

Rational psi(const Rational& t) {
    Rational f = t - floor_q(t);
    return f * 2 <= 1 ? f : 1 - f;
}

double psi_d(double t) {
    double f = t - std::floor(t);
    return f <= 0.5 ? f : 1 - f;
}

Rational takagi_weight(int base, const Rational& r, int j, long bits) {
    if (is_integer(r)) return rpow(Rational(base), -r.get_num().get_si() * j);
    BigFloat e(r * (-j), bits), v(bits), bb(static_cast<long>(base), bits);
    mpfr_pow(v.get(), bb.get(), e.get(), MPFR_RNDD);
    return v.to_rational();
}

}  // namespace

int order_of(const MultiIndex& k) {
    int s = 0;
    for (int v : k) s += v;
    return s;
}

Integer factorial_of(const MultiIndex& k) {
    Integer f(1);
    for (int v : k)
        for (int i = 2; i <= v; ++i) f *= i;
    return f;
}

int taylor_degree(const Rational& r) {
    if (sgn(r) <= 0) throw std::invalid_argument("smoothness must be positive");
    return static_cast<int>(ceil_q(r).get_num().get_si()) - 1;
}

std::vector<MultiIndex> taylor_orders(int d, int K) {
    std::vector<MultiIndex> out;
    for (int total = 0; total <= K; ++total) {
        MultiIndex k(d, 0);
        // lexicographically descending compositions of total into d parts
        std::vector<MultiIndex> level;
        std::function<void(int, int)> rec = [&](int i, int left) {
            if (i == d - 1) {
                k[i] = left;
                level.push_back(k);
                return;
            }
            for (int v = left; v >= 0; --v) {
                k[i] = v;
                rec(i + 1, left - v);
            }
        };
        if (d > 0) rec(0, total);
        out.insert(out.end(), level.begin(), level.end());
    }
    return out;
}

Factor Factor::polynomial(std::vector<Rational> c) {
    Factor f;
    f.kind = Kind::poly;
    f.coeffs = std::move(c);
    return f;
}

Factor Factor::sine(const Rational& a, const Rational& b) {
    Factor f;
    f.kind = Kind::sine;
    f.a = a;
    f.b = b;
    return f;
}

Factor Factor::gauss(const Rational& c, const Rational& s) {
    if (sgn(s) <= 0) throw std::invalid_argument("gaussian width must be positive");
    Factor f;
    f.kind = Kind::gauss;
    f.c = c;
    f.s = s;
    return f;
}

Factor Factor::absval(const Rational& c) {
    Factor f;
    f.kind = Kind::absval;
    f.c = c;
    return f;
}

Factor Factor::takagi(int base, const Rational& r, int levels) {
    if (base < 2 || levels < 1 || sgn(r) <= 0) throw std::invalid_argument("bad takagi parameters");
    Factor f;
    f.kind = Kind::takagi;
    f.base = base;
    f.r = r;
    f.levels = levels;
    return f;
}

int Factor::smoothness() const {
    switch (kind) {
        case Kind::poly:
        case Kind::sine:
        case Kind::gauss: return kUnlimited;
        default: return 0;
    }
}

Rational Factor::derivative(int n, const Rational& x, long bits) const {
    if (n < 0) throw std::invalid_argument("negative derivative order");
    if (n > smoothness()) throw std::domain_error("derivative order exceeds factor smoothness");
    long wb = bits + 32;
    switch (kind) {
        case Kind::poly: return poly_derivative(coeffs, n, x);
        case Kind::sine: {
            Rational u = a * x + b + frac_q(n, 2);
            Rational exact;
            if (sine_exact(u, exact) && (n == 0 || sgn(exact) == 0)) return exact;
            u -= 2 * floor_q(u / 2);
            BigFloat v(u, wb), pi(wb), w(wb);
            mpfr_const_pi(pi.get(), MPFR_RNDN);
            mpfr_mul(v.get(), v.get(), pi.get(), MPFR_RNDN);
            mpfr_sin(v.get(), v.get(), MPFR_RNDN);
            BigFloat am(a, wb);
            mpfr_mul(w.get(), am.get(), pi.get(), MPFR_RNDN);
            mpfr_pow_ui(w.get(), w.get(), static_cast<unsigned long>(n), MPFR_RNDN);
            mpfr_mul(v.get(), v.get(), w.get(), MPFR_RNDN);
            BigFloat out(bits);
            mpfr_set(out.get(), v.get(), MPFR_RNDN);
            return out.to_rational();
        }
        case Kind::gauss: {
            Rational u = (x - c) / s;
            BigFloat uf(u, wb), h0(1L, wb), h1(wb), tmp(wb);
            mpfr_mul_ui(h1.get(), uf.get(), 2, MPFR_RNDN);
            if (n == 0) h1.set(h0);
            for (int i = 1; i < n; ++i) {
                // H_{i+1} = 2u H_i - 2i H_{i-1}
                mpfr_mul(tmp.get(), h1.get(), uf.get(), MPFR_RNDN);
                mpfr_mul_ui(tmp.get(), tmp.get(), 2, MPFR_RNDN);
                mpfr_mul_ui(h0.get(), h0.get(), static_cast<unsigned long>(2 * i), MPFR_RNDN);
                mpfr_sub(tmp.get(), tmp.get(), h0.get(), MPFR_RNDN);
                h0.set(h1);
                h1.set(tmp);
            }
            BigFloat e(wb);
            mpfr_sqr(e.get(), uf.get(), MPFR_RNDN);
            mpfr_neg(e.get(), e.get(), MPFR_RNDN);
            mpfr_exp(e.get(), e.get(), MPFR_RNDN);
            mpfr_mul(e.get(), e.get(), h1.get(), MPFR_RNDN);
            BigFloat sc(rpow(-1 / s, n), wb);
            mpfr_mul(e.get(), e.get(), sc.get(), MPFR_RNDN);
            BigFloat out(bits);
            mpfr_set(out.get(), e.get(), MPFR_RNDN);
            return out.to_rational();
        }
        case Kind::absval: return abs_q(x - c);
        case Kind::takagi: {
            Rational acc(0);
            Rational scale(1);
            for (int j = 0; j < levels; ++j) {
                acc += takagi_weight(base, r, j, bits) * psi(x * scale);
                scale *= base;
            }
            return acc;
        }
    }
    return Rational(0);
}

double Factor::derivative_d(int n, double x) const {
    if (n > smoothness()) throw std::domain_error("derivative order exceeds factor smoothness");
    switch (kind) {
        case Kind::poly: return poly_derivative_d(coeffs, n, x);
        case Kind::sine: {
            double w = a.get_d() * M_PI;
            return std::pow(w, n) * std::sin(w * x + b.get_d() * M_PI + n * M_PI / 2);
        }
        case Kind::gauss: {
            double sd = s.get_d(), u = (x - c.get_d()) / sd;
            double h0 = 1, h1 = 2 * u;
            if (n == 0) h1 = h0;
            for (int i = 1; i < n; ++i) {
                double h2 = 2 * u * h1 - 2 * i * h0;
                h0 = h1;
                h1 = h2;
            }
            return std::pow(-1 / sd, n) * h1 * std::exp(-u * u);
        }
        case Kind::absval: return std::fabs(x - c.get_d());
        case Kind::takagi: {
            double acc = 0, scale = 1, rd = r.get_d();
            for (int j = 0; j < levels; ++j) {
                acc += std::pow(static_cast<double>(base), -rd * j) * psi_d(x * scale);
                scale *= base;
            }
            return acc;
        }
    }
    return 0;
}

FunctionOracle::FunctionOracle(std::string id, int d, Rational r, std::vector<ProductTerm> terms)
    : id_(std::move(id)), d_(d), r_(std::move(r)), terms_(std::move(terms)) {
    if (d_ < 1) throw std::invalid_argument("dimension must be positive");
    for (auto& t : terms_)
        if (static_cast<int>(t.factors.size()) != d_) throw std::invalid_argument("term arity mismatch");
}

void FunctionOracle::scale(const Rational& s) {
    for (auto& t : terms_) t.coef *= s;
    norm_ *= abs_q(s);
}

int FunctionOracle::max_order() const {
    int m = kUnlimited;
    for (auto& t : terms_)
        for (auto& f : t.factors) m = std::min(m, f.smoothness());
    return m;
}

Rational FunctionOracle::evaluate(const Point& x) const { return derivative(MultiIndex(d_, 0), x); }

Rational FunctionOracle::derivative(const MultiIndex& k, const Point& x) const {
    if (static_cast<int>(x.size()) != d_ || static_cast<int>(k.size()) != d_)
        throw std::invalid_argument("oracle dimension mismatch");
    Rational acc(0);
    for (auto& t : terms_) {
        if (sgn(t.coef) == 0) continue;
        Rational p = t.coef;
        for (int i = 0; i < d_ && sgn(p) != 0; ++i) p *= t.factors[i].derivative(k[i], x[i], bits_);
        acc += p;
    }
    return acc;
}

double FunctionOracle::evaluate_d(const std::vector<double>& x) const { return derivative_d(MultiIndex(d_, 0), x); }

double FunctionOracle::derivative_d(const MultiIndex& k, const std::vector<double>& x) const {
    double acc = 0;
    for (auto& t : terms_) {
        double p = t.coef.get_d();
        for (int i = 0; i < d_ && p != 0; ++i) p *= t.factors[i].derivative_d(k[i], x[i]);
        acc += p;
    }
    return acc;
}

}  // namespace hnet
