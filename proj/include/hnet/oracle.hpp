#pragma once

#include "hnet/partition.hpp"
#include "hnet/scalar.hpp"

#include <json.hpp>
#include <string>
#include <vector>

namespace hnet {

using MultiIndex = std::vector<int>;

int order_of(const MultiIndex& k);
Integer factorial_of(const MultiIndex& k);
// ⌈r⌉ - 1
int taylor_degree(const Rational& r);
// all k with |k| <= K, graded then lexicographic
std::vector<MultiIndex> taylor_orders(int d, int K);

// One-variable building block with derivatives of every order.
struct Factor {
    enum class Kind { poly, sine, gauss, absval, takagi };
    Kind kind = Kind::poly;
    // poly: coefficients c_0..c_n
    std::vector<Rational> coeffs;
    // sine: sin(a π x + b π)
    Rational a, b;
    // gauss: exp(-((x - c)/s)^2); absval: |x - c|
    Rational c, s;
    // takagi: Σ_{j<J} base^(-r j) ψ(base^j x), ψ = distance to the nearest integer
    int base = 2;
    int levels = 0;
    Rational r;

    static Factor polynomial(std::vector<Rational> c);
    static Factor sine(const Rational& a, const Rational& b);
    static Factor gauss(const Rational& c, const Rational& s);
    static Factor absval(const Rational& c);
    static Factor takagi(int base, const Rational& r, int levels);

    // highest derivative order that exists everywhere (-1 = unlimited)
    int smoothness() const;
    Rational derivative(int n, const Rational& x, long bits) const;
    double derivative_d(int n, double x) const;
};

// coef · Π_i factors[i](x_i)
struct ProductTerm {
    Rational coef;
    std::vector<Factor> factors;
};

// Target function on R^d with partial derivatives up to any order its factors allow.
// Values of transcendental factors are exact dyadic rationals of their MPFR evaluation.
class FunctionOracle {
public:
    FunctionOracle() = default;
    FunctionOracle(std::string id, int d, Rational r, std::vector<ProductTerm> terms);

    const std::string& id() const { return id_; }
    int d() const { return d_; }
    const Rational& r() const { return r_; }
    const std::vector<ProductTerm>& terms() const { return terms_; }
    // estimated Hölder norm after scaling
    const Rational& declared_norm_bound() const { return norm_; }
    void set_norm_bound(const Rational& n) { norm_ = n; }
    long bits() const { return bits_; }
    void set_bits(long b) { bits_ = b; }

    void scale(const Rational& s);
    Rational evaluate(const Point& x) const;
    Rational derivative(const MultiIndex& k, const Point& x) const;
    double evaluate_d(const std::vector<double>& x) const;
    double derivative_d(const MultiIndex& k, const std::vector<double>& x) const;
    // highest total order for which derivative() is defined everywhere
    int max_order() const;

private:
    std::string id_;
    int d_ = 1;
    Rational r_{1};
    std::vector<ProductTerm> terms_;
    Rational norm_{0};
    long bits_ = kDefaultBits;
};

}  // namespace hnet
