#pragma once

#include "hnet/codec.hpp"
#include "hnet/oracle.hpp"
#include "hnet/partition.hpp"

#include <optional>
#include <string>
#include <vector>

namespace hnet {

enum class Variant { shallow, deep_phase, fixed_width, poly_activation, fourier };

std::string variant_name(Variant v);
Variant parse_variant(const std::string& s);

// How the q-terms (and, for deep nets, the s-terms) are merged.
//   weighted: Σ w̃·f̃ with product gadgets
//   max:      max over candidates penalised by B·(1 - 3^d w̃)₊; exact ReLU arithmetic
enum class Combiner { weighted, max };

struct BuildRequest {
    Variant variant = Variant::deep_phase;
    Rational p;                       // target rate (deep_phase, poly_activation)
    Rational eps;                     // target accuracy (fixed_width)
    long W = 0;                       // budget; N = W^(1/d), M = c_M W^(p/r)
    Rational c_M = 1;
    long N = 0, M = 0;                // explicit grid, overrides W
    Combiner combiner = Combiner::max;
    int relu_iterations = 0;          // poly_activation: u_n depth, 0 = automatic
    int U = 0;                        // fourier: M = 2^U
    std::string sigma = "triangle";   // fourier: triangle or sine
};

struct GridPlan {
    long N = 1;
    long M = 1;
};

// N = floor(W^(1/d)), M = c_M W^(p/r) rounded up to a multiple of N
GridPlan plan_deep(int d, const Rational& r, const Rational& p, long W, const Rational& c_M = 1);
// N = floor(eps^(-1/(2r))), M = eps^(-1/r) rounded up to a multiple of N
GridPlan plan_fixed_width(const Rational& r, const Rational& eps);

// rational q <= M^(-r)
Rational inverse_power(long M, const Rational& r);

Network build(const FunctionOracle& f, const BuildRequest& req);

// Σ_m φ(Mx - m) P_m(x); linear interpolant when ceil(r) = 1, 3^d split otherwise
Network build_shallow(const FunctionOracle& f, long M);

Network build_deep_phase(const FunctionOracle& f, long N, long M, Combiner comb = Combiner::max,
                         const Rational& p = 0);
// outputs w̃_q for every q in subgrid_labels(d) order
Network build_deep_filters(int d, long N);

// width 2d+10, every unit reads only the previous layer
Network build_fixed_width(const FunctionOracle& f, const Rational& eps);

// u(x) = x(3 - x²)/2 iterated n times with polynomial units
Network build_u_iterate(int n);
// (x u_n(x) + x)/2 on [-1, 1]
Network approximate_relu_poly(int n);
// coefficients of u, and of the rescaled ReLU building blocks
std::vector<Rational> u_polynomial();
std::vector<Rational> v_polynomial();
// iterate of u applied to a rational, exactly
Rational u_iterate_value(const Rational& x, int n);

struct Interval {
    Rational lo, hi;
    Rational length() const { return hi - lo; }
    bool contains(const Rational& x) const { return lo <= x && x <= hi; }
};

// seed interval whose v-trajectory visits I_{b_1}, I_{b_2}, ... (I₀ = [1/2,1], I₁ = [-1,-1/2]);
// endpoints are dyadic inner approximations of the exact algebraic ones, accurate to 2^-bits
Interval find_poly_interval(const std::vector<int>& bits, long precision_bits = 0);
Interval bit_interval(int bit);

Network build_poly_activation(const FunctionOracle& f, long N, long M, int relu_iterations = 0,
                              const Rational& p = 0);

}  // namespace hnet
