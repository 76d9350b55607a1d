#pragma once

#include "hnet/builders.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace hnet {

// A: {0,1}^K → {0,1}; entry Σ_k z_k 2^(K-k), z_1 most significant
struct Assignment {
    int K = 1;
    std::vector<uint8_t> table;

    void validate() const;
    int at(const std::vector<int>& z) const;
    static Assignment random(int K, std::mt19937_64& rng);
};

struct Schedule {
    std::vector<Rational> a;  // a_1..a_K
    std::vector<Rational> l;  // l_1..l_K
    Rational c_sigma;
    int K() const { return static_cast<int>(a.size()); }
};

// a₁ = 2, l₁ = 1/2, a_k = 4/l_{k-1}, l_k = min(l_{k-1}/2, l_{k-1}/(a_k c_σ)), c_σ = σ.lipschitz
Schedule make_schedule(int K, const SigmaSpec& s);

// θ̃_a(y) = min(1, max(-1, a σ(y))) = (-1)^⌊y⌋ whenever y is at least parity_delta(a) from Z
Rational parity_delta(const Rational& a);
Affine parity_gadget(NetBuilder& b, const std::shared_ptr<const SigmaSpec>& s, const Affine& y, const Rational& a);
// one input x, output θ̃_a(s x + shift)
Network build_parity(const Rational& a, const Rational& scale, const Rational& shift, const SigmaSpec& s);

// outputs θ̃_a(2^u x_k) for u = 1..U, k = 1..d, index (u-1)·d + (k-1); a = 0 means 8·2^U
Network build_patch_encoder(int U, int d, const SigmaSpec& s, const Rational& a = 0);
// expected ±1 code of the patch holding x, same order
std::vector<int> patch_code(const Point& x, int U);

struct AssignmentWeight {
    Rational w;         // midpoint of the interval
    Interval interval;  // length l_K
};

// w with sgn(g_1^{z_1} ∘ ... ∘ g_K^{z_K}(w)) = A(z) for all z, g_k = σ(a_k ·); A(z) = 1 ↔ positive.
// Exact preimages for piecewise-linear σ, arcsine with a checked residual for sine.
AssignmentWeight find_assignment_weight(const Assignment& A, const SigmaSpec& s, const Schedule& sch);

struct DichotomyCheck {
    std::vector<uint8_t> table;  // recovered A
    Rational min_margin;         // smallest |final value| (lower bound for sine)
};
// runs H_{K,w} on every z; throws if a sine enclosure cannot decide a sign
DichotomyCheck dichotomy_table(const Rational& w, const SigmaSpec& s, const Schedule& sch);

// b·y = max(0, 2b + y - 1) - b for b ∈ {0,1}, y ∈ [-1,1]
Affine binary_product(NetBuilder& b, const Affine& bit, const Affine& y);
// inputs (x, b), output (1-b)x + bσ(a x)
Network build_branch_gate(const Rational& a, const SigmaSpec& s);

// w'_1 with |w'_k - targets[k]| < 2/a along w'_k = σ(a w'_{k-1})
Rational find_seed_weight(const std::vector<Rational>& targets, const Rational& a, const SigmaSpec& s);
// w'_1..w'_R from the seed; exact for piecewise-linear σ, bits of working precision for sine
std::vector<Rational> seed_chain(const Rational& seed, const Rational& a, int R, const SigmaSpec& s, long bits = 0);

// outputs Π_s Ψ_{q_s}(x_s) for q = 0..2^d-1, q_s = bit s of q; Ψ₀ = (1 + θ̃_{a₀}(2Mx))/2, Ψ₁ = 1 - Ψ₀.
// Products use relu(Ψ + Ψ' - 1), exact where every Ψ is 0 or 1.
Network build_unity_filters(long M, const Rational& a0, int d, const SigmaSpec& s);

// largest U whose estimated weight count fits W (at least 1)
int fourier_levels_for_budget(int d, const Rational& r, long W);
long fourier_weight_estimate(int d, const Rational& r, int U);

// M = 2^U patches; all weights but one (meta "seed_node") independent of f; a = 0 means 8M
Network build_deep_fourier(const FunctionOracle& f, int U, const SigmaSpec& s, const Rational& a = 0);

// some parity gate of build_deep_fourier(·, U, ·, a) is inside its ramp at x
bool fourier_in_ramp(const Point& x, int U, const Rational& a);

ExactScalar extract_seed(const Network& net);
// copy of net with the seed bias replaced
Network attach_seed(const Network& net, const ExactScalar& seed);

}  // namespace hnet
