#pragma once

#include "hnet/network.hpp"

#include <vector>

namespace hnet {

struct DigitStream {
    int base = 7;
    std::vector<int> digits;

    void validate() const;
};

// (1/δ)(w-θ)₊ - (1/δ)(w-θ-δ)₊
Affine threshold_gadget(NetBuilder& b, const Affine& w, const Rational& delta, const Rational& theta);
Network build_threshold(const Rational& delta, const Rational& theta);

// sawtooth levels n with 2^(-2n-2) <= eps, plus one
int square_levels(const Rational& eps);
// x ↦ x - Σ g_s(x)/4^s on [0,1]
Affine square_gadget(NetBuilder& b, const Affine& x, int levels);
Network build_square(const Rational& eps);

// levels for the squares inside a product of accuracy eps on [-B,B]^2
int product_levels(const Rational& eps, const Rational& bound);
// B²[s(|x+y|/2B) - s(|x-y|/2B)]; exactly 0 if either input is 0
Affine product_gadget(NetBuilder& b, const Affine& x, const Affine& y, const Rational& bound, int levels);
Network build_product(const Rational& eps, const Rational& bound);
// depth added by product_gadget
int product_depth(int levels);

Rational encode_digits(const DigitStream& s);
// reference decoder: first T base-b digits of w in [0,1)
std::vector<int> expand_digits(const Rational& w, int base, int T);
// largest allowed ramp width, exclusive: base^(-T)/4
Rational guard_delta(int base, int T);
// default ramp width base^(-T)/8
Rational default_delta(int base, int T);

struct Extractor {
    std::vector<Affine> digits;
    // carry after each stage; carries[t] feeds stage t+1 (carries[0] = input)
    std::vector<Affine> carries;
};

// sequential digit extraction: w_{t+1} = base*w_t - digit_t
Extractor extractor_gadget(NetBuilder& b, const Affine& w, int base, int T, const Rational& delta);
Network build_bit_extractor(int base, int T, const Rational& delta);

// b·y for b ∈ {0,1} and |y| <= bound; |result| <= |y| whenever 0 <= b <= 1
Affine gate_gadget(NetBuilder& b, const Affine& bit, const Affine& y, const Rational& bound);
// y clipped to [-c, c]
Affine clamp_gadget(NetBuilder& b, const Affine& y, const Rational& c);
// max over values via a + (b - a)₊, pairwise tree
Affine max_gadget(NetBuilder& b, std::vector<Affine> values);

}  // namespace hnet
