#pragma once

#include "hnet/oracle.hpp"

#include <vector>

namespace hnet {

// Hölder norms are certified on this box; codec cubes reach past [0,1]^d by one N-cell.
constexpr long kDomainLo = -1;
constexpr long kDomainHi = 2;

struct NormEstimate {
    double sup = 0;       // max |D^k f| over |k| <= K
    double holder = 0;    // top-order Hölder quotient bound
    double sampled = 0;   // largest quotient seen over random pairs
    double value() const;
};

// grid maxima of derivatives plus sampled Hölder quotients on [kDomainLo, kDomainHi]^d
NormEstimate estimate_norm(const FunctionOracle& f, unsigned long seed, int pairs = 100000);

// zero, smooth trigonometric / Gaussian / polynomial members and, for r <= 1, rough members
std::vector<FunctionOracle> corpus(int d, const Rational& r, unsigned long seed);
FunctionOracle corpus_member(int d, const Rational& r, unsigned long seed, const std::string& id);

}  // namespace hnet
