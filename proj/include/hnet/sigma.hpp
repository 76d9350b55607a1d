#pragma once

#include "hnet/scalar.hpp"

#include <json.hpp>

#include <utility>
#include <vector>

namespace hnet {

// Periodic activation: positive on (0, T/2), negative on (T/2, T), range [-1, 1].
struct SigmaSpec {
    enum class Kind { sine, triangle, table };

    Kind kind = Kind::triangle;
    Rational period = 2;
    // rational upper bound on the Lipschitz constant (exact for piecewise-linear kinds)
    Rational lipschitz = 2;
    // one period of breakpoints (x, y), x ascending in [0, T); used by Kind::table
    std::vector<std::pair<Rational, Rational>> table;

    static SigmaSpec sine(const Rational& period = 2);
    static SigmaSpec triangle(const Rational& period = 2);
    static SigmaSpec custom(const Rational& period, std::vector<std::pair<Rational, Rational>> pts);

    bool rational_exact() const { return kind != Kind::sine; }
    // throws std::domain_error for sine
    Rational eval(const Rational& x) const;
    void eval(BigFloat& out, const BigFloat& x) const;
    double eval(double x) const;

    nlohmann::json to_json() const;
    static SigmaSpec from_json(const nlohmann::json& j);
    bool operator==(const SigmaSpec& o) const;
};

// rational upper bound for pi, correct to ~250 bits
const Rational& pi_upper();
const Rational& pi_lower();

}  // namespace hnet
