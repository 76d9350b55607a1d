#pragma once

#include "hnet/gadgets.hpp"
#include "hnet/oracle.hpp"

#include <json.hpp>
#include <map>
#include <vector>

namespace hnet {

struct TaylorTable {
    long M = 1;
    int d = 1;
    std::vector<MultiIndex> orders;
    // entries[m][i] = D^{orders[i]} f(m/M)
    std::map<GridIndex, std::vector<Rational>> entries;

    const std::vector<Rational>& at(const GridIndex& m) const;
    bool operator==(const TaylorTable& o) const { return M == o.M && orders == o.orders && entries == o.entries; }
};

TaylorTable taylor_table(const FunctionOracle& f, long M, const std::vector<GridIndex>& region);

// M-knots of C_n = n/N + [-1/N, 1/N]^d, i.e. (M/N) n + [-M/N, M/N]^d
std::vector<GridIndex> cube_knots(const GridIndex& n, long N, long M);
// offsets in [-K, K]^d in snake order: first coordinate slowest, inner block reversed on odd steps
std::vector<GridIndex> traversal_offsets(int d, long K);
std::vector<GridIndex> knot_traversal(const GridIndex& n, long N, long M);

// ã_{m2,k} = Σ_n â_{m1,k+n e_dir} / n! · (sign/M)^n for n <= K - |k|
std::vector<Rational> transfer_coeffs(const std::vector<Rational>& ahat, const std::vector<MultiIndex>& orders,
                                      int dir, int sign, long M);
// (dir, sign) of the step m1 -> m2; throws unless the knots are adjacent
std::pair<int, int> step_between(const GridIndex& m1, const GridIndex& m2);

// exact test of |err| <= M^(order - r)
bool within_tolerance(const Rational& err, long M, const Rational& r, int order);
// rational q <= M^(order - r), equal when r is an integer
Rational coeff_quantum(long M, const Rational& r, int order);

struct EncodingWeight {
    GridIndex n;
    long N = 1;
    long M = 1;
    Rational r;
    std::vector<MultiIndex> orders;
    // digit B + 3 per traversal step, one stream per order
    std::vector<DigitStream> streams;
    // â at the first knot of the traversal
    std::vector<Rational> initial;

    // the scalar weights fed to the decoder: initials then encoded streams
    std::vector<Rational> weights() const;
    int steps() const;
    double bits_per_stream() const;
    nlohmann::json to_json() const;
    static EncodingWeight from_json(const nlohmann::json& j);
};

EncodingWeight encode_cube(const TaylorTable& table, const GridIndex& n, long N, long M, const Rational& r);
TaylorTable decode_cube(const EncodingWeight& enc);

// â at every traversal knot (outer index) for every order (inner index)
std::vector<std::vector<Affine>> decoder_gadget(NetBuilder& b, const std::vector<Affine>& initials,
                                                const std::vector<Affine>& streams, int d, long K, long M,
                                                const Rational& r);
// same, from digit values B + 3 already extracted (digits[order][step])
std::vector<std::vector<Affine>> decoder_from_digits(NetBuilder& b, const std::vector<Affine>& initials,
                                                     const std::vector<std::vector<Affine>>& digits, int d, long K,
                                                     long M, const Rational& r);
// inputs: initials then stream weights, in order of taylor_orders; outputs follow the traversal
Network build_decoder_net(long N, long M, const Rational& r, int d);

}  // namespace hnet
