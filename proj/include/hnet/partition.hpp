#pragma once

#include "hnet/network.hpp"

#include <functional>
#include <map>
#include <optional>
#include <vector>

namespace hnet {

using GridIndex = std::vector<long>;
using Point = std::vector<Rational>;

struct SimplexId {
    GridIndex base;
    // coordinate order, 0-based: x_perm[0] - n_perm[0] <= x_perm[1] - n_perm[1] <= ...
    std::vector<int> perm;
    bool operator==(const SimplexId& o) const { return base == o.base && perm == o.perm; }
};

struct Subgrid {
    std::vector<int> q;
    long N = 1;
};

SimplexId simplex_of(const Point& x, long N);

// value of the hat function at y (reference, no network)
Rational spike_value(const Point& y);
// (1 + min(0, y) - max(0, y)) >= 0, i.e. x lies in the closed patch
bool in_patch(const Point& y);

// Kuhn neighbours of the origin: {0,1}^d ∪ {0,-1}^d
std::vector<GridIndex> patch_offsets(int d);
// all knots of [0,N]^d in lexicographic order
std::vector<GridIndex> all_knots(long N, int d);
std::vector<GridIndex> subgrid_knots(const std::vector<int>& q, long N, int d);
// all q in {0,1,2}^d, lexicographic
std::vector<std::vector<int>> subgrid_labels(int d);
std::optional<GridIndex> knot_for(const Point& x, const Subgrid& g);

// Hat functions φ(y - m) over affine coordinates y, created on demand and shared.
class SpikeBank {
public:
    using SpikeFn = std::function<Affine(NetBuilder&, const std::vector<Affine>&)>;
    // fn replaces the ReLU spike construction when given
    SpikeBank(NetBuilder& b, std::vector<Affine> y, SpikeFn fn = {});
    const Affine& spike(const GridIndex& m);
    // Σ values[k] φ(y - knots[k])
    Affine linear(const std::vector<GridIndex>& knots, const std::vector<Rational>& values);
    // values[k] on the whole patch of knots[k]; knots must have disjoint patches
    Affine constant(const std::vector<GridIndex>& knots, const std::vector<Rational>& values,
                    const std::optional<GridIndex>& lo = std::nullopt, const std::optional<GridIndex>& hi = std::nullopt);
    size_t size() const { return spikes_.size(); }

private:
    NetBuilder& b_;
    std::vector<Affine> y_;
    SpikeFn fn_;
    std::map<GridIndex, Affine> spikes_;
};

// φ(y) built from relu units
Affine spike_gadget(NetBuilder& b, const std::vector<Affine>& y);

Network build_spike(long N, const GridIndex& n, int d);
Network build_linear_interpolant(const std::vector<GridIndex>& knots, const std::vector<Rational>& values, long N, int d);
Network build_constant_interpolant(const Subgrid& g, const std::vector<GridIndex>& knots,
                                   const std::vector<Rational>& values, int d);

}  // namespace hnet
