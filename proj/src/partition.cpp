#include "hnet/partition.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>

namespace hnet {

SimplexId simplex_of(const Point& x, long N) {
    size_t d = x.size();
    SimplexId s;
    std::vector<Rational> t(d);
    for (size_t i = 0; i < d; ++i) {
        Rational y = x[i] * N;
        Rational f = floor_q(y);
        if (f == y && sgn(y) > 0) f -= 1;
        s.base.push_back(f.get_num().get_si());
        t[i] = y - f;
    }
    s.perm.resize(d);
    std::iota(s.perm.begin(), s.perm.end(), 0);
    std::stable_sort(s.perm.begin(), s.perm.end(), [&](int a, int b) { return t[a] < t[b]; });
    return s;
}

Rational spike_value(const Point& y) {
    Rational mx(0), mn(0);
    for (auto& v : y) {
        if (v > mx) mx = v;
        if (v < mn) mn = v;
    }
    Rational r = 1 + mn - mx;
    return sgn(r) > 0 ? r : Rational(0);
}

bool in_patch(const Point& y) {
    Rational mx(0), mn(0);
    for (auto& v : y) {
        if (v > mx) mx = v;
        if (v < mn) mn = v;
    }
    return 1 + mn - mx >= 0;
}

std::vector<GridIndex> patch_offsets(int d) {
    std::set<GridIndex> s;
    for (long mask = 0; mask < (1L << d); ++mask) {
        GridIndex a(d), b(d);
        for (int i = 0; i < d; ++i) {
            a[i] = (mask >> i) & 1;
            b[i] = -a[i];
        }
        s.insert(a);
        s.insert(b);
    }
    return {s.begin(), s.end()};
}

namespace {

void enumerate(const GridIndex& lo, const GridIndex& hi, const GridIndex& step, std::vector<GridIndex>& out) {
    size_t d = lo.size();
    GridIndex cur = lo;
    for (size_t i = 0; i < d; ++i)
        if (lo[i] > hi[i]) return;
    while (true) {
        out.push_back(cur);
        size_t i = d;
        while (i-- > 0) {
            cur[i] += step[i];
            if (cur[i] <= hi[i]) break;
            cur[i] = lo[i];
            if (i == 0) return;
        }
    }
}

}  // namespace

std::vector<GridIndex> all_knots(long N, int d) {
    std::vector<GridIndex> out;
    enumerate(GridIndex(d, 0), GridIndex(d, N), GridIndex(d, 1), out);
    return out;
}

std::vector<GridIndex> subgrid_knots(const std::vector<int>& q, long N, int d) {
    if (static_cast<int>(q.size()) != d) throw std::invalid_argument("subgrid label length");
    GridIndex lo(d);
    for (int i = 0; i < d; ++i) {
        if (q[i] < 0 || q[i] > 2) throw std::invalid_argument("subgrid label outside {0,1,2}");
        lo[i] = q[i];
    }
    std::vector<GridIndex> out;
    enumerate(lo, GridIndex(d, N), GridIndex(d, 3), out);
    return out;
}

std::vector<std::vector<int>> subgrid_labels(int d) {
    std::vector<std::vector<int>> out;
    for (auto& k : all_knots(2, d)) out.emplace_back(k.begin(), k.end());
    return out;
}

std::optional<GridIndex> knot_for(const Point& x, const Subgrid& g) {
    int d = static_cast<int>(x.size());
    GridIndex lo(d), hi(d);
    for (int i = 0; i < d; ++i) {
        Rational y = x[i] * g.N;
        long a = ceil_q(y - 1).get_num().get_si();
        long b = floor_q(y + 1).get_num().get_si();
        a = std::max(a, 0L);
        b = std::min(b, g.N);
        // first value >= a congruent to q mod 3
        long r = ((a - g.q[i]) % 3 + 3) % 3;
        lo[i] = r == 0 ? a : a + (3 - r);
        hi[i] = b;
    }
    std::vector<GridIndex> cands;
    enumerate(lo, hi, GridIndex(d, 3), cands);
    for (auto& n : cands) {
        Point y(d);
        for (int i = 0; i < d; ++i) y[i] = x[i] * g.N - n[i];
        if (in_patch(y)) return n;
    }
    return std::nullopt;
}

Affine spike_gadget(NetBuilder& b, const std::vector<Affine>& y) {
    // running maxima of (0, y_1..y_k) and of (0, -y_1..-y_k)
    Affine up, down;
    for (auto& yi : y) {
        up += b.relu(yi - up);
        down += b.relu(-yi - down);
    }
    return b.relu(Affine::constant(1) - up - down);
}

SpikeBank::SpikeBank(NetBuilder& b, std::vector<Affine> y, SpikeFn fn) : b_(b), y_(std::move(y)), fn_(std::move(fn)) {}

const Affine& SpikeBank::spike(const GridIndex& m) {
    auto it = spikes_.find(m);
    if (it != spikes_.end()) return it->second;
    std::vector<Affine> z;
    for (size_t i = 0; i < y_.size(); ++i) z.push_back(y_[i] - Rational(m[i]));
    return spikes_.emplace(m, fn_ ? fn_(b_, z) : spike_gadget(b_, z)).first->second;
}

Affine SpikeBank::linear(const std::vector<GridIndex>& knots, const std::vector<Rational>& values) {
    if (knots.size() != values.size()) throw std::invalid_argument("knots/values length mismatch");
    std::set<GridIndex> seen;
    Affine out;
    for (size_t k = 0; k < knots.size(); ++k) {
        if (!seen.insert(knots[k]).second) throw std::invalid_argument("duplicate knot");
        if (sgn(values[k]) == 0) continue;
        out += spike(knots[k]) * values[k];
    }
    return out;
}

Affine SpikeBank::constant(const std::vector<GridIndex>& knots, const std::vector<Rational>& values,
                           const std::optional<GridIndex>& lo, const std::optional<GridIndex>& hi) {
    if (knots.size() != values.size()) throw std::invalid_argument("knots/values length mismatch");
    auto offs = patch_offsets(static_cast<int>(y_.size()));
    std::map<GridIndex, Rational> coef;
    std::set<GridIndex> owner;
    for (size_t k = 0; k < knots.size(); ++k) {
        for (auto& v : offs) {
            GridIndex m = knots[k];
            bool inside = true;
            for (size_t i = 0; i < m.size(); ++i) {
                m[i] += v[i];
                if ((lo && m[i] < (*lo)[i]) || (hi && m[i] > (*hi)[i])) inside = false;
            }
            if (!inside) continue;
            if (!owner.insert(m).second) throw std::invalid_argument("knot patches overlap");
            coef[m] = values[k];
        }
    }
    Affine out;
    for (auto& [m, c] : coef) {
        if (sgn(c) == 0) continue;
        out += spike(m) * c;
    }
    return out;
}

namespace {

std::vector<Affine> scaled_inputs(NetBuilder& b, long N, int d) {
    std::vector<Affine> y;
    for (int i = 0; i < d; ++i) y.push_back(b.input(i) * Rational(N));
    return y;
}

}  // namespace

Network build_spike(long N, const GridIndex& n, int d) {
    if (static_cast<int>(n.size()) != d) throw std::invalid_argument("knot dimension");
    NetBuilder b(d);
    SpikeBank bank(b, scaled_inputs(b, N, d));
    Affine out = bank.spike(n);
    return b.finish({out}, {{"variant", "spike"}, {"N", N}, {"d", d}});
}

Network build_linear_interpolant(const std::vector<GridIndex>& knots, const std::vector<Rational>& values, long N,
                                 int d) {
    NetBuilder b(d);
    SpikeBank bank(b, scaled_inputs(b, N, d));
    Affine out = bank.linear(knots, values);
    return b.finish({out}, {{"variant", "linear_interpolant"}, {"N", N}, {"d", d}});
}

Network build_constant_interpolant(const Subgrid& g, const std::vector<GridIndex>& knots,
                                   const std::vector<Rational>& values, int d) {
    for (auto& n : knots) {
        if (static_cast<int>(n.size()) != d) throw std::invalid_argument("knot dimension");
        for (int i = 0; i < d; ++i) {
            if (n[i] < 0 || n[i] > g.N || ((n[i] - g.q[i]) % 3 + 3) % 3 != 0)
                throw std::invalid_argument("knot not in subgrid");
        }
    }
    NetBuilder b(d);
    SpikeBank bank(b, scaled_inputs(b, g.N, d));
    Affine out = bank.constant(knots, values, GridIndex(d, 0), GridIndex(d, g.N));
    return b.finish({out}, {{"variant", "constant_interpolant"}, {"N", g.N}, {"d", d}});
}

}  // namespace hnet
