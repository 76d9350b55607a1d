#include <doctest.h>

#include "hnet/eval.hpp"
#include "hnet/partition.hpp"

#include <random>

using namespace hnet;

namespace {

Rational ev(const Network& n, const Point& x) {
    std::vector<ExactScalar> in(x.begin(), x.end());
    return eval_network(n, in).rational();
}

Point random_unit_point(std::mt19937& rng, int d, long den = 1009) {
    std::uniform_int_distribution<long> u(0, den);
    Point x;
    for (int i = 0; i < d; ++i) x.push_back(frac_q(u(rng), den));
    for (auto& q : x) q.canonicalize();
    return x;
}

}  // namespace

TEST_CASE("simplex_of") {
    SimplexId s = simplex_of({frac_q(3, 10), frac_q(7, 10)}, 1);
    CHECK(s.base == GridIndex{0, 0});
    CHECK(s.perm == std::vector<int>{0, 1});
    s = simplex_of({frac_q(7, 10), frac_q(3, 10)}, 1);
    CHECK(s.perm == std::vector<int>{1, 0});
    CHECK(simplex_of({frac_q(3, 5)}, 4).base == GridIndex{2});
    s = simplex_of({frac_q(1, 2), frac_q(1, 2)}, 1);
    CHECK(s.base == GridIndex{0, 0});
    CHECK(s.perm == std::vector<int>{0, 1});
    CHECK(simplex_of({frac_q(1, 2)}, 4).base == GridIndex{1});
    CHECK(simplex_of({Rational(1)}, 4).base == GridIndex{3});
}

TEST_CASE("spike values") {
    Network s = build_spike(2, {1}, 1);
    CHECK(ev(s, {frac_q(1, 2)}) == 1);
    CHECK(ev(s, {Rational(0)}) == 0);
    CHECK(ev(s, {frac_q(1, 4)}) == frac_q(1, 2));
}

TEST_CASE("spike is the Kuhn hat in d = 2, 3") {
    std::mt19937 rng(5);
    for (int d = 2; d <= 3; ++d) {
        long N = 3;
        GridIndex n(d, 1);
        Network s = build_spike(N, n, d);
        for (auto& m : all_knots(N, d)) {
            Point x;
            for (int i = 0; i < d; ++i) x.push_back(frac_q(m[i], N));
            CHECK(ev(s, x) == (m == n ? 1 : 0));
        }
        // linear inside a simplex: value at a barycentric point equals the combination of vertex values
        for (int trial = 0; trial < 50; ++trial) {
            Point x = random_unit_point(rng, d);
            SimplexId sx = simplex_of(x, N);
            std::vector<Point> verts;
            GridIndex v = sx.base;
            auto to_point = [&](const GridIndex& g) {
                Point p;
                for (int i = 0; i < d; ++i) p.push_back(frac_q(g[i], N));
                return p;
            };
            verts.push_back(to_point(v));
            for (int k = d - 1; k >= 0; --k) {
                v[sx.perm[k]] += 1;
                verts.push_back(to_point(v));
            }
            std::uniform_int_distribution<long> w(1, 50);
            std::vector<Rational> lam;
            Rational tot(0);
            for (size_t k = 0; k < verts.size(); ++k) {
                lam.emplace_back(w(rng));
                tot += lam.back();
            }
            Point p(d, Rational(0));
            Rational expect(0);
            for (size_t k = 0; k < verts.size(); ++k) {
                lam[k] /= tot;
                for (int i = 0; i < d; ++i) p[i] += lam[k] * verts[k][i];
                expect += lam[k] * ev(s, verts[k]);
            }
            CHECK(ev(s, p) == expect);
        }
    }
}

TEST_CASE("linear interpolant") {
    Network g = build_linear_interpolant({{0}, {1}}, {2, 3}, 1, 1);
    CHECK(ev(g, {frac_q(1, 2)}) == frac_q(5, 2));
    Network single = build_linear_interpolant({{2}}, {7}, 4, 1);
    CHECK(ev(single, {frac_q(1, 2)}) == 7);
    CHECK(ev(single, {frac_q(1, 8)}) == 0);
    CHECK(ev(single, {Rational(1)}) == 0);
    CHECK_THROWS_AS(build_linear_interpolant({{1}, {1}}, {1, 2}, 2, 1), std::invalid_argument);
}

TEST_CASE("constant interpolant") {
    Subgrid g{{0}, 6};
    Network h = build_constant_interpolant(g, {{0}, {3}, {6}}, {1, 1, 1}, 1);
    CHECK(ev(h, {frac_q(55, 100)}) == 1);
    CHECK(ev(h, {frac_q(1, 2)}) == 1);
    Network h2 = build_constant_interpolant(g, {{0}, {3}, {6}}, {10, 20, 30}, 1);
    CHECK(ev(h2, {frac_q(5, 100)}) == 10);
    CHECK_THROWS_AS(build_constant_interpolant(g, {{1}}, {1}, 1), std::invalid_argument);
}

TEST_CASE("subgrid knots") {
    CHECK(subgrid_knots({0}, 6, 1) == std::vector<GridIndex>{{0}, {3}, {6}});
    CHECK(subgrid_knots({2}, 6, 1) == std::vector<GridIndex>{{2}, {5}});
    std::vector<GridIndex> all;
    for (int q = 0; q < 3; ++q)
        for (auto& k : subgrid_knots({q}, 6, 1)) all.push_back(k);
    std::sort(all.begin(), all.end());
    CHECK(all == all_knots(6, 1));
}

TEST_CASE("knot_for") {
    Subgrid g{{0}, 6};
    CHECK(knot_for({frac_q(55, 100)}, g) == GridIndex{3});
    CHECK(!knot_for({frac_q(3, 10)}, g).has_value());
    CHECK(knot_for({frac_q(1, 2)}, g) == GridIndex{3});
}

TEST_CASE("partition of unity and subgrid coverage") {
    std::mt19937 rng(17);
    for (int d = 1; d <= 2; ++d) {
        for (long N : {1, 2, 5}) {
            std::vector<GridIndex> knots = all_knots(N, d);
            Network sum = build_linear_interpolant(knots, std::vector<Rational>(knots.size(), Rational(1)), N, d);
            std::vector<Network> filters;
            for (auto& q : subgrid_labels(d)) {
                auto kq = subgrid_knots(q, N, d);
                filters.push_back(build_linear_interpolant(kq, std::vector<Rational>(kq.size(), Rational(1)), N, d));
            }
            for (int t = 0; t < 100; ++t) {
                Point x = random_unit_point(rng, d);
                CHECK(ev(sum, x) == 1);
                Rational tot(0);
                int covered = 0;
                for (size_t qi = 0; qi < filters.size(); ++qi) {
                    tot += ev(filters[qi], x);
                    auto q = subgrid_labels(d)[qi];
                    if (knot_for(x, Subgrid{q, N})) ++covered;
                }
                CHECK(tot == 1);
                CHECK(covered >= 1);
            }
        }
    }
}

TEST_CASE("constant interpolant is constant on each patch") {
    std::mt19937 rng(23);
    int d = 2;
    long N = 7;
    Subgrid g{{1, 0}, N};
    auto knots = subgrid_knots(g.q, N, d);
    std::vector<Rational> vals;
    for (size_t k = 0; k < knots.size(); ++k) vals.push_back(frac_q(static_cast<long>(k) * 3 - 5, 4));
    Network h = build_constant_interpolant(g, knots, vals, d);
    for (size_t k = 0; k < knots.size(); ++k) {
        int hits = 0;
        while (hits < 20) {
            Point y;
            std::uniform_int_distribution<long> u(-97, 97);
            for (int i = 0; i < d; ++i) y.push_back(frac_q(u(rng), 97));
            for (auto& q : y) q.canonicalize();
            if (!in_patch(y)) continue;
            Point x;
            bool ok = true;
            for (int i = 0; i < d; ++i) {
                x.push_back((y[i] + knots[k][i]) / N);
                if (x[i] < 0 || x[i] > 1) ok = false;
            }
            if (!ok) continue;
            CHECK(ev(h, x) == vals[k]);
            ++hits;
        }
    }
}
