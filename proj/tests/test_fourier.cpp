#include <doctest.h>

#include "hnet/corpus.hpp"
#include "hnet/eval.hpp"
#include "hnet/fourier.hpp"
#include "hnet/harness.hpp"
#include "hnet/serialize.hpp"

#include <cmath>
#include <random>

using namespace hnet;

namespace {

double run_big(const Network& net, const std::vector<Rational>& x, size_t out = 0, long bits = 256) {
    std::vector<ExactScalar> xs(x.begin(), x.end());
    return eval_outputs(net, xs, EvalMode::big(bits))[out].to_double();
}

std::vector<Rational> run_exact(const Network& net, const std::vector<Rational>& x) {
    Evaluator ev(net, EvalMode::exact());
    return ev.run_rational(x);
}

}  // namespace

TEST_CASE("parity gate with a sine activation") {
    Network p = build_parity(100, 1, 0, SigmaSpec::sine());
    CHECK(run_big(p, {frac_q(3, 10)}) == doctest::Approx(1).epsilon(1e-30));
    CHECK(run_big(p, {frac_q(3, 2)}) == doctest::Approx(-1).epsilon(1e-30));
    CHECK(run_big(p, {frac_q(1, 2)}) == doctest::Approx(1).epsilon(1e-30));
    CHECK(parity_delta(100) == frac_q(1, 200));
}

TEST_CASE("parity gate is exact off the ramps") {
    Network p = build_parity(16, 4, frac_q(1, 8), SigmaSpec::triangle());
    std::mt19937_64 rng(3);
    int checked = 0;
    for (int i = 0; i < 500; ++i) {
        Rational x = frac_q(static_cast<long>(rng() % 100000), 100000);
        Rational y = 4 * x + frac_q(1, 8);
        Rational fl = floor_q(y);
        Rational frac = y - fl;
        Rational v = run_exact(p, {x})[0];
        CHECK(v >= -1);
        CHECK(v <= 1);
        if (frac < parity_delta(16) || 1 - frac < parity_delta(16)) continue;
        CHECK(v == (fl.get_num() % 2 == 0 ? 1 : -1));
        ++checked;
    }
    CHECK(checked > 400);
}

TEST_CASE("patch encoder codes") {
    Network enc = build_patch_encoder(2, 1, SigmaSpec::triangle());
    CHECK(enc.outputs.size() == 2);
    auto c = run_exact(enc, {frac_q(3, 5)});
    CHECK(c[0] == -1);
    CHECK(c[1] == 1);
    c = run_exact(enc, {frac_q(1, 10)});
    CHECK(c[0] == 1);
    CHECK(c[1] == 1);
    CHECK(patch_code({frac_q(3, 5)}, 2) == std::vector<int>{-1, 1});

    Network enc2 = build_patch_encoder(3, 2, SigmaSpec::triangle());
    CHECK(enc2.outputs.size() == 6);
    std::mt19937_64 rng(9);
    for (int i = 0; i < 200; ++i) {
        // interior of a patch: centre ± 1/32 of its width
        Point x;
        for (int k = 0; k < 2; ++k) {
            long m = static_cast<long>(rng() % 8);
            x.push_back(frac_q(32 * m + 16 + static_cast<long>(rng() % 17) - 8, 256));
        }
        auto v = run_exact(enc2, x);
        auto want = patch_code(x, 3);
        for (size_t j = 0; j < v.size(); ++j) CHECK(v[j] == want[j]);
    }
}

TEST_CASE("schedule recurrence") {
    Schedule t = make_schedule(5, SigmaSpec::triangle());
    CHECK(t.a[0] == 2);
    CHECK(t.l[0] == frac_q(1, 2));
    CHECK(t.a[1] == 8);
    CHECK(t.l[1] == frac_q(1, 32));
    for (int k = 1; k < 5; ++k) {
        CHECK(t.a[k] == 4 / t.l[k - 1]);
        CHECK(t.l[k] < t.l[k - 1]);
        CHECK(sgn(t.l[k]) > 0);
    }
    Schedule s = make_schedule(2, SigmaSpec::sine());
    CHECK(s.a[1] == 8);
    CHECK(s.l[1].get_d() == doctest::Approx(1 / (16 * M_PI)).epsilon(1e-12));
    CHECK(s.l[1] <= frac_q(1, 4));
}

TEST_CASE("assignment weight, one bit") {
    SigmaSpec s = SigmaSpec::sine();
    Schedule sch = make_schedule(1, s);
    auto w = find_assignment_weight(Assignment{1, {1, 1}}, s, sch);
    CHECK(w.interval.contains(frac_q(1, 4)));
    CHECK(w.interval.lo >= 0);
    CHECK(w.interval.hi <= frac_q(1, 2));
    auto v = find_assignment_weight(Assignment{1, {1, 0}}, s, sch);
    CHECK(v.interval.lo >= frac_q(1, 2));
    CHECK(v.interval.hi <= 1);
    CHECK(dichotomy_table(v.w, s, sch).table == std::vector<uint8_t>{1, 0});
}

TEST_CASE("dichotomy lookup reproduces random assignments") {
    std::mt19937_64 rng(17);
    for (int K = 1; K <= 9; ++K) {
        SigmaSpec s = SigmaSpec::triangle();
        Schedule sch = make_schedule(K, s);
        for (int i = 0; i < 8; ++i) {
            Assignment A = Assignment::random(K, rng);
            auto w = find_assignment_weight(A, s, sch);
            CHECK(w.interval.length() >= sch.l[K - 1]);
            auto c = dichotomy_table(w.w, s, sch);
            CHECK(c.table == A.table);
            CHECK(c.min_margin > frac_q(1, 16));
        }
    }
    for (int K = 1; K <= 5; ++K) {
        SigmaSpec s = SigmaSpec::sine();
        Schedule sch = make_schedule(K, s);
        for (int i = 0; i < 4; ++i) {
            Assignment A = Assignment::random(K, rng);
            auto w = find_assignment_weight(A, s, sch);
            CHECK(w.interval.length() >= sch.l[K - 1]);
            CHECK(dichotomy_table(w.w, s, sch).table == A.table);
        }
    }
}

TEST_CASE("assignment table indexing") {
    Assignment A{3, {0, 1, 0, 0, 0, 0, 0, 1}};
    CHECK(A.at({0, 0, 1}) == 1);
    CHECK(A.at({1, 1, 1}) == 1);
    CHECK(A.at({1, 0, 0}) == 0);
    Assignment bad{2, {0, 1}};
    CHECK_THROWS(bad.validate());
}

TEST_CASE("branch gate") {
    Network g = build_branch_gate(2, SigmaSpec::sine());
    CHECK(run_big(g, {frac_q(37, 100), Rational(0)}) == doctest::Approx(0.37).epsilon(1e-30));
    CHECK(run_big(g, {frac_q(1, 4), Rational(1)}) == doctest::Approx(1).epsilon(1e-30));
    NetBuilder b(2);
    Affine out = binary_product(b, b.input(0), b.input(1));
    Network prod = b.finish({out});
    CHECK(run_exact(prod, {Rational(1), frac_q(-1, 2)})[0] == frac_q(-1, 2));
    CHECK(run_exact(prod, {Rational(0), frac_q(3, 4)})[0] == 0);
    Network t = build_branch_gate(8, SigmaSpec::triangle());
    CHECK(run_exact(t, {frac_q(1, 16), Rational(1)})[0] == 1);
    CHECK(run_exact(t, {frac_q(-2, 7), Rational(0)})[0] == frac_q(-2, 7));
}

TEST_CASE("seed weight chain") {
    SigmaSpec sine = SigmaSpec::sine();
    CHECK(find_seed_weight({frac_q(3, 10)}, 100, sine) == frac_q(3, 10));
    Rational w = find_seed_weight({frac_q(3, 10), frac_q(-7, 10)}, 100, sine);
    auto chain = seed_chain(w, 100, 2, sine);
    CHECK(std::abs(chain[0].get_d() - 0.3) < 0.02);
    CHECK(std::abs(chain[1].get_d() + 0.7) < 0.02);

    std::mt19937_64 rng(4);
    for (SigmaSpec s : {SigmaSpec::triangle(), sine}) {
        std::vector<Rational> t;
        for (int k = 0; k < 20; ++k) t.push_back(frac_q(static_cast<long>(rng() % 2001) - 1000, 1000));
        Rational a(1000000);
        Rational seed = find_seed_weight(t, a, s);
        auto c = seed_chain(seed, a, 20, s);
        for (int k = 0; k < 20; ++k) CHECK(abs_q(c[k] - t[k]) < 2 / a);
    }
}

TEST_CASE("unity filters") {
    long M = 8;
    Network f1 = build_unity_filters(M, 64, 1, SigmaSpec::triangle());
    CHECK(run_exact(f1, {frac_q(3, 4 * M)})[0] == 0);
    CHECK(run_exact(f1, {frac_q(1, 4 * M)})[1] == 0);
    std::mt19937_64 rng(8);
    for (int i = 0; i < 200; ++i) {
        Rational x = frac_q(static_cast<long>(rng() % 65537), 65536);
        auto v = run_exact(f1, {x});
        CHECK(v[0] + v[1] == 1);
    }
    Network f2 = build_unity_filters(M, 64, 2, SigmaSpec::sine());
    int used = 0;
    for (int i = 0; i < 1000; ++i) {
        Point x{frac_q(static_cast<long>(rng() % 65537), 65536), frac_q(static_cast<long>(rng() % 65537), 65536)};
        if (fourier_in_ramp(x, 3, 64)) continue;
        std::vector<ExactScalar> xs(x.begin(), x.end());
        auto v = eval_outputs(f2, xs, EvalMode::big(256));
        double sum = 0;
        for (auto& o : v) sum += o.to_double();
        CHECK(std::abs(sum - 1) < std::ldexp(1.0, -100));
        ++used;
    }
    CHECK(used > 800);
}

TEST_CASE("deep fourier net: one f-dependent weight") {
    auto fs = corpus(1, Rational(1), 1);
    FunctionOracle f = corpus_member(1, Rational(1), 1, "trig");
    FunctionOracle g = corpus_member(1, Rational(1), 1, "takagi");
    Network a = build_deep_fourier(f, 3, SigmaSpec::triangle());
    Network b = build_deep_fourier(g, 3, SigmaSpec::triangle());
    REQUIRE(a.units.size() == b.units.size());
    int diff = 0, where = -1;
    for (size_t i = 0; i < a.units.size(); ++i) {
        REQUIRE(a.units[i].in.size() == b.units[i].in.size());
        if (!(a.units[i].bias == b.units[i].bias)) {
            ++diff;
            where = static_cast<int>(i) + a.input_dim;
        }
        for (size_t j = 0; j < a.units[i].in.size(); ++j) {
            CHECK(a.units[i].in[j].src == b.units[i].in[j].src);
            diff += !(a.units[i].in[j].w == b.units[i].in[j].w);
        }
    }
    CHECK(diff == 1);
    CHECK(where == a.meta["seed_node"].get<int>());
    CHECK(a.meta["enc_weights"] == 1);

    Network c = attach_seed(a, extract_seed(b));
    CHECK(dump_network(Network{c.input_dim, c.units, c.outputs, {}}) ==
          dump_network(Network{b.input_dim, b.units, b.outputs, {}}));
}

TEST_CASE("deep fourier accuracy off the guard zones") {
    FunctionOracle f = corpus_member(1, Rational(1), 1, "takagi");
    Network net = build_deep_fourier(f, 3, SigmaSpec::triangle());
    CHECK(net.meta["M"] == 8);
    GridSpec g;
    g.random_points = 300;
    g.exact = true;
    ErrorEstimate e = measure_error(net, f, g);
    CHECK(e.sup <= frac_q(2, 8));
    CHECK(e.random_points > 250);
}

TEST_CASE("guard zones are a small fraction of the cube") {
    int U = 4, d = 2;
    Rational a(8 * 16);
    std::mt19937_64 rng(12);
    long in = 0, n = 20000;
    for (long i = 0; i < n; ++i) {
        Point x;
        for (int k = 0; k < d; ++k) x.push_back(frac_q(static_cast<long>(rng() % (1L << 30)), 1L << 30));
        in += fourier_in_ramp(x, U, a);
    }
    double bound = 10 * parity_delta(a).get_d() * 16 * d;
    CHECK(double(in) / n < bound);
}

TEST_CASE("fourier budgets") {
    CHECK(fourier_levels_for_budget(1, 1, 10) == 1);
    int prev = 0;
    for (long W : {500L, 1000L, 2000L, 4000L}) {
        int U = fourier_levels_for_budget(1, 1, W);
        CHECK(U >= prev);
        CHECK(fourier_weight_estimate(1, 1, U) <= W);
        prev = U;
    }
    FunctionOracle f = corpus_member(1, Rational(1), 1, "trig");
    CHECK_THROWS(build_deep_fourier(f, 16, SigmaSpec::triangle()));
}
