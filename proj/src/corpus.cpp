#include "hnet/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>

namespace hnet {

namespace {

constexpr int kTakagiLevels = 12;
constexpr double kSafety = 1.1;

int grid_points(int d) { return d == 1 ? 3001 : d == 2 ? 151 : 41; }

std::mt19937_64 member_rng(int d, const Rational& r, unsigned long seed) {
    std::seed_seq seq{static_cast<unsigned long>(d), r.get_num().get_ui(), r.get_den().get_ui(), seed};
    return std::mt19937_64(seq);
}

long pick(std::mt19937_64& rng, long lo, long hi) { return std::uniform_int_distribution<long>(lo, hi)(rng); }

std::vector<Factor> ones(int d) { return std::vector<Factor>(d, Factor::polynomial({Rational(1)})); }

FunctionOracle rescaled(FunctionOracle f, unsigned long seed) {
    NormEstimate est = estimate_norm(f, seed);
    double v = est.value();
    if (v == 0) return f;
    Rational s = floor_q(rational_from_double(1 / (kSafety * v)) * (1 << 20)) / (1 << 20);
    f.set_norm_bound(rational_from_double(v));
    f.scale(s);
    return f;
}

void for_each_grid_point(int d, int P, const std::function<void(const std::vector<double>&)>& fn) {
    std::vector<int> idx(d, 0);
    std::vector<double> x(d);
    double h = static_cast<double>(kDomainHi - kDomainLo) / (P - 1);
    while (true) {
        for (int i = 0; i < d; ++i) x[i] = kDomainLo + h * idx[i];
        fn(x);
        int i = d - 1;
        while (i >= 0 && ++idx[i] == P) idx[i--] = 0;
        if (i < 0) break;
    }
}

}  // namespace

double NormEstimate::value() const { return std::max({sup, holder, sampled}); }

NormEstimate estimate_norm(const FunctionOracle& f, unsigned long seed, int pairs) {
    int d = f.d();
    int K = taylor_degree(f.r());
    double alpha = Rational(f.r() - K).get_d();
    auto orders = taylor_orders(d, K);
    std::vector<MultiIndex> top;
    for (auto& k : orders)
        if (order_of(k) == K) top.push_back(k);
    bool smooth = f.max_order() > K;
    NormEstimate est;
    std::vector<double> top_sup(top.size(), 0), top_grad(top.size(), 0);
    for_each_grid_point(d, grid_points(d), [&](const std::vector<double>& x) {
        for (auto& k : orders) est.sup = std::max(est.sup, std::fabs(f.derivative_d(k, x)));
        for (size_t t = 0; t < top.size(); ++t) {
            top_sup[t] = std::max(top_sup[t], std::fabs(f.derivative_d(top[t], x)));
            if (!smooth) continue;
            double g2 = 0;
            for (int i = 0; i < d; ++i) {
                MultiIndex k = top[t];
                ++k[i];
                double g = f.derivative_d(k, x);
                g2 += g * g;
            }
            top_grad[t] = std::max(top_grad[t], std::sqrt(g2));
        }
    });
    if (smooth) {
        for (size_t t = 0; t < top.size(); ++t) {
            double q = alpha >= 1 ? top_grad[t] : std::pow(top_grad[t], alpha) * std::pow(2 * top_sup[t], 1 - alpha);
            est.holder = std::max(est.holder, q);
        }
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(kDomainLo, kDomainHi), scale(-8, 0);
    std::vector<double> x(d), y(d);
    for (int p = 0; p < pairs; ++p) {
        double dist = 0;
        double h = std::pow(10.0, scale(rng));
        for (int i = 0; i < d; ++i) {
            x[i] = u(rng);
            // half the pairs are close, half are spread over the box
            y[i] = p % 2 ? u(rng) : std::clamp(x[i] + h * (u(rng) - 0.5), double(kDomainLo), double(kDomainHi));
            dist += (x[i] - y[i]) * (x[i] - y[i]);
        }
        dist = std::sqrt(dist);
        if (dist == 0) continue;
        for (auto& k : top) {
            double q = std::fabs(f.derivative_d(k, x) - f.derivative_d(k, y)) / std::pow(dist, alpha);
            est.sampled = std::max(est.sampled, q);
        }
    }
    return est;
}

FunctionOracle corpus_member(int d, const Rational& r, unsigned long seed, const std::string& id) {
    if (d < 1 || d > 3) throw std::invalid_argument("corpus supports d <= 3");
    if (sgn(r) <= 0 || r > 4) throw std::invalid_argument("corpus supports 0 < r <= 4");
    auto rng = member_rng(d, r, seed);
    std::vector<ProductTerm> terms;
    if (id == "zero") {
        return FunctionOracle("zero", d, r, {});
    } else if (id == "trig") {
        ProductTerm t{Rational(1), {}};
        for (int i = 0; i < d; ++i) t.factors.push_back(Factor::sine(pick(rng, 1, 2), frac_q(pick(rng, 0, 7), 8)));
        terms.push_back(t);
    } else if (id == "gauss") {
        ProductTerm t{Rational(1), {}};
        for (int i = 0; i < d; ++i) t.factors.push_back(Factor::gauss(frac_q(pick(rng, 0, 4), 4), frac_q(pick(rng, 2, 4), 4)));
        terms.push_back(t);
    } else if (id == "mixed") {
        ProductTerm a{Rational(1), {Factor::sine(1, frac_q(pick(rng, 0, 7), 8))}};
        for (int i = 1; i < d; ++i) a.factors.push_back(Factor::gauss(frac_q(pick(rng, 0, 4), 4), 1));
        ProductTerm b{frac_q(1, 2), {}};
        for (int i = 0; i < d; ++i) b.factors.push_back(Factor::polynomial({frac_q(pick(rng, -4, 4), 4), frac_q(pick(rng, -4, 4), 4)}));
        terms = {a, b};
    } else if (id == "poly") {
        ProductTerm t{Rational(1), {}};
        for (int i = 0; i < d; ++i) {
            Rational c = frac_q(pick(rng, 0, 8), 8);
            t.factors.push_back(Factor::polynomial({c * c, -2 * c, 1}));
        }
        ProductTerm cubic{frac_q(1, 3), ones(d)};
        cubic.factors[0] = Factor::polynomial({0, 0, 0, 1});
        terms = {t, cubic};
    } else if (id == "takagi" && r <= 1) {
        for (int i = 0; i < d; ++i) {
            ProductTerm t{frac_q(1, kTakagiLevels * d), ones(d)};
            t.factors[i] = Factor::takagi(2, r, kTakagiLevels);
            terms.push_back(t);
        }
        FunctionOracle f("takagi", d, r, terms);
        f.set_norm_bound(1);
        return f;
    } else if (id == "kink" && r <= 1) {
        // |x_1 - c| has sup <= 2 and Hölder quotient <= 3^(1-r) on the box
        ProductTerm t{frac_q(1, 2), ones(d)};
        t.factors[0] = Factor::absval(frac_q(pick(rng, 1, 7), 8));
        FunctionOracle f("kink", d, r, {t});
        f.set_norm_bound(1);
        return f;
    } else {
        throw std::invalid_argument("unknown corpus member " + id);
    }
    return rescaled(FunctionOracle(id, d, r, terms), seed);
}

std::vector<FunctionOracle> corpus(int d, const Rational& r, unsigned long seed) {
    std::vector<std::string> ids{"zero", "trig", "gauss", "mixed", "poly"};
    if (r <= 1) {
        ids.push_back("takagi");
        ids.push_back("kink");
    }
    std::vector<FunctionOracle> out;
    for (auto& id : ids) out.push_back(corpus_member(d, r, seed, id));
    return out;
}

}  // namespace hnet
