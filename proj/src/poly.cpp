#include "hnet/builders.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <stdexcept>

namespace hnet {

namespace {

using Coeffs = std::shared_ptr<const std::vector<Rational>>;

Coeffs shared(std::vector<Rational> c) { return std::make_shared<const std::vector<Rational>>(std::move(c)); }

const Rational kClampC = frac_q(5, 4);
const Rational kClampR = 4;

// polynomial-unit toolkit: u, v and x² activations only
struct PolyKit {
    NetBuilder& b;
    Coeffs u = shared(u_polynomial());
    Coeffs v = shared(v_polynomial());
    Coeffs sq = shared({0, 0, 1});

    Affine u_chain(Affine a, int n) {
        for (int i = 0; i < n; ++i) a = b.polynomial(u, a);
        return a;
    }
    Affine square(const Affine& a) { return b.polynomial(sq, a); }
    Affine mul(const Affine& x, const Affine& y) { return (square(x + y) - square(x - y)) * frac_q(1, 4); }
    // (t u_n(t/R) + t)/2 ≈ t₊ for |t| <= R
    Affine relu(const Affine& t, const Rational& R, int n) {
        Affine s = u_chain(t * (1 / R), n);
        return (mul(t, s) + t) * frac_q(1, 2);
    }
    Affine spike(const std::vector<Affine>& y, const Rational& R, int n) {
        Affine up, down;
        for (auto& yi : y) {
            up += relu(yi - up, R, n);
            down += relu(-yi - down, R, n);
        }
        return relu(Affine::constant(1) - up - down, R, n);
    }
    // w ↦ clamp(v(w)) onto [-5/4, 5/4]
    Affine v_step(const Affine& w, int n) {
        Affine t = b.polynomial(v, w);
        return relu(t + kClampC, kClampR, n) - relu(t - kClampC, kClampR, n) - kClampC;
    }
};

// smallest n with 1 - u_n(x0) <= 2^log2_target, using 1 - u(x) <= (3/2)(1 - x)² on [0,1]
int sharpening_depth(double x0, double log2_target) {
    int n = 0;
    double x = x0;
    while (x < 0.9) {
        x = 0.5 * x * (3 - x * x) * (1 - 1e-12);
        ++n;
    }
    double le = std::log2(1 - x);
    while (le > log2_target) {
        le = std::log2(1.5) + 2 * le;
        ++n;
    }
    return n;
}

Affine poly_taylor(PolyKit& kit, const std::vector<Affine>& coeffs, const std::vector<Affine>& y,
                   const std::vector<MultiIndex>& orders, long M) {
    std::map<MultiIndex, Affine> mono;
    Affine out;
    for (size_t i = 0; i < orders.size(); ++i) {
        const MultiIndex& k = orders[i];
        int o = order_of(k);
        if (o == 0) {
            out += coeffs[i];
            continue;
        }
        size_t j = 0;
        while (k[j] == 0) ++j;
        MultiIndex prev = k;
        --prev[j];
        Affine mu = o == 1 ? y[j] : kit.mul(mono.at(prev), y[j]);
        mono[k] = mu;
        out += kit.mul(coeffs[i], mu) * (1 / (Rational(factorial_of(k)) * rpow(Rational(M), o)));
    }
    return out;
}

std::vector<GridIndex> box(long lo, long hi, int d) {
    std::vector<GridIndex> out;
    GridIndex m(d, lo);
    while (true) {
        out.push_back(m);
        int i = d - 1;
        while (i >= 0 && ++m[i] > hi) m[i--] = lo;
        if (i < 0) break;
    }
    return out;
}

std::vector<int> digit_bits(const DigitStream& s) {
    std::vector<int> bits;
    for (int dg : s.digits)
        for (int j = 2; j >= 0; --j) bits.push_back((dg >> j) & 1);
    return bits;
}

long log2_ceil_long(double v) { return static_cast<long>(std::ceil(std::log2(v))); }

}  // namespace

std::vector<Rational> u_polynomial() { return {0, frac_q(3, 2), 0, frac_q(-1, 2)}; }
std::vector<Rational> v_polynomial() { return {2, 0, -3}; }

Rational u_iterate_value(const Rational& x, int n) {
    Rational v = x;
    for (int i = 0; i < n; ++i) v = Rational(v * (3 - v * v) / 2);
    return v;
}

Network build_u_iterate(int n) {
    if (n < 0) throw std::invalid_argument("iteration count must be >= 0");
    NetBuilder b(1);
    PolyKit kit{b};
    Affine out = kit.u_chain(b.input(0), n);
    return b.finish({out}, {{"variant", "u_iterate"}, {"n", n}});
}

Network approximate_relu_poly(int n) {
    if (n < 0) throw std::invalid_argument("iteration count must be >= 0");
    NetBuilder b(1);
    PolyKit kit{b};
    Affine out = kit.relu(b.input(0), 1, n);
    return b.finish({out}, {{"variant", "relu_poly"}, {"n", n}});
}

Interval bit_interval(int bit) {
    if (bit == 0) return {frac_q(1, 2), Rational(1)};
    if (bit == 1) return {Rational(-1), frac_q(-1, 2)};
    throw std::invalid_argument("bit must be 0 or 1");
}

Interval find_poly_interval(const std::vector<int>& bits, long precision_bits) {
    if (bits.empty()) return {Rational(-1), Rational(1)};
    long n = static_cast<long>(bits.size());
    long prec = precision_bits > 0 ? precision_bits : static_cast<long>(std::ceil(2.6 * n)) + 64;
    BigFloat t(prec);
    // sqrt((2 - c)/3) rounded up or down
    auto root = [&](const Rational& c, bool up) {
        mpfr_rnd_t rnd = up ? MPFR_RNDU : MPFR_RNDD;
        Rational a = (2 - c) / 3;
        mpfr_set_q(t.get(), a.get_mpq_t(), rnd);
        mpfr_sqrt(t.get(), t.get(), rnd);
        return t.to_rational();
    };
    Interval cur = bit_interval(bits.back());
    for (long k = n - 2; k >= 0; --k) {
        Interval base = bit_interval(bits[k]);
        Interval pre;
        if (bits[k] == 0) {
            pre = {root(cur.hi, true), root(cur.lo, false)};
        } else {
            pre = {-root(cur.lo, false), -root(cur.hi, true)};
        }
        cur = {std::max(pre.lo, base.lo), std::min(pre.hi, base.hi)};
        if (cur.hi <= cur.lo) throw std::logic_error("seed interval collapsed; raise precision");
    }
    return cur;
}

Network build_poly_activation(const FunctionOracle& f, long N, long M, int relu_iterations, const Rational& p) {
    int d = f.d();
    const Rational& r = f.r();
    if (N < 1 || M < N) throw std::invalid_argument("poly_activation needs 1 <= N <= M");
    if (M % N) throw std::invalid_argument("divisibility repair failed: N must divide M");
    if (sgn(p) != 0 && (p <= r / d || p > 2 * r / d)) throw std::invalid_argument("p out of range (r/d, 2r/d]");
    long K = M / N;
    int KT = taylor_degree(r);
    auto orders = taylor_orders(d, KT);
    size_t nk = orders.size();
    auto offsets = traversal_offsets(d, K);
    int T = static_cast<int>(offsets.size()) - 1;
    int D = 3 * T;
    long seed_bits = static_cast<long>(std::ceil(D * std::log2(6.0)));
    double knots_total = std::pow(double(N + 1), d);

    TaylorTable table = taylor_table(f, M, box(-K, M + K, d));
    std::map<GridIndex, EncodingWeight> enc;
    std::map<GridIndex, std::vector<Rational>> seeds;
    for (auto& n : all_knots(N, d)) {
        auto e = encode_cube(table, n, N, M, r);
        std::vector<Rational> s;
        for (auto& st : e.streams) {
            Interval I = find_poly_interval(digit_bits(st), seed_bits + 64);
            s.push_back(Rational((I.lo + I.hi) / 2));
        }
        seeds.emplace(n, std::move(s));
        enc.emplace(n, std::move(e));
    }

    // error budget: a fortieth of M^(-r) for all polynomial surrogates together
    Rational tau = inverse_power(M, r) / 40;
    Rational Rc = 2 * Rational(N) + 2, Rl = 2 * Rational(M + K + 2) + 2;
    int n_relu = relu_iterations;
    if (n_relu <= 0) {
        Rational Q = 4 * (2 * d + 1) * Rl *
                     Rational(static_cast<long>(knots_total) * (K + 1) +
                              static_cast<long>(std::pow(3.0 * (2 * K + 1), d)));
        n_relu = 2 * static_cast<int>(ceil_log2(Q / tau));
    }
    double log2_tau = std::log2(tau.get_d());
    int n_sel = sharpening_depth(0.49, -double(seed_bits + log2_ceil_long(8 * knots_total) + 2));
    int n_clamp = sharpening_depth(1.0 / 16, -double(seed_bits + log2_ceil_long(4.0 * std::max(D, 1)) + 4));
    int n_sign = sharpening_depth(0.4, log2_tau - log2_ceil_long(64.0 * std::max(T, 1) * nk));

    NetBuilder b(d);
    PolyKit kit{b};
    auto coarse_fn = [&](NetBuilder&, const std::vector<Affine>& y) { return kit.spike(y, Rc, n_relu); };
    auto local_fn = [&](NetBuilder&, const std::vector<Affine>& y) { return kit.spike(y, Rl, n_relu); };
    std::vector<Affine> xs;
    for (int i = 0; i < d; ++i) xs.push_back(b.input(i) * Rational(N));
    SpikeBank coarse(b, xs, coarse_fn);
    GridIndex clo(d, 0), chi(d, N), llo(d, -K), lhi(d, K);

    Affine out;
    long enc_weights = 0;
    for (auto& q : subgrid_labels(d)) {
        auto knots = subgrid_knots(q, N, d);
        if (knots.empty()) continue;
        enc_weights += static_cast<long>(knots.size() * 2 * nk);
        Affine wq = coarse.linear(knots, std::vector<Rational>(knots.size(), Rational(1)));
        std::vector<Affine> nq;
        for (int i = 0; i < d; ++i) {
            std::vector<Rational> v;
            for (auto& n : knots) v.push_back(Rational(n[i]));
            nq.push_back(b.materialize(coarse.constant(knots, v, clo, chi), true));
        }
        // χ_n ≈ 1 on the patch of n, ≈ 0 on the other patches of the subgrid
        std::vector<Affine> chi_n;
        for (auto& n : knots) {
            Affine psi = coarse.constant({n}, {Rational(1)}, clo, chi);
            Affine z = kit.u_chain(psi * frac_q(3, 2) - Rational(1), n_sel);
            chi_n.push_back((z + Rational(1)) * frac_q(1, 2));
        }
        std::vector<Affine> inits;
        std::vector<std::vector<Affine>> digits(nk);
        for (size_t j = 0; j < nk; ++j) {
            Affine init, w;
            for (size_t k = 0; k < knots.size(); ++k) {
                init += chi_n[k] * enc.at(knots[k]).initial[j];
                w += chi_n[k] * seeds.at(knots[k])[j];
            }
            inits.push_back(b.materialize(init, true));
            Affine digit;
            for (int k = 1; k <= D; ++k) {
                Affine bit = (Rational(1) - kit.u_chain(w * frac_q(4, 5), n_sign)) * frac_q(1, 2);
                digit += bit * Rational(1 << (2 - (k - 1) % 3));
                if (k % 3 == 0) {
                    digits[j].push_back(b.materialize(digit, true));
                    digit = Affine();
                }
                if (k < D) w = kit.v_step(w, n_clamp);
            }
        }
        auto ahat = decoder_from_digits(b, inits, digits, d, K, M, r);
        std::map<GridIndex, const std::vector<Affine>*> at;
        for (size_t t = 0; t < offsets.size(); ++t) at[offsets[t]] = &ahat[t];

        std::vector<Affine> z;
        for (int i = 0; i < d; ++i) z.push_back(b.input(i) * Rational(M) - nq[i] * Rational(K));
        SpikeBank local(b, z, local_fn);
        Affine fq;
        for (auto& s : subgrid_labels(d)) {
            std::vector<GridIndex> ms;
            for (auto& o : offsets) {
                bool match = true;
                for (int i = 0; i < d; ++i)
                    if (((o[i] + K) % 3 + 3) % 3 != s[i]) match = false;
                if (match) ms.push_back(o);
            }
            if (ms.empty()) continue;
            std::sort(ms.begin(), ms.end());
            Affine F = local.linear(ms, std::vector<Rational>(ms.size(), Rational(1)));
            std::vector<Affine> sel(nk);
            for (auto& m : ms) {
                Affine onehot = local.constant({m}, {Rational(1)}, llo, lhi);
                for (size_t j = 0; j < nk; ++j) sel[j] += kit.mul(onehot, (*at.at(m))[j]);
            }
            std::vector<Affine> y;
            if (KT > 0) {
                for (int i = 0; i < d; ++i) {
                    std::vector<Rational> v;
                    for (auto& m : ms) v.push_back(Rational(m[i]));
                    y.push_back(z[i] - local.constant(ms, v, llo, lhi));
                }
            }
            fq += kit.mul(F, poly_taylor(kit, sel, y, orders, M));
        }
        out += kit.mul(wq, fq);
    }

    nlohmann::json meta = {{"variant", "poly_activation"}, {"d", d}, {"r", rational_str(r)}, {"fn", f.id()}};
    meta["p"] = rational_str(p);
    meta["N"] = N;
    meta["M"] = M;
    meta["K"] = K;
    meta["relu_iterations"] = n_relu;
    meta["select_iterations"] = n_sel;
    meta["clamp_iterations"] = n_clamp;
    meta["sign_iterations"] = n_sign;
    meta["bits_per_stream"] = D;
    meta["enc_weights"] = enc_weights;
    meta["bits_per_enc"] = D * std::log2(6.0);
    meta["eval_bits"] = seed_bits + log2_ceil_long(knots_total) + 128;
    meta["surrogate_budget"] = rational_str(tau);
    Network net = b.finish({out}, meta);
    Counts c = count_params(net);
    net.meta["W"] = c.W;
    net.meta["L"] = c.L;
    net.meta["width"] = c.width;
    return net;
}

}  // namespace hnet
