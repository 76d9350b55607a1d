#include "hnet/fourier.hpp"

#include "hnet/gadgets.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace hnet {

namespace {

constexpr int kMaxK = 16;
// sign read-out gain; trajectories end at least 1/16 away from 0
constexpr long kSignGain = 32;

void require_period_two(const SigmaSpec& s) {
    if (s.period != 2) throw std::invalid_argument("periodic activation must have period 2");
}

Rational floor_div_mod2(long c, long p) {
    long q = c >= 0 ? c / p : -((-c + p - 1) / p);
    return Rational(((q % 2) + 2) % 2);
}

// some y in [y0, y0 + T] with σ(y) = t, piecewise-linear σ
Rational preimage_exact(const SigmaSpec& s, const Rational& t, const Rational& y0) {
    const auto& tab = s.table;
    size_t n = tab.size();
    Rational base = floor_q(y0 / s.period);
    for (long shift = -1; shift <= 1; ++shift) {
        Rational off = (base + shift) * s.period;
        for (size_t i = 0; i < n; ++i) {
            Rational x0 = tab[i].first, v0 = tab[i].second;
            Rational x1 = i + 1 < n ? tab[i + 1].first : tab[0].first + s.period;
            Rational v1 = i + 1 < n ? tab[i + 1].second : tab[0].second;
            if (v0 == v1) {
                if (t != v0) continue;
                Rational y = x0 + off;
                if (y0 <= y && y <= y0 + s.period) return y;
                continue;
            }
            Rational lo = std::min(v0, v1), hi = std::max(v0, v1);
            if (t < lo || t > hi) continue;
            Rational y = Rational(x0 + (t - v0) * (x1 - x0) / (v1 - v0)) + off;
            if (y0 <= y && y <= y0 + s.period) return y;
        }
    }
    throw std::runtime_error("no preimage in window");
}

double log2_abs(const BigFloat& v) {
    if (v.is_zero()) return -1e18;
    long e;
    double m = mpfr_get_d_2exp(&e, v.get(), MPFR_RNDN);
    return std::log2(std::fabs(m)) + static_cast<double>(e);
}

double log2_q(const Rational& q) {
    BigFloat v(q, 64);
    return log2_abs(v);
}

// log2 |σ(a w) - t| for sine at the given precision
double sine_residual_log2(const SigmaSpec& s, const Rational& a, const Rational& w, const Rational& t, long bits) {
    BigFloat y(Rational(a * w), bits), v(bits), tt(t, bits);
    s.eval(v, y);
    mpfr_sub(v.get(), v.get(), tt.get(), MPFR_RNDN);
    return log2_abs(v);
}

// w with |w - centre| <= 1/a and σ(a w) = t (up to 2^-frac_bits for sine)
Rational solve_in_window(const SigmaSpec& s, const Rational& t, const Rational& a, const Rational& centre,
                         long frac_bits) {
    if (s.rational_exact()) {
        Rational y = preimage_exact(s, t, Rational(a * centre - 1));
        return Rational(y / a);
    }
    long mag = std::max(1L, static_cast<long>(std::ceil(log2_q(Rational(abs_q(a * centre) + 2)))));
    long bits = mag + frac_bits + static_cast<long>(std::ceil(std::max(0.0, log2_q(a)))) + 64;
    BigFloat asn(t, bits), pi(bits), y(bits);
    mpfr_asin(asn.get(), asn.get(), MPFR_RNDN);
    mpfr_const_pi(pi.get(), MPFR_RNDN);
    mpfr_div(y.get(), asn.get(), pi.get(), MPFR_RNDN);  // principal root in [-1/2, 1/2]
    Rational yp = y.to_rational();
    Rational lo = a * centre - 1;
    Rational j = ceil_q(Rational((lo - yp) / 2));
    Rational w = dyadic_round(Rational((yp + 2 * j) / a), frac_bits);
    double res = sine_residual_log2(s, a, w, t, bits);
    double allowed = log2_q(a) - static_cast<double>(frac_bits) + 4;
    if (res > allowed) throw std::runtime_error("sine preimage enclosure failed at requested precision");
    return w;
}

long frac_bits_for(const Rational& l) { return ceil_log2(Rational(1 / l)) + 64; }

Rational solve_rec(const std::vector<uint8_t>& tab, int K, const SigmaSpec& s, const Schedule& sch) {
    if (K == 1) {
        bool p0 = tab[0], p1 = tab[1];
        if (p0 && p1) return frac_q(1, 4);
        if (p0) return frac_q(3, 4);
        if (p1) return frac_q(-3, 4);
        return frac_q(-1, 4);
    }
    std::vector<uint8_t> t0(tab.size() / 2), t1(tab.size() / 2);
    for (size_t i = 0; i < t0.size(); ++i) {
        t0[i] = tab[2 * i];
        t1[i] = tab[2 * i + 1];
    }
    Rational c0 = solve_rec(t0, K - 1, s, sch);
    Rational target = solve_rec(t1, K - 1, s, sch);
    return solve_in_window(s, target, sch.a[K - 1], c0, frac_bits_for(sch.l[K - 1]));
}

long schedule_bits(const Schedule& sch) {
    int K = sch.K();
    double acc = 0;
    for (int k = 0; k < K; ++k) acc += std::max(0.0, log2_q(Rational(sch.a[k] * sch.c_sigma)));
    return 2 * ceil_log2(Rational(1 / sch.l[K - 1])) + static_cast<long>(std::ceil(acc)) + 8 * K + 64;
}

}  // namespace

// ---------------------------------------------------------------- assignments and schedules

void Assignment::validate() const {
    if (K < 1 || K > 30) throw std::invalid_argument("assignment width out of range");
    if (table.size() != (size_t(1) << K)) throw std::invalid_argument("assignment table must have 2^K entries");
}

int Assignment::at(const std::vector<int>& z) const {
    size_t idx = 0;
    for (int v : z) idx = 2 * idx + (v ? 1 : 0);
    return table.at(idx);
}

Assignment Assignment::random(int K, std::mt19937_64& rng) {
    Assignment A;
    A.K = K;
    A.table.resize(size_t(1) << K);
    for (auto& v : A.table) v = static_cast<uint8_t>(rng() & 1);
    return A;
}

Schedule make_schedule(int K, const SigmaSpec& s) {
    if (K < 1) throw std::invalid_argument("K must be positive");
    Schedule sch;
    sch.c_sigma = s.lipschitz;
    sch.a.push_back(Rational(2));
    sch.l.push_back(frac_q(1, 2));
    for (int k = 2; k <= K; ++k) {
        const Rational& lp = sch.l.back();
        Rational a = 4 / lp;
        Rational l = std::min(Rational(lp / 2), Rational(lp / (a * sch.c_sigma)));
        sch.a.push_back(a);
        sch.l.push_back(l);
    }
    return sch;
}

// ---------------------------------------------------------------- parity and encoder

Rational parity_delta(const Rational& a) {
    if (a <= 1) throw std::invalid_argument("parity gain must exceed 1");
    return 1 / (2 * a);
}

Affine parity_gadget(NetBuilder& b, const std::shared_ptr<const SigmaSpec>& s, const Affine& y, const Rational& a) {
    Affine p = b.periodic(s, y);
    return clamp_gadget(b, p * a, Rational(1));
}

Network build_parity(const Rational& a, const Rational& scale, const Rational& shift, const SigmaSpec& s) {
    require_period_two(s);
    NetBuilder b(1);
    auto sp = std::make_shared<const SigmaSpec>(s);
    Affine out = parity_gadget(b, sp, b.input(0) * scale + shift, a);
    nlohmann::json meta = {{"variant", "parity"}, {"gain", rational_str(a)}, {"delta", rational_str(parity_delta(a))}};
    return b.finish({out}, meta);
}

Network build_patch_encoder(int U, int d, const SigmaSpec& s, const Rational& a) {
    require_period_two(s);
    if (U < 1 || d < 1) throw std::invalid_argument("U and d must be positive");
    Rational gain = sgn(a) > 0 ? a : Rational(8 * ipow(2, U));
    NetBuilder b(d);
    auto sp = std::make_shared<const SigmaSpec>(s);
    std::vector<Affine> outs;
    for (int u = 1; u <= U; ++u)
        for (int k = 0; k < d; ++k) outs.push_back(parity_gadget(b, sp, b.input(k) * Rational(ipow(2, u)), gain));
    nlohmann::json meta = {{"variant", "patch_encoder"}, {"U", U}, {"d", d}, {"M", 1L << U},
                           {"gain", rational_str(gain)}, {"delta", rational_str(parity_delta(gain))}};
    return b.finish(outs, meta);
}

std::vector<int> patch_code(const Point& x, int U) {
    std::vector<int> code;
    for (int u = 1; u <= U; ++u)
        for (auto& xi : x) {
            Rational t = floor_q(Rational(xi * ipow(2, u)));
            code.push_back(floor_div_mod2(t.get_num().get_si(), 1) == 0 ? 1 : -1);
        }
    return code;
}

// ---------------------------------------------------------------- dichotomy

AssignmentWeight find_assignment_weight(const Assignment& A, const SigmaSpec& s, const Schedule& sch) {
    A.validate();
    require_period_two(s);
    if (A.K > kMaxK) throw std::invalid_argument("K beyond the precision budget");
    if (sch.K() < A.K) throw std::invalid_argument("schedule shorter than the assignment");
    Rational w = solve_rec(A.table, A.K, s, sch);
    const Rational& l = sch.l[A.K - 1];
    return {w, Interval{w - l / 2, w + l / 2}};
}

DichotomyCheck dichotomy_table(const Rational& w, const SigmaSpec& s, const Schedule& sch) {
    int K = sch.K();
    DichotomyCheck out;
    out.table.assign(size_t(1) << K, 0);
    bool first = true;
    auto note = [&](size_t idx, const Rational& margin, int sign) {
        if (sign == 0) throw std::runtime_error("trajectory ends at zero");
        out.table[idx] = sign > 0 ? 1 : 0;
        if (first || margin < out.min_margin) out.min_margin = margin;
        first = false;
    };
    if (s.rational_exact()) {
        std::function<void(int, const Rational&, size_t)> dfs = [&](int k, const Rational& x, size_t idx) {
            if (k == 0) {
                note(idx, abs_q(x), sgn(x));
                return;
            }
            size_t bit = size_t(1) << (K - k);
            dfs(k - 1, x, idx);
            dfs(k - 1, s.eval(Rational(sch.a[k - 1] * x)), idx | bit);
        };
        dfs(K, w, 0);
        return out;
    }
    long bits = schedule_bits(sch);
    std::vector<BigFloat> as;
    std::vector<double> grow;
    for (int k = 0; k < K; ++k) {
        as.emplace_back(sch.a[k], bits);
        grow.push_back(log2_q(Rational(sch.a[k] * sch.c_sigma)));
    }
    // step k only has to survive the gains of steps 1..k-1
    std::vector<long> prec(K);
    double G = 0;
    for (int k = 0; k < K; ++k) {
        prec[k] = static_cast<long>(std::ceil(std::max(0.0, log2_q(sch.a[k])) + G)) + 8 * K + 64;
        G += std::max(0.0, grow[k]);
    }
    auto log_add = [](double x, double y) {
        double m = std::max(x, y);
        return m + std::log2(std::exp2(x - m) + std::exp2(y - m));
    };
    // err: log2 bound on |computed - exact|
    std::function<void(int, const BigFloat&, double, size_t)> dfs = [&](int k, const BigFloat& x, double err,
                                                                        size_t idx) {
        if (k == 0) {
            double mag = log2_abs(x);
            if (!(mag > err + 1)) throw std::runtime_error("sign not certified at working precision");
            Rational margin = abs_q(x.to_rational());
            BigFloat e(64);
            mpfr_set_ui_2exp(e.get(), 1, static_cast<long>(std::ceil(err)), MPFR_RNDU);
            margin -= e.to_rational();
            note(idx, margin, x.sign());
            return;
        }
        size_t bit = size_t(1) << (K - k);
        dfs(k - 1, x, err, idx);
        long p = prec[k - 1];
        BigFloat y(p), v(p);
        mpfr_mul(y.get(), x.get(), as[k - 1].get(), MPFR_RNDN);
        s.eval(v, y);
        double round = std::max(0.0, log2_abs(y)) - static_cast<double>(p) + 6;
        dfs(k - 1, v, log_add(err + grow[k - 1], round), idx | bit);
    };
    BigFloat x0(w, bits);
    dfs(K, x0, log2_q(w) - static_cast<double>(bits) + 1, 0);
    return out;
}

Affine binary_product(NetBuilder& b, const Affine& bit, const Affine& y) {
    return b.relu(bit * Rational(2) + y - Rational(1)) - bit;
}

Network build_branch_gate(const Rational& a, const SigmaSpec& s) {
    require_period_two(s);
    NetBuilder b(2);
    auto sp = std::make_shared<const SigmaSpec>(s);
    Affine x = b.input(0), bit = b.input(1);
    Affine g = b.periodic(sp, x * a);
    Affine out = x - binary_product(b, bit, x) + binary_product(b, bit, g);
    return b.finish({out}, {{"variant", "branch_gate"}, {"gain", rational_str(a)}});
}

// ---------------------------------------------------------------- seed chain

Rational find_seed_weight(const std::vector<Rational>& targets, const Rational& a, const SigmaSpec& s) {
    require_period_two(s);
    if (targets.empty()) throw std::invalid_argument("no targets");
    if (sgn(a) <= 0) throw std::invalid_argument("seed gain must be positive");
    for (auto& t : targets)
        if (t < -1 || t > 1) throw std::invalid_argument("targets must lie in [-1, 1]");
    size_t R = targets.size();
    long frac = 0;
    if (!s.rational_exact()) {
        double la = std::max(1.0, log2_q(Rational(a * s.lipschitz)));
        frac = static_cast<long>(std::ceil(R * (la + 1) + log2_q(a) + std::log2(double(R)))) + 32;
    }
    Rational w = targets.back();
    for (size_t k = R - 1; k-- > 0;) w = solve_in_window(s, w, a, targets[k], frac);
    return w;
}

std::vector<Rational> seed_chain(const Rational& seed, const Rational& a, int R, const SigmaSpec& s, long bits) {
    std::vector<Rational> out{seed};
    if (s.rational_exact()) {
        for (int k = 1; k < R; ++k) out.push_back(s.eval(Rational(a * out.back())));
        return out;
    }
    if (bits <= 0) bits = static_cast<long>(std::ceil(R * (log2_q(Rational(a * s.lipschitz)) + 2))) + 128;
    BigFloat x(seed, bits), A(a, bits), y(bits);
    for (int k = 1; k < R; ++k) {
        mpfr_mul(y.get(), x.get(), A.get(), MPFR_RNDN);
        s.eval(x, y);
        out.push_back(x.to_rational());
    }
    return out;
}

// ---------------------------------------------------------------- filters

namespace {

std::vector<std::pair<Affine, Affine>> unity_pairs(NetBuilder& b, const std::shared_ptr<const SigmaSpec>& sp, long M,
                                                   const Rational& a0) {
    std::vector<std::pair<Affine, Affine>> out;
    for (int k = 0; k < b.input_dim(); ++k) {
        Affine th = parity_gadget(b, sp, b.input(k) * Rational(2 * M), a0);
        Affine psi0 = (th + Rational(1)) * frac_q(1, 2);
        out.emplace_back(psi0, Rational(1) - psi0);
    }
    return out;
}

Affine filter_product(NetBuilder& b, const std::vector<std::pair<Affine, Affine>>& psi, unsigned q) {
    Affine phi = (q & 1) ? psi[0].second : psi[0].first;
    for (size_t k = 1; k < psi.size(); ++k) {
        const Affine& p = (q >> k) & 1 ? psi[k].second : psi[k].first;
        phi = b.relu(phi + p - Rational(1));
    }
    return phi;
}

}  // namespace

Network build_unity_filters(long M, const Rational& a0, int d, const SigmaSpec& s) {
    require_period_two(s);
    if (a0 <= 1) throw std::invalid_argument("filter gain must exceed 1");
    NetBuilder b(d);
    auto sp = std::make_shared<const SigmaSpec>(s);
    auto psi = unity_pairs(b, sp, M, a0);
    std::vector<Affine> outs;
    for (unsigned q = 0; q < (1u << d); ++q) outs.push_back(filter_product(b, psi, q));
    nlohmann::json meta = {{"variant", "unity_filters"}, {"M", M}, {"d", d}, {"gain", rational_str(a0)},
                           {"delta", rational_str(Rational(parity_delta(a0) / (2 * M)))}};
    return b.finish(outs, meta);
}

// ---------------------------------------------------------------- deep Fourier net

namespace {

int bits_for(const Rational& r, int U) {
    return std::max(1, static_cast<int>(ceil_q(Rational(r * U)).get_num().get_si()));
}

}  // namespace

long fourier_weight_estimate(int d, const Rational& r, int U) {
    long K = static_cast<long>(d) * (U + 1);
    long R = bits_for(r, U) + 1;
    long classifiers = (1L << d) * R;
    long per_step = 3 + 6 + 6 + 5;
    long encoder = 2L * d * (U + 1) * 9;
    return encoder + classifiers * (K * per_step + 12 + 3) + (1L << d) * 12 + d * 9;
}

int fourier_levels_for_budget(int d, const Rational& r, long W) {
    int best = 1;
    for (int U = 1; d * (U + 1) <= kMaxK; ++U)
        if (fourier_weight_estimate(d, r, U) <= W) best = U;
    return best;
}

Network build_deep_fourier(const FunctionOracle& f, int U, const SigmaSpec& s, const Rational& gain) {
    require_period_two(s);
    int d = f.d();
    if (U < 1) throw std::invalid_argument("U must be positive");
    int K = d * (U + 1);
    if (K > kMaxK) throw std::invalid_argument("K beyond the precision budget");
    long M = 1L << U;
    Rational a = sgn(gain) > 0 ? gain : Rational(8 * M);
    int R = bits_for(f.r(), U);
    int nq = 1 << d;
    int per_q = R + 1;
    Schedule sch = make_schedule(K, s);
    const Rational& lK = sch.l[K - 1];

    // bit tables: cells c = ⌊Mx + 1/4⌋ (q_k = 0) or ⌊Mx - 1/4⌋ (q_k = 1), value at the filter support centre
    std::vector<std::vector<uint8_t>> tables(nq * per_q, std::vector<uint8_t>(size_t(1) << K, 0));
    Integer top = ipow(2, R + 1) - 1;
    for (int q = 0; q < nq; ++q) {
        std::vector<long> c(d);
        for (int k = 0; k < d; ++k) c[k] = ((q >> k) & 1) ? -1 : 0;
        while (true) {
            Point p(d);
            size_t idx = 0;
            for (int k = 0; k < d; ++k) {
                int qk = (q >> k) & 1;
                Rational x = Rational(Rational(c[k]) + frac_q(1, 4) + frac_q(qk, 2)) / M;
                p[k] = std::clamp(x, Rational(0), Rational(1));
            }
            for (int u = 0; u <= U; ++u)
                for (int k = 0; k < d; ++k) {
                    int j = u * d + k;
                    bool digit = floor_div_mod2(c[k], 1L << (U - u)) != 0;
                    if (!digit) idx |= size_t(1) << (K - 1 - j);
                }
            Rational v = (f.evaluate(p) + 1) * Rational(ipow(2, R));
            Integer code = floor_q(Rational(v + frac_q(1, 2))).get_num();
            if (code < 0) code = 0;
            if (code > top) code = top;
            for (int kb = 0; kb <= R; ++kb) {
                Integer bit = (code >> (R - kb)) & 1;
                tables[q * per_q + kb][idx] = bit != 0;
            }
            int k = 0;
            while (k < d) {
                long hi = ((q >> k) & 1) ? M - 1 : M;
                if (++c[k] <= hi) break;
                c[k] = ((q >> k) & 1) ? -1 : 0;
                ++k;
            }
            if (k == d) break;
        }
    }

    std::vector<Rational> targets;
    for (auto& t : tables) {
        Assignment A{K, t};
        targets.push_back(find_assignment_weight(A, s, sch).w);
    }
    Rational a_seed(ipow(2, ceil_log2(Rational(8 / lK))));
    Rational seed = find_seed_weight(targets, a_seed, s);

    NetBuilder b(d);
    auto sp = std::make_shared<const SigmaSpec>(s);

    // encoder bits b = (1 + θ̃)/2 per (coordinate, shift, scale)
    std::vector<std::vector<std::vector<Affine>>> enc(d, std::vector<std::vector<Affine>>(2));
    for (int k = 0; k < d; ++k)
        for (int h = 0; h < 2; ++h)
            for (int u = 0; u <= U; ++u) {
                Rational sc(ipow(2, u));
                Rational shift = sc * (h ? frac_q(-1, 4) : frac_q(1, 4)) / M;
                Affine th = parity_gadget(b, sp, b.input(k) * sc + shift, a);
                enc[k][h].push_back((th + Rational(1)) * frac_q(1, 2));
            }

    Affine chain = b.materialize(Affine::constant(seed), true);
    int seed_node = chain.terms().empty() ? -1 : chain.terms()[0].node;
    std::vector<Affine> fq(nq);
    for (int q = 0; q < nq; ++q) fq[q] = Affine::constant(Rational(-1));
    for (int j = 0; j < nq * per_q; ++j) {
        if (j > 0) chain = b.periodic(sp, chain * a_seed);
        int q = j / per_q, kb = j % per_q;
        Affine x = chain;
        for (int kk = K; kk >= 1; --kk) {
            int jj = kk - 1;
            int u = jj / d, k = jj % d;
            const Affine& bit = enc[k][(q >> k) & 1][u];
            Affine g = b.periodic(sp, x * sch.a[kk - 1]);
            x = b.materialize(x - binary_product(b, bit, x) + binary_product(b, bit, g), true);
        }
        Affine sgn_out = clamp_gadget(b, x * Rational(kSignGain), Rational(1));
        fq[q] += (sgn_out + Rational(1)) * frac_q(1, 2) * Rational(frac_q(1, ipow(2, kb)));
    }

    auto psi = unity_pairs(b, sp, M, a);
    Affine out;
    for (int q = 0; q < nq; ++q) {
        Affine phi = filter_product(b, psi, static_cast<unsigned>(q));
        out += binary_product(b, phi, fq[q]);
    }

    long seed_bits = ceil_log2(Rational(seed.get_den()));
    long chain_bits = static_cast<long>(std::ceil(nq * per_q * (log2_q(Rational(a_seed * s.lipschitz)) + 2)));
    nlohmann::json meta = {{"variant", "fourier"}, {"d", d}, {"r", rational_str(f.r())}, {"fn", f.id()}};
    meta["U"] = U;
    meta["M"] = M;
    meta["K"] = K;
    meta["R"] = R;
    meta["classifiers"] = nq * per_q;
    meta["sigma"] = s.kind == SigmaSpec::Kind::sine ? "sine" : "triangle";
    meta["gain"] = rational_str(a);
    meta["seed_gain"] = rational_str(a_seed);
    meta["seed_node"] = seed_node;
    meta["seed_bits"] = seed_bits;
    meta["enc_weights"] = 1;
    meta["bits_per_enc"] = static_cast<double>(seed_bits);
    meta["eval_bits"] = std::max(seed_bits, chain_bits) + schedule_bits(sch) + 128;
    meta["guard_M"] = M;
    meta["guard_delta"] = rational_str(Rational(parity_delta(a) / (2 * M)));
    Network net = b.finish({out}, meta);
    Counts cnt = count_params(net);
    net.meta["W"] = cnt.W;
    net.meta["L"] = cnt.L;
    net.meta["width"] = cnt.width;
    return net;
}

bool fourier_in_ramp(const Point& x, int U, const Rational& a) {
    long M = 1L << U;
    Rational delta = parity_delta(a);
    auto near = [&](const Rational& y) {
        Rational f = y - floor_q(y);
        return f < delta || 1 - f < delta;
    };
    for (auto& xi : x) {
        if (near(Rational(xi * (2 * M)))) return true;
        for (int u = 0; u <= U; ++u) {
            Rational sc(ipow(2, u));
            if (near(Rational(sc * (xi + frac_q(1, 4 * M)))) || near(Rational(sc * (xi - frac_q(1, 4 * M))))) return true;
        }
    }
    return false;
}

ExactScalar extract_seed(const Network& net) {
    auto it = net.meta.find("seed_node");
    if (it == net.meta.end()) throw std::invalid_argument("network has no seed weight");
    return net.unit(it->get<int>()).bias;
}

Network attach_seed(const Network& net, const ExactScalar& seed) {
    auto it = net.meta.find("seed_node");
    if (it == net.meta.end()) throw std::invalid_argument("network has no seed weight");
    Network out = net;
    out.unit(it->get<int>()).bias = seed;
    return out;
}

}  // namespace hnet
