#include "hnet/builders.hpp"

#include "hnet/fourier.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>

namespace hnet {

namespace {

constexpr int kCoeffBound = 2;    // |â_k| <= 1 + M^(|k|-r) <= 2
constexpr int kClamp = 2;
constexpr int kPenalty = 2 * kClamp + 1;

std::vector<GridIndex> box_knots(long lo, long hi, int d) {
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

long ipow_l(long b, int e) {
    long v = 1;
    for (int i = 0; i < e; ++i) v *= b;
    return v;
}

// Taylor-sum gadgets per block: coefficient products plus monomials of degree >= 2
int taylor_gadgets(const std::vector<MultiIndex>& orders) {
    int g = 0;
    for (auto& k : orders) {
        int o = order_of(k);
        if (o >= 1) ++g;
        if (o >= 2) ++g;
    }
    return g;
}

// Σ_k c_k/k! (y/M)^k with y = Mx - m in [-1,1]^d
Affine taylor_sum(NetBuilder& b, const std::vector<Affine>& coeffs, const std::vector<Affine>& y,
                  const std::vector<MultiIndex>& orders, long M, int levels) {
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
        Affine mu = o == 1 ? y[j] : product_gadget(b, mono.at(prev), y[j], Rational(1), levels);
        mono[k] = mu;
        Rational scale = 1 / (Rational(factorial_of(k)) * rpow(Rational(M), o));
        out += product_gadget(b, coeffs[i], mu, Rational(kCoeffBound), levels) * scale;
    }
    return out;
}

// (d+1) simultaneously active blocks, each off by at most its gadget errors
Rational taylor_slack(const std::vector<MultiIndex>& orders, int d, int extra, const Rational& eps) {
    int per = extra;
    for (auto& k : orders) per += order_of(k) >= 1 ? 2 * order_of(k) - 1 : 0;
    return Rational(d + 1) * per * eps;
}

TaylorTable region_table(const FunctionOracle& f, long lo, long hi, long M) {
    return taylor_table(f, M, box_knots(lo, hi, f.d()));
}

Affine penalised(NetBuilder& b, const Affine& value, const Affine& weight, int d) {
    Affine c = clamp_gadget(b, value, Rational(kClamp));
    return c - b.relu(Rational(1) - weight * Rational(ipow_l(3, d))) * Rational(kPenalty);
}

nlohmann::json base_meta(const std::string& variant, const FunctionOracle& f) {
    return {{"variant", variant}, {"d", f.d()}, {"r", rational_str(f.r())}, {"fn", f.id()}};
}

Network finish_counted(NetBuilder& b, const Affine& out, nlohmann::json meta) {
    Network net = b.finish({out}, meta);
    Counts c = count_params(net);
    net.meta["W"] = c.W;
    net.meta["L"] = c.L;
    net.meta["width"] = c.width;
    return net;
}

std::vector<Affine> scaled(NetBuilder& b, long s, int d) {
    std::vector<Affine> y;
    for (int i = 0; i < d; ++i) y.push_back(b.input(i) * Rational(s));
    return y;
}

// residue class of each offset in [-K,K]^d
std::vector<int> residue(const GridIndex& m, long shift) {
    std::vector<int> s;
    for (long v : m) s.push_back(static_cast<int>(((v + shift) % 3 + 3) % 3));
    return s;
}

}  // namespace

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::shallow: return "shallow";
        case Variant::deep_phase: return "deep_phase";
        case Variant::fixed_width: return "fixed_width";
        case Variant::poly_activation: return "poly_activation";
        case Variant::fourier: return "fourier";
    }
    return "?";
}

Variant parse_variant(const std::string& s) {
    if (s == "shallow") return Variant::shallow;
    if (s == "deep" || s == "deep_phase") return Variant::deep_phase;
    if (s == "fixed-width" || s == "fixed_width") return Variant::fixed_width;
    if (s == "poly" || s == "poly_activation") return Variant::poly_activation;
    if (s == "fourier") return Variant::fourier;
    throw std::invalid_argument("unknown variant " + s);
}

Rational inverse_power(long M, const Rational& r) { return coeff_quantum(M, r, 0); }

GridPlan plan_deep(int d, const Rational& r, const Rational& p, long W, const Rational& c_M) {
    if (W < 1) throw std::invalid_argument("budget must be positive");
    GridPlan g;
    g.N = std::max(1L, static_cast<long>(std::floor(std::pow(double(W), 1.0 / d) + 1e-9)));
    double target = c_M.get_d() * std::pow(double(W), Rational(p / r).get_d());
    g.M = std::max(1L, static_cast<long>(std::ceil(target / g.N - 1e-9))) * g.N;
    return g;
}

GridPlan plan_fixed_width(const Rational& r, const Rational& eps) {
    if (sgn(eps) <= 0 || eps >= 1) throw std::invalid_argument("accuracy must lie in (0,1)");
    double e = eps.get_d(), rr = r.get_d();
    GridPlan g;
    g.N = std::max(1L, static_cast<long>(std::floor(std::pow(e, -1 / (2 * rr)) + 1e-9)));
    double target = std::pow(e, -1 / rr);
    g.M = std::max(1L, static_cast<long>(std::ceil(target / g.N - 1e-9))) * g.N;
    return g;
}

Network build_shallow(const FunctionOracle& f, long M) {
    if (M < 1) throw std::invalid_argument("infeasible budget: M < 1");
    int d = f.d();
    int KT = taylor_degree(f.r());
    auto orders = taylor_orders(d, KT);
    TaylorTable table = region_table(f, 0, M, M);
    NetBuilder b(d);
    SpikeBank bank(b, scaled(b, M, d));
    nlohmann::json meta = base_meta("shallow", f);
    meta["M"] = M;
    meta["N"] = M;
    Affine out;
    if (KT == 0) {
        auto knots = all_knots(M, d);
        std::vector<Rational> vals;
        for (auto& m : knots) vals.push_back(table.at(m)[0]);
        out = bank.linear(knots, vals);
        meta["gadget_slack"] = "0";
    } else {
        int G = taylor_gadgets(orders) + 1;
        Rational eps = inverse_power(M, f.r()) / (10 * G);
        int levels = product_levels(eps, Rational(kCoeffBound));
        GridIndex lo(d, 0), hi(d, M);
        auto all = all_knots(M, d);
        for (auto& s : subgrid_labels(d)) {
            std::vector<GridIndex> ms;
            for (auto& m : all)
                if (residue(m, 0) == s) ms.push_back(m);
            if (ms.empty()) continue;
            Affine F = bank.linear(ms, std::vector<Rational>(ms.size(), Rational(1)));
            std::vector<Affine> coeffs, y;
            for (size_t i = 0; i < orders.size(); ++i) {
                std::vector<Rational> v;
                for (auto& m : ms) v.push_back(table.at(m)[i]);
                coeffs.push_back(b.materialize(bank.constant(ms, v, lo, hi)));
            }
            for (int i = 0; i < d; ++i) {
                if (KT == 0) break;
                std::vector<Rational> v;
                for (auto& m : ms) v.push_back(Rational(m[i]));
                y.push_back(b.materialize(b.input(i) * Rational(M) - bank.constant(ms, v, lo, hi)));
            }
            Affine P = taylor_sum(b, coeffs, y, orders, M, levels);
            out += product_gadget(b, F, P, Rational(kCoeffBound), levels);
        }
        meta["gadget_eps"] = rational_str(eps);
        meta["gadget_slack"] = rational_str(taylor_slack(orders, d, 1, eps));
    }
    return finish_counted(b, out, meta);
}

Network build_deep_filters(int d, long N) {
    NetBuilder b(d);
    SpikeBank coarse(b, scaled(b, N, d));
    std::vector<Affine> outs;
    for (auto& q : subgrid_labels(d)) {
        auto knots = subgrid_knots(q, N, d);
        outs.push_back(coarse.linear(knots, std::vector<Rational>(knots.size(), Rational(1))));
    }
    return b.finish(outs, {{"variant", "deep_filters"}, {"d", d}, {"N", N}});
}

Network build_deep_phase(const FunctionOracle& f, long N, long M, Combiner comb, const Rational& p) {
    int d = f.d();
    const Rational& r = f.r();
    if (N < 1 || M < N) throw std::invalid_argument("deep_phase needs 1 <= N <= M");
    if (M % N) throw std::invalid_argument("divisibility repair failed: N must divide M");
    if (sgn(p) != 0 && (p <= r / d || p > 2 * r / d)) throw std::invalid_argument("p out of range (r/d, 2r/d]");
    long K = M / N;
    int KT = taylor_degree(r);
    auto orders = taylor_orders(d, KT);
    size_t nk = orders.size();
    TaylorTable table = region_table(f, -K, M + K, M);
    std::map<GridIndex, EncodingWeight> enc;
    for (auto& n : all_knots(N, d)) enc.emplace(n, encode_cube(table, n, N, M, r));

    int G = taylor_gadgets(orders) + (comb == Combiner::weighted ? 2 : 0);
    Rational eps = inverse_power(M, r) / (10 * std::max(G, 1));
    int levels = product_levels(eps, Rational(kCoeffBound));

    NetBuilder b(d);
    SpikeBank coarse(b, scaled(b, N, d));
    GridIndex clo(d, 0), chi(d, N), llo(d, -K), lhi(d, K);
    auto offsets = traversal_offsets(d, K);
    std::vector<Affine> qterms;
    long enc_weights = 0;
    int blocks_per_q = 0;
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
        std::vector<Affine> inits, streams;
        for (size_t j = 0; j < nk; ++j) {
            std::vector<Rational> vi, vs;
            for (auto& n : knots) {
                auto w = enc.at(n).weights();
                vi.push_back(w[j]);
                vs.push_back(w[nk + j]);
            }
            inits.push_back(b.materialize(coarse.constant(knots, vi, clo, chi), true));
            streams.push_back(b.materialize(coarse.constant(knots, vs, clo, chi), true));
        }
        auto ahat = decoder_gadget(b, inits, streams, d, K, M, r);
        std::map<GridIndex, const std::vector<Affine>*> at;
        for (size_t t = 0; t < offsets.size(); ++t) at[offsets[t]] = &ahat[t];

        std::vector<Affine> z;
        for (int i = 0; i < d; ++i) z.push_back(b.input(i) * Rational(M) - nq[i] * Rational(K));
        SpikeBank local(b, z);
        std::vector<Affine> sterms;
        int blocks = 0;
        for (auto& s : subgrid_labels(d)) {
            std::vector<GridIndex> ms;
            for (auto& o : offsets)
                if (residue(o, K) == s) ms.push_back(o);
            if (ms.empty()) continue;
            ++blocks;
            std::sort(ms.begin(), ms.end());
            Affine F = local.linear(ms, std::vector<Rational>(ms.size(), Rational(1)));
            std::vector<Affine> sel(nk);
            for (auto& m : ms) {
                Affine onehot = local.constant({m}, {Rational(1)}, llo, lhi);
                for (size_t j = 0; j < nk; ++j)
                    sel[j] += gate_gadget(b, onehot, (*at.at(m))[j], Rational(kCoeffBound));
            }
            std::vector<Affine> y;
            if (KT > 0) {
                for (int i = 0; i < d; ++i) {
                    std::vector<Rational> v;
                    for (auto& m : ms) v.push_back(Rational(m[i]));
                    y.push_back(b.materialize(z[i] - local.constant(ms, v, llo, lhi)));
                }
                for (auto& c : sel) c = b.materialize(c);
            }
            Affine P = taylor_sum(b, sel, y, orders, M, levels);
            if (comb == Combiner::weighted)
                sterms.push_back(product_gadget(b, F, P, Rational(kCoeffBound), levels));
            else
                sterms.push_back(penalised(b, P, F, d));
        }
        blocks_per_q = std::max(blocks_per_q, blocks);
        if (comb == Combiner::weighted) {
            Affine fq;
            for (auto& t : sterms) fq += t;
            qterms.push_back(product_gadget(b, wq, fq, Rational(kCoeffBound), levels));
        } else {
            qterms.push_back(penalised(b, max_gadget(b, sterms), wq, d));
        }
    }
    Affine out;
    if (comb == Combiner::weighted)
        for (auto& t : qterms) out += t;
    else
        out = max_gadget(b, qterms);

    int T = static_cast<int>(offsets.size()) - 1;
    nlohmann::json meta = base_meta("deep_phase", f);
    meta["p"] = rational_str(p);
    meta["N"] = N;
    meta["M"] = M;
    meta["K"] = K;
    meta["combiner"] = comb == Combiner::max ? "max" : "weighted";
    meta["enc_weights"] = enc_weights;
    meta["bits_per_enc"] = T * std::log2(7.0);
    // carry errors grow by 7 per stage and once more by the 1/δ ramp slope
    meta["eval_bits"] = 2 * static_cast<long>(std::ceil(T * std::log2(7.0))) + 64;
    meta["taylor_blocks_per_q"] = blocks_per_q;
    meta["gadget_eps"] = rational_str(eps);
    meta["gadget_slack"] = rational_str(taylor_slack(orders, d, comb == Combiner::weighted ? 2 : 0, eps));
    return finish_counted(b, out, meta);
}

Network build(const FunctionOracle& f, const BuildRequest& req) {
    int d = f.d();
    switch (req.variant) {
        case Variant::shallow: {
            long M = req.M;
            if (M == 0) M = std::max(1L, static_cast<long>(std::floor(std::pow(double(req.W), 1.0 / d) + 1e-9)));
            return build_shallow(f, M);
        }
        case Variant::deep_phase: {
            GridPlan g{req.N, req.M};
            if (g.N == 0) g = plan_deep(d, f.r(), req.p, req.W, req.c_M);
            return build_deep_phase(f, g.N, g.M, req.combiner, req.p);
        }
        case Variant::fixed_width: return build_fixed_width(f, req.eps);
        case Variant::poly_activation: {
            GridPlan g{req.N, req.M};
            if (g.N == 0) g = plan_deep(d, f.r(), req.p, req.W, req.c_M);
            return build_poly_activation(f, g.N, g.M, req.relu_iterations, req.p);
        }
        case Variant::fourier: {
            SigmaSpec s = req.sigma == "sine" ? SigmaSpec::sine() : SigmaSpec::triangle();
            int U = req.U;
            if (U == 0) U = fourier_levels_for_budget(d, f.r(), req.W);
            return build_deep_fourier(f, U, s);
        }
    }
    throw std::invalid_argument("unknown variant");
}

// ---------------------------------------------------------------- fixed width

namespace {

// Fixed set of channels; every step emits one full layer reading only the previous one.
// A register stores value + offset >= 0 in a single ReLU unit.
class Lanes {
public:
    Lanes(NetBuilder& b, int width) : b_(b), width_(width), chans_(width) {}

    void bind_input(const std::string& name, int i) { inputs_[name] = b_.input(i); }

    Affine operator[](const std::string& name) const {
        if (layer_ == 0) return inputs_.at(name);
        const Reg& r = regs_.at(name);
        return chans_[r.chan] - r.offset;
    }
    bool has(const std::string& name) const { return regs_.count(name) > 0; }
    int layer() const { return layer_; }

    struct Set {
        std::string name;
        Affine value;
        Rational offset;
    };

    void step(const std::vector<Set>& sets, const std::vector<std::string>& drop = {}) {
        for (auto& n : drop) regs_.erase(n);
        std::vector<bool> used(width_, false);
        for (auto& [n, r] : regs_) used[r.chan] = true;
        std::map<int, Affine> next;
        std::map<std::string, Reg> nregs = regs_;
        for (auto& s : sets) {
            auto it = nregs.find(s.name);
            int c;
            if (it != nregs.end() && regs_.count(s.name)) {
                c = it->second.chan;
            } else {
                c = static_cast<int>(std::find(used.begin(), used.end(), false) - used.begin());
                if (c >= width_) throw std::logic_error("width budget violated");
                used[c] = true;
            }
            nregs[s.name] = Reg{c, s.offset};
            next[c] = s.value + s.offset;
        }
        for (auto& [n, r] : regs_)
            if (!next.count(r.chan)) next[r.chan] = chans_[r.chan];
        int L = layer_ + 1;
        for (int c = 0; c < width_; ++c) {
            Affine a = next.count(c) ? next[c] : Affine();
            for (auto& t : a.terms())
                if (b_.layer_of(t.node) != layer_) throw std::logic_error("lane reads a non-adjacent layer");
            chans_[c] = b_.relu(a, L);
        }
        regs_ = std::move(nregs);
        layer_ = L;
    }

private:
    struct Reg {
        int chan;
        Rational offset;
    };
    NetBuilder& b_;
    int width_;
    int layer_ = 0;
    std::vector<Affine> chans_;
    std::map<std::string, Reg> regs_;
    std::map<std::string, Affine> inputs_;
};

using AffineFn = std::function<Affine(const Lanes&)>;

std::string xname(int i) { return "x" + std::to_string(i); }
std::string nname(int i) { return "n" + std::to_string(i); }

// φ(y(x)) into register `out`; four scratch registers. `first`/`first_drop` ride along with the first layer.
void lane_spike(Lanes& ln, const std::vector<AffineFn>& y, const std::string& out,
                std::vector<Lanes::Set> first = {}, std::vector<std::string> first_drop = {}) {
    size_t d = y.size();
    auto sum = [](const Lanes& l, const char* a, const char* b) {
        Affine v;
        if (l.has(a)) v += l[a];
        if (l.has(b)) v += l[b];
        return v;
    };
    for (size_t i = 0; i < d; ++i) {
        std::vector<Lanes::Set> sets = i == 0 ? first : std::vector<Lanes::Set>{};
        Affine u = sum(ln, "su", "sur"), w = sum(ln, "sd", "sdr");
        Affine yi = y[i](ln);
        if (i > 0) {
            sets.push_back({"su", u, 0});
            sets.push_back({"sd", w, 0});
        }
        sets.push_back({"sur", yi - u, 0});
        sets.push_back({"sdr", -yi - w, 0});
        ln.step(sets, i == 0 ? first_drop : std::vector<std::string>{});
    }
    Affine s = Rational(1) - sum(ln, "su", "sur") - sum(ln, "sd", "sdr");
    std::vector<std::string> drop{"sur", "sdr"};
    if (ln.has("su")) drop.push_back("su");
    if (ln.has("sd")) drop.push_back("sd");
    ln.step({{out, s, 0}}, drop);
}

// target += scale · u·v for |u|,|v| <= bound; `release` is dropped once u and v are no longer read
void lane_product(Lanes& ln, const AffineFn& u, const AffineFn& v, const Rational& bound, int levels,
                  const std::string& target, const Rational& target_offset, const Rational& scale,
                  const std::vector<std::string>& release) {
    Rational inv = 1 / (2 * bound);
    auto hat = [&]() { return ln["pr1"] * Rational(2) - ln["pr2"] * Rational(4); };
    auto run_levels = [&](const std::vector<std::string>& extra_drop) {
        for (int s = 1; s <= levels; ++s) {
            Affine g = s == 1 ? (ln["ph1"] + ln["ph2"]) * inv : hat();
            Affine F = s == 1 ? g : ln["pF"] - g * rpow(Rational(4), -(s - 1));
            std::vector<std::string> drop;
            if (s == 1) {
                drop = {"ph1", "ph2"};
                drop.insert(drop.end(), extra_drop.begin(), extra_drop.end());
            }
            ln.step({{"pr1", g, 0}, {"pr2", g - Rational(1, 2), 0}, {"pF", F, 1}}, drop);
        }
    };
    Affine t = u(ln) + v(ln);
    ln.step({{"ph1", t, 0}, {"ph2", -t, 0}});
    run_levels({});
    t = u(ln) - v(ln);
    Affine S1 = ln["pF"] - hat() * rpow(Rational(4), -levels);
    ln.step({{"ph1", t, 0}, {"ph2", -t, 0}, {"pS", S1, 1}}, {"pF", "pr1", "pr2"});
    run_levels(release);
    Affine S2 = ln["pF"] - hat() * rpow(Rational(4), -levels);
    Affine prod = (ln["pS"] - S2) * (bound * bound);
    Affine base = ln.has(target) ? ln[target] : Affine();
    ln.step({{target, base + prod * scale, target_offset}}, {"pF", "pr1", "pr2", "pS"});
}

}  // namespace

Network build_fixed_width(const FunctionOracle& f, const Rational& eps) {
    int d = f.d();
    const Rational& r = f.r();
    GridPlan g = plan_fixed_width(r, eps);
    long N = g.N, M = g.M, K = M / N;
    int KT = taylor_degree(r);
    auto orders = taylor_orders(d, KT);
    size_t nk = orders.size();
    const Rational A(kCoeffBound);
    int Kmax = static_cast<int>(ceil_log2(Rational(8 * static_cast<long>(nk)) * A / eps));
    auto offsets = box_knots(-K, K, d);
    TaylorTable table = region_table(f, -K, M + K, M);

    // base-2 stream per N-knot: Kmax bits per coefficient, knots in offset order
    std::map<GridIndex, Rational> weight;
    int T = static_cast<int>(offsets.size() * nk) * Kmax;
    Integer full = Integer(1) << Kmax;
    for (auto& n : all_knots(N, d)) {
        DigitStream s{2, {}};
        for (auto& o : offsets) {
            GridIndex m(d);
            for (int i = 0; i < d; ++i) m[i] = K * n[i] + o[i];
            for (auto& a : table.at(m)) {
                Rational c = (a + A) / (2 * A) * Rational(full);
                Integer code = floor_q(c + Rational(1, 2)).get_num();
                if (code < 0) code = 0;
                if (code >= full) code = full - 1;
                for (int j = Kmax - 1; j >= 0; --j) s.digits.push_back(mpz_tstbit(code.get_mpz_t(), j));
            }
        }
        weight[n] = encode_digits(s);
    }
    Rational delta = default_delta(2, T);

    int width = 2 * d + 10;
    int G = 3 + 2 * KT;
    Rational geps = eps / (10 * G * (d + 2));
    int levels = product_levels(geps, A);
    const Rational accOff = 8, valOff = 8;

    NetBuilder b(d);
    Lanes ln(b, width);
    for (int i = 0; i < d; ++i) ln.bind_input(xname(i), i);
    {
        std::vector<Lanes::Set> sets;
        for (int i = 0; i < d; ++i) sets.push_back({xname(i), ln[xname(i)], 1});
        sets.push_back({"acc", Affine(), accOff});
        ln.step(sets);
    }
    auto xs = [](const Lanes& l, int i) { return l[xname(i)]; };

    for (auto& q : subgrid_labels(d)) {
        auto qknots = subgrid_knots(q, N, d);
        if (qknots.empty()) continue;
        // owner of every N-knot that lies in the patch of a q-knot
        std::map<GridIndex, GridIndex> owner;
        for (auto& n : qknots)
            for (auto& e : patch_offsets(d)) {
                GridIndex m = n;
                bool ok = true;
                for (int i = 0; i < d; ++i) {
                    m[i] += e[i];
                    if (m[i] < 0 || m[i] > N) ok = false;
                }
                if (ok) owner[m] = n;
            }
        std::set<GridIndex> qset(qknots.begin(), qknots.end());

        // phase A: filter w̃_q, knot n_q(x) and its encoding weight, serially over N-knots
        {
            std::vector<Lanes::Set> init{{"wq", Affine(), 0}, {"E", Affine(), 0}};
            for (int i = 0; i < d; ++i) init.push_back({nname(i), Affine(), 0});
            ln.step(init);
        }
        bool pending = false;
        GridIndex prev;
        auto flush = [&](std::vector<Lanes::Set>& sets) {
            if (!pending) return;
            Affine sp = ln["sp"];
            const GridIndex& o = owner.at(prev);
            if (qset.count(prev)) sets.push_back({"wq", ln["wq"] + sp, 0});
            sets.push_back({"E", ln["E"] + sp * weight.at(o), 0});
            for (int i = 0; i < d; ++i) sets.push_back({nname(i), ln[nname(i)] + sp * Rational(o[i]), 0});
        };
        for (auto& [m, o] : owner) {
            std::vector<AffineFn> y;
            for (int i = 0; i < d; ++i) {
                long mi = m[i];
                y.push_back([=](const Lanes& l) { return xs(l, i) * Rational(N) - Rational(mi); });
            }
            std::vector<Lanes::Set> first;
            flush(first);
            std::vector<std::string> first_drop;
            if (pending) first_drop.push_back("sp");
            lane_spike(ln, y, "sp", first, first_drop);
            pending = true;
            prev = m;
        }
        {
            std::vector<Lanes::Set> sets;
            flush(sets);
            ln.step(sets, {"sp"});
        }

        // phase B: decode every knot of the cube afresh and accumulate φ·P
        ln.step({{"fq", Affine(), valOff}});
        auto bit = [&](const Lanes& l) { return (l["t1"] - l["t2"]) * (1 / delta); };
        auto read = [&](const std::string& reg, bool fresh) {
            ln.step({{"t1", ln["E"] * Rational(2) - 1 + delta, 0}, {"t2", ln["E"] * Rational(2) - 1, 0}});
            Rational w = 2 * A;
            for (int j = 1; j <= Kmax; ++j) {
                w /= 2;
                Affine bt = bit(ln);
                Affine c = ln["E"] * Rational(2) - bt;
                Affine base = fresh && j == 1 ? Affine::constant(-A) : ln[reg];
                std::vector<Lanes::Set> sets{{"E", c, 0}, {reg, base + bt * w, A}};
                if (j < Kmax) {
                    sets.push_back({"t1", c * Rational(2) - 1 + delta, 0});
                    sets.push_back({"t2", c * Rational(2) - 1, 0});
                    ln.step(sets);
                } else {
                    ln.step(sets, {"t1", "t2"});
                }
            }
        };
        for (auto& o : offsets) {
            std::vector<AffineFn> y;
            for (int i = 0; i < d; ++i) {
                long oi = o[i];
                y.push_back([=](const Lanes& l) {
                    return xs(l, i) * Rational(M) - l[nname(i)] * Rational(K) - Rational(oi);
                });
            }
            read("P", true);
            for (size_t k = 1; k < nk; ++k) {
                read("c", true);
                const MultiIndex& ord = orders[k];
                std::vector<int> dirs;
                for (int i = 0; i < d; ++i)
                    for (int e = 0; e < ord[i]; ++e) dirs.push_back(i);
                Rational scale = 1 / (Rational(factorial_of(ord)) * rpow(Rational(M), order_of(ord)));
                std::string cur = "c";
                for (size_t t = 0; t < dirs.size(); ++t) {
                    bool last = t + 1 == dirs.size();
                    std::string dst = last ? "P" : (cur == "c" ? "c2" : "c");
                    int i = dirs[t];
                    lane_product(ln, [cur](const Lanes& l) { return l[cur]; }, y[i], A, levels, dst,
                                 last ? A : valOff, last ? scale : Rational(1), {cur});
                    cur = dst;
                }
            }
            lane_spike(ln, y, "phi");
            lane_product(ln, [](const Lanes& l) { return l["phi"]; }, [](const Lanes& l) { return l["P"]; }, A,
                         levels, "fq", valOff, Rational(1), {"phi", "P"});
        }
        std::vector<std::string> drop{"E"};
        for (int i = 0; i < d; ++i) drop.push_back(nname(i));
        ln.step({}, drop);
        lane_product(ln, [](const Lanes& l) { return l["wq"]; }, [](const Lanes& l) { return l["fq"]; }, A, levels,
                     "acc", accOff, Rational(1), {"wq", "fq"});
    }
    Affine out = ln["acc"];
    nlohmann::json meta = base_meta("fixed_width", f);
    meta["eps"] = rational_str(eps);
    meta["N"] = N;
    meta["M"] = M;
    meta["K"] = K;
    meta["bits_per_coeff"] = Kmax;
    meta["enc_weights"] = static_cast<long>(all_knots(N, d).size());
    meta["bits_per_enc"] = T;
    meta["eval_bits"] = 2 * T + 64;
    meta["gadget_eps"] = rational_str(geps);
    Network net = finish_counted(b, out, meta);
    if (net.meta["width"].get<int>() != width) throw std::logic_error("width budget violated");
    return net;
}

}  // namespace hnet
