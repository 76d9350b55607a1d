#include "hnet/codec.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hnet {

namespace {

constexpr int kBase = 7;
constexpr int kMaxCorrection = 3;

long cube_ratio(long N, long M) {
    if (N < 1 || M < 1 || M % N != 0) throw std::invalid_argument("M must be a positive multiple of N");
    return M / N;
}

int order_index(const std::vector<MultiIndex>& orders, const MultiIndex& k) {
    for (size_t i = 0; i < orders.size(); ++i)
        if (orders[i] == k) return static_cast<int>(i);
    return -1;
}

// weights c such that ã_k = Σ c[j] â_{orders[j]}
std::vector<std::pair<int, Rational>> transfer_row(const std::vector<MultiIndex>& orders, size_t i, int dir,
                                                   int sign, long M) {
    std::vector<std::pair<int, Rational>> row;
    MultiIndex k = orders[i];
    Rational step = frac_q(sign, M);
    Rational w(1);
    for (int n = 0;; ++n) {
        int j = order_index(orders, k);
        if (j < 0) break;
        row.emplace_back(j, w);
        ++k[dir];
        w *= step;
        w /= n + 1;
    }
    return row;
}

}  // namespace

const std::vector<Rational>& TaylorTable::at(const GridIndex& m) const {
    auto it = entries.find(m);
    if (it == entries.end()) throw std::out_of_range("knot outside the Taylor table");
    return it->second;
}

TaylorTable taylor_table(const FunctionOracle& f, long M, const std::vector<GridIndex>& region) {
    if (M < 1) throw std::invalid_argument("M must be positive");
    TaylorTable t;
    t.M = M;
    t.d = f.d();
    t.orders = taylor_orders(f.d(), taylor_degree(f.r()));
    if (taylor_degree(f.r()) > f.max_order()) throw std::domain_error("oracle lacks the required derivatives");
    for (auto& m : region) {
        if (static_cast<int>(m.size()) != f.d()) throw std::invalid_argument("knot dimension mismatch");
        Point x;
        for (long v : m) x.push_back(frac_q(v, M));
        std::vector<Rational> row;
        for (auto& k : t.orders) row.push_back(f.derivative(k, x));
        t.entries[m] = std::move(row);
    }
    return t;
}

std::vector<GridIndex> traversal_offsets(int d, long K) {
    if (d < 1 || K < 0) throw std::invalid_argument("bad traversal shape");
    std::vector<GridIndex> seq;
    for (long v = -K; v <= K; ++v) seq.push_back({v});
    for (int dim = 1; dim < d; ++dim) {
        std::vector<GridIndex> next;
        // prepend one slower coordinate
        for (long v = -K; v <= K; ++v) {
            bool odd = (v + K) % 2 == 1;
            for (size_t i = 0; i < seq.size(); ++i) {
                const GridIndex& tail = odd ? seq[seq.size() - 1 - i] : seq[i];
                GridIndex g{v};
                g.insert(g.end(), tail.begin(), tail.end());
                next.push_back(std::move(g));
            }
        }
        seq = std::move(next);
    }
    return seq;
}

std::vector<GridIndex> cube_knots(const GridIndex& n, long N, long M) {
    auto seq = knot_traversal(n, N, M);
    std::sort(seq.begin(), seq.end());
    return seq;
}

std::vector<GridIndex> knot_traversal(const GridIndex& n, long N, long M) {
    long K = cube_ratio(N, M);
    auto seq = traversal_offsets(static_cast<int>(n.size()), K);
    for (auto& g : seq)
        for (size_t i = 0; i < g.size(); ++i) g[i] += K * n[i];
    return seq;
}

std::pair<int, int> step_between(const GridIndex& m1, const GridIndex& m2) {
    if (m1.size() != m2.size()) throw std::invalid_argument("knot dimension mismatch");
    int dir = -1, sign = 0;
    for (size_t i = 0; i < m1.size(); ++i) {
        long diff = m2[i] - m1[i];
        if (diff == 0) continue;
        if (dir >= 0 || (diff != 1 && diff != -1)) throw std::invalid_argument("knots are not adjacent");
        dir = static_cast<int>(i);
        sign = static_cast<int>(diff);
    }
    if (dir < 0) throw std::invalid_argument("knots are not adjacent");
    return {dir, sign};
}

std::vector<Rational> transfer_coeffs(const std::vector<Rational>& ahat, const std::vector<MultiIndex>& orders,
                                      int dir, int sign, long M) {
    if (ahat.size() != orders.size()) throw std::invalid_argument("coefficient count mismatch");
    if (sign != 1 && sign != -1) throw std::invalid_argument("knots are not adjacent");
    std::vector<Rational> out(orders.size());
    for (size_t i = 0; i < orders.size(); ++i)
        for (auto& [j, w] : transfer_row(orders, i, dir, sign, M)) out[i] += w * ahat[j];
    return out;
}

bool within_tolerance(const Rational& err, long M, const Rational& r, int order) {
    long a = r.get_num().get_si(), b = r.get_den().get_si();
    long e = order * b - a;
    Rational lhs = rpow(abs_q(err), b);
    if (e >= 0) return lhs <= rpow(Rational(M), e);
    return lhs * rpow(Rational(M), -e) <= 1;
}

Rational coeff_quantum(long M, const Rational& r, int order) {
    if (r.get_den() == 1) return rpow(Rational(M), order - r.get_num().get_si());
    BigFloat e(Rational(order) - r, 128), base(M, 128), v(128);
    mpfr_pow(v.get(), base.get(), e.get(), MPFR_RNDD);
    Rational q = v.to_rational();
    Rational shrink = 1 - rpow(Rational(2), -100);
    while (!within_tolerance(q, M, r, order)) q *= shrink;
    return q;
}

std::vector<Rational> EncodingWeight::weights() const {
    std::vector<Rational> w = initial;
    for (auto& s : streams) w.push_back(encode_digits(s));
    return w;
}

int EncodingWeight::steps() const { return streams.empty() ? 0 : static_cast<int>(streams[0].digits.size()); }

double EncodingWeight::bits_per_stream() const { return steps() * std::log2(static_cast<double>(kBase)); }

nlohmann::json EncodingWeight::to_json() const {
    nlohmann::json j;
    j["n"] = n;
    j["N"] = N;
    j["M"] = M;
    j["r"] = rational_str(r);
    j["orders"] = orders;
    nlohmann::json ss = nlohmann::json::array();
    for (auto& s : streams) {
        std::string text;
        for (int dgt : s.digits) text.push_back(static_cast<char>('0' + dgt));
        ss.push_back(text);
    }
    j["streams"] = ss;
    nlohmann::json init = nlohmann::json::array();
    for (auto& q : initial) init.push_back(rational_str(q));
    j["initial"] = init;
    return j;
}

EncodingWeight EncodingWeight::from_json(const nlohmann::json& j) {
    EncodingWeight e;
    e.n = j.at("n").get<GridIndex>();
    e.N = j.at("N").get<long>();
    e.M = j.at("M").get<long>();
    e.r = parse_rational(j.at("r").get<std::string>());
    e.orders = j.at("orders").get<std::vector<MultiIndex>>();
    for (auto& s : j.at("streams")) {
        DigitStream ds{kBase, {}};
        for (char c : s.get<std::string>()) ds.digits.push_back(c - '0');
        ds.validate();
        e.streams.push_back(std::move(ds));
    }
    for (auto& q : j.at("initial")) e.initial.push_back(parse_rational(q.get<std::string>()));
    if (e.streams.size() != e.orders.size() || e.initial.size() != e.orders.size())
        throw std::invalid_argument("encoding weight arity mismatch");
    return e;
}

EncodingWeight encode_cube(const TaylorTable& table, const GridIndex& n, long N, long M, const Rational& r) {
    if (table.M != M) throw std::invalid_argument("table scale differs from M");
    auto seq = knot_traversal(n, N, M);
    EncodingWeight enc;
    enc.n = n;
    enc.N = N;
    enc.M = M;
    enc.r = r;
    enc.orders = table.orders;
    size_t nk = enc.orders.size();
    std::vector<Rational> quantum;
    for (auto& k : enc.orders) quantum.push_back(coeff_quantum(M, r, order_of(k)));
    enc.initial = table.at(seq[0]);
    enc.streams.assign(nk, DigitStream{kBase, {}});
    std::vector<Rational> ahat = enc.initial;
    for (size_t t = 1; t < seq.size(); ++t) {
        auto [dir, sign] = step_between(seq[t - 1], seq[t]);
        std::vector<Rational> next = transfer_coeffs(ahat, enc.orders, dir, sign, M);
        const auto& exact = table.at(seq[t]);
        for (size_t i = 0; i < nk; ++i) {
            Rational resid = exact[i] - next[i];
            int best = 0;
            Rational best_err;
            for (int B = -kMaxCorrection; B <= kMaxCorrection; ++B) {
                Rational err = abs_q(resid - quantum[i] * B);
                if (B == -kMaxCorrection || err < best_err) {
                    best = B;
                    best_err = err;
                }
            }
            next[i] += quantum[i] * best;
            if (!within_tolerance(exact[i] - next[i], M, r, order_of(enc.orders[i])))
                throw std::runtime_error("correction digit out of range: oracle exceeds its smoothness bound");
            enc.streams[i].digits.push_back(best + kMaxCorrection);
        }
        ahat = std::move(next);
    }
    return enc;
}

TaylorTable decode_cube(const EncodingWeight& enc) {
    auto seq = knot_traversal(enc.n, enc.N, enc.M);
    size_t nk = enc.orders.size();
    if (enc.streams.size() != nk || enc.initial.size() != nk) throw std::invalid_argument("malformed encoding weight");
    for (auto& s : enc.streams) {
        s.validate();
        if (s.digits.size() + 1 != seq.size()) throw std::invalid_argument("stream length differs from traversal");
    }
    TaylorTable t;
    t.M = enc.M;
    t.d = static_cast<int>(enc.n.size());
    t.orders = enc.orders;
    std::vector<Rational> quantum;
    for (auto& k : enc.orders) quantum.push_back(coeff_quantum(enc.M, enc.r, order_of(k)));
    std::vector<Rational> ahat = enc.initial;
    t.entries[seq[0]] = ahat;
    for (size_t s = 1; s < seq.size(); ++s) {
        auto [dir, sign] = step_between(seq[s - 1], seq[s]);
        ahat = transfer_coeffs(ahat, enc.orders, dir, sign, enc.M);
        for (size_t i = 0; i < nk; ++i) ahat[i] += quantum[i] * (enc.streams[i].digits[s - 1] - kMaxCorrection);
        t.entries[seq[s]] = ahat;
    }
    return t;
}

std::vector<std::vector<Affine>> decoder_from_digits(NetBuilder& b, const std::vector<Affine>& initials,
                                                     const std::vector<std::vector<Affine>>& digits, int d, long K,
                                                     long M, const Rational& r) {
    auto orders = taylor_orders(d, taylor_degree(r));
    size_t nk = orders.size();
    auto seq = traversal_offsets(d, K);
    int T = static_cast<int>(seq.size()) - 1;
    if (initials.size() != nk || digits.size() != nk) throw std::invalid_argument("decoder arity mismatch");
    for (auto& row : digits)
        if (static_cast<int>(row.size()) < T) throw std::invalid_argument("digit stream too short");
    std::vector<Rational> quantum;
    for (auto& k : orders) quantum.push_back(coeff_quantum(M, r, order_of(k)));
    std::vector<std::vector<Affine>> out;
    out.push_back(initials);
    for (int t = 1; t <= T; ++t) {
        auto [dir, sign] = step_between(seq[t - 1], seq[t]);
        const auto& prev = out.back();
        std::vector<Affine> cur;
        for (size_t i = 0; i < nk; ++i) {
            Affine a = (digits[i][t - 1] - Rational(kMaxCorrection)) * quantum[i];
            for (auto& [j, w] : transfer_row(orders, i, dir, sign, M)) a += prev[j] * w;
            cur.push_back(b.materialize(a, true));
        }
        out.push_back(std::move(cur));
    }
    return out;
}

std::vector<std::vector<Affine>> decoder_gadget(NetBuilder& b, const std::vector<Affine>& initials,
                                                const std::vector<Affine>& streams, int d, long K, long M,
                                                const Rational& r) {
    int T = static_cast<int>(traversal_offsets(d, K).size()) - 1;
    std::vector<std::vector<Affine>> digits;
    for (auto& s : streams) digits.push_back(extractor_gadget(b, s, kBase, T, default_delta(kBase, T)).digits);
    return decoder_from_digits(b, initials, digits, d, K, M, r);
}

Network build_decoder_net(long N, long M, const Rational& r, int d) {
    long K = cube_ratio(N, M);
    size_t nk = taylor_orders(d, taylor_degree(r)).size();
    NetBuilder b(static_cast<int>(2 * nk));
    std::vector<Affine> init, streams;
    for (size_t i = 0; i < nk; ++i) {
        init.push_back(b.input(static_cast<int>(i)));
        streams.push_back(b.input(static_cast<int>(nk + i)));
    }
    auto table = decoder_gadget(b, init, streams, d, K, M, r);
    std::vector<Affine> outs;
    for (auto& row : table) outs.insert(outs.end(), row.begin(), row.end());
    return b.finish(outs, {{"variant", "decoder"}, {"N", N}, {"M", M}, {"r", rational_str(r)}, {"d", d}});
}

}  // namespace hnet
