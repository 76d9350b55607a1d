#include "hnet/eval.hpp"

#include <stdexcept>

namespace hnet {

struct Evaluator::Code {
    std::vector<ActKind> act;
    std::vector<const SigmaSpec*> sigma;
    std::vector<int> poly;  // index into polys, -1 if none
    std::vector<uint32_t> begin;
    std::vector<int> src;

    std::vector<Rational> wq, bq;
    std::vector<std::vector<Rational>> polyq;

    std::vector<BigFloat> wf, bf;
    std::vector<std::vector<BigFloat>> polyf;
};

Evaluator::Evaluator(const Network& net, EvalMode mode) : mode_(mode), d_(net.input_dim), outputs_(net.outputs) {
    if (mode.kind == ScalarKind::bigfloat && mode.bits < kMinBits)
        throw std::invalid_argument("bigfloat mode needs at least 64 mantissa bits");
    code_ = std::make_unique<Code>();
    Code& c = *code_;
    size_t n = net.units.size();
    c.act.reserve(n);
    c.sigma.reserve(n);
    c.poly.reserve(n);
    c.begin.reserve(n + 1);
    c.begin.push_back(0);
    bool big = mode.kind == ScalarKind::bigfloat;
    for (const Unit& u : net.units) {
        c.act.push_back(u.act.kind);
        c.sigma.push_back(u.act.sigma.get());
        if (u.act.kind == ActKind::periodic && !big && !u.act.sigma->rational_exact())
            throw std::domain_error("rational mode cannot evaluate sine units; use bigfloat");
        if (u.act.kind == ActKind::polynomial) {
            c.poly.push_back(static_cast<int>(big ? c.polyf.size() : c.polyq.size()));
            if (big) {
                std::vector<BigFloat> pf;
                for (auto& q : *u.act.poly) pf.emplace_back(q, mode.bits);
                c.polyf.push_back(std::move(pf));
            } else {
                c.polyq.push_back(*u.act.poly);
            }
        } else {
            c.poly.push_back(-1);
        }
        for (auto& cn : u.in) {
            c.src.push_back(cn.src);
            if (big) {
                c.wf.push_back(cn.w.to_bigfloat(mode.bits));
            } else {
                c.wq.push_back(cn.w.to_rational());
            }
        }
        if (big) {
            c.bf.push_back(u.bias.to_bigfloat(mode.bits));
        } else {
            c.bq.push_back(u.bias.to_rational());
        }
        c.begin.push_back(static_cast<uint32_t>(c.src.size()));
    }
    int nodes = net.node_count();
    if (big) {
        fv_.reserve(nodes);
        for (int i = 0; i < nodes; ++i) fv_.emplace_back(mode.bits);
        for (size_t i = 0; i < outputs_.size(); ++i) fout_.emplace_back(mode.bits);
    } else {
        qv_.resize(nodes);
    }
}

Evaluator::~Evaluator() = default;

std::vector<Rational> Evaluator::run_rational(const std::vector<Rational>& x) {
    if (mode_.kind != ScalarKind::rational) throw std::logic_error("evaluator is in bigfloat mode");
    if (static_cast<int>(x.size()) != d_) throw std::invalid_argument("input dimension mismatch");
    Code& c = *code_;
    for (int i = 0; i < d_; ++i) qv_[i] = x[i];
    Rational acc, tmp;
    size_t n = c.act.size();
    for (size_t u = 0; u < n; ++u) {
        acc = c.bq[u];
        for (uint32_t k = c.begin[u]; k < c.begin[u + 1]; ++k) {
            const Rational& v = qv_[c.src[k]];
            if (sgn(v) == 0) continue;
            mpq_mul(tmp.get_mpq_t(), c.wq[k].get_mpq_t(), v.get_mpq_t());
            mpq_add(acc.get_mpq_t(), acc.get_mpq_t(), tmp.get_mpq_t());
        }
        Rational& out = qv_[d_ + u];
        switch (c.act[u]) {
            case ActKind::identity:
                out = acc;
                break;
            case ActKind::relu:
                if (sgn(acc) < 0) {
                    out = 0;
                } else {
                    out = acc;
                }
                break;
            case ActKind::periodic:
                out = c.sigma[u]->eval(acc);
                break;
            case ActKind::polynomial: {
                const auto& p = c.polyq[c.poly[u]];
                Rational h = p.back();
                for (size_t i = p.size() - 1; i-- > 0;) h = h * acc + p[i];
                out = h;
                break;
            }
        }
    }
    std::vector<Rational> res;
    res.reserve(outputs_.size());
    for (int o : outputs_) res.push_back(qv_[o]);
    return res;
}

const std::vector<BigFloat>& Evaluator::run_big(const std::vector<BigFloat>& x) {
    if (mode_.kind != ScalarKind::bigfloat) throw std::logic_error("evaluator is in rational mode");
    if (static_cast<int>(x.size()) != d_) throw std::invalid_argument("input dimension mismatch");
    Code& c = *code_;
    for (int i = 0; i < d_; ++i) fv_[i].set(x[i]);
    size_t n = c.act.size();
    BigFloat acc(mode_.bits), h(mode_.bits);
    for (size_t u = 0; u < n; ++u) {
        mpfr_set(acc.get(), c.bf[u].get(), MPFR_RNDN);
        for (uint32_t k = c.begin[u]; k < c.begin[u + 1]; ++k) {
            const BigFloat& v = fv_[c.src[k]];
            if (v.is_zero()) continue;
            mpfr_fma(acc.get(), c.wf[k].get(), v.get(), acc.get(), MPFR_RNDN);
        }
        BigFloat& out = fv_[d_ + u];
        switch (c.act[u]) {
            case ActKind::identity:
                mpfr_set(out.get(), acc.get(), MPFR_RNDN);
                break;
            case ActKind::relu:
                if (acc.sign() < 0) {
                    mpfr_set_zero(out.get(), 1);
                } else {
                    mpfr_set(out.get(), acc.get(), MPFR_RNDN);
                }
                break;
            case ActKind::periodic:
                c.sigma[u]->eval(out, acc);
                break;
            case ActKind::polynomial: {
                const auto& p = c.polyf[c.poly[u]];
                mpfr_set(h.get(), p.back().get(), MPFR_RNDN);
                for (size_t i = p.size() - 1; i-- > 0;) mpfr_fma(h.get(), h.get(), acc.get(), p[i].get(), MPFR_RNDN);
                mpfr_set(out.get(), h.get(), MPFR_RNDN);
                break;
            }
        }
    }
    for (size_t i = 0; i < outputs_.size(); ++i) fout_[i].set(fv_[outputs_[i]]);
    return fout_;
}

std::vector<ExactScalar> Evaluator::run(const std::vector<ExactScalar>& x) {
    std::vector<ExactScalar> res;
    if (mode_.kind == ScalarKind::rational) {
        std::vector<Rational> xq;
        for (auto& v : x) xq.push_back(v.to_rational());
        for (auto& q : run_rational(xq)) res.emplace_back(q);
    } else {
        std::vector<BigFloat> xf;
        for (auto& v : x) xf.push_back(v.to_bigfloat(mode_.bits));
        for (auto& f : run_big(xf)) res.emplace_back(f);
    }
    return res;
}

std::vector<ExactScalar> eval_outputs(const Network& net, const std::vector<ExactScalar>& x, EvalMode mode) {
    if (static_cast<int>(x.size()) != net.input_dim) throw std::invalid_argument("input dimension mismatch");
    Evaluator ev(net, mode);
    return ev.run(x);
}

ExactScalar eval_network(const Network& net, const std::vector<ExactScalar>& x, EvalMode mode) {
    return eval_outputs(net, x, mode).at(0);
}

}  // namespace hnet
