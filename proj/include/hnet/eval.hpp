#pragma once

#include "hnet/network.hpp"

#include <memory>
#include <vector>

namespace hnet {

// Flattened network, compiled once and run on many points.
class Evaluator {
public:
    Evaluator(const Network& net, EvalMode mode);
    ~Evaluator();
    Evaluator(const Evaluator&) = delete;
    Evaluator& operator=(const Evaluator&) = delete;

    const EvalMode& mode() const { return mode_; }
    int input_dim() const { return d_; }
    size_t output_count() const { return outputs_.size(); }

    std::vector<ExactScalar> run(const std::vector<ExactScalar>& x);
    std::vector<Rational> run_rational(const std::vector<Rational>& x);
    // bigfloat mode only; results stay valid until the next call
    const std::vector<BigFloat>& run_big(const std::vector<BigFloat>& x);
    // value of every node after the last run (rational mode)
    const std::vector<Rational>& rational_values() const { return qv_; }
    const std::vector<BigFloat>& big_values() const { return fv_; }

private:
    struct Code;
    EvalMode mode_;
    int d_;
    std::vector<int> outputs_;
    std::unique_ptr<Code> code_;
    std::vector<Rational> qv_;
    std::vector<BigFloat> fv_;
    std::vector<BigFloat> fout_;
};

ExactScalar eval_network(const Network& net, const std::vector<ExactScalar>& x, EvalMode mode = EvalMode::exact());
std::vector<ExactScalar> eval_outputs(const Network& net, const std::vector<ExactScalar>& x,
                                      EvalMode mode = EvalMode::exact());

}  // namespace hnet
