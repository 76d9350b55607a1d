#pragma once

#include "hnet/builders.hpp"
#include "hnet/corpus.hpp"

#include <string>
#include <vector>

namespace hnet {

struct GridSpec {
    long resolution = 0;        // grid steps per axis; 0 = 4·M from the net metadata (at least 64)
    long random_points = 10000;
    unsigned long seed = 1;
    long bits = 0;              // 0 = eval_bits from the metadata, at least 128
    bool exact = false;         // rational evaluation
};

struct ErrorEstimate {
    Rational sup;
    double sup_d = 0;
    long resolution = 0;
    long random_points = 0;
    long points = 0;
    Point argmax;
};

// max |net(x) - f(x)| over the uniform grid of [0,1]^d and random rational points
ErrorEstimate measure_error(const Network& net, const FunctionOracle& f, const GridSpec& g = {});

struct RateRow {
    std::string variant;
    int d = 1;
    Rational r;
    Rational p_target;
    long W = 0;
    long L = 0;
    long width = 0;
    double sup_error = 0;
    long enc_weights = 0;
    double bits_per_enc = 0;
    std::string fn;
    unsigned long seed = 0;

    bool operator==(const RateRow&) const = default;
};

struct RateFailure {
    std::string budget;
    std::string fn;
    std::string message;
};

struct RateTable {
    std::vector<RateRow> rows;
    std::vector<RateFailure> failures;
};

// one budget point: W, an explicit (N, M) grid, or an accuracy ε
struct Budget {
    long W = 0;
    long N = 0, M = 0;
    Rational eps;
    int U = 0;  // fourier
    std::string label() const;
};

struct SweepConfig {
    Variant variant = Variant::deep_phase;
    int d = 1;
    Rational r = 1;
    Rational p = 2;
    Rational c_M = 1;
    Combiner combiner = Combiner::max;
    std::string sigma = "triangle";  // fourier
    std::vector<Budget> budgets;
    std::vector<std::string> fns;  // empty = whole corpus
    unsigned long seed = 1;
    GridSpec grid;

    static SweepConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

RateTable sweep_rates(const SweepConfig& cfg);

enum class FitModel { power, powerlog, sqrtexp };
FitModel parse_fit_model(const std::string& s);
std::string fit_model_name(FitModel m);

struct RateFit {
    std::string variant;
    int d = 1;
    Rational r;
    Rational p_target;
    std::string fn;
    FitModel model = FitModel::power;
    double slope = 0;
    double intercept = 0;
    double stderr_slope = 0;
    double r2 = 0;
    int points = 0;
    int excluded = 0;  // zero-error rows
};

// least squares of log y on log x (power), log y - log log x on log x (powerlog) or log y on √x (sqrtexp)
RateFit fit_series(const std::vector<double>& x, const std::vector<double>& y, FitModel model);
// rows of one (variant, d, r, fn) against W
RateFit fit_rate(const std::vector<RateRow>& rows, FitModel model);
// one fit per (variant, d, r, fn) group with enough nonzero rows; fourier groups always use sqrtexp
std::vector<RateFit> fit_table(const RateTable& t, FitModel model);

std::string csv_header();
std::string to_csv(const RateTable& t);
RateTable parse_csv(const std::string& text);
// "deep_phase d=1 r=1: p̂ = 1.98 vs theory 2.0"
std::string summary_line(const RateFit& fit);
// table.csv, summary.txt and one SVG per (variant, d, r) under dir
void emit_report(const RateTable& t, const std::vector<RateFit>& fits, const std::string& dir);

}  // namespace hnet
