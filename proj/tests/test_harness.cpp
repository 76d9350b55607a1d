#include <doctest.h>

#include "hnet/harness.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace hnet;

namespace {

RateRow row(long W, double err, const std::string& fn) {
    RateRow r;
    r.variant = "deep_phase";
    r.d = 1;
    r.r = 1;
    r.p_target = 2;
    r.W = W;
    r.L = 7;
    r.width = 12;
    r.sup_error = err;
    r.enc_weights = 3;
    r.bits_per_enc = 11.25;
    r.fn = fn;
    r.seed = 1;
    return r;
}

}  // namespace

TEST_CASE("exact power law") {
    std::vector<double> W{10, 20, 40, 80, 160}, e;
    for (double w : W) e.push_back(std::pow(w, -2));
    RateFit f = fit_series(W, e, FitModel::power);
    CHECK(f.slope == doctest::Approx(-2).epsilon(1e-12));
    CHECK(f.r2 == doctest::Approx(1).epsilon(1e-12));
    CHECK(f.points == 5);
}

TEST_CASE("log-factor model recovers the power part") {
    std::vector<double> W{16, 64, 256, 1024}, e;
    for (double w : W) e.push_back(std::log(w) / w);
    CHECK(fit_series(W, e, FitModel::powerlog).slope == doctest::Approx(-1).epsilon(1e-12));
    CHECK(fit_series(W, e, FitModel::power).slope > -1);
}

TEST_CASE("square-root exponential model") {
    std::vector<double> W{100, 400, 900, 1600, 2500}, e;
    for (double w : W) e.push_back(std::exp(-0.5 * std::sqrt(w)));
    RateFit f = fit_series(W, e, FitModel::sqrtexp);
    CHECK(-f.slope == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(f.r2 == doctest::Approx(1).epsilon(1e-12));
}

TEST_CASE("zero-error rows are excluded") {
    RateFit f = fit_series({1, 2, 4, 8}, {1, 0, 0.25, 0.125}, FitModel::power);
    CHECK(f.excluded == 1);
    CHECK(f.points == 3);
    CHECK_THROWS(fit_series({1, 2}, {0, 1}, FitModel::power));
}

TEST_CASE("summary line format") {
    RateTable t;
    for (long W : {10L, 100L, 1000L, 10000L}) t.rows.push_back(row(W, 1.0 / double(W * W), ""));
    auto fits = fit_table(t, FitModel::power);
    REQUIRE(fits.size() == 1);
    CHECK(summary_line(fits[0]) == "deep_phase d=1 r=1: p̂ = 2 vs theory 2.0 (R^2 = 1, 4 points)");
}

TEST_CASE("CSV") {
    RateTable empty;
    CHECK(to_csv(empty) == csv_header() + "\n");
    CHECK(csv_header() == "variant,d,r,p_target,W,L,width,sup_error,enc_weights,bits_per_enc,fn,seed");
    CHECK(parse_csv(to_csv(empty)).rows.empty());

    RateTable t;
    t.rows.push_back(row(57, 0.039263840317740495, "trig"));
    t.rows.push_back(row(58, 1.0 / 3.0, "kink"));
    t.rows.push_back(row(59, 0, "zero"));
    t.rows[1].r = frac_q(3, 2);
    t.rows[1].p_target = frac_q(5, 2);
    std::string csv = to_csv(t);
    RateTable back = parse_csv(csv);
    CHECK(back.rows == t.rows);
    CHECK(to_csv(back) == csv);
}

TEST_CASE("deep sweep rows") {
    SweepConfig cfg;
    cfg.variant = Variant::deep_phase;
    cfg.p = 2;
    for (long W : {2L, 3L, 4L, 6L}) cfg.budgets.push_back(Budget{W});
    cfg.fns = {"trig"};
    cfg.grid.resolution = 64;
    cfg.grid.random_points = 20;
    RateTable t = sweep_rates(cfg);
    REQUIRE(t.rows.size() == 4);
    CHECK(t.failures.empty());
    for (size_t i = 1; i < t.rows.size(); ++i) CHECK(t.rows[i].W > t.rows[i - 1].W);
    for (auto& r : t.rows) CHECK(r.sup_error < 0.5);

    RateTable again = sweep_rates(SweepConfig::from_json(cfg.to_json()));
    CHECK(to_csv(again) == to_csv(t));
}

TEST_CASE("fourier rows carry one encoding weight") {
    SweepConfig cfg;
    cfg.variant = Variant::fourier;
    for (int U : {1, 2, 3, 4}) {
        Budget b;
        b.U = U;
        cfg.budgets.push_back(b);
    }
    cfg.fns = {"takagi"};
    cfg.grid.random_points = 20;
    RateTable t = sweep_rates(cfg);
    REQUIRE(t.rows.size() == 4);
    for (auto& r : t.rows) CHECK(r.enc_weights == 1);
}

TEST_CASE("failures are recorded per row") {
    SweepConfig cfg;
    cfg.variant = Variant::deep_phase;
    cfg.p = 3;
    for (long W : {2L, 3L, 4L, 6L}) cfg.budgets.push_back(Budget{W});
    cfg.fns = {"trig"};
    RateTable t = sweep_rates(cfg);
    CHECK(t.rows.empty());
    CHECK(t.failures.size() == 4);
    cfg.budgets.pop_back();
    CHECK_THROWS_AS(sweep_rates(cfg), std::invalid_argument);
}

TEST_CASE("report files") {
    auto dir = std::filesystem::temp_directory_path() / "hnet_report_test";
    std::filesystem::remove_all(dir);
    RateTable t;
    for (long W : {10L, 100L, 1000L, 10000L}) t.rows.push_back(row(W, 1.0 / double(W), "trig"));
    emit_report(t, fit_table(t, FitModel::power), dir.string());
    std::ifstream csv(dir / "table.csv");
    std::stringstream s;
    s << csv.rdbuf();
    CHECK(s.str() == to_csv(t));
    CHECK(std::filesystem::exists(dir / "summary.txt"));
    CHECK(std::filesystem::exists(dir / "deep_phase_d1_r1.svg"));
    std::filesystem::remove_all(dir);
}
