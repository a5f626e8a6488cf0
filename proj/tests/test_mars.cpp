#include <cmath>
#include <random>
#include <vector>

#include "csmaq/mars.hpp"
#include "csmaq/stats.hpp"
#include "doctest.h"

using namespace csmaq;

namespace {

Matrix column(const std::vector<double>& x) {
    Matrix m(x.size(), 1);
    for (std::size_t i = 0; i < x.size(); ++i) m(i, 0) = x[i];
    return m;
}

}  // namespace

TEST_SUITE("mars") {

TEST_CASE("exact linear relation is reproduced to machine precision") {
    std::vector<double> x(50), y(50);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = static_cast<double>(i) / 49.0;
        y[i] = 100.0 - 40.0 * x[i];
    }
    const MarsModel fit = mars_fit(column(x), y);
    CHECK(fit.rmse < 1e-9);
    for (std::size_t i = 0; i < x.size(); ++i)
        CHECK(fit.predict_row(&x[i]) == doctest::Approx(y[i]).epsilon(1e-9));
}

TEST_CASE("a single knee is recovered at the right knot") {
    std::vector<double> x(200), y(200);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = static_cast<double>(i) / 199.0;
        y[i] = 10.0 - 5.0 * std::max(0.0, x[i] - 0.4);
    }
    const MarsModel fit = mars_fit(column(x), y);
    CHECK(fit.rmse < 1e-6);
    // The active hinge set must bend at ~0.4 (knot grid is quantile-spaced,
    // so allow one grid step of 1/64ths of the range).
    double best_knot = -1.0, best_coef = 0.0;
    for (std::size_t t = 0; t < fit.terms.size(); ++t)
        if (std::fabs(fit.coef[t]) > std::fabs(best_coef)) {
            best_coef = fit.coef[t];
            best_knot = fit.terms[t].knot;
        }
    CHECK(std::fabs(best_knot - 0.4) < 1.0 / 32.0);
    // Flat-then-down shape reproduced at probe points.
    const double x_lo = 0.2, x_knee = 0.4, x_hi = 0.9;
    CHECK(fit.predict_row(&x_lo) == doctest::Approx(10.0).epsilon(1e-4));
    CHECK(fit.predict_row(&x_knee) == doctest::Approx(10.0).epsilon(1e-4));
    CHECK(fit.predict_row(&x_hi) == doctest::Approx(10.0 - 5.0 * 0.5).epsilon(1e-3));
}

TEST_CASE("gcv pruning keeps pure noise nearly term-free") {
    std::mt19937_64 rng(33);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> x(120), y(120);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = gauss(rng);
        y[i] = gauss(rng);  // independent of x
    }
    const MarsModel fit = mars_fit(column(x), y);
    // Backward GCV deletion must not keep a complex model for noise.
    CHECK(fit.terms.size() <= 2);
    const double sd = sample_stddev(y);
    CHECK(fit.rmse > 0.7 * sd);
}

TEST_CASE("additive structure across two variables is captured") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const std::size_t n = 300;
    Matrix x(n, 2);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x(i, 0) = uni(rng);
        x(i, 1) = uni(rng);
        y[i] = 4.0 * std::max(0.0, x(i, 0) - 0.5) - 7.0 * std::max(0.0, x(i, 1) - 0.3) + 2.0;
    }
    const MarsModel fit = mars_fit(x, y);
    const std::vector<double> pred = fit.predict(x);
    CHECK(pearson_r(pred, y) > 0.999);
    bool uses_var0 = false, uses_var1 = false;
    for (const auto& term : fit.terms) {
        uses_var0 |= term.var == 0;
        uses_var1 |= term.var == 1;
    }
    CHECK(uses_var0);
    CHECK(uses_var1);
}

TEST_CASE("forward pass respects the term budget") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::vector<double> x(150), y(150);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = uni(rng);
        y[i] = std::sin(3.0 * x[i]);  // needs many hinges to approximate
    }
    MarsOptions opts;
    opts.max_terms = 4;
    const MarsModel fit = mars_fit(column(x), y, opts);
    CHECK(fit.terms.size() <= 4);
    CHECK(fit.coef.size() == fit.terms.size());
}

}  // TEST_SUITE
