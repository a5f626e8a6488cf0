#include <cmath>
#include <random>
#include <vector>

#include "csmaq/evaluation.hpp"
#include "csmaq/front_end.hpp"
#include "doctest.h"

using namespace csmaq;

namespace {

/// Dataset whose single-frame features directly encode the wanted
/// objective score through a pass-through model.
struct Fixture {
    CsmModel model;
    CalibDataset data;
};

/// Model: score = DM0 value (identity basis through an increasing ramp is
/// not allowed, so use intercept 100 and slope -1 with objective = 100-x).
Fixture make_fixture(const std::vector<double>& objective,
                     const std::vector<double>& subjective) {
    Fixture fx;
    fx.model.config_hash = FrontEndConfig{}.hash();
    BasisFunction bf;
    bf.dm_index = 0;
    bf.intercept = 100.0;
    bf.hinges = {{0.0, -1.0}};
    bf.x_min = 0.0;
    bf.x_max = 100.0;
    fx.model.basis_functions.assign(kDmCount, bf);

    QualityTerm q0;
    q0.id = "Q0";
    q0.coefficient = 0.0;
    fx.model.terms.push_back(q0);
    QualityTerm q1;
    q1.id = "Q1";
    q1.coefficient = 1.0;
    q1.bf_index = 0;
    q1.z_mean = 0.0;
    q1.z_std = 1.0;
    fx.model.terms.push_back(q1);

    for (std::size_t i = 0; i < objective.size(); ++i) {
        CalibItem item;
        item.signal_id = "sig" + std::to_string(i / 4);
        item.treatment_id = "t" + std::to_string(i % 4);
        item.score = subjective[i];
        item.features.dm = Matrix(1, kDmCount);
        item.features.cem = Matrix(1, kCemCount);
        item.features.dm(0, 0) = 100.0 - objective[i];  // bf maps back to objective
        item.features.config_hash = fx.model.config_hash;
        item.features.recompute_means();
        fx.data.items.push_back(std::move(item));
    }
    return fx;
}

}  // namespace

TEST_SUITE("evaluation") {

TEST_CASE("monotone cubic mapping recovers a cubic relation") {
    std::vector<double> objective, subjective;
    for (int i = 0; i < 60; ++i) {
        const double x = i / 59.0 * 80.0 + 10.0;
        objective.push_back(x);
        // Increasing cubic on [10, 90].
        subjective.push_back(5.0 + 0.9 * x + 0.002 * x * x + 0.00001 * x * x * x);
    }
    const CubicFit fit = fit_third_order_monotone(objective, subjective);
    double sse = 0.0;
    for (std::size_t i = 0; i < objective.size(); ++i) {
        const double err = fit.eval(objective[i]) - subjective[i];
        sse += err * err;
    }
    CHECK(std::sqrt(sse / objective.size()) < 1e-6);
    CHECK(fit.mapped_rmse < 1e-6);
}

TEST_CASE("the fitted mapping is monotone even on adversarial data") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> gauss(0.0, 30.0);
    std::vector<double> objective, subjective;
    for (int i = 0; i < 80; ++i) {
        objective.push_back(i / 79.0 * 100.0);
        subjective.push_back(50.0 + gauss(rng));  // no real relation
    }
    const CubicFit fit = fit_third_order_monotone(objective, subjective);
    double prev = fit.eval(0.0);
    for (int g = 1; g <= 500; ++g) {
        const double x = g / 500.0 * 100.0;
        const double v = fit.eval(x);
        CHECK(v >= prev - 1e-9);
        prev = v;
    }
}

TEST_CASE("a perfect model evaluates to a perfect report") {
    std::vector<double> objective;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> uni(20.0, 95.0);
    for (int i = 0; i < 24; ++i) objective.push_back(uni(rng));
    const Fixture fx = make_fixture(objective, objective);
    const EvaluationReport report = evaluate(fx.model, fx.data);
    CHECK(report.n_items == 24);
    CHECK(report.r == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(report.rmse == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(report.spearman == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(report.outlier_count == 0);
    CHECK(report.ci_hi >= report.ci_lo);
    CHECK(report.r <= report.ci_hi + 1e-9);
}

TEST_CASE("bootstrap intervals are deterministic in the seed") {
    std::vector<double> objective, subjective;
    std::mt19937_64 rng(9);
    std::normal_distribution<double> gauss(0.0, 6.0);
    std::uniform_real_distribution<double> uni(20.0, 95.0);
    for (int i = 0; i < 32; ++i) {
        objective.push_back(uni(rng));
        subjective.push_back(objective.back() + gauss(rng));
    }
    const Fixture fx = make_fixture(objective, subjective);
    EvaluationOptions opts;
    opts.bootstrap_seed = 1234;
    const EvaluationReport a = evaluate(fx.model, fx.data, opts);
    const EvaluationReport b = evaluate(fx.model, fx.data, opts);
    CHECK(a.ci_lo == b.ci_lo);
    CHECK(a.ci_hi == b.ci_hi);
    CHECK(a.ci_lo < a.r);
    CHECK(a.r < 1.0);

    opts.bootstrap_seed = 77;
    const EvaluationReport c = evaluate(fx.model, fx.data, opts);
    CHECK((c.ci_lo != a.ci_lo || c.ci_hi != a.ci_hi));

    const std::string text = format_report_text(a);
    CHECK(text.find("pearson R") != std::string::npos);
    CHECK(text == format_report_text(b));
    const std::string csv = format_report_csv(a);
    CHECK(csv.find("signal_id") != std::string::npos);
    CHECK(csv.find("residual") != std::string::npos);
}

TEST_CASE("outliers are counted against twice the mapped error") {
    std::vector<double> objective, subjective;
    for (int i = 0; i < 30; ++i) {
        objective.push_back(20.0 + i * 2.5);
        subjective.push_back(20.0 + i * 2.5);
    }
    subjective[5] += 40.0;  // one gross outlier
    const Fixture fx = make_fixture(objective, subjective);
    const EvaluationReport report = evaluate(fx.model, fx.data);
    CHECK(report.outlier_count >= 1);
    int flagged = 0;
    for (const auto& row : report.residuals) flagged += row.outlier ? 1 : 0;
    CHECK(flagged == report.outlier_count);
}

TEST_CASE("degenerate datasets are rejected") {
    const Fixture empty = make_fixture({}, {});
    CHECK_THROWS_AS(evaluate(empty.model, empty.data), domain_error);

    std::vector<double> same(12, 50.0);
    const Fixture flat = make_fixture(same, same);
    CHECK_THROWS_AS(evaluate(flat.model, flat.data), domain_error);
}

}  // TEST_SUITE
