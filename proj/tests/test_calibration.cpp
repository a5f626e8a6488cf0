#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "csmaq/calibration.hpp"
#include "csmaq/front_end.hpp"
#include "csmaq/stats.hpp"
#include "doctest.h"

using namespace csmaq;

namespace {

double sigmoid_ref(double steepness, double midpoint, double c) {
    return 1.0 / (1.0 + std::exp(-steepness * (c - midpoint)));
}

/// In-memory calibration item with a single-frame feature series.
CalibItem make_item(const std::string& signal, const std::string& treatment, double score,
                    const std::vector<double>& dm_values,
                    const std::vector<double>& cem_values = {0.5, 0.1, 0.1}) {
    CalibItem item;
    item.signal_id = signal;
    item.treatment_id = treatment;
    item.score = score;
    item.features.dm = Matrix(1, kDmCount);
    item.features.cem = Matrix(1, kCemCount);
    for (int m = 0; m < kDmCount; ++m)
        item.features.dm(0, static_cast<std::size_t>(m)) = dm_values[static_cast<std::size_t>(m)];
    for (int c = 0; c < kCemCount; ++c)
        item.features.cem(0, static_cast<std::size_t>(c)) =
            cem_values[static_cast<std::size_t>(c)];
    item.features.config_hash = FrontEndConfig{}.hash();
    item.features.recompute_means();
    return item;
}

}  // namespace

TEST_SUITE("calibration") {

TEST_CASE("basis fit reproduces an exact linear mapping") {
    std::vector<std::pair<double, double>> samples;
    for (int i = 0; i < 40; ++i) {
        const double x = i / 39.0;
        samples.push_back({x, 100.0 - 40.0 * x});
    }
    const BasisFunction bf = fit_basis_function(samples, 0);
    double sse = 0.0;
    for (const auto& [x, y] : samples) {
        const double err = bf.eval(x) - y;
        sse += err * err;
    }
    CHECK(std::sqrt(sse / samples.size()) < 1e-9);
}

TEST_CASE("fitted basis functions are never increasing") {
    std::mt19937_64 rng(55);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 6.0);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<std::pair<double, double>> samples;
        const double drop = 20.0 + 60.0 * uni(rng);
        const double bend = 0.2 + 0.6 * uni(rng);
        for (int i = 0; i < 60; ++i) {
            const double x = uni(rng);
            const double y =
                95.0 - drop * std::max(0.0, x - bend) - 5.0 * x + gauss(rng);
            samples.push_back({x, y});
        }
        const BasisFunction bf = fit_basis_function(samples, rep % kDmCount);
        CHECK(bf.hinges.size() <= 3);
        double prev = bf.eval(bf.x_min);
        for (int g = 1; g <= 1000; ++g) {
            const double x = bf.x_min + (bf.x_max - bf.x_min) * g / 1000.0;
            const double v = bf.eval(x);
            CHECK(v <= prev + 1e-9);
            prev = v;
        }
    }
}

TEST_CASE("basis fit rejects tiny samples and degrades to a constant") {
    std::vector<std::pair<double, double>> nine(9, {0.5, 50.0});
    CHECK_THROWS_AS(fit_basis_function(nine, 0), domain_error);

    std::vector<std::pair<double, double>> flat_x;
    for (int i = 0; i < 12; ++i) flat_x.push_back({0.7, 40.0 + i});
    const BasisFunction bf = fit_basis_function(flat_x, 1);
    CHECK(bf.hinges.empty());
    CHECK(bf.eval(0.7) == doctest::Approx(40.0 + 5.5));
    CHECK(bf.eval(123.0) == doctest::Approx(40.0 + 5.5));
}

TEST_CASE("salience equals the direct per-signal correlation") {
    std::vector<BasisFunction> bfs;
    for (int m = 0; m < kDmCount; ++m) {
        BasisFunction bf;
        bf.dm_index = m;
        bf.intercept = 100.0;
        bf.hinges = {{0.0, -10.0 - m}};
        bf.x_min = 0.0;
        bf.x_max = 10.0;
        bfs.push_back(bf);
    }

    CalibDataset data;
    // Signal "a": quality tracks DM0 tightly; signal "b": anti-tracks DM1.
    const std::vector<double> dm_a = {0.1, 0.5, 0.9, 1.4};
    const std::vector<double> score_a = {90.0, 70.0, 55.0, 30.0};
    const std::vector<double> dm_b = {0.2, 0.4, 0.8, 1.0};
    const std::vector<double> score_b = {40.0, 55.0, 75.0, 95.0};
    for (std::size_t i = 0; i < 4; ++i) {
        data.items.push_back(make_item("a", "t" + std::to_string(i), score_a[i],
                                       {dm_a[i], 0.3, 0.3, 0.3, 0.3}));
        data.items.push_back(make_item("b", "t" + std::to_string(i), score_b[i],
                                       {0.3, dm_b[i], 0.3, 0.3, 0.3}));
    }

    const SalienceMatrix sal = compute_salience(data, bfs);
    REQUIRE(sal.signals.size() == 2);
    REQUIRE(sal.s.rows() == kDmCount);

    // Direct oracle for the defined cells.
    std::vector<double> bf0_a(4), bf1_b(4);
    for (std::size_t i = 0; i < 4; ++i) {
        bf0_a[i] = bfs[0].eval(dm_a[i]);
        bf1_b[i] = bfs[1].eval(dm_b[i]);
    }
    CHECK(sal.defined(0, 0) == 1.0);
    CHECK(sal.s(0, 0) == doctest::Approx(pearson_r(score_a, bf0_a)).epsilon(1e-12));
    CHECK(sal.s(0, 0) > 0.95);  // BF is decreasing, scores drop with the DM
    CHECK(sal.defined(1, 1) == 1.0);
    CHECK(sal.s(1, 1) == doctest::Approx(pearson_r(score_b, bf1_b)).epsilon(1e-12));
    CHECK(sal.s(1, 1) < -0.95);
    // DM2 is constant on both signals: undefined cells.
    CHECK(sal.defined(2, 0) == 0.0);
    CHECK(sal.defined(2, 1) == 0.0);
}

TEST_CASE("interaction metric is the absolute correlation, or undefined") {
    const std::vector<double> s_row = {0.9, 0.7, 0.4, 0.1, -0.2};
    const std::vector<double> w = {0.1, 0.3, 0.5, 0.7, 0.9};
    const auto c = interaction_metric(s_row, w);
    REQUIRE(c.has_value());
    CHECK(*c == doctest::Approx(std::fabs(pearson_r(s_row, w))).epsilon(1e-12));
    CHECK(*c > 0.99);

    CHECK(!interaction_metric({0.5, 0.5, 0.5, 0.5, 0.5}, w).has_value());
    CHECK(!interaction_metric({0.1, 0.2}, {0.3, 0.4}).has_value());
    CHECK_THROWS_AS(interaction_metric({0.1, 0.2, 0.3}, {0.1, 0.2}), domain_error);
}

TEST_CASE("weight optimization never loses to the raw effect column") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 0.5);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> cem(24), s_row(24);
        for (std::size_t j = 0; j < 24; ++j) {
            cem[j] = uni(rng);
            s_row[j] = gauss(rng);
        }
        const InteractionCandidate cand =
            optimize_dpw(cem, s_row, rep % kDmCount, "DPWx");
        CHECK(cand.c_after >= cand.c_before);
        CHECK(cand.c_after <= 1.0 + 1e-12);
    }
}

TEST_CASE("a planted psychometric relation is recovered on the grid") {
    std::vector<double> cem(24), s_row(24);
    for (std::size_t j = 0; j < 24; ++j) {
        cem[j] = (static_cast<double>(j) + 0.5) / 24.0;
        s_row[j] = sigmoid_ref(8.0, 0.5, cem[j]);
    }
    const InteractionCandidate cand = optimize_dpw(cem, s_row, 2, "DPW7");
    CHECK(cand.c_after > 0.999);
    CHECK(!cand.weight_inverted);
    REQUIRE(cand.dpws.size() == 1);
    // Midpoint within one step of the 41-point quantile grid of the sample.
    const double grid_step = quantile(cem, 21.0 / 40.0) - quantile(cem, 20.0 / 40.0);
    CHECK(std::fabs(cand.dpws[0].dpw.midpoint - 0.5) <= grid_step + 1e-9);
}

TEST_CASE("negative relations come back as inverted weights") {
    std::vector<double> cem(24), s_row(24);
    for (std::size_t j = 0; j < 24; ++j) {
        cem[j] = (static_cast<double>(j) + 0.5) / 24.0;
        s_row[j] = 1.0 - sigmoid_ref(8.0, 0.5, cem[j]);
    }
    const InteractionCandidate cand = optimize_dpw(cem, s_row, 2, "DPW7");
    CHECK(cand.c_after > 0.999);
    CHECK(cand.weight_inverted);
}

TEST_CASE("composite weight optimization recovers a planted product") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::vector<double> cem_a(24), cem_b(24), s_row(24);
    for (std::size_t j = 0; j < 24; ++j) {
        cem_a[j] = uni(rng);
        cem_b[j] = uni(rng);
        s_row[j] = sigmoid_ref(8.0, 0.4, cem_a[j]) * sigmoid_ref(16.0, 0.6, cem_b[j]);
    }
    const InteractionCandidate cand =
        optimize_composite_dpw(cem_a, cem_b, Cem::Epn, Cem::Pdev, s_row, 3, "DPW16");
    CHECK(cand.c_after >= cand.c_before);
    CHECK(cand.c_after > 0.98);
    REQUIRE(cand.dpws.size() == 2);
    CHECK(cand.source.label() == std::string(cem_name(1)) + "/" + cem_name(2));
}

TEST_CASE("stepwise selection recovers planted predictors and coefficients") {
    const std::size_t n = 100, p = 6;
    int exact = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        std::mt19937_64 rng(seed * 7919 + 13);
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::normal_distribution<double> noise(0.0, 2.0);
        Matrix x(n, p);
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < p; ++j) x(i, j) = gauss(rng);
            y[i] = 60.0 + 8.0 * x(i, 0) - 6.0 * x(i, 1) + noise(rng);
        }
        const StepwiseResult res = stepwise_select(x, y, 0.01);
        std::vector<int> sel = res.selected;
        std::sort(sel.begin(), sel.end());
        if (sel == std::vector<int>{0, 1}) {
            ++exact;
            // Back out raw-scale coefficients through the frozen normalizers.
            for (std::size_t k = 0; k < res.selected.size(); ++k) {
                const double raw =
                    res.fit.beta[k + 1] / res.normalizers[k].stddev;
                const double planted = res.selected[k] == 0 ? 8.0 : -6.0;
                CHECK(std::fabs(raw - planted) < 0.1 * std::fabs(planted));
            }
        }
    }
    CHECK(exact >= 9);
}

TEST_CASE("near-duplicate columns cannot enter together") {
    const std::size_t n = 80;
    std::mt19937_64 rng(3);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix x(n, 3);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double base = gauss(rng);
        x(i, 0) = base;
        x(i, 1) = base + 1e-4 * gauss(rng);  // correlation ~ 1 with column 0
        x(i, 2) = gauss(rng);
        y[i] = 5.0 * base + 2.0 * x(i, 2) + 0.5 * gauss(rng);
    }
    const StepwiseResult res = stepwise_select(x, y, 0.05);
    const bool has0 = std::count(res.selected.begin(), res.selected.end(), 0) > 0;
    const bool has1 = std::count(res.selected.begin(), res.selected.end(), 1) > 0;
    CHECK(!(has0 && has1));
    CHECK(std::count(res.selected.begin(), res.selected.end(), 2) == 1);
}

TEST_CASE("the parameter budget caps what forward selection may add") {
    const std::size_t n = 60;
    std::mt19937_64 rng(4);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix x(n, 3);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < 3; ++j) x(i, j) = gauss(rng);
        y[i] = 4.0 * x(i, 0) + 4.0 * x(i, 1) + 4.0 * x(i, 2) + 0.1 * gauss(rng);
    }
    const StepwiseResult res = stepwise_select(x, y, 0.05, {3, 3, 3}, 6);
    CHECK(res.selected.size() <= 2);

    CHECK_THROWS_AS(stepwise_select(x, y, 0.05, {3, 3}, 6), domain_error);
}

TEST_CASE("calibration refuses an interaction split with too few signals") {
    CalibDataset bf_split;
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int s = 0; s < 2; ++s)
        for (int t = 0; t < 6; ++t) {
            std::vector<double> dm(kDmCount);
            for (auto& v : dm) v = uni(rng);
            bf_split.items.push_back(make_item("sig" + std::to_string(s),
                                               "t" + std::to_string(t),
                                               30.0 + 60.0 * uni(rng), dm));
        }
    CHECK_THROWS_WITH_AS(calibrate(bf_split, bf_split, FrontEndConfig{}),
                         "insufficient signals for interaction analysis (need >= 3)",
                         domain_error);
}

}  // TEST_SUITE
