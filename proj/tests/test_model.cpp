#include <cmath>
#include <string>
#include <vector>

#include "csmaq/features.hpp"
#include "csmaq/model.hpp"
#include "doctest.h"
#include "json.hpp"
#include "support.hpp"

using namespace csmaq;

namespace {

/// Model with the published seven-predictor coefficient table and one
/// basis function per metric; sigmoid choices are arbitrary but fixed.
CsmModel table_model() {
    CsmModel model;
    model.config_hash = "fixture";
    for (int m = 0; m < kDmCount; ++m) {
        BasisFunction bf;
        bf.dm_index = m;
        bf.intercept = 10.0 + m;
        bf.hinges = {{0.2, -3.0}, {0.5, -2.0}};
        bf.x_min = 0.0;
        bf.x_max = 1.0;
        model.basis_functions.push_back(bf);
    }

    QualityTerm q0;
    q0.id = "Q0";
    q0.coefficient = 58.3;
    model.terms.push_back(q0);

    const std::vector<double> coefs = {2.69, 2.61, 1.97, 1.54, 1.64, -1.89, 8.49};
    for (std::size_t k = 0; k < coefs.size(); ++k) {
        QualityTerm q;
        q.id = "Q" + std::to_string(k + 1);
        q.coefficient = coefs[k];
        q.bf_index = static_cast<int>(k % kDmCount);
        if (k % 2 == 0) {
            CemDpw cd;
            cd.cem = static_cast<Cem>(k % kCemCount);
            cd.dpw = {2.0 + static_cast<double>(k), 0.4, k == 2};
            q.dpws = {cd};
        }
        model.terms.push_back(q);
    }
    return model;
}

/// One-frame feature fixture with fixed DM/CEM values.
FeatureSeries one_frame_features() {
    FeatureSeries f;
    f.dm = Matrix(1, kDmCount);
    f.cem = Matrix(1, kCemCount);
    for (int m = 0; m < kDmCount; ++m) f.dm(0, static_cast<std::size_t>(m)) = 0.1 * (m + 1);
    f.cem(0, 0) = 0.7;
    f.cem(0, 1) = 0.3;
    f.cem(0, 2) = 0.5;
    f.config_hash = "fixture";
    f.recompute_means();
    return f;
}

/// Raw (pre-z-score) predictor value of one term on the one-frame fixture.
double raw_predictor(const CsmModel& model, const QualityTerm& term, const FeatureSeries& f) {
    const double w = term.weight(f.cem(0, 0), f.cem(0, 1), f.cem(0, 2));
    const auto& bf = model.basis_functions[static_cast<std::size_t>(*term.bf_index)];
    return w * bf.eval(f.dm(0, static_cast<std::size_t>(bf.dm_index)));
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("published coefficient table reproduces the intercept exactly") {
    CsmModel model = table_model();
    const FeatureSeries f = one_frame_features();
    // Freeze normalizers so every z-scored predictor is exactly zero.
    for (std::size_t k = 1; k < model.terms.size(); ++k) {
        model.terms[k].z_mean = raw_predictor(model, model.terms[k], f);
        model.terms[k].z_std = 1.0;
    }
    const ScoreResult base = score(f, model);
    CHECK(base.score == 58.3);

    // +1 z-std on the last predictor adds exactly its coefficient:
    // z = (raw - 0) / raw == 1.0 exactly in IEEE arithmetic.
    model.terms.back().z_mean = 0.0;
    model.terms.back().z_std = raw_predictor(model, model.terms.back(), f);
    const ScoreResult bumped = score(f, model);
    CHECK(bumped.score == 58.3 + 8.49);
    CHECK(bumped.score - base.score == doctest::Approx(8.49).epsilon(1e-12));
}

TEST_CASE("basis function evaluates hinges and clamps extrapolation") {
    BasisFunction bf;
    bf.intercept = 10.0;
    bf.hinges = {{0.2, -3.0}, {0.5, -2.0}};
    bf.x_min = 0.0;
    bf.x_max = 1.0;
    CHECK(bf.eval(0.1) == doctest::Approx(10.0));
    CHECK(bf.eval(0.4) == doctest::Approx(10.0 - 3.0 * 0.2));
    CHECK(bf.eval(0.8) == doctest::Approx(10.0 - 3.0 * 0.6 - 2.0 * 0.3));
    // Outside the training range the boundary value holds.
    CHECK(bf.eval(-5.0) == doctest::Approx(bf.eval(0.0)));
    CHECK(bf.eval(7.0) == doctest::Approx(bf.eval(1.0)));
}

TEST_CASE("detection weight is a bounded logistic with inversion") {
    Dpw w{4.0, 0.5, false};
    CHECK(w.eval(0.5) == doctest::Approx(0.5));
    CHECK(w.eval(100.0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(w.eval(-100.0) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(w.eval(0.7) > w.eval(0.3));

    Dpw inv{4.0, 0.5, true};
    CHECK(inv.eval(0.7) == doctest::Approx(1.0 - w.eval(0.7)).epsilon(1e-12));

    Dpw flat{0.0, 0.5, false};
    CHECK(flat.eval(-3.0) == doctest::Approx(0.5));
    CHECK(flat.eval(9.0) == doctest::Approx(0.5));
}

TEST_CASE("term weight multiplies sigmoids and applies composite inversion") {
    QualityTerm q;
    q.bf_index = 0;
    CemDpw a, b;
    a.cem = Cem::Epn;
    a.dpw = {3.0, 0.2, false};
    b.cem = Cem::Pdev;
    b.dpw = {5.0, 0.6, false};
    q.dpws = {a, b};
    const double epn = 0.4, pdev = 0.8;
    const double expect = a.dpw.eval(epn) * b.dpw.eval(pdev);
    CHECK(q.weight(0.0, epn, pdev) == doctest::Approx(expect).epsilon(1e-12));
    q.weight_inverted = true;
    CHECK(q.weight(0.0, epn, pdev) == doctest::Approx(1.0 - expect).epsilon(1e-12));

    QualityTerm plain;
    plain.bf_index = 0;
    CHECK(plain.weight(0.1, 0.2, 0.3) == 1.0);
}

TEST_CASE("parameter count itemization matches hand arithmetic") {
    // 5 basis functions x 3 hinges: 5 * (1 + 2*3) = 35
    // 8 coefficients (intercept + 7 terms)            =  8
    // 7 predictor normalizers (mean + std)            = 14
    // 6 distinct sigmoids x 2                         = 12  -> total 69
    CsmModel model;
    model.config_hash = "h";
    for (int m = 0; m < kDmCount; ++m) {
        BasisFunction bf;
        bf.dm_index = m;
        bf.hinges = {{0.1, -1.0}, {0.2, -1.0}, {0.3, -1.0}};
        model.basis_functions.push_back(bf);
    }
    QualityTerm q0;
    q0.coefficient = 50.0;
    model.terms.push_back(q0);
    auto sigmoid_term = [&](int dm, Cem cem, double steep, double mid, bool inv) {
        QualityTerm q;
        q.coefficient = 1.0;
        q.bf_index = dm;
        CemDpw cd;
        cd.cem = cem;
        cd.dpw = {steep, mid, inv};
        q.dpws = {cd};
        model.terms.push_back(q);
    };
    sigmoid_term(0, Cem::ProbSpeech, 2.0, 0.1, false);
    sigmoid_term(1, Cem::ProbSpeech, 4.0, 0.2, false);
    sigmoid_term(2, Cem::Epn, 8.0, 0.3, true);
    sigmoid_term(3, Cem::Pdev, 16.0, 0.4, false);
    sigmoid_term(4, Cem::ProbSpeech, 32.0, 0.5, true);
    {
        // Composite: one new sigmoid plus an exact reuse of the first.
        QualityTerm q;
        q.coefficient = 1.0;
        q.bf_index = 0;
        CemDpw fresh, reused;
        fresh.cem = Cem::Epn;
        fresh.dpw = {64.0, 0.6, false};
        reused.cem = Cem::ProbSpeech;
        reused.dpw = {2.0, 0.1, false};
        q.dpws = {fresh, reused};
        model.terms.push_back(q);
    }
    {
        QualityTerm plain;  // unweighted predictor
        plain.coefficient = 1.0;
        plain.bf_index = 1;
        model.terms.push_back(plain);
    }

    const ParameterCount count = count_parameters(model);
    CHECK(count.basis_function_params == 35);
    CHECK(count.coefficients == 8);
    CHECK(count.normalizers == 14);
    CHECK(count.dpw_params == 12);
    CHECK(count.total == 69);
    CHECK(count.itemized.find("total: 69") != std::string::npos);
}

TEST_CASE("serialization round-trips byte-identically and preserves scores") {
    const CsmModel model = table_model();
    const FeatureSeries f = one_frame_features();
    const std::string text = serialize_model(model);
    const CsmModel back = deserialize_model(text);
    CHECK(serialize_model(back) == text);
    CHECK(score(f, back).score == score(f, model).score);

    testsupport::TempDir tmp("model_io");
    save_model(model, tmp.file("m.json"));
    const CsmModel loaded = load_model(tmp.file("m.json"));
    CHECK(serialize_model(loaded) == text);
}

TEST_CASE("strict parser rejects unknown and missing keys") {
    const std::string text = serialize_model(table_model());
    nlohmann::json j = nlohmann::json::parse(text);
    j["bogus"] = 1;
    CHECK_THROWS_AS(deserialize_model(j.dump()), io_error);

    nlohmann::json j2 = nlohmann::json::parse(text);
    j2.erase("version");
    CHECK_THROWS_AS(deserialize_model(j2.dump()), io_error);

    CHECK_THROWS_AS(deserialize_model("not json"), io_error);
    CHECK_THROWS_AS(load_model("/nonexistent/path/model.json"), io_error);
}

TEST_CASE("scoring rejects a mismatched front-end hash") {
    const CsmModel model = table_model();
    FeatureSeries f = one_frame_features();
    f.config_hash = "other";
    CHECK_THROWS_AS(score(f, model), domain_error);
}

}  // TEST_SUITE
