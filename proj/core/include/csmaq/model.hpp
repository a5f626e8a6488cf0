#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "csmaq/common.hpp"
#include "csmaq/features.hpp"
#include "csmaq/front_end.hpp"

namespace csmaq {

/// One hinge of a piecewise-linear spline: slope * max(0, x - knot).
struct Hinge {
    double knot = 0.0;
    double slope = 0.0;
};

/// Monotone non-increasing piecewise-linear map from one distortion metric
/// to the quality scale. Outside [x_min, x_max] the boundary value is held
/// constant so extrapolation can never overshoot the training range.
struct BasisFunction {
    int dm_index = 0;
    double intercept = 0.0;
    std::vector<Hinge> hinges;  ///< at most 3, knots ascending
    double x_min = 0.0;
    double x_max = 0.0;

    double eval(double x) const;
};

/// Detection-probability weight: logistic psychometric function of a
/// cognitive-effect value, bounded in (0, 1). steepness == 0 yields the
/// uninformative constant 0.5. When inverted, returns 1 - w.
struct Dpw {
    double steepness = 0.0;
    double midpoint = 0.0;
    bool inverted = false;

    double eval(double c) const;
};

/// Which cognitive-effect column a Dpw reads.
enum class Cem : int { ProbSpeech = 0, Epn = 1, Pdev = 2 };

struct CemDpw {
    Cem cem = Cem::ProbSpeech;
    Dpw dpw;
};

/// One additive term of the quality metric. The per-frame predictor is
/// weight(n) * bf(dm(n)), z-scored with frozen normalizers, then scaled by
/// the regression coefficient. A term with no basis function is the
/// intercept and contributes its coefficient each frame.
struct QualityTerm {
    std::string id;             ///< "Q0", "Q1", ...
    double coefficient = 0.0;
    double z_mean = 0.0;
    double z_std = 1.0;
    std::optional<int> bf_index;    ///< index into CsmModel::basis_functions
    std::vector<CemDpw> dpws;       ///< empty = unweighted; 2 = composite product
    bool weight_inverted = false;   ///< composite-level inversion: weight = 1 - product

    double weight(double prob_speech, double epn, double pdev) const;
};

struct Provenance {
    std::string tool;
    std::string created;
    std::uint64_t seed = 0;
    std::string note;
};

/// Complete calibrated model: one basis function per distortion metric,
/// the selected quality terms, and the front-end configuration it was
/// calibrated against (hash-checked at scoring time).
struct CsmModel {
    std::string version = "1";
    std::string config_hash;
    FrontEndConfig front_end;
    std::vector<BasisFunction> basis_functions;  ///< size kDmCount
    std::vector<QualityTerm> terms;              ///< terms[0] is the intercept
    Provenance provenance;
};

/// Per-frame contribution of every term: T x terms.size() matrix.
/// Throws domain_error when the feature config hash does not match.
Matrix quality_terms(const FeatureSeries& features, const CsmModel& model);

struct ScoreResult {
    std::vector<double> qm_series;      ///< per-frame sum over terms
    double score = 0.0;                 ///< time mean clamped to [0, 100]
    double score_unclamped = 0.0;       ///< diagnostic, before clamping
    std::vector<double> term_means;     ///< time mean per term
};

/// Eq-style weighted sum per frame, averaged over time, clamped to the
/// 0-100 quality scale. Throws domain_error on an empty series.
ScoreResult score(const FeatureSeries& features, const CsmModel& model);

struct ParameterCount {
    int basis_function_params = 0;  ///< intercept + 2 per hinge, all stored BFs
    int dpw_params = 0;             ///< 2 per sigmoid used by the terms
    int coefficients = 0;           ///< one per term, intercept included
    int normalizers = 0;            ///< 2 per non-intercept term
    int total = 0;
    std::string itemized;           ///< human-readable breakdown
};

ParameterCount count_parameters(const CsmModel& model);

/// Strict JSON (de)serialization; unknown or missing keys are io_errors.
std::string serialize_model(const CsmModel& model);
CsmModel deserialize_model(const std::string& json_text);
void save_model(const CsmModel& model, const std::string& path);
CsmModel load_model(const std::string& path);

}  // namespace csmaq
