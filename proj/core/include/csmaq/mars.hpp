#pragma once

#include <vector>

#include "csmaq/common.hpp"

namespace csmaq {

/// One hinge basis term over input variable `var`:
/// dir +1 -> max(0, x - knot), dir -1 -> max(0, knot - x).
struct MarsTerm {
    int var = 0;
    double knot = 0.0;
    int dir = +1;
};

/// Additive hinge-regression model (multivariate adaptive regression
/// splines without interaction terms).
struct MarsModel {
    double intercept = 0.0;
    std::vector<MarsTerm> terms;
    std::vector<double> coef;  ///< one per term
    double gcv = 0.0;
    double rmse = 0.0;

    double predict_row(const double* x) const;
    std::vector<double> predict(const Matrix& x) const;
};

struct MarsOptions {
    int max_terms = 16;        ///< forward-pass budget (non-intercept terms)
    double gcv_penalty = 3.0;  ///< effective parameters added per term
    int max_knots = 64;        ///< per-variable candidate knots (quantile grid)
    bool both_directions = true;  ///< false restricts to dir +1 hinges
};

/// Greedy forward hinge selection minimizing squared error, then backward
/// deletion keeping the subset with the lowest generalized cross-validation
/// score. Deterministic: candidates are scanned in (variable, knot,
/// direction) order and ties keep the earliest candidate.
MarsModel mars_fit(const Matrix& x, const std::vector<double>& y, const MarsOptions& opts = {});

}  // namespace csmaq
