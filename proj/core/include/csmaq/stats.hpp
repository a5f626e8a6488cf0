#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "csmaq/common.hpp"

namespace csmaq {

double mean(std::span<const double> x);
/// Unbiased sample variance (n-1 denominator); returns 0 for n < 2.
double sample_variance(std::span<const double> x);
double sample_stddev(std::span<const double> x);

/// Pearson correlation computed with a centered two-pass sum.
/// Returns 0 when either input has zero variance; result is in [-1, 1].
double pearson_r(std::span<const double> x, std::span<const double> y);

/// Spearman rank correlation with average ranks for ties.
double spearman_rho(std::span<const double> x, std::span<const double> y);

/// Linear-interpolation quantile of a copy-sorted sample, q in [0, 1].
double quantile(std::vector<double> x, double q);

/// Two-sided p-value of a t statistic with the given degrees of freedom.
double t_test_p_value(double t, int dof);

/// z-scoring parameters frozen at fit time and reapplied verbatim later.
struct ZScore {
    double mean = 0.0;
    double stddev = 1.0;

    double apply(double x) const { return (x - mean) / stddev; }
    /// Degenerate (constant) samples freeze stddev = 1 so apply() stays finite.
    static ZScore fit(std::span<const double> x);
};

/// Ordinary least squares with an implicit leading intercept column.
struct OlsFit {
    std::vector<double> beta;      ///< intercept first, then one per column of X
    std::vector<double> std_err;   ///< same layout as beta
    std::vector<double> t_stat;    ///< same layout as beta
    std::vector<double> p_value;   ///< two-sided, same layout as beta
    double r2 = 0.0;
    double adj_r2 = 0.0;
    double rmse = 0.0;             ///< sqrt(SSE / n)
    int dof = 0;                   ///< n - (columns + 1)

    double predict_row(std::span<const double> x) const;
};

/// Fits y ~ 1 + X. Throws domain_error when rows <= columns + 1 or the
/// normal equations are numerically singular.
OlsFit ols(const Matrix& x, std::span<const double> y);

}  // namespace csmaq
