#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "csmaq/calibration.hpp"
#include "csmaq/model.hpp"

namespace csmaq {

/// Least-squares cubic y ~ c0 + c1 x + c2 x^2 + c3 x^3 constrained to be
/// monotone non-decreasing over [min(x), max(x)] (derivative checked on a
/// dense grid; constrained refit on violation). Rank order is preserved.
struct CubicFit {
    std::array<double, 4> coef{};
    double mapped_rmse = 0.0;

    double eval(double x) const;
};
CubicFit fit_third_order_monotone(const std::vector<double>& objective,
                                  const std::vector<double>& subjective);

struct ResidualRow {
    std::string signal_id;
    std::string treatment_id;
    double subjective = 0.0;
    double objective = 0.0;
    double mapped = 0.0;
    double residual = 0.0;  ///< subjective - mapped
    bool outlier = false;
};

struct EvaluationReport {
    int n_items = 0;
    double r = 0.0;            ///< Pearson, objective vs subjective
    double rmse = 0.0;         ///< raw, before mapping
    double ci_lo = 0.0;        ///< bootstrap 95% interval for R
    double ci_hi = 0.0;
    double mapped_rmse = 0.0;  ///< after the monotone cubic
    double spearman = 0.0;
    int outlier_count = 0;     ///< |residual| > 2 * mapped RMSE
    CubicFit mapping;
    std::vector<ResidualRow> residuals;
    std::string config_hash;
    std::uint64_t bootstrap_seed = 0;
};

struct EvaluationOptions {
    std::uint64_t bootstrap_seed = 1;
    int bootstrap_resamples = 2000;
};

/// Scores every item and reports correlation, error, confidence interval,
/// monotone mapping, and the residual table. Throws domain_error on an
/// empty dataset or constant columns.
EvaluationReport evaluate(const CsmModel& model, const CalibDataset& data,
                          const EvaluationOptions& opts = {});

/// Report writers; format is "text" or "csv" (residual table).
std::string format_report_text(const EvaluationReport& report);
std::string format_report_csv(const EvaluationReport& report);

}  // namespace csmaq
