#include "csmaq/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "csmaq/model.hpp"

namespace csmaq {

namespace {

Eigen::MatrixXd cubic_design(const std::vector<double>& x) {
    Eigen::MatrixXd d(x.size(), 4);
    for (std::size_t i = 0; i < x.size(); ++i) {
        d(static_cast<Eigen::Index>(i), 0) = 1.0;
        d(static_cast<Eigen::Index>(i), 1) = x[i];
        d(static_cast<Eigen::Index>(i), 2) = x[i] * x[i];
        d(static_cast<Eigen::Index>(i), 3) = x[i] * x[i] * x[i];
    }
    return d;
}

double sse_for(const CubicFit& fit, const std::vector<double>& x,
               const std::vector<double>& y) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - fit.eval(x[i]);
        acc += r * r;
    }
    return acc;
}

/// Smallest derivative of the cubic over a dense grid spanning the data.
double min_derivative(const std::array<double, 4>& c, double lo, double hi,
                      double* where = nullptr) {
    double best = 1e300;
    for (int g = 0; g <= 200; ++g) {
        const double x = lo + (hi - lo) * g / 200.0;
        const double d = c[1] + 2.0 * c[2] * x + 3.0 * c[3] * x * x;
        if (d < best) {
            best = d;
            if (where) *where = x;
        }
    }
    return best;
}

}  // namespace

double CubicFit::eval(double x) const {
    return coef[0] + x * (coef[1] + x * (coef[2] + x * coef[3]));
}

CubicFit fit_third_order_monotone(const std::vector<double>& objective,
                                  const std::vector<double>& subjective) {
    if (objective.size() != subjective.size() || objective.size() < 4)
        throw domain_error("fit_third_order_monotone: need >= 4 paired points");
    const double lo = *std::min_element(objective.begin(), objective.end());
    const double hi = *std::max_element(objective.begin(), objective.end());
    const std::size_t n = objective.size();

    const Eigen::MatrixXd x = cubic_design(objective);
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(
        subjective.data(), static_cast<Eigen::Index>(n));

    CubicFit best;
    bool have_best = false;
    auto consider = [&](const std::array<double, 4>& c) {
        if (min_derivative(c, lo, hi) < -1e-9) return;
        CubicFit f;
        f.coef = c;
        f.mapped_rmse = std::sqrt(sse_for(f, objective, subjective) / static_cast<double>(n));
        if (!have_best || f.mapped_rmse < best.mapped_rmse) {
            best = f;
            have_best = true;
        }
    };

    // Unconstrained least squares, kept only when already monotone.
    Eigen::VectorXd beta = x.colPivHouseholderQr().solve(y);
    consider({beta(0), beta(1), beta(2), beta(3)});

    // Active-set refinement: pin the derivative to zero where it dips below.
    if (!have_best || hi > lo) {
        std::vector<double> active;
        std::array<double, 4> c{beta(0), beta(1), beta(2), beta(3)};
        for (int iter = 0; iter < 24; ++iter) {
            double where = lo;
            if (min_derivative(c, lo, hi, &where) >= -1e-9) break;
            active.push_back(where);
            const auto m = static_cast<Eigen::Index>(active.size());
            Eigen::MatrixXd kkt(4 + m, 4 + m);
            kkt.setZero();
            kkt.topLeftCorner(4, 4) = x.transpose() * x;
            Eigen::MatrixXd a(m, 4);
            for (Eigen::Index j = 0; j < m; ++j) {
                const double g = active[static_cast<std::size_t>(j)];
                a(j, 0) = 0.0;
                a(j, 1) = 1.0;
                a(j, 2) = 2.0 * g;
                a(j, 3) = 3.0 * g * g;
            }
            kkt.topRightCorner(4, m) = a.transpose();
            kkt.bottomLeftCorner(m, 4) = a;
            Eigen::VectorXd rhs(4 + m);
            rhs.setZero();
            rhs.head(4) = x.transpose() * y;
            const Eigen::VectorXd sol = kkt.fullPivLu().solve(rhs);
            c = {sol(0), sol(1), sol(2), sol(3)};
        }
        consider(c);
    }

    // Guaranteed-feasible fallbacks: monotone affine and the identity map.
    {
        Eigen::MatrixXd xa(n, 2);
        xa.col(0).setOnes();
        xa.col(1) = x.col(1);
        Eigen::VectorXd ba = (xa.transpose() * xa).fullPivLu().solve(xa.transpose() * y);
        if (ba(1) >= 0.0) consider({ba(0), ba(1), 0.0, 0.0});
        double my = 0.0;
        for (double v : subjective) my += v;
        consider({my / static_cast<double>(n), 0.0, 0.0, 0.0});
        consider({0.0, 1.0, 0.0, 0.0});
    }
    return best;
}

EvaluationReport evaluate(const CsmModel& model, const CalibDataset& data,
                          const EvaluationOptions& opts) {
    if (data.items.size() < 4)
        throw domain_error("evaluate: need at least 4 scored items");
    for (const auto& item : data.items)
        if (item.features.config_hash != model.config_hash)
            throw domain_error("evaluate: features were extracted with a different "
                               "front-end config");

    EvaluationReport report;
    report.n_items = data.items.size();
    report.config_hash = model.config_hash;
    report.bootstrap_seed = opts.bootstrap_seed;

    std::vector<double> objective, subjective;
    for (const auto& item : data.items) {
        objective.push_back(score(item.features, model).score);
        subjective.push_back(item.score);
    }

    report.r = pearson_r(objective, subjective);
    report.spearman = spearman_rho(objective, subjective);
    double sse = 0.0;
    for (std::size_t i = 0; i < objective.size(); ++i) {
        const double d = objective[i] - subjective[i];
        sse += d * d;
    }
    report.rmse = std::sqrt(sse / static_cast<double>(objective.size()));

    report.mapping = fit_third_order_monotone(objective, subjective);
    report.mapped_rmse = report.mapping.mapped_rmse;

    for (std::size_t i = 0; i < data.items.size(); ++i) {
        ResidualRow row;
        row.signal_id = data.items[i].signal_id;
        row.treatment_id = data.items[i].treatment_id;
        row.subjective = subjective[i];
        row.objective = objective[i];
        row.mapped = report.mapping.eval(objective[i]);
        row.residual = subjective[i] - row.mapped;
        report.residuals.push_back(std::move(row));
    }
    const double outlier_gate = 2.0 * report.mapped_rmse;
    for (const auto& row : report.residuals)
        if (std::fabs(row.residual) > outlier_gate) ++report.outlier_count;

    // Percentile bootstrap over items for the correlation coefficient.
    std::vector<double> boots;
    boots.reserve(opts.bootstrap_resamples);
    const std::size_t n = objective.size();
    std::vector<double> ro(n), rs(n);
    for (std::size_t b = 0; b < opts.bootstrap_resamples; ++b) {
        std::mt19937_64 rng(split_seed(opts.bootstrap_seed, 901, b));
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t k = pick(rng);
            ro[i] = objective[k];
            rs[i] = subjective[k];
        }
        boots.push_back(pearson_r(ro, rs));
    }
    std::sort(boots.begin(), boots.end());
    report.ci_lo = quantile(boots, 0.025);
    report.ci_hi = quantile(boots, 0.975);
    return report;
}

std::string format_report_text(const EvaluationReport& r) {
    std::ostringstream out;
    out << "items:         " << r.n_items << "\n";
    out << "config:        " << r.config_hash << "\n";
    out << "pearson R:     " << format_double(r.r) << "\n";
    out << "  95% CI:      [" << format_double(r.ci_lo) << ", " << format_double(r.ci_hi)
        << "]  (bootstrap seed " << r.bootstrap_seed << ")\n";
    out << "spearman rho:  " << format_double(r.spearman) << "\n";
    out << "rmse:          " << format_double(r.rmse) << "\n";
    out << "mapped rmse:   " << format_double(r.mapped_rmse) << "\n";
    out << "outliers:      " << r.outlier_count << " (|residual| > 2x mapped rmse)\n";
    out << "mapping:       " << format_double(r.mapping.coef[0]) << " + "
        << format_double(r.mapping.coef[1]) << "*x + " << format_double(r.mapping.coef[2])
        << "*x^2 + " << format_double(r.mapping.coef[3]) << "*x^3\n";
    return out.str();
}

std::string format_report_csv(const EvaluationReport& r) {
    std::ostringstream out;
    out << "signal_id,treatment_id,subjective,objective,mapped,residual\n";
    for (const auto& row : r.residuals)
        out << row.signal_id << "," << row.treatment_id << ","
            << format_double(row.subjective) << "," << format_double(row.objective) << ","
            << format_double(row.mapped) << "," << format_double(row.residual) << "\n";
    return out.str();
}

}  // namespace csmaq
