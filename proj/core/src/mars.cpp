#include "csmaq/mars.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <Eigen/Dense>

namespace csmaq {

namespace {

double hinge(double x, double knot, int dir) {
    return dir > 0 ? std::max(0.0, x - knot) : std::max(0.0, knot - x);
}

/// Quantile-spaced candidate knots over the distinct values of one column;
/// always contains the minimum so an exact linear term stays reachable.
std::vector<double> candidate_knots(std::vector<double> values, int max_knots) {
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    if (static_cast<int>(values.size()) <= max_knots) return values;
    std::vector<double> out;
    out.reserve(max_knots);
    const double step = static_cast<double>(values.size() - 1) / (max_knots - 1);
    double last = std::numeric_limits<double>::quiet_NaN();
    for (int i = 0; i < max_knots; ++i) {
        const auto idx = static_cast<std::size_t>(std::lround(i * step));
        const double v = values[std::min(idx, values.size() - 1)];
        if (v != last) out.push_back(v);
        last = v;
    }
    return out;
}

struct LsResult {
    Eigen::VectorXd beta;
    double sse = std::numeric_limits<double>::infinity();
};

LsResult least_squares(const Eigen::MatrixXd& design, const Eigen::VectorXd& y) {
    LsResult r;
    r.beta = design.colPivHouseholderQr().solve(y);
    r.sse = (y - design * r.beta).squaredNorm();
    return r;
}

double gcv_score(double sse, std::size_t n, int terms, double penalty) {
    const double effective = 1.0 + terms + penalty * terms;
    if (effective >= static_cast<double>(n)) return std::numeric_limits<double>::infinity();
    const double denom = 1.0 - effective / static_cast<double>(n);
    return (sse / static_cast<double>(n)) / (denom * denom);
}

Eigen::MatrixXd build_design(const Matrix& x, const std::vector<MarsTerm>& terms) {
    const auto n = static_cast<Eigen::Index>(x.rows());
    Eigen::MatrixXd design(n, static_cast<Eigen::Index>(terms.size() + 1));
    design.col(0).setOnes();
    for (std::size_t t = 0; t < terms.size(); ++t)
        for (Eigen::Index i = 0; i < n; ++i)
            design(i, static_cast<Eigen::Index>(t + 1)) =
                hinge(x(static_cast<std::size_t>(i), static_cast<std::size_t>(terms[t].var)),
                      terms[t].knot, terms[t].dir);
    return design;
}

}  // namespace

double MarsModel::predict_row(const double* x) const {
    double yhat = intercept;
    for (std::size_t t = 0; t < terms.size(); ++t)
        yhat += coef[t] * hinge(x[terms[t].var], terms[t].knot, terms[t].dir);
    return yhat;
}

std::vector<double> MarsModel::predict(const Matrix& x) const {
    std::vector<double> out(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) out[i] = predict_row(x.row_ptr(i));
    return out;
}

MarsModel mars_fit(const Matrix& x, const std::vector<double>& y, const MarsOptions& opts) {
    const std::size_t n = x.rows();
    if (n != y.size() || n < 2)
        throw domain_error("mars_fit: need at least 2 rows matching y");
    const std::size_t p = x.cols();
    Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(n));

    std::vector<std::vector<double>> knots(p);
    for (std::size_t j = 0; j < p; ++j) knots[j] = candidate_knots(x.column(j), opts.max_knots);

    const double ybar = yv.mean();
    const double sst = (yv.array() - ybar).matrix().squaredNorm();
    double current_sse = sst;

    std::vector<MarsTerm> terms;
    std::set<std::tuple<int, double, int>> used;
    Eigen::MatrixXd design(static_cast<Eigen::Index>(n), 1);
    design.col(0).setOnes();

    const std::vector<int> dirs =
        opts.both_directions ? std::vector<int>{+1, -1} : std::vector<int>{+1};

    // Forward pass: add the single hinge that lowers SSE the most.
    while (static_cast<int>(terms.size()) < opts.max_terms &&
           design.cols() + 1 < static_cast<Eigen::Index>(n)) {
        double best_sse = current_sse;
        MarsTerm best_term;
        Eigen::VectorXd best_col;
        bool found = false;

        Eigen::MatrixXd trial(static_cast<Eigen::Index>(n), design.cols() + 1);
        trial.leftCols(design.cols()) = design;
        for (std::size_t j = 0; j < p; ++j) {
            for (double knot : knots[j]) {
                for (int dir : dirs) {
                    if (used.count({static_cast<int>(j), knot, dir})) continue;
                    Eigen::VectorXd col(static_cast<Eigen::Index>(n));
                    double lo = std::numeric_limits<double>::infinity();
                    double hi = -lo;
                    for (std::size_t i = 0; i < n; ++i) {
                        col[static_cast<Eigen::Index>(i)] = hinge(x(i, j), knot, dir);
                        lo = std::min(lo, col[static_cast<Eigen::Index>(i)]);
                        hi = std::max(hi, col[static_cast<Eigen::Index>(i)]);
                    }
                    if (hi - lo <= 0.0) continue;  // constant column, no information
                    trial.col(design.cols()) = col;
                    const double sse = least_squares(trial, yv).sse;
                    if (sse < best_sse - 1e-12 * std::max(sst, 1.0)) {
                        best_sse = sse;
                        best_term = {static_cast<int>(j), knot, dir};
                        best_col = col;
                        found = true;
                    }
                }
            }
        }
        if (!found) break;
        terms.push_back(best_term);
        used.insert({best_term.var, best_term.knot, best_term.dir});
        Eigen::MatrixXd grown(static_cast<Eigen::Index>(n), design.cols() + 1);
        grown.leftCols(design.cols()) = design;
        grown.col(design.cols()) = best_col;
        design.swap(grown);
        current_sse = best_sse;
    }

    // Backward pass: greedy deletion, keep the lowest-GCV subset visited.
    std::vector<MarsTerm> working = terms;
    std::vector<MarsTerm> best_terms = terms;
    double best_gcv = gcv_score(current_sse, n, static_cast<int>(terms.size()), opts.gcv_penalty);
    {
        const double intercept_gcv = gcv_score(sst, n, 0, opts.gcv_penalty);
        if (intercept_gcv < best_gcv) {
            best_gcv = intercept_gcv;
            best_terms.clear();
        }
    }
    while (!working.empty()) {
        double round_best = std::numeric_limits<double>::infinity();
        std::size_t drop = 0;
        for (std::size_t t = 0; t < working.size(); ++t) {
            std::vector<MarsTerm> reduced = working;
            reduced.erase(reduced.begin() + static_cast<std::ptrdiff_t>(t));
            const double sse = least_squares(build_design(x, reduced), yv).sse;
            const double g = gcv_score(sse, n, static_cast<int>(reduced.size()), opts.gcv_penalty);
            if (g < round_best) {
                round_best = g;
                drop = t;
            }
        }
        working.erase(working.begin() + static_cast<std::ptrdiff_t>(drop));
        if (round_best < best_gcv) {
            best_gcv = round_best;
            best_terms = working;
        }
    }

    MarsModel model;
    model.terms = best_terms;
    const Eigen::MatrixXd final_design = build_design(x, best_terms);
    const LsResult fit = least_squares(final_design, yv);
    model.intercept = fit.beta[0];
    model.coef.assign(fit.beta.data() + 1, fit.beta.data() + fit.beta.size());
    model.gcv = best_gcv;
    model.rmse = std::sqrt(fit.sse / static_cast<double>(n));
    return model;
}

}  // namespace csmaq
