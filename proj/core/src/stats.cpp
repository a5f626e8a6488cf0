#include "csmaq/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

namespace csmaq {

std::string Fnv1a::hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(state_));
    return std::string(buf);
}

std::uint64_t split_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
    Fnv1a h;
    h.update(&master, sizeof master);
    h.update(&stream, sizeof stream);
    h.update(&index, sizeof index);
    // Avoid the degenerate all-zero seed for engines seeded with a single word.
    return h.value() | 1ull;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
}

double mean(std::span<const double> x) {
    if (x.empty()) return 0.0;
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n < 2) return 0.0;
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(n - 1);
}

double sample_stddev(std::span<const double> x) { return std::sqrt(sample_variance(x)); }

double pearson_r(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw domain_error("pearson_r: length mismatch");
    const std::size_t n = x.size();
    if (n < 2) return 0.0;
    const double mx = mean(x);
    const double my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) return 0.0;
    const double r = sxy / std::sqrt(sxx * syy);
    return std::clamp(r, -1.0, 1.0);
}

namespace {

std::vector<double> average_ranks(std::span<const double> x) {
    const std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman_rho(std::span<const double> x, std::span<const double> y) {
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    return pearson_r(rx, ry);
}

double quantile(std::vector<double> x, double q) {
    if (x.empty()) throw domain_error("quantile: empty sample");
    std::sort(x.begin(), x.end());
    q = std::clamp(q, 0.0, 1.0);
    const double pos = q * static_cast<double>(x.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, x.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return x[lo] + frac * (x[hi] - x[lo]);
}

double t_test_p_value(double t, int dof) {
    if (dof < 1) return 1.0;
    const boost::math::students_t dist(static_cast<double>(dof));
    return 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
}

ZScore ZScore::fit(std::span<const double> x) {
    ZScore z;
    z.mean = csmaq::mean(x);
    const double sd = sample_stddev(x);
    z.stddev = sd > 0.0 ? sd : 1.0;
    return z;
}

double OlsFit::predict_row(std::span<const double> x) const {
    double yhat = beta.empty() ? 0.0 : beta[0];
    for (std::size_t j = 0; j + 1 < beta.size(); ++j) yhat += beta[j + 1] * x[j];
    return yhat;
}

OlsFit ols(const Matrix& x, std::span<const double> y) {
    const auto n = static_cast<Eigen::Index>(y.size());
    const auto p = static_cast<Eigen::Index>(x.cols());
    if (static_cast<std::size_t>(n) != x.rows() && !x.empty())
        throw domain_error("ols: row count mismatch");
    const Eigen::Index k = p + 1;
    if (n <= k) throw domain_error("ols: not enough rows for the requested columns");

    Eigen::MatrixXd design(n, k);
    design.col(0).setOnes();
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < p; ++j)
            design(i, j + 1) = x(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);

    const Eigen::MatrixXd xtx = design.transpose() * design;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(xtx);
    if (!lu.isInvertible())
        throw domain_error("ols: singular design matrix");
    const Eigen::MatrixXd xtx_inv = lu.inverse();
    const Eigen::VectorXd beta = xtx_inv * (design.transpose() * yv);

    const Eigen::VectorXd resid = yv - design * beta;
    const double sse = resid.squaredNorm();
    const double ybar = yv.mean();
    const double sst = (yv.array() - ybar).matrix().squaredNorm();
    const int dof = static_cast<int>(n - k);
    const double sigma2 = sse / static_cast<double>(dof);

    OlsFit fit;
    fit.dof = dof;
    fit.beta.assign(beta.data(), beta.data() + k);
    fit.std_err.resize(k);
    fit.t_stat.resize(k);
    fit.p_value.resize(k);
    for (Eigen::Index j = 0; j < k; ++j) {
        const double se = std::sqrt(std::max(0.0, sigma2 * xtx_inv(j, j)));
        fit.std_err[j] = se;
        fit.t_stat[j] = se > 0.0 ? beta[j] / se : 0.0;
        fit.p_value[j] = se > 0.0 ? t_test_p_value(fit.t_stat[j], dof) : 1.0;
    }
    fit.r2 = sst > 0.0 ? 1.0 - sse / sst : 0.0;
    fit.adj_r2 = 1.0 - (1.0 - fit.r2) * static_cast<double>(n - 1) / static_cast<double>(dof);
    fit.rmse = std::sqrt(sse / static_cast<double>(n));
    return fit;
}

}  // namespace csmaq
