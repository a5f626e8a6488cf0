#include "csmaq/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace csmaq {

double BasisFunction::eval(double x) const {
    const double xc = std::clamp(x, x_min, x_max);
    double y = intercept;
    for (const auto& h : hinges) y += h.slope * std::max(0.0, xc - h.knot);
    return y;
}

double Dpw::eval(double c) const {
    const double w = 1.0 / (1.0 + std::exp(-steepness * (c - midpoint)));
    return inverted ? 1.0 - w : w;
}

double QualityTerm::weight(double prob_speech, double epn, double pdev) const {
    if (dpws.empty()) return 1.0;
    double w = 1.0;
    for (const auto& cd : dpws) {
        const double c = cd.cem == Cem::ProbSpeech ? prob_speech
                         : cd.cem == Cem::Epn      ? epn
                                                   : pdev;
        w *= cd.dpw.eval(c);
    }
    return weight_inverted ? 1.0 - w : w;
}

Matrix quality_terms(const FeatureSeries& features, const CsmModel& model) {
    if (!model.config_hash.empty() && features.config_hash != model.config_hash)
        throw domain_error("quality_terms: feature/model front-end config mismatch");
    const std::size_t frames = features.dm.rows();
    const std::size_t k = model.terms.size();
    Matrix q(frames, k);
    for (std::size_t n = 0; n < frames; ++n) {
        const double ps = features.cem(n, 0);
        const double epn = features.cem(n, 1);
        const double pdev = features.cem(n, 2);
        for (std::size_t t = 0; t < k; ++t) {
            const auto& term = model.terms[t];
            if (!term.bf_index.has_value()) {
                q(n, t) = term.coefficient;  // intercept term, constant per frame
                continue;
            }
            const auto& bf = model.basis_functions.at(static_cast<std::size_t>(*term.bf_index));
            const double predictor =
                term.weight(ps, epn, pdev) *
                bf.eval(features.dm(n, static_cast<std::size_t>(bf.dm_index)));
            q(n, t) = term.coefficient * (predictor - term.z_mean) / term.z_std;
        }
    }
    return q;
}

ScoreResult score(const FeatureSeries& features, const CsmModel& model) {
    if (features.dm.rows() == 0) throw domain_error("score: empty feature series");
    const Matrix q = quality_terms(features, model);
    ScoreResult out;
    out.qm_series.resize(q.rows(), 0.0);
    out.term_means.assign(q.cols(), 0.0);
    for (std::size_t n = 0; n < q.rows(); ++n) {
        double sum = 0.0;
        for (std::size_t t = 0; t < q.cols(); ++t) {
            sum += q(n, t);
            out.term_means[t] += q(n, t);
        }
        out.qm_series[n] = sum;
    }
    const double inv_n = 1.0 / static_cast<double>(q.rows());
    for (double& v : out.term_means) v *= inv_n;
    double acc = 0.0;
    for (double v : out.qm_series) acc += v;
    out.score_unclamped = acc * inv_n;
    out.score = std::clamp(out.score_unclamped, 0.0, 100.0);
    return out;
}

ParameterCount count_parameters(const CsmModel& model) {
    ParameterCount count;
    std::ostringstream items;
    for (const auto& bf : model.basis_functions) {
        count.basis_function_params += 1 + 2 * static_cast<int>(bf.hinges.size());
    }
    items << "basis functions: " << model.basis_functions.size() << " splines, "
          << count.basis_function_params << " params (intercept + 2/hinge)\n";

    // Distinct sigmoids across terms; a reused sigmoid counts once.
    std::set<std::tuple<int, double, double, bool>> seen;
    for (const auto& term : model.terms)
        for (const auto& cd : term.dpws)
            seen.insert({static_cast<int>(cd.cem), cd.dpw.steepness, cd.dpw.midpoint,
                         cd.dpw.inverted});
    count.dpw_params = 2 * static_cast<int>(seen.size());
    items << "detection weights: " << seen.size() << " sigmoids, " << count.dpw_params
          << " params (steepness + midpoint)\n";

    count.coefficients = static_cast<int>(model.terms.size());
    items << "coefficients: " << count.coefficients << " (intercept included)\n";
    for (const auto& term : model.terms)
        if (term.bf_index.has_value()) count.normalizers += 2;
    items << "normalizers: " << count.normalizers << " (mean + std per predictor)\n";

    count.total =
        count.basis_function_params + count.dpw_params + count.coefficients + count.normalizers;
    items << "total: " << count.total;
    count.itemized = items.str();
    return count;
}

}  // namespace csmaq
