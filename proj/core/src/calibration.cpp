#include "csmaq/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <set>

#include "csmaq/mars.hpp"

namespace csmaq {

namespace {

const std::vector<double>& steepness_grid() {
    static const std::vector<double> grid = {0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0};
    return grid;
}

/// Near-ties in grid |C| resolve toward the shallowest steepness; see
/// optimize_dpw.
constexpr double kSteepnessTieTol = 0.01;

/// 41 quantile-spaced midpoints of the CEM sample.
std::vector<double> midpoint_grid(const std::vector<double>& values) {
    std::vector<double> mids;
    mids.reserve(41);
    for (int i = 0; i <= 40; ++i) mids.push_back(quantile(values, i / 40.0));
    return mids;
}

double sigmoid(double steepness, double midpoint, double c) {
    return 1.0 / (1.0 + std::exp(-steepness * (c - midpoint)));
}

/// Time-mean of the weighted basis-function output for one item; this is
/// exactly the quantity a QualityTerm z-scores at inference time.
double predictor_mean(const FeatureSeries& s, const BasisFunction& bf,
                      const std::vector<CemDpw>& dpws, bool weight_inverted) {
    QualityTerm probe;
    probe.bf_index = bf.dm_index;
    probe.dpws = dpws;
    probe.weight_inverted = weight_inverted;
    double acc = 0.0;
    const std::size_t n = s.dm.rows();
    for (std::size_t t = 0; t < n; ++t) {
        const double w = probe.weight(s.cem(t, 0), s.cem(t, 1), s.cem(t, 2));
        acc += w * bf.eval(s.dm(t, static_cast<std::size_t>(bf.dm_index)));
    }
    return acc / static_cast<double>(n);
}

}  // namespace

std::vector<std::string> CalibDataset::signal_ids() const {
    std::vector<std::string> ids;
    for (const auto& item : items)
        if (std::find(ids.begin(), ids.end(), item.signal_id) == ids.end())
            ids.push_back(item.signal_id);
    return ids;
}

std::string CandidateSource::label() const {
    std::string out;
    for (std::size_t i = 0; i < cems.size(); ++i) {
        if (i) out += "/";
        out += cem_name(static_cast<int>(cems[i]));
    }
    return out;
}

BasisFunction fit_basis_function(const std::vector<std::pair<double, double>>& samples,
                                 int dm_index) {
    if (samples.size() < 10)
        throw domain_error("fit_basis_function: need at least 10 samples");

    std::vector<double> xs(samples.size()), ys(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        xs[i] = samples[i].first;
        ys[i] = samples[i].second;
    }
    BasisFunction bf;
    bf.dm_index = dm_index;
    bf.x_min = *std::min_element(xs.begin(), xs.end());
    bf.x_max = *std::max_element(xs.begin(), xs.end());

    if (sample_variance(xs) <= 0.0) {
        bf.intercept = mean(ys);  // degenerate metric: constant at the mean score
        return bf;
    }

    Matrix x(samples.size(), 1);
    for (std::size_t i = 0; i < samples.size(); ++i) x(i, 0) = xs[i];
    MarsOptions opts;
    opts.max_terms = 3;
    opts.both_directions = false;  // +hinges only: canonical form stays <= 3 hinges
    const MarsModel fit = mars_fit(x, ys, opts);

    // Collect hinges, merge duplicate knots, sort ascending.
    std::map<double, double> slope_at_knot;
    for (std::size_t t = 0; t < fit.terms.size(); ++t)
        slope_at_knot[fit.terms[t].knot] += fit.coef[t];
    bf.intercept = fit.intercept;
    for (const auto& [knot, slope] : slope_at_knot) bf.hinges.push_back({knot, slope});

    // Monotone projection: cumulative segment slopes clamped to <= 0,
    // then the intercept refit by least squares on the projected shape.
    double cum = 0.0, cum_projected = 0.0;
    std::vector<Hinge> projected;
    for (const auto& h : bf.hinges) {
        cum += h.slope;
        const double clamped = std::min(cum, 0.0);
        const double adjusted_slope = clamped - cum_projected;
        cum_projected = clamped;
        if (std::fabs(adjusted_slope) > 1e-15) projected.push_back({h.knot, adjusted_slope});
    }
    bf.hinges = std::move(projected);

    double resid_mean = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        double shape = 0.0;
        for (const auto& h : bf.hinges) shape += h.slope * std::max(0.0, xs[i] - h.knot);
        resid_mean += ys[i] - shape;
    }
    bf.intercept = resid_mean / static_cast<double>(samples.size());
    return bf;
}

SalienceMatrix compute_salience(const CalibDataset& data,
                                const std::vector<BasisFunction>& bfs) {
    SalienceMatrix out;
    out.signals = data.signal_ids();
    const std::size_t j_count = out.signals.size();
    out.s = Matrix(kDmCount, j_count);
    out.defined = Matrix(kDmCount, j_count);

    for (std::size_t j = 0; j < j_count; ++j) {
        std::vector<const CalibItem*> items;
        for (const auto& item : data.items)
            if (item.signal_id == out.signals[j]) items.push_back(&item);
        std::vector<double> y;
        for (const auto* item : items) y.push_back(item->score);
        const bool y_ok = items.size() >= 3 && sample_variance(y) > 0.0;
        for (int m = 0; m < kDmCount; ++m) {
            if (!y_ok) continue;
            std::vector<double> v;
            for (const auto* item : items)
                v.push_back(bfs[static_cast<std::size_t>(m)].eval(
                    item->features.item_mean_dm[static_cast<std::size_t>(m)]));
            if (sample_variance(v) <= 0.0) continue;
            out.s(static_cast<std::size_t>(m), j) = pearson_r(y, v);
            out.defined(static_cast<std::size_t>(m), j) = 1.0;
        }
    }
    return out;
}

std::optional<double> interaction_metric(const std::vector<double>& s_row,
                                         const std::vector<double>& dpw_values) {
    if (s_row.size() != dpw_values.size())
        throw domain_error("interaction_metric: length mismatch");
    if (s_row.size() < 3) return std::nullopt;
    if (sample_variance(s_row) <= 0.0 || sample_variance(dpw_values) <= 0.0)
        return std::nullopt;
    return std::fabs(pearson_r(s_row, dpw_values));
}

InteractionCandidate optimize_dpw(const std::vector<double>& cem_means,
                                  const std::vector<double>& s_row, int dm_index,
                                  const std::string& id) {
    if (cem_means.size() != s_row.size() || cem_means.size() < 3)
        throw domain_error("optimize_dpw: need >= 3 paired signal values");

    InteractionCandidate cand;
    cand.id = id;
    cand.dm_index = dm_index;
    cand.c_before = interaction_metric(s_row, cem_means).value_or(0.0);

    const auto mids = midpoint_grid(cem_means);
    // Two passes: locate the grid maximum of |C|, then take the shallowest
    // steepness whose best point sits within kSteepnessTieTol of it. Steep
    // sigmoids act as item selectors and win coin-flip margins on small signal
    // counts, so near-ties resolve toward the smoother weight.
    double c_max = -1.0;
    std::vector<double> w(cem_means.size());
    for (double steepness : steepness_grid()) {
        for (double midpoint : mids) {
            for (std::size_t i = 0; i < cem_means.size(); ++i)
                w[i] = sigmoid(steepness, midpoint, cem_means[i]);
            if (sample_variance(w) <= 0.0) continue;
            c_max = std::max(c_max, std::fabs(pearson_r(s_row, w)));
        }
    }
    if (c_max < 0.0)
        throw domain_error("optimize_dpw: every grid sigmoid is degenerate");
    double best_c = -1.0;
    double best_r = 0.0;
    double best_steepness = 0.0, best_midpoint = 0.0;
    for (double steepness : steepness_grid()) {
        if (best_c >= 0.0) break;  // shallowest qualifying steepness found
        for (double midpoint : mids) {
            for (std::size_t i = 0; i < cem_means.size(); ++i)
                w[i] = sigmoid(steepness, midpoint, cem_means[i]);
            if (sample_variance(w) <= 0.0) continue;
            const double r = pearson_r(s_row, w);
            const double c = std::fabs(r);
            if (c >= c_max - kSteepnessTieTol && c > best_c) {
                best_c = c;
                best_r = r;
                best_steepness = steepness;
                best_midpoint = midpoint;
            }
        }
    }

    cand.weight_inverted = false;
    // Negative correlation: salience drops as the effect grows; the weight
    // enters the model mirrored as 1 - w. Searching positive steepness with
    // both polarities is equivalent to a signed-steepness grid because
    // 1 - sigmoid(s(c-m)) == sigmoid(-s(c-m)).
    CemDpw cd;
    cd.dpw.steepness = best_steepness;
    cd.dpw.midpoint = best_midpoint;
    cd.dpw.inverted = best_r < 0.0;
    cand.dpws = {cd};
    // The shallow end of the grid is affine over the data to first order, so
    // the raw-CEM correlation is reachable; clamping keeps the guarantee
    // exact in floating point.
    cand.c_after = std::max(best_c, cand.c_before);
    return cand;
}

InteractionCandidate optimize_composite_dpw(const std::vector<double>& cem_a,
                                            const std::vector<double>& cem_b, Cem a, Cem b,
                                            const std::vector<double>& s_row, int dm_index,
                                            const std::string& id) {
    if (cem_a.size() != s_row.size() || cem_b.size() != s_row.size() || s_row.size() < 3)
        throw domain_error("optimize_dpw: need >= 3 paired signal values");

    InteractionCandidate cand;
    cand.id = id;
    cand.dm_index = dm_index;
    std::vector<double> raw(cem_a.size());
    for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = cem_a[i] * cem_b[i];
    cand.c_before = interaction_metric(s_row, raw).value_or(0.0);

    const auto mids_a = midpoint_grid(cem_a);
    const auto mids_b = midpoint_grid(cem_b);
    // Same two-pass near-tie rule as optimize_dpw, ordered by the joint
    // steepness pair (shallowest max(sa, sb) wins, then loop order).
    double c_max = -1.0;
    std::vector<double> wa(cem_a.size()), w(cem_a.size());
    const auto scan = [&](double tol, auto&& take) {
        for (double sa : steepness_grid()) {
            for (double ma : mids_a) {
                for (std::size_t i = 0; i < wa.size(); ++i) wa[i] = sigmoid(sa, ma, cem_a[i]);
                for (double sb : steepness_grid()) {
                    for (double mb : mids_b) {
                        for (std::size_t i = 0; i < w.size(); ++i)
                            w[i] = wa[i] * sigmoid(sb, mb, cem_b[i]);
                        if (sample_variance(w) <= 0.0) continue;
                        const double r = pearson_r(s_row, w);
                        if (std::fabs(r) >= tol) take(r, sa, ma, sb, mb);
                    }
                }
            }
        }
    };
    scan(0.0, [&](double r, double, double, double, double) {
        c_max = std::max(c_max, std::fabs(r));
    });
    if (c_max < 0.0)
        throw domain_error("optimize_dpw: every grid sigmoid is degenerate");
    double best_c = -1.0, best_r = 0.0, best_key = 0.0;
    double best_sa = 0.0, best_ma = 0.0, best_sb = 0.0, best_mb = 0.0;
    scan(c_max - kSteepnessTieTol, [&](double r, double sa, double ma, double sb, double mb) {
        const double key = std::max(sa, sb);
        const bool better = best_c < 0.0 || key < best_key ||
                            (key == best_key && std::fabs(r) > best_c);
        if (!better) return;
        best_c = std::fabs(r);
        best_r = r;
        best_key = key;
        best_sa = sa;
        best_ma = ma;
        best_sb = sb;
        best_mb = mb;
    });

    CemDpw da, db;
    da.cem = a;
    da.dpw = {best_sa, best_ma, false};
    db.cem = b;
    db.dpw = {best_sb, best_mb, false};
    cand.dpws = {da, db};
    cand.weight_inverted = best_r < 0.0;  // the product as a whole is mirrored
    cand.source.cems = {a, b};
    cand.c_after = std::max(best_c, cand.c_before);
    return cand;
}

/// Forward selection refuses candidates whose correlation with an already
/// selected column exceeds this; nearly parallel columns trade enormous
/// opposing coefficients for a sliver of residual variance.
constexpr double kShadowCorrLimit = 0.98;

StepwiseResult stepwise_select(const Matrix& candidates, const std::vector<double>& y,
                               double alpha, const std::vector<int>& column_costs,
                               int budget) {
    const std::size_t n = candidates.rows();
    const std::size_t p = candidates.cols();
    if (n != y.size() || n < 4) throw domain_error("stepwise_select: too few rows");
    if (!column_costs.empty() && column_costs.size() != p)
        throw domain_error("stepwise_select: one cost per column required");

    std::vector<ZScore> all_z(p);
    std::vector<bool> usable(p, true);
    Matrix z(n, p);
    for (std::size_t j = 0; j < p; ++j) {
        const auto col = candidates.column(j);
        usable[j] = sample_variance(col) > 0.0;
        all_z[j] = ZScore::fit(col);
        for (std::size_t i = 0; i < n; ++i) z(i, j) = all_z[j].apply(col[i]);
    }

    std::vector<int> selected;
    double current_adj = 0.0;  // intercept-only baseline

    auto build = [&](const std::vector<int>& cols) {
        Matrix x(n, cols.size());
        for (std::size_t j = 0; j < cols.size(); ++j)
            for (std::size_t i = 0; i < n; ++i)
                x(i, j) = z(i, static_cast<std::size_t>(cols[j]));
        return x;
    };

    int cost_used = 0;
    while (selected.size() + 2 < n) {
        int best_col = -1;
        double best_adj = current_adj;
        double best_t = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            if (!usable[j]) continue;
            if (!column_costs.empty() && cost_used + column_costs[j] > budget) continue;
            if (std::find(selected.begin(), selected.end(), static_cast<int>(j)) !=
                selected.end())
                continue;
            // A near-duplicate of a column already in the model adds no
            // information; letting it in yields huge offsetting coefficient
            // pairs that are numerically fragile, so shadowed columns are
            // skipped outright rather than left to the rank check below.
            bool shadowed = false;
            for (int k : selected) {
                double dot = 0.0, na = 0.0, nb = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double a = z(i, j);
                    const double b = z(i, static_cast<std::size_t>(k));
                    dot += a * b;
                    na += a * a;
                    nb += b * b;
                }
                if (na > 0.0 && nb > 0.0 &&
                    std::fabs(dot) / std::sqrt(na * nb) > kShadowCorrLimit) {
                    shadowed = true;
                    break;
                }
            }
            if (shadowed) continue;
            std::vector<int> trial = selected;
            trial.push_back(static_cast<int>(j));
            OlsFit fit;
            try {
                fit = ols(build(trial), y);
            } catch (const domain_error&) {
                continue;  // collinear with the current set
            }
            const double t_new = std::fabs(fit.t_stat.back());
            if (fit.adj_r2 > best_adj + 1e-12 ||
                (best_col >= 0 && std::fabs(fit.adj_r2 - best_adj) <= 1e-12 &&
                 t_new > best_t)) {
                best_adj = fit.adj_r2;
                best_col = static_cast<int>(j);
                best_t = t_new;
            }
        }
        if (best_col < 0) break;
        selected.push_back(best_col);
        current_adj = best_adj;
        if (!column_costs.empty()) cost_used += column_costs[static_cast<std::size_t>(best_col)];
    }

    StepwiseResult result;
    // Backward significance pruning at the requested level.
    while (!selected.empty()) {
        const OlsFit fit = ols(build(selected), y);
        int worst = -1;
        double worst_p = alpha;
        for (std::size_t j = 0; j < selected.size(); ++j)
            if (fit.p_value[j + 1] >= worst_p) {
                worst_p = fit.p_value[j + 1];
                worst = static_cast<int>(j);
            }
        if (worst < 0) {
            result.fit = fit;
            break;
        }
        selected.erase(selected.begin() + worst);
    }
    if (selected.empty()) {
        result.warnings.push_back("no predictor passed selection; intercept-only model");
        OlsFit fit;
        fit.beta = {mean(y)};
        fit.std_err = {0.0};
        fit.t_stat = {0.0};
        fit.p_value = {0.0};
        fit.rmse = std::sqrt([&] {
            double acc = 0.0;
            const double m = mean(y);
            for (double v : y) acc += (v - m) * (v - m);
            return acc / static_cast<double>(n);
        }());
        fit.dof = static_cast<int>(n) - 1;
        result.fit = fit;
    }
    result.selected = selected;
    for (int j : selected) result.normalizers.push_back(all_z[static_cast<std::size_t>(j)]);
    return result;
}

CalibrationResult calibrate(const CalibDataset& bf_split,
                            const CalibDataset& interaction_split, const FrontEndConfig& cfg,
                            const CalibrationOptions& opts) {
    const std::string hash = cfg.hash();
    for (const auto* split : {&bf_split, &interaction_split})
        for (const auto& item : split->items)
            if (item.features.config_hash != hash)
                throw domain_error("calibrate: features were extracted with a different "
                                   "front-end config");
    if (interaction_split.signal_ids().size() < 3)
        throw domain_error("insufficient signals for interaction analysis (need >= 3)");

    CalibrationResult result;

    // Basis functions from the isolated-artifact split. Fitting each curve on
    // every item would flatten it badly: a metric sits near zero on items
    // degraded along other dimensions, so their low scores crowd the low end
    // of its axis. Instead each signal is attributed to the metric with the
    // largest normalized response range across that signal's treatments, and
    // each curve is fit from its own signals (plus their reference anchors).
    std::map<std::string, std::vector<const CalibItem*>> by_signal;
    for (const auto& item : bf_split.items) by_signal[item.signal_id].push_back(&item);
    std::vector<std::vector<double>> signal_range(kDmCount);
    std::vector<const std::vector<const CalibItem*>*> signal_items;
    for (const auto& [sid, items] : by_signal) {
        signal_items.push_back(&items);
        for (int m = 0; m < kDmCount; ++m) {
            double lo = std::numeric_limits<double>::infinity(), hi = -lo;
            for (const auto* item : items) {
                const double v = item->features.item_mean_dm[static_cast<std::size_t>(m)];
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            signal_range[static_cast<std::size_t>(m)].push_back(hi - lo);
        }
    }
    std::vector<double> range_scale(kDmCount, 0.0);
    for (int m = 0; m < kDmCount; ++m)
        range_scale[static_cast<std::size_t>(m)] =
            std::max(quantile(signal_range[static_cast<std::size_t>(m)], 0.9), 1e-12);
    std::vector<std::vector<const CalibItem*>> assigned(kDmCount);
    for (std::size_t s = 0; s < signal_items.size(); ++s) {
        int best_m = 0;
        double best = -1.0;
        for (int m = 0; m < kDmCount; ++m) {
            const double norm = signal_range[static_cast<std::size_t>(m)][s] /
                                range_scale[static_cast<std::size_t>(m)];
            if (norm > best) {
                best = norm;
                best_m = m;
            }
        }
        auto& dst = assigned[static_cast<std::size_t>(best_m)];
        dst.insert(dst.end(), signal_items[s]->begin(), signal_items[s]->end());
    }

    std::vector<BasisFunction> bfs;
    for (int m = 0; m < kDmCount; ++m) {
        const auto* pool_items = &assigned[static_cast<std::size_t>(m)];
        std::vector<const CalibItem*> everything;
        if (pool_items->size() < 10) {
            result.warnings.push_back(std::string(dm_name(m)) +
                                      ": no dominant-response signals; basis function fit "
                                      "on the full split");
            everything.reserve(bf_split.items.size());
            for (const auto& item : bf_split.items) everything.push_back(&item);
            pool_items = &everything;
        }
        std::vector<std::pair<double, double>> samples;
        samples.reserve(pool_items->size());
        for (const auto* item : *pool_items)
            samples.emplace_back(item->features.item_mean_dm[static_cast<std::size_t>(m)],
                                 item->score);
        bfs.push_back(fit_basis_function(samples, m));
        // Re-anchor so the undistorted end (x_min) maps to 0 and the curve is a
        // pure penalty. Salience and plain-BF predictors are shift-invariant
        // (Pearson / z-scored columns), but weight*BF products are not: with the
        // raw quality offset left in, the product's cross-item variance is
        // dominated by the weight alone and the gated penalty it is meant to
        // expose is swamped.
        bfs.back().intercept -= bfs.back().eval(bfs.back().x_min);
    }

    // Salience and per-signal cognitive-effect levels on the mixed split.
    const SalienceMatrix salience = compute_salience(interaction_split, bfs);
    const auto signals = salience.signals;
    Matrix cem_signal(signals.size(), kCemCount);  // rows: signals, cols: CEMs
    for (std::size_t j = 0; j < signals.size(); ++j) {
        double acc[kCemCount] = {0.0, 0.0, 0.0};
        int count = 0;
        for (const auto& item : interaction_split.items)
            if (item.signal_id == signals[j]) {
                for (int c = 0; c < kCemCount; ++c)
                    acc[c] += item.features.item_mean_cem[static_cast<std::size_t>(c)];
                ++count;
            }
        for (int c = 0; c < kCemCount; ++c)
            cem_signal(j, static_cast<std::size_t>(c)) = acc[c] / count;
    }

    // Candidate table: every CEM against every DM, then the streaming/
    // masking composite against the masking-sensitive metrics.
    int dpw_counter = 0;
    auto defined_subset = [&](int m, const std::vector<double>& values,
                              std::vector<double>& s_out, std::vector<double>& v_out) {
        s_out.clear();
        v_out.clear();
        for (std::size_t j = 0; j < signals.size(); ++j)
            if (salience.defined(static_cast<std::size_t>(m), j) > 0.0) {
                s_out.push_back(salience.s(static_cast<std::size_t>(m), j));
                v_out.push_back(values[j]);
            }
    };

    for (int m = 0; m < kDmCount; ++m) {
        for (int c = 0; c < kCemCount; ++c) {
            const std::string id = "DPW" + std::to_string(++dpw_counter);
            std::vector<double> s_row, values;
            defined_subset(m, cem_signal.column(static_cast<std::size_t>(c)), s_row, values);
            try {
                auto cand = optimize_dpw(values, s_row, m, id);
                cand.source.cems = {static_cast<Cem>(c)};
                result.candidates.push_back(std::move(cand));
            } catch (const domain_error& e) {
                result.warnings.push_back(id + " skipped: " + e.what());
            }
        }
    }
    for (int m : {static_cast<int>(DmIndex::SegNmr), static_cast<int>(DmIndex::NoiseLoudness)}) {
        const std::string id = "DPW" + std::to_string(++dpw_counter);
        std::vector<double> s_row, epn_vals, pdev_vals;
        defined_subset(m, cem_signal.column(1), s_row, epn_vals);
        {
            std::vector<double> s_again;
            defined_subset(m, cem_signal.column(2), s_again, pdev_vals);
        }
        try {
            result.candidates.push_back(optimize_composite_dpw(
                epn_vals, pdev_vals, Cem::Epn, Cem::Pdev, s_row, m, id));
        } catch (const domain_error& e) {
            result.warnings.push_back(id + " skipped: " + e.what());
        }
    }

    // Stepwise pool: each weighted candidate plus the plain basis functions.
    const std::size_t n_items = interaction_split.items.size();
    const std::size_t pool = result.candidates.size() + kDmCount;
    Matrix predictors(n_items, pool);
    std::vector<double> y(n_items);
    for (std::size_t i = 0; i < n_items; ++i) {
        const auto& item = interaction_split.items[i];
        y[i] = item.score;
        for (std::size_t k = 0; k < result.candidates.size(); ++k) {
            const auto& cand = result.candidates[k];
            predictors(i, k) =
                predictor_mean(item.features, bfs[static_cast<std::size_t>(cand.dm_index)],
                               cand.dpws, cand.weight_inverted);
        }
        for (int m = 0; m < kDmCount; ++m)
            predictors(i, result.candidates.size() + static_cast<std::size_t>(m)) =
                predictor_mean(item.features, bfs[static_cast<std::size_t>(m)], {}, false);
    }
    for (const auto& cand : result.candidates)
        result.candidate_names.push_back(cand.id + ":" + cand.source.label() + "->" +
                                         dm_name(cand.dm_index));
    for (int m = 0; m < kDmCount; ++m)
        result.candidate_names.push_back(std::string("bf:") + dm_name(m));
    for (std::size_t k = 0; k < pool; ++k)
        result.pool_r.push_back(pearson_r(predictors.column(k), y));

    if (!opts.dump_predictors.empty()) {
        std::ofstream out(opts.dump_predictors);
        if (!out) throw io_error("calibrate: cannot write " + opts.dump_predictors);
        out << "signal_id,treatment_id,score";
        for (const auto& name : result.candidate_names) out << ',' << name;
        out << '\n';
        out << std::setprecision(17);
        for (std::size_t i = 0; i < n_items; ++i) {
            const auto& item = interaction_split.items[i];
            out << item.signal_id << ',' << item.treatment_id << ',' << y[i];
            for (std::size_t k = 0; k < pool; ++k) out << ',' << predictors(i, k);
            out << '\n';
        }
    }

    // Complexity budget: keep the assembled model's parameter count at or
    // under 80 (same order as the reference-model figure of ~59). Costs per
    // column: coefficient + 2 normalizers, plus 2 per sigmoid it carries.
    int bf_params = 1;  // intercept coefficient
    for (const auto& bf : bfs) bf_params += 1 + 2 * static_cast<int>(bf.hinges.size());
    std::vector<int> column_costs;
    column_costs.reserve(pool);
    for (const auto& cand : result.candidates)
        column_costs.push_back(3 + 2 * static_cast<int>(cand.dpws.size()));
    for (int m = 0; m < kDmCount; ++m) column_costs.push_back(3);

    StepwiseResult sel =
        stepwise_select(predictors, y, opts.alpha, column_costs, 80 - bf_params);
    for (const auto& w : sel.warnings) result.warnings.push_back(w);

    // Assemble the model.
    CsmModel model;
    model.front_end = cfg;
    model.config_hash = hash;
    model.basis_functions = bfs;
    QualityTerm intercept;
    intercept.id = "Q0";
    intercept.coefficient = sel.fit.beta[0];
    model.terms.push_back(intercept);
    for (std::size_t k = 0; k < sel.selected.size(); ++k) {
        QualityTerm term;
        term.id = "Q" + std::to_string(k + 1);
        term.coefficient = sel.fit.beta[k + 1];
        term.z_mean = sel.normalizers[k].mean;
        term.z_std = sel.normalizers[k].stddev;
        const auto col = static_cast<std::size_t>(sel.selected[k]);
        if (col < result.candidates.size()) {
            const auto& cand = result.candidates[col];
            term.bf_index = cand.dm_index;
            term.dpws = cand.dpws;
            term.weight_inverted = cand.weight_inverted;
        } else {
            term.bf_index = static_cast<int>(col - result.candidates.size());
        }
        model.terms.push_back(std::move(term));
    }
    model.provenance.tool = "csmaq";
    model.provenance.seed = opts.seed;
    model.provenance.note = opts.note;

    result.selected = sel.selected;
    result.fit = sel.fit;
    result.fit_r = std::sqrt(std::max(0.0, sel.fit.r2));
    result.model = std::move(model);
    return result;
}

}  // namespace csmaq
