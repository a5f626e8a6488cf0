#pragma once

#include <optional>
#include <string>
#include <vector>

#include "csmaq/database.hpp"
#include "csmaq/features.hpp"
#include "csmaq/model.hpp"
#include "csmaq/stats.hpp"

namespace csmaq {

/// One database item with its features and 0-100 subjective score.
struct CalibItem {
    std::string signal_id;
    std::string treatment_id;
    double score = 0.0;
    FeatureSeries features;
};

struct CalibDataset {
    std::vector<CalibItem> items;
    std::string config_hash;

    std::vector<std::string> signal_ids() const;
};

/// Per-signal distortion salience: S(m, j) is the Pearson correlation
/// between a basis function's outputs and mean subjective scores across
/// that signal's treatments. Cells can be undefined (zero variance or too
/// few treatments) and are excluded downstream.
struct SalienceMatrix {
    Matrix s;             ///< kDmCount x J
    Matrix defined;       ///< same shape, 1.0 where the cell is usable
    std::vector<std::string> signals;
};

/// What a candidate's sigmoid reads: one cognitive-effect column, or the
/// streaming/masking composite (two sigmoids multiplied).
struct CandidateSource {
    std::vector<Cem> cems;  ///< size 1, or 2 for the composite
    std::string label() const;
};

/// One CEM/DM interaction candidate with its optimized weight parameters.
struct InteractionCandidate {
    std::string id;             ///< "DPW1", "DPW2", ...
    CandidateSource source;
    int dm_index = 0;
    std::vector<CemDpw> dpws;   ///< optimized, inversion carried per rules below
    bool weight_inverted = false;
    double c_before = 0.0;
    double c_after = 0.0;
};

/// Fits one monotone non-increasing basis function from (item-mean DM,
/// subjective score) samples via hinge regression (max 3 hinges), GCV
/// pruning, and a monotone projection. Degenerate x yields a constant
/// function at the mean score. Throws domain_error on fewer than 10 samples.
BasisFunction fit_basis_function(const std::vector<std::pair<double, double>>& samples,
                                 int dm_index);

/// Salience of every DM for every signal in the dataset.
SalienceMatrix compute_salience(const CalibDataset& data,
                                const std::vector<BasisFunction>& bfs);

/// |Pearson| across signals between a salience row and weight values;
/// nullopt when either vector is constant (candidate rejected).
std::optional<double> interaction_metric(const std::vector<double>& s_row,
                                         const std::vector<double>& dpw_values);

/// Exhaustive sigmoid search maximizing the interaction metric: steepness
/// magnitudes {0.5, 1, 2, ..., 64} with both signs via the inverted flag,
/// midpoints on a 41-point quantile grid of the CEM values. c_before is the
/// metric of the raw CEM; c_after >= c_before always (the searched family's
/// shallow limit reproduces the raw-CEM correlation).
InteractionCandidate optimize_dpw(const std::vector<double>& cem_means,
                                  const std::vector<double>& s_row,
                                  int dm_index, const std::string& id);

/// Composite variant: joint grid over one sigmoid per CEM, multiplied.
InteractionCandidate optimize_composite_dpw(const std::vector<double>& cem_a,
                                            const std::vector<double>& cem_b, Cem a, Cem b,
                                            const std::vector<double>& s_row,
                                            int dm_index, const std::string& id);

/// Forward stepwise selection maximizing adjusted R-squared on z-scored
/// columns (ties by larger |t| of the entering coefficient), followed by
/// iterative removal of terms with p >= alpha. Deterministic for a fixed
/// column order.
struct StepwiseResult {
    std::vector<int> selected;      ///< column indices in selection order
    std::vector<ZScore> normalizers;///< one per selected column
    OlsFit fit;                     ///< on the z-scored selected columns
    std::vector<std::string> warnings;
};
/// Forward/backward stepwise regression on z-scored candidate columns.
/// Forward adds the column with the best adjusted-R2 gain (ties favor the
/// larger |t|), backward prunes coefficients with p >= alpha. When
/// column_costs and budget are given, forward skips columns whose cost would
/// push the running total past the budget (used to keep the assembled model
/// inside its parameter-count envelope).
StepwiseResult stepwise_select(const Matrix& candidates, const std::vector<double>& y,
                               double alpha = 0.05,
                               const std::vector<int>& column_costs = {}, int budget = 0);

struct CalibrationOptions {
    double alpha = 0.05;
    std::uint64_t seed = 1;  ///< recorded in provenance; the fit itself is seed-free
    std::string note;
    std::string dump_predictors;  ///< if nonempty, write the stepwise pool matrix as CSV
};

struct CalibrationResult {
    CsmModel model;
    std::vector<InteractionCandidate> candidates;  ///< full table, pre-selection
    std::vector<std::string> candidate_names;      ///< stepwise pool labels
    std::vector<double> pool_r;                    ///< per-pool-column corr with scores
    std::vector<int> selected;                     ///< pool indices in the model
    OlsFit fit;                                    ///< calibration-split fit
    double fit_r = 0.0;
    std::vector<std::string> warnings;
};

/// Full calibration: basis functions from the isolated-artifact split,
/// salience + weight optimization + stepwise selection from the
/// interaction split. Throws domain_error when the interaction split has
/// fewer than 3 usable signals.
CalibrationResult calibrate(const CalibDataset& bf_split, const CalibDataset& interaction_split,
                            const FrontEndConfig& cfg, const CalibrationOptions& opts = {});

}  // namespace csmaq
