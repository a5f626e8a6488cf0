#pragma once

#include <array>
#include <string>
#include <vector>

#include "csmaq/common.hpp"
#include "csmaq/front_end.hpp"
#include "csmaq/pipeline.hpp"

namespace csmaq {

inline constexpr int kDmCount = 5;
inline constexpr int kCemCount = 3;

/// Column order of the distortion-metric matrix.
enum class DmIndex : int { RmsModDiff = 0, NoiseLoudness = 1, LinDist = 2, SegNmr = 3, Ehs = 4 };
/// Column order of the cognitive-effect matrix.
enum class CemIndex : int { ProbSpeech = 0, Epn = 1, Pdev = 2 };

const char* dm_name(int index);
const char* cem_name(int index);

/// Per-item feature series on the 100 ms grid plus exact time averages.
struct FeatureSeries {
    Matrix dm;    ///< T100 x 5: RmsModDiff, NoiseLoudness, LinDist, SegNMR, EHS
    Matrix cem;   ///< T100 x 3: probSpeech, EPN, PDEV
    double hop = 0.1;
    std::array<double, kDmCount> item_mean_dm{};
    std::array<double, kCemCount> item_mean_cem{};
    std::string config_hash;

    void recompute_means();
};

/// Distortion metrics on the 100 ms grid (5 internal frames averaged per
/// output frame). Throws domain_error on shape mismatch.
Matrix extract_dms(const ExcitationPattern& e_ref, const ExcitationPattern& e_sut,
                   const ModulationPattern& m_ref, const ModulationPattern& m_sut);

/// Perceptual-streaming (EPN) and informational-masking (PDEV) effect
/// sizes on the 100 ms grid, both from a trailing 500 ms window on the
/// internal frame grid.
void extract_cem_epn_pdev(const ExcitationPattern& e_ref, const ExcitationPattern& e_sut,
                          std::vector<double>& epn, std::vector<double>& pdev);

/// Whole feature set for a preprocessed pair. Stereo channels run through
/// the front end independently and their DM/CEM series are averaged; the
/// speech classifier reads the reference mono downmix.
FeatureSeries extract_features(const AlignedSignalPair& pair, const FrontEndConfig& cfg);

/// One database item's features, keyed for cache lookups.
struct FeatureRecord {
    std::string signal_id;
    std::string treatment_id;
    FeatureSeries series;
};

/// Columnar CSV cache so calibration can run without re-decoding audio.
/// First line carries a format tag and the front-end config hash.
void write_feature_cache(const std::vector<FeatureRecord>& records, const std::string& path);
std::vector<FeatureRecord> read_feature_cache(const std::string& path);

}  // namespace csmaq
