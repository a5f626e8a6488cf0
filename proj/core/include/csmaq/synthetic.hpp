#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "csmaq/database.hpp"
#include "csmaq/waveform.hpp"

namespace csmaq {

enum class SourceKind { SpeechLike, MusicLike, Mixed };

/// Latent per-signal character, realized in the rendered audio:
/// speechiness drives syllabic gating and voiced-pulse content, busyness
/// drives level-variation density (percussion/pause rate).
struct SignalCharacter {
    SourceKind kind = SourceKind::MusicLike;
    double speechiness = 0.0;  ///< in [0, 1]
    double busyness = 0.5;     ///< in [0, 1]
};

/// Procedural test audio, bit-deterministic in (character, duration, seed).
Waveform render_signal(const SignalCharacter& character, double duration, std::uint64_t seed);

/// Convenience wrapper with each kind's default character.
Waveform synth_source(SourceKind kind, double duration, std::uint64_t seed);

enum class ArtifactKind {
    Lowpass,
    AdditiveNoise,
    HarmonicComb,
    ModulationSmear,
    LevelOffset,
    Combination,
};

const char* artifact_name(ArtifactKind kind);

/// severity 0 always returns the input bit-identically.
struct ArtifactRecipe {
    ArtifactKind kind = ArtifactKind::Lowpass;
    double severity = 0.0;
    std::vector<ArtifactRecipe> parts;  ///< Combination only

    std::string label() const;
};

/// One flattened artifact application together with its measured physical
/// effect on the concrete signal. `physical` is a dimensionless, monotone
/// amount of change: energy fraction removed (Lowpass), relative added-error
/// level (AdditiveNoise, HarmonicComb), relative sample deviation
/// (ModulationSmear), or relative gain change (LevelOffset).
struct AppliedArtifact {
    ArtifactKind kind = ArtifactKind::Lowpass;
    double severity = 0.0;
    double physical = 0.0;
};

Waveform apply_artifact(const Waveform& w, const ArtifactRecipe& recipe, std::uint64_t seed,
                        std::vector<AppliedArtifact>* applied = nullptr);

/// Maps a list of applied artifacts plus the signal character to a latent
/// quality in [0, 100]. Penalties for content-dependent artifacts (band
/// limiting, envelope smearing) grow with the measured physical effect
/// rather than the nominal severity, so inaudible processing costs nothing.
/// Planted structure the calibration stage should rediscover: band-limiting
/// hurts speech-like signals much less (speechiness discounts the lowpass
/// penalty), and additive noise hurts busy signals less (masker variation
/// discounts the noise penalty). Both discounts are monotone, so quality is
/// still non-increasing in every severity.
struct LatentQualityModel {
    double listener_sigma = 8.0;  ///< per-listener score noise, MUSHRA units
    int listeners = 20;           ///< panel size; mean-score noise is sigma/sqrt(n)
    double speech_lowpass_discount = 0.90;
    double busy_noise_discount = 0.50;

    double quality(const std::vector<AppliedArtifact>& applied,
                   const SignalCharacter& character) const;
};

enum class TreatmentProfile {
    Isolated,  ///< one artifact per treatment, graded severities
    Mixed,     ///< combined artifacts, per-signal severity jitter
};

struct DatabaseSpec {
    int signals = 24;
    int treatments = 7;  ///< including the hidden reference
    double duration = 2.5;
    std::uint64_t seed = 1;
    TreatmentProfile profile = TreatmentProfile::Mixed;
    std::string id_prefix = "sig";
};

struct GroundTruthRow {
    std::string signal_id;
    std::string treatment_id;
    std::string recipe;
    double latent_quality = 0.0;
    double speechiness = 0.0;
    double busyness = 0.0;
};

struct SynthResult {
    ListeningTestDatabase db;
    std::vector<GroundTruthRow> truth;
    std::string manifest_path;
    std::string truth_path;
};

/// Renders WAVs into out_dir and writes manifest.csv + groundtruth.csv.
/// Fully deterministic in (spec, latent): per-item seeds are split from
/// spec.seed by (signal index, treatment index), so generation order never
/// affects the audio.
SynthResult synth_database(const DatabaseSpec& spec, const LatentQualityModel& latent,
                           const std::string& out_dir);

struct SuitePaths {
    std::string isolated_manifest;
    std::string interaction_manifest;
    std::string holdout_manifest;
    std::string truth_dir;
};

/// Three-database suite sharing one latent model: an isolated-artifact
/// calibration split, a mixed-artifact interaction split, and a disjoint
/// mixed-artifact holdout.
SuitePaths synth_default_suite(const std::string& out_dir, std::uint64_t seed,
                               const LatentQualityModel& latent = {}, int signals = 24,
                               int treatments = 7, double duration = 2.5);

}  // namespace csmaq
