#pragma once

#include <string>
#include <vector>

#include "csmaq/common.hpp"
#include "csmaq/waveform.hpp"

namespace csmaq {

/// All constants of the auditory front end. Changing any field invalidates
/// saved models: the hash of this struct is stored in every model file and
/// checked at scoring time.
struct FrontEndConfig {
    int sample_rate = 48000;
    int window_size = 2048;       ///< Hann analysis window, samples
    int hop_size = 960;           ///< 20 ms internal frame hop
    int bands = 40;               ///< auditory filterbank bands
    double f_min = 80.0;          ///< Hz, lower edge of the band scale
    double f_max = 18000.0;       ///< Hz, upper edge of the band scale
    double alpha = 0.23;          ///< loudness-compression exponent
    double forward_tau = 0.050;   ///< forward-masking time constant, seconds
    double full_scale_spl = 100.0;///< SPL assigned to a full-scale sinusoid
    double spread_lower = 31.0;   ///< lower-slope spreading, dB per band unit
    int aux_bins = 384;           ///< retained linear-frequency bins (0-9 kHz)

    /// 16-hex-digit digest of every field; stored in models and features.
    std::string hash() const;
};

/// Time-pitch-loudness representation: frames(t, b) holds compressed
/// loudness, never below the per-band internal-noise floor. aux_spectrum
/// retains the ear-weighted linear-frequency power spectrum (aux_bins
/// columns, bin width sample_rate / window_size) for harmonic-structure
/// analysis.
struct ExcitationPattern {
    Matrix frames;                      ///< T x bands
    std::vector<double> band_centers;   ///< Hz, size bands
    std::vector<double> floor_values;   ///< compressed internal-noise floor per band
    double frame_hop = 0.02;            ///< seconds
    double alpha = 0.23;                ///< compression exponent the frames carry
    Matrix aux_spectrum;                ///< T x aux_bins, power units
};

/// Per-band modulation measure derived from the excitation envelope:
/// smoothed rectified temporal derivative over smoothed envelope level.
struct ModulationPattern {
    Matrix frames;  ///< T x bands, entries >= 0
};

/// Pitch-scale value (critical-band-rate style) for a frequency in Hz.
double pitch_scale(double hz);

/// Frequency response of band b at frequency hz: the fractional overlap
/// weight the filterbank applies to a spectral line there, in [0, 1].
/// Exposed so tests can locate each band's passband independently.
double band_response(const FrontEndConfig& cfg, int band, double hz);

ExcitationPattern compute_excitation(const Waveform& w, const FrontEndConfig& cfg);
ModulationPattern compute_modulation(const ExcitationPattern& e);

}  // namespace csmaq
