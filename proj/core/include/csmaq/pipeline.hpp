#pragma once

#include <cstddef>

#include "csmaq/waveform.hpp"

namespace csmaq {

struct PipelineConfig {
    double target_spl = 65.0;               ///< presentation level, dB SPL
    int max_lag = 48000;                    ///< cross-correlation search radius
    double silence_threshold = 200.0 / 32768.0;  ///< summed |amplitude| per run
    int silence_run = 1024;                 ///< sliding-window length, samples
};

/// Time-aligned, level-scaled, silence-trimmed reference/system-under-test
/// pair; both waveforms always share length, rate, and channel count.
struct AlignedSignalPair {
    Waveform ref;
    Waveform sut;
    long applied_lag = 0;       ///< samples the SUT was shifted back by
    double gain_ref = 1.0;
    double gain_sut = 1.0;
    std::size_t trim_head = 0;  ///< samples removed from the front
    std::size_t trim_tail = 0;  ///< samples removed from the back
};

/// Lag of the cross-correlation maximum between the mono downmixes over
/// [-max_lag, max_lag]; positive lag means the SUT is late. The SUT is
/// shifted by -lag and both signals truncated to common support.
/// Throws domain_error when the signals are shorter than 2 * max_lag.
AlignedSignalPair delay_compensate(const Waveform& ref, const Waveform& sut, int max_lag);

/// Scales both signals by one common gain chosen so the reference's
/// long-term level (full scale = 100 dB SPL) hits target_spl. Level
/// differences between REF and SUT are preserved as distortion.
/// Throws domain_error on a silent reference.
AlignedSignalPair scale_levels(AlignedSignalPair pair, double target_spl);

/// Removes head/tail regions where every run-sample sliding window is
/// below threshold in BOTH signals. Throws domain_error("all-silent pair")
/// when nothing survives.
AlignedSignalPair trim_silence(AlignedSignalPair pair, double threshold, int run);

/// Full preprocessing chain: delay compensation, level scaling, trimming.
AlignedSignalPair prepare_pair(const Waveform& ref, const Waveform& sut,
                               const PipelineConfig& cfg = {});

}  // namespace csmaq
