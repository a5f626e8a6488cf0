#pragma once

#include <string>
#include <vector>

#include "csmaq/waveform.hpp"

namespace csmaq {

/// Per-frame descriptors the default classifier is a logistic model over.
struct SpeechFrameFeatures {
    double voicing = 0.0;        ///< normalized autocorrelation peak, 60-400 Hz lags
    double syllabic_mod = 0.0;   ///< 2-8 Hz envelope-modulation energy ratio
    double flux_var = 0.0;       ///< spectral-flux variance over ~1 s context
};

/// Pluggable speech-likelihood classifier interface: one decision per 16 ms.
class SpeechClassifier {
public:
    virtual ~SpeechClassifier() = default;
    virtual std::vector<double> classify(const std::vector<double>& mono, int sample_rate) const = 0;
    virtual std::string version() const = 0;
};

/// Default classifier: logistic model on (voicing, syllabic_mod, flux_var),
/// weights fitted once on the bundled synthetic speech/music fixtures and
/// frozen here as a versioned constant set.
class LogisticSpeechClassifier : public SpeechClassifier {
public:
    std::vector<double> classify(const std::vector<double>& mono, int sample_rate) const override;
    std::string version() const override;

    /// Descriptor extraction exposed for tests and refitting.
    static std::vector<SpeechFrameFeatures> frame_features(const std::vector<double>& mono,
                                                           int sample_rate);
};

/// 16 ms decisions from the default classifier.
std::vector<double> extract_prob_speech(const Waveform& w);

/// Averages 16 ms decisions into 100 ms frames: each output frame takes the
/// mean of the decisions whose frame centers fall inside it.
std::vector<double> sync_prob_speech(const std::vector<double>& decisions, std::size_t frames_100ms);

}  // namespace csmaq
