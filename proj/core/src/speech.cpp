#include "csmaq/speech.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "fft.hpp"

namespace csmaq {

namespace {

constexpr int kHop = 768;          // 16 ms at 48 kHz
constexpr int kWindow = 2048;      // voicing/flux analysis span
constexpr int kFftSize = 4096;     // zero-padded for lag-domain autocorrelation
constexpr int kLagLow = 120;       // 400 Hz
constexpr int kLagHigh = 800;      // 60 Hz
constexpr int kContext = 64;       // ~1 s of 16 ms frames for modulation stats

// Logistic weights of the default classifier, fitted once on the bundled
// synthetic speech/music fixture set (see tools/fit_speech_weights) and
// frozen. Order: bias, voicing, syllabic_mod, flux_var.
constexpr const char* kClassifierVersion = "logistic-v1";
constexpr double kBias = -3.336747;
constexpr double kWVoicing = 0.903799;
constexpr double kWSyllabic = 10.708523;
constexpr double kWFluxVar = 98.532397;

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

std::vector<SpeechFrameFeatures> LogisticSpeechClassifier::frame_features(
    const std::vector<double>& mono, int sample_rate) {
    if (sample_rate != 48000)
        throw domain_error("speech classifier expects 48 kHz input");
    const std::size_t n = mono.size();
    const std::size_t frames = std::max<std::size_t>(1, n / kHop);

    detail::RealFft fft(kFftSize);
    std::vector<double> padded(kFftSize, 0.0);
    std::vector<std::complex<double>> spec(fft.bins());
    std::vector<double> autocorr(kFftSize);
    std::vector<double> prefix_sq(kWindow + 1, 0.0);

    std::vector<double> env(frames, 0.0);
    std::vector<double> flux(frames, 0.0);
    std::vector<SpeechFrameFeatures> out(frames);
    std::vector<double> prev_mag;

    for (std::size_t f = 0; f < frames; ++f) {
        const std::size_t start = f * kHop;
        std::fill(padded.begin(), padded.end(), 0.0);
        double hop_energy = 0.0;
        for (int t = 0; t < kWindow; ++t) {
            const std::size_t idx = start + static_cast<std::size_t>(t);
            const double v = idx < n ? mono[idx] : 0.0;
            padded[t] = v;
            prefix_sq[t + 1] = prefix_sq[t] + v * v;
            if (t < kHop) hop_energy += v * v;
        }
        env[f] = std::sqrt(hop_energy / kHop);

        fft.forward(padded.data(), spec.data());

        // Spectral flux between consecutive frames, energy-normalized.
        double mag_sum = 0.0;
        std::vector<double> mag(spec.size());
        for (std::size_t k = 0; k < spec.size(); ++k) {
            mag[k] = std::abs(spec[k]);
            mag_sum += mag[k] * mag[k];
        }
        if (!prev_mag.empty()) {
            double num = 0.0, den = mag_sum;
            for (std::size_t k = 0; k < spec.size(); ++k) {
                const double d = mag[k] - prev_mag[k];
                num += d * d;
                den += prev_mag[k] * prev_mag[k];
            }
            flux[f] = den > 0.0 ? num / den : 0.0;
        }

        // Voicing: normalized autocorrelation peak in the pitch lag range.
        const double total_energy = prefix_sq[kWindow];
        double voicing = 0.0;
        if (total_energy > 1e-12) {
            for (std::size_t k = 0; k < spec.size(); ++k) spec[k] = std::norm(spec[k]);
            fft.inverse(spec.data(), autocorr.data());
            for (int lag = kLagLow; lag <= kLagHigh; ++lag) {
                const double e_head = prefix_sq[kWindow - lag];
                const double e_tail = total_energy - prefix_sq[lag];
                const double denom = std::sqrt(e_head * e_tail);
                if (denom <= 0.0) continue;
                voicing = std::max(voicing, autocorr[lag] / denom);
            }
            voicing = std::clamp(voicing, 0.0, 1.0);
        }
        out[f].voicing = voicing;
        prev_mag = std::move(mag);
    }

    // Context features over a trailing ~1 s window of the envelope series.
    for (std::size_t f = 0; f < frames; ++f) {
        const std::size_t lo = f + 1 >= kContext ? f + 1 - kContext : 0;
        const std::size_t len = f + 1 - lo;
        if (len >= 16) {
            double m = 0.0;
            for (std::size_t i = lo; i <= f; ++i) m += env[i];
            m /= static_cast<double>(len);
            double total = 0.0;
            for (std::size_t i = lo; i <= f; ++i) total += (env[i] - m) * (env[i] - m);
            if (total > 1e-18) {
                // DFT bins of the envelope (62.5 Hz frame rate) covering
                // the 2-8 Hz syllabic band.
                const double bin_hz = 62.5 / static_cast<double>(len);
                double band = 0.0;
                const int k_lo = std::max(1, static_cast<int>(std::ceil(2.0 / bin_hz)));
                const int k_hi = static_cast<int>(std::floor(8.0 / bin_hz));
                for (int k = k_lo; k <= k_hi; ++k) {
                    double re = 0.0, im = 0.0;
                    for (std::size_t i = 0; i < len; ++i) {
                        const double ph = 2.0 * M_PI * k * static_cast<double>(i) /
                                          static_cast<double>(len);
                        const double c = env[lo + i] - m;
                        re += c * std::cos(ph);
                        im -= c * std::sin(ph);
                    }
                    band += (re * re + im * im) / static_cast<double>(len);
                }
                out[f].syllabic_mod = std::clamp(band / total, 0.0, 1.0);
            }
            double fm = 0.0;
            for (std::size_t i = lo; i <= f; ++i) fm += flux[i];
            fm /= static_cast<double>(len);
            double fv = 0.0;
            for (std::size_t i = lo; i <= f; ++i) fv += (flux[i] - fm) * (flux[i] - fm);
            out[f].flux_var = fv / static_cast<double>(len);
        }
    }
    return out;
}

std::vector<double> LogisticSpeechClassifier::classify(const std::vector<double>& mono,
                                                       int sample_rate) const {
    const auto features = frame_features(mono, sample_rate);
    std::vector<double> p(features.size());
    for (std::size_t i = 0; i < features.size(); ++i)
        p[i] = logistic(kBias + kWVoicing * features[i].voicing +
                        kWSyllabic * features[i].syllabic_mod +
                        kWFluxVar * features[i].flux_var);
    return p;
}

std::string LogisticSpeechClassifier::version() const { return kClassifierVersion; }

std::vector<double> extract_prob_speech(const Waveform& w) {
    static const LogisticSpeechClassifier classifier;
    return classifier.classify(w.mono_mix(), w.sample_rate);
}

std::vector<double> sync_prob_speech(const std::vector<double>& decisions,
                                     std::size_t frames_100ms) {
    // Decision k covers samples [k*768, (k+1)*768); it belongs to the
    // 100 ms frame containing its center sample.
    std::vector<double> out(frames_100ms, 0.0);
    std::vector<int> counts(frames_100ms, 0);
    for (std::size_t k = 0; k < decisions.size(); ++k) {
        const std::size_t center = k * 768 + 384;
        const std::size_t frame = center / 4800;
        if (frame >= frames_100ms) break;
        out[frame] += decisions[k];
        ++counts[frame];
    }
    double last = 0.0;
    for (std::size_t t = 0; t < frames_100ms; ++t) {
        if (counts[t] > 0) {
            out[t] /= counts[t];
            last = out[t];
        } else {
            out[t] = last;  // past-the-end frames inherit the last decision
        }
    }
    return out;
}

}  // namespace csmaq
