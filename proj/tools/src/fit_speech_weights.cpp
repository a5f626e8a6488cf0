// Fits the logistic speech/music classifier weights on rendered synthetic
// fixtures and prints the constant block used by LogisticSpeechClassifier.
// Rerun after changing the source generators or the frame descriptors, then
// paste the printed values into core/src/speech.cpp.

#include <cmath>
#include <cstdio>
#include <vector>

#include "csmaq/speech.hpp"
#include "csmaq/synthetic.hpp"

using namespace csmaq;

namespace {

struct Sample {
    double x[3];
    double label;
};

void collect(std::vector<Sample>& out, const Waveform& w, double label) {
    const auto feats = LogisticSpeechClassifier::frame_features(w.channels[0], w.sample_rate);
    for (const auto& f : feats)
        out.push_back({{f.voicing, f.syllabic_mod, f.flux_var}, label});
}

}  // namespace

int main() {
    std::vector<Sample> samples;
    for (std::uint64_t seed = 1; seed <= 24; ++seed) {
        SignalCharacter speech;
        speech.kind = SourceKind::SpeechLike;
        speech.speechiness = 1.0;
        speech.busyness = 0.1 + 0.8 * ((seed - 1) % 5) / 4.0;
        collect(samples, render_signal(speech, 3.0, seed), 1.0);

        SignalCharacter music;
        music.kind = SourceKind::MusicLike;
        music.speechiness = 0.0;
        music.busyness = speech.busyness;
        collect(samples, render_signal(music, 3.0, seed + 1000), 0.0);
    }
    std::printf("frames: %zu\n", samples.size());

    // Newton-Raphson logistic regression with a small ridge for stability.
    double beta[4] = {0.0, 0.0, 0.0, 0.0};
    const double ridge = 1e-4;
    for (int iter = 0; iter < 60; ++iter) {
        double grad[4] = {0, 0, 0, 0};
        double hess[4][4] = {};
        for (const auto& s : samples) {
            const double z[4] = {1.0, s.x[0], s.x[1], s.x[2]};
            double eta = 0.0;
            for (int i = 0; i < 4; ++i) eta += beta[i] * z[i];
            const double p = 1.0 / (1.0 + std::exp(-eta));
            const double w = std::max(p * (1.0 - p), 1e-9);
            for (int i = 0; i < 4; ++i) {
                grad[i] += (s.label - p) * z[i];
                for (int j = 0; j < 4; ++j) hess[i][j] += w * z[i] * z[j];
            }
        }
        for (int i = 0; i < 4; ++i) {
            grad[i] -= ridge * beta[i];
            hess[i][i] += ridge;
        }
        // solve hess * step = grad by Gaussian elimination
        double a[4][5];
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) a[i][j] = hess[i][j];
            a[i][4] = grad[i];
        }
        for (int c = 0; c < 4; ++c) {
            int piv = c;
            for (int r = c + 1; r < 4; ++r)
                if (std::fabs(a[r][c]) > std::fabs(a[piv][c])) piv = r;
            for (int j = 0; j < 5; ++j) std::swap(a[c][j], a[piv][j]);
            for (int r = 0; r < 4; ++r) {
                if (r == c) continue;
                const double f = a[r][c] / a[c][c];
                for (int j = c; j < 5; ++j) a[r][j] -= f * a[c][j];
            }
        }
        double norm = 0.0;
        for (int i = 0; i < 4; ++i) {
            const double step = a[i][4] / a[i][i];
            beta[i] += step;
            norm += step * step;
        }
        if (norm < 1e-18) break;
    }

    int correct = 0;
    double speech_mean = 0.0, music_mean = 0.0;
    int n_speech = 0, n_music = 0;
    for (const auto& s : samples) {
        const double eta =
            beta[0] + beta[1] * s.x[0] + beta[2] * s.x[1] + beta[3] * s.x[2];
        const double p = 1.0 / (1.0 + std::exp(-eta));
        if ((p > 0.5) == (s.label > 0.5)) ++correct;
        if (s.label > 0.5) {
            speech_mean += p;
            ++n_speech;
        } else {
            music_mean += p;
            ++n_music;
        }
    }
    std::printf("train accuracy: %.4f\n", static_cast<double>(correct) / samples.size());
    std::printf("mean p(speech fixtures): %.4f\n", speech_mean / n_speech);
    std::printf("mean p(music fixtures):  %.4f\n", music_mean / n_music);
    std::printf("\nconstexpr double kBias = %.6f;\n", beta[0]);
    std::printf("constexpr double kWVoicing = %.6f;\n", beta[1]);
    std::printf("constexpr double kWSyllabic = %.6f;\n", beta[2]);
    std::printf("constexpr double kWFluxVar = %.6f;\n", beta[3]);
    return 0;
}
