#include "csmaq/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "fft.hpp"

namespace csmaq {

namespace {

constexpr int kRate = 48000;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double urand(std::mt19937_64& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

/// Two-pole resonator, unity-ish gain at the center frequency.
struct Resonator {
    double b0 = 0.0, a1 = 0.0, a2 = 0.0;
    double y1 = 0.0, y2 = 0.0;

    void set(double freq, double bandwidth) {
        const double r = std::exp(-std::numbers::pi * bandwidth / kRate);
        a1 = 2.0 * r * std::cos(kTwoPi * freq / kRate);
        a2 = -r * r;
        b0 = (1.0 - r * r) * 0.5;
    }
    double tick(double x) {
        const double y = b0 * x + a1 * y1 + a2 * y2;
        y2 = y1;
        y1 = y;
        return y;
    }
};

double rms_of(const std::vector<double>& x) {
    double acc = 0.0;
    for (double v : x) acc += v * v;
    return std::sqrt(acc / std::max<std::size_t>(1, x.size()));
}

/// Compressed per-band level profile (Welch periodogram, log-spaced bands,
/// power^0.23). The compressive exponent approximates loudness growth so
/// quiet-but-audible high bands carry weight, and the small floor keeps
/// inaudibly faint bands from counting at all.
std::vector<double> band_loudness_profile(const std::vector<double>& x) {
    constexpr std::size_t kWin = 8192;
    constexpr std::size_t kHop = 4096;
    constexpr int kBands = 30;
    constexpr double kFloor = 1e-10;

    std::vector<double> power(kWin / 2 + 1, 0.0);
    detail::RealFft fft(kWin);
    std::vector<double> frame(kWin);
    std::vector<std::complex<double>> bins(fft.bins());
    std::size_t frames = 0;
    for (std::size_t start = 0; start + kWin <= x.size(); start += kHop, ++frames) {
        for (std::size_t i = 0; i < kWin; ++i) {
            const double w = 0.5 - 0.5 * std::cos(kTwoPi * static_cast<double>(i) / kWin);
            frame[i] = x[start + i] * w;
        }
        fft.forward(frame.data(), bins.data());
        for (std::size_t b = 0; b < power.size(); ++b) power[b] += std::norm(bins[b]);
    }
    std::vector<double> loudness(kBands, 0.0);
    if (frames == 0) return loudness;

    const double f_lo = 100.0, f_hi = 20000.0;
    for (int b = 0; b < kBands; ++b) {
        const double e0 = f_lo * std::pow(f_hi / f_lo, static_cast<double>(b) / kBands);
        const double e1 = f_lo * std::pow(f_hi / f_lo, static_cast<double>(b + 1) / kBands);
        const auto k0 = static_cast<std::size_t>(e0 / kRate * kWin);
        const auto k1 = std::min(power.size(), static_cast<std::size_t>(e1 / kRate * kWin));
        double acc = 0.0;
        for (std::size_t k = k0; k < k1; ++k) acc += power[k];
        const double density = acc / (static_cast<double>(frames) * std::max<std::size_t>(1, k1 - k0));
        loudness[static_cast<std::size_t>(b)] = std::pow(std::max(0.0, density - kFloor), 0.23);
    }
    return loudness;
}

void normalize_rms(std::vector<double>& x, double target) {
    const double r = rms_of(x);
    if (r <= 0.0) return;
    const double g = target / r;
    for (double& v : x) v = std::clamp(v * g, -0.999, 0.999);
}

/// Gated formant-filtered pulse trains with occasional fricative bursts.
/// The syllabic gate sits in the 2-8 Hz band but is deliberately shallow so
/// the pause structure does not dominate the loudness variation; busyness
/// owns that via the level wobble applied by render_signal.
std::vector<double> speech_block(std::size_t n, std::mt19937_64& rng) {
    std::vector<double> out(n, 0.0);
    const double f0_base = 105.0 + 80.0 * urand(rng);
    const double syllable_rate = 3.0 + 1.4 * urand(rng);
    const double gate_floor = 0.42;

    Resonator f1, f2, f3, fric;
    fric.set(3100.0, 900.0);

    double phase = 0.0;
    double vibrato_phase = kTwoPi * urand(rng);
    std::size_t next_boundary = 0;
    bool voiced = true;
    double f0 = f0_base;
    std::normal_distribution<double> gauss(0.0, 1.0);

    for (std::size_t i = 0; i < n; ++i) {
        if (i >= next_boundary) {  // new syllable: retarget formants and pitch
            voiced = urand(rng) > 0.28;
            f0 = f0_base * (0.85 + 0.4 * urand(rng));
            f1.set(640.0 * (0.8 + 0.45 * urand(rng)), 120.0);
            f2.set(1650.0 * (0.8 + 0.45 * urand(rng)), 180.0);
            f3.set(2700.0 * (0.88 + 0.25 * urand(rng)), 280.0);
            const double len = kRate / syllable_rate * (0.8 + 0.4 * urand(rng));
            next_boundary = i + static_cast<std::size_t>(len);
        }
        const double pos = 1.0 - static_cast<double>(next_boundary - i) /
                                     std::max(1.0, kRate / syllable_rate);
        // raised-cosine syllable gate, ~60% duty
        double gate = gate_floor;
        if (pos < 0.6) {
            const double edge = std::min({pos / 0.08, (0.6 - pos) / 0.1, 1.0});
            gate = gate_floor + (1.0 - gate_floor) * 0.5 *
                                    (1.0 - std::cos(std::numbers::pi * std::clamp(edge, 0.0, 1.0)));
        }

        double sample = 0.0;
        if (voiced) {
            vibrato_phase += kTwoPi * 4.7 / kRate;
            const double inst_f0 = f0 * (1.0 + 0.05 * std::sin(vibrato_phase));
            phase += inst_f0 / kRate;
            double excitation = 0.0;
            if (phase >= 1.0) {
                phase -= 1.0;
                excitation = 1.0;
            }
            sample = f1.tick(excitation) + 0.7 * f2.tick(excitation) + 0.4 * f3.tick(excitation);
            sample *= 8.0;
        } else {
            sample = 0.55 * fric.tick(gauss(rng));
        }
        out[i] = sample * gate;
    }
    return out;
}

/// Sustained harmonic chords with slow changes plus sparse percussive
/// bursts whose density scales with busyness.
std::vector<double> music_block(std::size_t n, double busyness, std::mt19937_64& rng) {
    std::vector<double> out(n, 0.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    struct Partial {
        double freq, amp, phase;
    };
    std::vector<Partial> partials;
    auto new_chord = [&] {
        partials.clear();
        const double root = 110.0 * std::pow(2.0, urand(rng) * 1.2);
        const bool minor = urand(rng) < 0.5;
        const double intervals[4] = {0.0, minor ? 3.0 : 4.0, 7.0, 12.0};
        for (double semis : intervals) {
            const double note = root * std::pow(2.0, semis / 12.0);
            for (int h = 1; h <= 6; ++h) {
                const double f = note * h * (1.0 + 0.0006 * (urand(rng) - 0.5));
                if (f > 16000.0) break;
                partials.push_back({f, std::pow(h, -1.3) * (0.7 + 0.3 * urand(rng)),
                                    kTwoPi * urand(rng)});
            }
        }
    };
    new_chord();
    std::size_t chord_end =
        static_cast<std::size_t>(kRate * (1.1 + 0.6 * urand(rng)));
    double chord_age = 0.0;

    // percussion event list
    double perc_env = 0.0;
    std::size_t next_perc = static_cast<std::size_t>(
        kRate / (0.7 + 1.8 * busyness) * (0.4 + urand(rng)));
    const double perc_amp = 0.25 + 0.75 * busyness;

    for (std::size_t i = 0; i < n; ++i) {
        if (i >= chord_end) {
            new_chord();
            chord_age = 0.0;
            chord_end = i + static_cast<std::size_t>(kRate * (1.1 + 0.6 * urand(rng)));
        }
        chord_age += 1.0 / kRate;
        const double attack = std::min(1.0, chord_age / 0.18);
        double s = 0.0;
        for (auto& p : partials) {
            p.phase += kTwoPi * p.freq / kRate;
            s += p.amp * std::sin(p.phase);
        }
        s *= 0.22 * attack;

        if (i >= next_perc) {
            perc_env = perc_amp * (0.6 + 0.4 * urand(rng));
            next_perc = i + static_cast<std::size_t>(
                                kRate / (0.7 + 1.8 * busyness) * (0.4 + 1.2 * urand(rng)));
        }
        if (perc_env > 1e-5) {
            s += perc_env * 0.5 * gauss(rng);
            perc_env *= std::exp(-1.0 / (0.012 * kRate));
        }
        out[i] = s;
    }
    return out;
}

std::vector<std::pair<ArtifactKind, double>> flatten_recipe(const ArtifactRecipe& r,
                                                            double scale) {
    std::vector<std::pair<ArtifactKind, double>> parts;
    const double eff = r.severity * scale;
    if (eff <= 0.0) return parts;
    if (r.kind == ArtifactKind::Combination) {
        for (const auto& p : r.parts) {
            auto sub = flatten_recipe(p, eff);
            parts.insert(parts.end(), sub.begin(), sub.end());
        }
    } else {
        parts.emplace_back(r.kind, eff);
    }
    return parts;
}

double apply_lowpass(std::vector<double>& x, double severity) {
    const double fc = 16000.0 / (1.0 + 4.0 * severity);
    constexpr int kTaps = 257;
    constexpr int kHalf = kTaps / 2;
    std::vector<double> h(kTaps);
    double sum = 0.0;
    for (int k = 0; k < kTaps; ++k) {
        const int m = k - kHalf;
        const double sinc = m == 0 ? 2.0 * fc / kRate
                                   : std::sin(kTwoPi * fc * m / kRate) / (std::numbers::pi * m);
        const double win = 0.54 - 0.46 * std::cos(kTwoPi * k / (kTaps - 1));
        h[static_cast<std::size_t>(k)] = sinc * win;
        sum += h[static_cast<std::size_t>(k)];
    }
    for (double& v : h) v /= sum;

    const auto n = static_cast<long>(x.size());
    std::vector<double> y(x.size(), 0.0);
    for (long i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int k = 0; k < kTaps; ++k) {
            const long j = i + k - kHalf;  // delay-compensated
            if (j >= 0 && j < n) acc += h[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(j)];
        }
        y[static_cast<std::size_t>(i)] = acc;
    }
    // fraction of loudness removed by the band limit (raw energy fraction is
    // useless here: dark content keeps it near the filter's ripple floor)
    const auto before = band_loudness_profile(x);
    const auto after = band_loudness_profile(y);
    double l_before = 0.0, l_after = 0.0;
    for (std::size_t b = 0; b < before.size(); ++b) {
        l_before += before[b];
        l_after += after[b];
    }
    x = std::move(y);
    return l_before > 0.0 ? std::clamp(1.0 - l_after / l_before, 0.0, 1.0) : 0.0;
}

double apply_additive_noise(std::vector<double>& x, double severity, std::mt19937_64& rng) {
    const double snr_db = 42.0 - 36.0 * severity;
    const double rel = std::pow(10.0, -snr_db / 20.0);
    std::normal_distribution<double> gauss(0.0, rms_of(x) * rel);
    for (double& v : x) v += gauss(rng);
    return rel;
}

double apply_harmonic_comb(std::vector<double>& x, double severity, std::mt19937_64& rng) {
    const double f0 = 660.0 + 80.0 * urand(rng);
    std::vector<double> phases;
    std::vector<double> amps;
    for (int h = 1; h * f0 < 8800.0; ++h) {
        phases.push_back(kTwoPi * urand(rng));
        amps.push_back(std::pow(h, -0.5));
    }
    // signal-tracking amplitude so the error follows the source envelope
    double env = 0.0;
    const double env_a = std::exp(-1.0 / (0.030 * kRate));
    std::vector<double> err(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        env = env_a * env + (1.0 - env_a) * std::fabs(x[i]);
        double s = 0.0;
        for (std::size_t h = 0; h < phases.size(); ++h)
            s += amps[h] * std::sin(phases[h] + kTwoPi * f0 * (h + 1) * i / kRate);
        err[i] = s * env;
    }
    const double rel = 0.02 + 0.13 * severity * severity;
    const double target = rms_of(x) * rel;
    const double er = rms_of(err);
    if (er > 0.0)
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += err[i] * (target / er);
    return rel;
}

double apply_modulation_smear(std::vector<double>& x, double severity) {
    const double fast_a = std::exp(-1.0 / (0.004 * kRate));
    const double slow_tau = 0.060 + 0.240 * std::min(1.0, severity);
    const double slow_a = std::exp(-1.0 / (slow_tau * kRate));
    const double k = 0.85 * std::min(1.0, severity);
    double fast = 1e-6, slow = 1e-6;
    double e_ref = 0.0, e_diff = 0.0;
    for (double& v : x) {
        const double a = std::fabs(v) + 1e-9;
        fast = fast_a * fast + (1.0 - fast_a) * a;
        slow = slow_a * slow + (1.0 - slow_a) * a;
        const double ratio = std::clamp(slow / fast, 0.05, 20.0);
        const double out = v * std::pow(ratio, k);
        e_ref += v * v;
        e_diff += (out - v) * (out - v);
        v = out;
    }
    // relative deviation actually introduced; grows with transient density
    return e_ref > 0.0 ? std::sqrt(e_diff / e_ref) : 0.0;
}

double apply_level_offset(std::vector<double>& x, double severity) {
    const double gain = std::pow(10.0, -6.0 * severity / 20.0);
    const std::size_t half = x.size() / 2;
    const auto ramp = static_cast<std::size_t>(0.030 * kRate);
    for (std::size_t i = half; i < x.size(); ++i) {
        double g = gain;
        if (i - half < ramp) {
            const double t = static_cast<double>(i - half) / ramp;
            g = 1.0 + (gain - 1.0) * 0.5 * (1.0 - std::cos(std::numbers::pi * t));
        }
        x[i] *= g;
    }
    return 1.0 - gain;
}

std::string two_digits(int v) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%02d", v);
    return buf;
}

/// Treatment recipe for slot t (t=0 is the hidden reference). Severities get
/// a per-item jitter factor so signals see slightly different strengths.
/// The isolated profile keeps one artifact kind per signal and ramps its
/// severity across slots, so every signal traces a clean single-artifact
/// response curve that calibration can attribute to one metric.
ArtifactRecipe recipe_for(TreatmentProfile profile, int signal, int t, int treatments,
                          double jitter) {
    ArtifactRecipe r;
    if (t == 0) {
        r.severity = 0.0;
        return r;
    }
    if (profile == TreatmentProfile::Isolated) {
        static const ArtifactKind cycle[5] = {
            ArtifactKind::Lowpass, ArtifactKind::AdditiveNoise, ArtifactKind::HarmonicComb,
            ArtifactKind::ModulationSmear, ArtifactKind::LevelOffset};
        r.kind = cycle[signal % 5];
        const double frac =
            treatments > 2 ? static_cast<double>(t - 1) / (treatments - 2) : 0.5;
        r.severity = (0.35 + 0.60 * frac) * jitter;
        return r;
    }
    switch ((t - 1) % 6) {
        case 0:
            r.kind = ArtifactKind::Lowpass;
            r.severity = 0.38 * jitter;
            break;
        case 1:
            r.kind = ArtifactKind::AdditiveNoise;
            r.severity = 0.42 * jitter;
            break;
        case 2:
            r.kind = ArtifactKind::Lowpass;
            r.severity = 0.85 * jitter;
            break;
        case 3:
            r.kind = ArtifactKind::AdditiveNoise;
            r.severity = 0.88 * jitter;
            break;
        case 4:
            r.kind = ArtifactKind::HarmonicComb;
            r.severity = 0.62 * jitter;
            break;
        default: {
            // Smear plus a mild comb: both live on the addition/modulation
            // side, so the mixed suite keeps the spectral-loss metric driven
            // by band-limiting alone. A sustained level offset here would
            // register as broadband spectral loss on every signal and blur
            // the contrast between content classes that the adaptive weights
            // are meant to pick up.
            r.kind = ArtifactKind::Combination;
            r.severity = jitter;
            ArtifactRecipe ms, hc;
            ms.kind = ArtifactKind::ModulationSmear;
            ms.severity = 0.60;
            hc.kind = ArtifactKind::HarmonicComb;
            hc.severity = 0.30;
            r.parts = {ms, hc};
            break;
        }
    }
    return r;
}

}  // namespace

const char* artifact_name(ArtifactKind kind) {
    switch (kind) {
        case ArtifactKind::Lowpass: return "lowpass";
        case ArtifactKind::AdditiveNoise: return "additive-noise";
        case ArtifactKind::HarmonicComb: return "harmonic-comb-error";
        case ArtifactKind::ModulationSmear: return "modulation-smearing";
        case ArtifactKind::LevelOffset: return "level-offset";
        case ArtifactKind::Combination: return "combination";
    }
    return "?";
}

std::string ArtifactRecipe::label() const {
    if (severity <= 0.0) return "identity";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s-%.2f", artifact_name(kind), severity);
    std::string out = buf;
    if (kind == ArtifactKind::Combination) {
        out += "[";
        for (std::size_t i = 0; i < parts.size(); ++i) {
            if (i) out += "+";
            out += parts[i].label();
        }
        out += "]";
    }
    return out;
}

Waveform render_signal(const SignalCharacter& character, double duration,
                       std::uint64_t seed) {
    if (duration < 2.0 || duration > 30.0)
        throw domain_error("render_signal: duration must be in [2, 30] s");
    const auto n = static_cast<std::size_t>(duration * kRate);
    std::mt19937_64 rng(split_seed(seed, 21, 0));

    std::vector<double> x;
    switch (character.kind) {
        case SourceKind::SpeechLike:
            x = speech_block(n, rng);
            break;
        case SourceKind::MusicLike:
            x = music_block(n, character.busyness, rng);
            break;
        case SourceKind::Mixed: {
            const double s = std::clamp(character.speechiness, 0.0, 1.0);
            if (s >= 0.92) {
                x = speech_block(n, rng);
            } else if (s <= 0.08) {
                x = music_block(n, character.busyness, rng);
            } else {
                const auto n_speech = static_cast<std::size_t>(n * s);
                auto music = music_block(n - n_speech, character.busyness, rng);
                auto speech = speech_block(n_speech, rng);
                normalize_rms(music, 0.1);
                normalize_rms(speech, 0.1);
                x = std::move(music);
                const auto fade = std::min<std::size_t>(
                    static_cast<std::size_t>(0.050 * kRate), n_speech);
                x.insert(x.end(), speech.begin(), speech.end());
                const std::size_t b = n - n_speech;
                for (std::size_t i = 0; i < fade && b + i < x.size() && b >= fade; ++i) {
                    const double t = static_cast<double>(i) / fade;
                    x[b - fade + i] *= 1.0 - 0.5 * t;
                    x[b + i] *= 0.5 + 0.5 * t;
                }
            }
            break;
        }
    }

    // busyness-controlled slow level wobble (below the syllabic band)
    const double depth_db = 1.0 + 5.0 * std::clamp(character.busyness, 0.0, 1.0);
    const double p1 = kTwoPi * urand(rng), p2 = kTwoPi * urand(rng);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double t = static_cast<double>(i) / kRate;
        const double s =
            0.6 * std::sin(kTwoPi * 0.55 * t + p1) + 0.4 * std::sin(kTwoPi * 0.9 * t + p2);
        x[i] *= std::pow(10.0, depth_db * s / 20.0);
    }
    // Band-limit every source to the severity-0 cutoff so a zero-severity
    // band-limit treatment removes no energy from any reference.
    apply_lowpass(x, 0.0);
    normalize_rms(x, 0.08);

    Waveform w;
    w.sample_rate = kRate;
    w.channels = {std::move(x)};
    return w;
}

Waveform synth_source(SourceKind kind, double duration, std::uint64_t seed) {
    SignalCharacter c;
    c.kind = kind;
    c.speechiness = kind == SourceKind::SpeechLike ? 1.0
                    : kind == SourceKind::Mixed    ? 0.5
                                                   : 0.0;
    c.busyness = 0.35;
    return render_signal(c, duration, seed);
}

Waveform apply_artifact(const Waveform& w, const ArtifactRecipe& recipe, std::uint64_t seed,
                        std::vector<AppliedArtifact>* applied) {
    const auto parts = flatten_recipe(recipe, 1.0);
    if (applied) applied->clear();
    if (parts.empty()) return w;

    Waveform out = w;
    std::size_t part_index = 0;
    for (const auto& [kind, severity] : parts) {
        std::mt19937_64 rng(split_seed(seed, 31, part_index++));
        double physical = 0.0;
        for (auto& ch : out.channels) {
            switch (kind) {
                case ArtifactKind::Lowpass:
                    physical = std::max(physical, apply_lowpass(ch, severity));
                    break;
                case ArtifactKind::AdditiveNoise:
                    physical = std::max(physical, apply_additive_noise(ch, severity, rng));
                    break;
                case ArtifactKind::HarmonicComb:
                    physical = std::max(physical, apply_harmonic_comb(ch, severity, rng));
                    break;
                case ArtifactKind::ModulationSmear:
                    physical = std::max(physical, apply_modulation_smear(ch, severity));
                    break;
                case ArtifactKind::LevelOffset:
                    physical = std::max(physical, apply_level_offset(ch, severity));
                    break;
                case ArtifactKind::Combination:
                    throw domain_error("apply_artifact: nested combination not flattened");
            }
        }
        if (applied) applied->push_back({kind, severity, physical});
    }
    return out;
}

double LatentQualityModel::quality(const std::vector<AppliedArtifact>& applied,
                                   const SignalCharacter& character) const {
    double drop = 0.0;
    for (const auto& part : applied) {
        double d = 0.0;
        switch (part.kind) {
            case ArtifactKind::Lowpass: {
                // severity curve scaled by a bounded content factor: band
                // limiting dark content is cheaper than bright content, but the
                // planted speechiness gate stays the dominant modulation
                const double typical = 0.014 + 0.083 * part.severity;
                const double content =
                    std::clamp(0.4 + 0.6 * part.physical / typical, 0.2, 2.0);
                d = 58.0 * std::pow(part.severity, 1.1) * content;
                d *= 1.0 - speech_lowpass_discount * std::clamp(character.speechiness, 0.0, 1.0);
                break;
            }
            case ArtifactKind::AdditiveNoise:
                // compressive in the relative noise level, roughly tracking
                // loudness growth rather than the raw amplitude ratio
                d = 90.0 * std::pow(part.physical, 0.44);
                d *= 1.0 - busy_noise_discount * std::clamp(character.busyness, 0.0, 1.0);
                break;
            case ArtifactKind::HarmonicComb:
                d = 46.0 * std::pow(part.severity, 1.05);
                break;
            case ArtifactKind::ModulationSmear: {
                // deviation-driven content factor: smearing a static pad is
                // cheaper than smearing dense transients
                const double typical = std::max(0.365 * part.severity, 1e-6);
                const double content =
                    std::clamp(0.4 + 0.6 * part.physical / typical, 0.2, 2.0);
                d = 38.0 * part.severity * content;
                break;
            }
            case ArtifactKind::LevelOffset:
                d = 30.0 * part.severity;
                break;
            case ArtifactKind::Combination:
                break;
        }
        drop += d;
    }
    return std::clamp(100.0 - drop, 0.0, 100.0);
}

SynthResult synth_database(const DatabaseSpec& spec, const LatentQualityModel& latent,
                           const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    SynthResult result;
    result.db.root = out_dir;

    // per-signal characters: evenly spread speechiness (shuffled) against a
    // golden-ratio busyness sequence so the two stay decorrelated
    std::vector<double> speechiness(static_cast<std::size_t>(spec.signals));
    for (int j = 0; j < spec.signals; ++j)
        speechiness[static_cast<std::size_t>(j)] = (j + 0.5) / spec.signals;
    std::mt19937_64 shuffle_rng(split_seed(spec.seed, 2, 0));
    std::shuffle(speechiness.begin(), speechiness.end(), shuffle_rng);

    const double noise_sd =
        latent.listeners > 0 ? latent.listener_sigma / std::sqrt(latent.listeners) : 0.0;

    for (int j = 0; j < spec.signals; ++j) {
        SignalCharacter character;
        character.kind = SourceKind::Mixed;
        character.speechiness = speechiness[static_cast<std::size_t>(j)];
        character.busyness = std::fmod(0.31 + j * 0.61803398874989, 1.0);

        const std::string signal_id = spec.id_prefix + two_digits(j);
        const Waveform ref =
            render_signal(character, spec.duration, split_seed(spec.seed, 11, static_cast<std::uint64_t>(j)));
        const std::string ref_name = signal_id + "_ref.wav";
        save_waveform(ref, out_dir + "/" + ref_name);

        for (int t = 0; t < spec.treatments; ++t) {
            const auto idx = static_cast<std::uint64_t>(j) * 4096 + static_cast<std::uint64_t>(t);
            std::mt19937_64 jit_rng(split_seed(spec.seed, 13, idx));
            const double jitter = 0.78 + 0.44 * urand(jit_rng);
            const ArtifactRecipe recipe =
                recipe_for(spec.profile, j, t, spec.treatments, jitter);

            std::vector<AppliedArtifact> applied;
            const Waveform sut =
                apply_artifact(ref, recipe, split_seed(spec.seed, 12, idx), &applied);
            const std::string sut_name = signal_id + "_t" + two_digits(t) + ".wav";
            save_waveform(sut, out_dir + "/" + sut_name);

            const double q = latent.quality(applied, character);
            double score = q;
            if (noise_sd > 0.0) {
                std::mt19937_64 rng(split_seed(spec.seed, 14, idx));
                score += std::normal_distribution<double>(0.0, noise_sd)(rng);
            }
            score = std::clamp(score, 0.0, 100.0);

            DbItem item;
            item.signal_id = signal_id;
            item.treatment_id = "t" + two_digits(t);
            item.ref_path = ref_name;
            item.sut_path = sut_name;
            item.mean_score = score;
            item.scale = ScaleKind::Mushra;
            result.db.items.push_back(std::move(item));

            GroundTruthRow row;
            row.signal_id = signal_id;
            row.treatment_id = "t" + two_digits(t);
            row.recipe = recipe.label();
            row.latent_quality = q;
            row.speechiness = character.speechiness;
            row.busyness = character.busyness;
            result.truth.push_back(std::move(row));
        }
    }

    result.db.validate();
    result.manifest_path = out_dir + "/manifest.csv";
    save_manifest(result.db, result.manifest_path);

    result.truth_path = out_dir + "/groundtruth.csv";
    std::ofstream truth(result.truth_path);
    if (!truth) throw io_error("cannot write " + result.truth_path);
    truth << "signal_id,treatment_id,recipe,latent_quality,speechiness,busyness\n";
    for (const auto& row : result.truth)
        truth << row.signal_id << "," << row.treatment_id << "," << row.recipe << ","
              << format_double(row.latent_quality) << "," << format_double(row.speechiness)
              << "," << format_double(row.busyness) << "\n";
    return result;
}

SuitePaths synth_default_suite(const std::string& out_dir, std::uint64_t seed,
                               const LatentQualityModel& latent, int signals,
                               int treatments, double duration) {
    SuitePaths paths;
    paths.truth_dir = out_dir;

    DatabaseSpec iso;
    iso.signals = signals;
    iso.treatments = treatments;
    iso.duration = duration;
    iso.seed = split_seed(seed, 1, 1);
    iso.profile = TreatmentProfile::Isolated;
    iso.id_prefix = "iso";
    paths.isolated_manifest = synth_database(iso, latent, out_dir + "/isolated").manifest_path;

    DatabaseSpec mix = iso;
    mix.seed = split_seed(seed, 1, 2);
    mix.profile = TreatmentProfile::Mixed;
    mix.id_prefix = "mix";
    paths.interaction_manifest =
        synth_database(mix, latent, out_dir + "/interaction").manifest_path;

    DatabaseSpec hold = mix;
    hold.seed = split_seed(seed, 1, 3);
    hold.id_prefix = "hold";
    paths.holdout_manifest = synth_database(hold, latent, out_dir + "/holdout").manifest_path;
    return paths;
}

}  // namespace csmaq
