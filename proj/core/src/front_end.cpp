#include "csmaq/front_end.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "fft.hpp"

namespace csmaq {

namespace {

/// Critical-band-rate style pitch scale, asinh-warped frequency.
constexpr double kPitchScaleGain = 7.0;
constexpr double kPitchScaleKnee = 650.0;

/// Outer/middle-ear transfer weight in dB at frequency hz.
double ear_weight_db(double hz) {
    const double k = hz / 1000.0;
    return -2.184 * std::pow(k, -0.8) + 6.5 * std::exp(-0.6 * (k - 3.3) * (k - 3.3)) -
           1e-3 * std::pow(k, 3.6);
}

/// Internal-noise energy at band center hz (absolute-threshold surrogate).
double internal_noise_energy(double hz) {
    const double k = hz / 1000.0;
    return std::pow(10.0, 0.4 * 0.364 * std::pow(k, -0.8));
}

double inv_pitch_scale(double z) {
    return kPitchScaleKnee * std::sinh(z / kPitchScaleGain);
}

struct BandLayout {
    std::vector<double> centers_hz;
    std::vector<double> edges_z;    ///< bands+1 pitch-scale edges
    double dz = 0.0;                ///< band width in pitch units
};

BandLayout make_layout(const FrontEndConfig& cfg) {
    BandLayout layout;
    const double z_lo = pitch_scale(cfg.f_min);
    const double z_hi = pitch_scale(cfg.f_max);
    layout.dz = (z_hi - z_lo) / cfg.bands;
    layout.edges_z.resize(cfg.bands + 1);
    layout.centers_hz.resize(cfg.bands);
    for (int b = 0; b <= cfg.bands; ++b) layout.edges_z[b] = z_lo + b * layout.dz;
    for (int b = 0; b < cfg.bands; ++b)
        layout.centers_hz[b] = inv_pitch_scale(z_lo + (b + 0.5) * layout.dz);
    return layout;
}

}  // namespace

double pitch_scale(double hz) { return kPitchScaleGain * std::asinh(hz / kPitchScaleKnee); }

double band_response(const FrontEndConfig& cfg, int band, double hz) {
    const BandLayout layout = make_layout(cfg);
    const double df = static_cast<double>(cfg.sample_rate) / cfg.window_size;
    const double band_lo = inv_pitch_scale(layout.edges_z[band]);
    const double band_hi = inv_pitch_scale(layout.edges_z[band + 1]);
    const double bin_lo = hz - 0.5 * df;
    const double bin_hi = hz + 0.5 * df;
    const double overlap = std::min(bin_hi, band_hi) - std::max(bin_lo, band_lo);
    return std::clamp(overlap / df, 0.0, 1.0);
}

std::string FrontEndConfig::hash() const {
    Fnv1a h;
    h.update("front-end-v1;");
    for (double v : {static_cast<double>(sample_rate), static_cast<double>(window_size),
                     static_cast<double>(hop_size), static_cast<double>(bands), f_min, f_max,
                     alpha, forward_tau, full_scale_spl, spread_lower,
                     static_cast<double>(aux_bins)}) {
        h.update(format_double(v));
        h.update(";");
    }
    return h.hex();
}

ExcitationPattern compute_excitation(const Waveform& w, const FrontEndConfig& cfg) {
    if (w.sample_rate != cfg.sample_rate)
        throw domain_error("compute_excitation: waveform must be at the configured rate");
    if (w.channel_count() != 1)
        throw domain_error("compute_excitation: expects one channel at a time");
    const auto& x = w.channels[0];

    const int n = cfg.window_size;
    const int hop = cfg.hop_size;
    const std::size_t frames = x.size() < static_cast<std::size_t>(n)
                                   ? 1
                                   : 1 + (x.size() - static_cast<std::size_t>(n)) /
                                             static_cast<std::size_t>(hop);

    // Periodic Hann window; full-scale sine calibration to full_scale_spl.
    std::vector<double> window(n);
    double window_sum = 0.0;
    for (int t = 0; t < n; ++t) {
        window[t] = 0.5 * (1.0 - std::cos(2.0 * M_PI * t / n));
        window_sum += window[t];
    }
    const double power_scale =
        4.0 * std::pow(10.0, cfg.full_scale_spl / 10.0) / (window_sum * window_sum);

    const BandLayout layout = make_layout(cfg);
    const double df = static_cast<double>(cfg.sample_rate) / n;
    const std::size_t bins = static_cast<std::size_t>(n) / 2 + 1;

    // Per-bin ear weights (linear power factors) and band membership.
    std::vector<double> ear(bins, 0.0);
    for (std::size_t k = 1; k < bins; ++k)
        ear[k] = std::pow(10.0, ear_weight_db(k * df) / 10.0);
    std::vector<std::vector<std::pair<std::size_t, double>>> groups(cfg.bands);
    for (int b = 0; b < cfg.bands; ++b)
        for (std::size_t k = 1; k < bins; ++k) {
            const double weight = band_response(cfg, b, k * df);
            if (weight > 0.0) groups[b].emplace_back(k, weight);
        }

    ExcitationPattern e;
    e.band_centers = layout.centers_hz;
    e.alpha = cfg.alpha;
    e.frame_hop = static_cast<double>(hop) / cfg.sample_rate;
    e.frames = Matrix(frames, cfg.bands);
    e.aux_spectrum = Matrix(frames, static_cast<std::size_t>(cfg.aux_bins));
    e.floor_values.resize(cfg.bands);
    std::vector<double> noise(cfg.bands);
    for (int b = 0; b < cfg.bands; ++b) {
        noise[b] = internal_noise_energy(layout.centers_hz[b]);
        e.floor_values[b] = std::pow(noise[b], cfg.alpha);
    }

    detail::RealFft fft(static_cast<std::size_t>(n));
    std::vector<double> frame(n);
    std::vector<std::complex<double>> spec(bins);
    std::vector<double> band_energy(cfg.bands);
    std::vector<double> spread(cfg.bands);
    std::vector<double> masking_state(cfg.bands, 0.0);
    const double decay = std::exp(-e.frame_hop / cfg.forward_tau);

    for (std::size_t f = 0; f < frames; ++f) {
        const std::size_t start = f * static_cast<std::size_t>(hop);
        for (int t = 0; t < n; ++t) {
            const std::size_t idx = start + static_cast<std::size_t>(t);
            frame[t] = idx < x.size() ? x[idx] * window[t] : 0.0;
        }
        fft.forward(frame.data(), spec.data());

        for (int b = 0; b < cfg.bands; ++b) {
            double acc = 0.0;
            for (const auto& [k, weight] : groups[b])
                acc += weight * ear[k] * power_scale * std::norm(spec[k]);
            band_energy[b] = acc;
        }
        for (int k = 0; k < cfg.aux_bins; ++k)
            e.aux_spectrum(f, static_cast<std::size_t>(k)) =
                ear[static_cast<std::size_t>(k)] * power_scale *
                std::norm(spec[static_cast<std::size_t>(k)]);

        // Level-dependent spreading: fixed lower slope, level- and
        // frequency-dependent upper slope, unnormalized superposition
        // (keeps excitation monotone in input level).
        std::fill(spread.begin(), spread.end(), 0.0);
        for (int b = 0; b < cfg.bands; ++b) {
            const double energy = band_energy[b];
            if (energy <= 0.0) continue;
            spread[b] += energy;
            const double level_db = 10.0 * std::log10(energy);
            const double upper_slope =
                std::min(-4.0, -24.0 - 230.0 / layout.centers_hz[b] + 0.2 * level_db);
            const double upper_step = std::pow(10.0, upper_slope * layout.dz / 10.0);
            const double lower_step = std::pow(10.0, -cfg.spread_lower * layout.dz / 10.0);
            double gain = 1.0;
            for (int j = b + 1; j < cfg.bands; ++j) {
                gain *= upper_step;
                if (gain < 1e-12) break;
                spread[j] += energy * gain;
            }
            gain = 1.0;
            for (int j = b - 1; j >= 0; --j) {
                gain *= lower_step;
                if (gain < 1e-12) break;
                spread[j] += energy * gain;
            }
        }

        for (int b = 0; b < cfg.bands; ++b) {
            // Forward masking: exponential trace, current frame dominates
            // when louder (max keeps onsets sharp, trace covers decays).
            masking_state[b] = decay * masking_state[b] + (1.0 - decay) * spread[b];
            const double smeared = std::max(spread[b], masking_state[b]);
            e.frames(f, b) = std::pow(smeared + noise[b], cfg.alpha);
        }
    }
    return e;
}

ModulationPattern compute_modulation(const ExcitationPattern& e) {
    const std::size_t frames = e.frames.rows();
    const std::size_t bands = e.frames.cols();
    if (frames < 2) throw domain_error("compute_modulation: need at least 2 frames");

    ModulationPattern m;
    m.frames = Matrix(frames, bands);
    const double tau = 0.1;  // envelope/derivative smoothing constant, seconds
    const double decay = std::exp(-e.frame_hop / tau);

    std::vector<double> deriv_state(bands, 0.0);
    std::vector<double> env_state(bands);
    for (std::size_t b = 0; b < bands; ++b) env_state[b] = e.frames(0, b);

    for (std::size_t f = 0; f < frames; ++f) {
        for (std::size_t b = 0; b < bands; ++b) {
            const double deriv =
                f == 0 ? 0.0 : std::fabs(e.frames(f, b) - e.frames(f - 1, b)) / e.frame_hop;
            deriv_state[b] = decay * deriv_state[b] + (1.0 - decay) * deriv;
            env_state[b] = f == 0 ? e.frames(0, b)
                                  : decay * env_state[b] + (1.0 - decay) * e.frames(f, b);
            m.frames(f, b) = deriv_state[b] / env_state[b];
        }
    }
    return m;
}

}  // namespace csmaq
