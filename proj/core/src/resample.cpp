#include <cmath>
#include <numeric>

#include "csmaq/waveform.hpp"

namespace csmaq {

namespace {

constexpr double kKaiserBeta = 9.6;   // ~100 dB sidelobe suppression
constexpr int kZeroCrossings = 32;    // kernel half-width in input samples
constexpr double kCutoffScale = 0.92; // transition-band margin below Nyquist

/// Modified Bessel function of the first kind, order zero (power series).
double bessel_i0(double x) {
    double sum = 1.0, term = 1.0;
    const double half_sq = 0.25 * x * x;
    for (int k = 1; k < 64; ++k) {
        term *= half_sq / (static_cast<double>(k) * k);
        sum += term;
        if (term < 1e-18 * sum) break;
    }
    return sum;
}

double sinc(double x) {
    if (std::fabs(x) < 1e-12) return 1.0;
    const double px = M_PI * x;
    return std::sin(px) / px;
}

}  // namespace

std::vector<double> resample_channel(const std::vector<double>& x, int from_rate, int to_rate) {
    if (from_rate <= 0 || to_rate <= 0) throw domain_error("resample: bad rates");
    if (from_rate == to_rate) return x;
    const std::size_t n = x.size();
    const auto out_len = static_cast<std::size_t>(
        std::ceil(static_cast<double>(n) * to_rate / from_rate - 1e-9));

    // Anti-aliasing cutoff at the narrower Nyquist, with margin.
    const double ratio = static_cast<double>(to_rate) / from_rate;
    const double cutoff = kCutoffScale * 0.5 * std::min(1.0, ratio);
    const double half_width = kZeroCrossings / (2.0 * cutoff);
    const double i0_beta = bessel_i0(kKaiserBeta);

    const std::int64_t g = std::gcd(from_rate, to_rate);
    const std::int64_t up = to_rate / g;
    const std::int64_t down = from_rate / g;

    std::vector<double> out(out_len, 0.0);
    for (std::size_t m = 0; m < out_len; ++m) {
        // Exact rational input position of output sample m.
        const std::int64_t num = static_cast<std::int64_t>(m) * down;
        const double center = static_cast<double>(num) / static_cast<double>(up);
        const auto lo = static_cast<std::int64_t>(std::ceil(center - half_width));
        const auto hi = static_cast<std::int64_t>(std::floor(center + half_width));
        double acc = 0.0;
        for (std::int64_t k = std::max<std::int64_t>(0, lo);
             k <= std::min<std::int64_t>(static_cast<std::int64_t>(n) - 1, hi); ++k) {
            const double t = static_cast<double>(k) - center;
            const double window_arg = t / half_width;
            const double win = bessel_i0(kKaiserBeta * std::sqrt(std::max(
                                             0.0, 1.0 - window_arg * window_arg))) /
                               i0_beta;
            acc += x[static_cast<std::size_t>(k)] * 2.0 * cutoff * sinc(2.0 * cutoff * t) * win;
        }
        out[m] = acc;
    }
    return out;
}

Waveform resample(const Waveform& w, int to_rate) {
    Waveform out;
    out.sample_rate = to_rate;
    out.channels.reserve(w.channels.size());
    for (const auto& ch : w.channels)
        out.channels.push_back(resample_channel(ch, w.sample_rate, to_rate));
    return out;
}

}  // namespace csmaq
