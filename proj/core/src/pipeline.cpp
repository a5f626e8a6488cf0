#include "csmaq/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "fft.hpp"

namespace csmaq {

namespace {

void check_compatible(const Waveform& ref, const Waveform& sut) {
    if (ref.sample_rate != sut.sample_rate)
        throw domain_error("pipeline: sample-rate mismatch");
    if (ref.channel_count() != sut.channel_count())
        throw domain_error("pipeline: channel-count mismatch");
    if (ref.length() == 0 || sut.length() == 0)
        throw domain_error("pipeline: empty signal");
}

/// Mean power over channels and samples, with full scale anchored so a
/// full-scale sinusoid (power 0.5) sits at full_scale_spl = 100 dB.
double mean_power(const Waveform& w) {
    double acc = 0.0;
    std::size_t count = 0;
    for (const auto& ch : w.channels) {
        for (double v : ch) acc += v * v;
        count += ch.size();
    }
    return count ? acc / static_cast<double>(count) : 0.0;
}

/// Per-sample silence magnitude: mean over channels of |x|.
std::vector<double> magnitude_prefix(const Waveform& w) {
    const std::size_t n = w.length();
    const double inv_c = 1.0 / static_cast<double>(w.channel_count());
    std::vector<double> prefix(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double m = 0.0;
        for (const auto& ch : w.channels) m += std::fabs(ch[i]);
        prefix[i + 1] = prefix[i] + m * inv_c;
    }
    return prefix;
}

}  // namespace

AlignedSignalPair delay_compensate(const Waveform& ref, const Waveform& sut, int max_lag) {
    check_compatible(ref, sut);
    const std::size_t min_len = std::min(ref.length(), sut.length());
    if (min_len < 2 * static_cast<std::size_t>(std::max(1, max_lag)))
        throw domain_error("delay_compensate: signals shorter than twice the lag radius");

    const auto r = ref.mono_mix();
    const auto s = sut.mono_mix();

    // Circular cross-correlation c(k) = sum_t r(t) s(t+k), zero-padded far
    // enough that lags within +/- max_lag never wrap into each other.
    const std::size_t m =
        detail::next_pow2(std::max(r.size(), s.size()) + static_cast<std::size_t>(max_lag) + 1);
    detail::RealFft fft(m);
    std::vector<double> buf(m, 0.0);
    std::vector<std::complex<double>> rf(fft.bins()), sf(fft.bins());
    std::copy(r.begin(), r.end(), buf.begin());
    fft.forward(buf.data(), rf.data());
    std::fill(buf.begin(), buf.end(), 0.0);
    std::copy(s.begin(), s.end(), buf.begin());
    fft.forward(buf.data(), sf.data());
    for (std::size_t i = 0; i < rf.size(); ++i) rf[i] = std::conj(rf[i]) * sf[i];
    std::vector<double> corr(m);
    fft.inverse(rf.data(), corr.data());

    long best_lag = 0;
    double best = -1e300;
    for (long lag = -max_lag; lag <= max_lag; ++lag) {
        const std::size_t idx = lag >= 0 ? static_cast<std::size_t>(lag)
                                         : m - static_cast<std::size_t>(-lag);
        if (corr[idx] > best) {
            best = corr[idx];
            best_lag = lag;
        }
    }

    AlignedSignalPair pair;
    pair.applied_lag = best_lag;
    pair.ref = ref;
    pair.sut.sample_rate = sut.sample_rate;
    const auto sut_len = static_cast<long>(sut.length());
    const long len = std::min(static_cast<long>(ref.length()), sut_len - best_lag);
    if (len <= 0) throw domain_error("delay_compensate: no common support after shift");
    for (const auto& ch : sut.channels) {
        std::vector<double> shifted(static_cast<std::size_t>(len), 0.0);
        for (long t = 0; t < len; ++t) {
            const long idx = t + best_lag;
            if (idx >= 0 && idx < sut_len) shifted[static_cast<std::size_t>(t)] = ch[idx];
        }
        pair.sut.channels.push_back(std::move(shifted));
    }
    for (auto& ch : pair.ref.channels) ch.resize(static_cast<std::size_t>(len));
    return pair;
}

AlignedSignalPair scale_levels(AlignedSignalPair pair, double target_spl) {
    const double power = mean_power(pair.ref);
    if (power <= 0.0) throw domain_error("scale_levels: silent reference");
    // Full-scale sine power 0.5 <-> 100 dB SPL.
    const double spl = 100.0 + 10.0 * std::log10(power / 0.5);
    const double gain = std::pow(10.0, (target_spl - spl) / 20.0);
    for (auto& ch : pair.ref.channels)
        for (double& v : ch) v *= gain;
    for (auto& ch : pair.sut.channels)
        for (double& v : ch) v *= gain;
    pair.gain_ref *= gain;
    pair.gain_sut *= gain;
    return pair;
}

AlignedSignalPair trim_silence(AlignedSignalPair pair, double threshold, int run) {
    const std::size_t n = pair.ref.length();
    const auto window = static_cast<std::size_t>(std::max(1, run));
    const auto pref = magnitude_prefix(pair.ref);
    const auto psut = magnitude_prefix(pair.sut);

    if (n < window) {
        if (pref[n] < threshold && psut[n] < threshold)
            throw domain_error("all-silent pair");
        return pair;
    }

    auto loud = [&](std::size_t t) {
        return pref[t + window] - pref[t] >= threshold ||
               psut[t + window] - psut[t] >= threshold;
    };

    const std::size_t starts = n - window + 1;
    std::size_t first = starts;
    for (std::size_t t = 0; t < starts; ++t)
        if (loud(t)) {
            first = t;
            break;
        }
    if (first == starts) throw domain_error("all-silent pair");
    std::size_t last = first;
    for (std::size_t t = starts; t-- > first;)
        if (loud(t)) {
            last = t;
            break;
        }

    const std::size_t keep_begin = first;
    const std::size_t keep_end = last + window;  // exclusive
    pair.trim_head += keep_begin;
    pair.trim_tail += n - keep_end;
    for (auto* w : {&pair.ref, &pair.sut})
        for (auto& ch : w->channels)
            ch = std::vector<double>(ch.begin() + static_cast<std::ptrdiff_t>(keep_begin),
                                     ch.begin() + static_cast<std::ptrdiff_t>(keep_end));
    return pair;
}

AlignedSignalPair prepare_pair(const Waveform& ref, const Waveform& sut,
                               const PipelineConfig& cfg) {
    auto pair = delay_compensate(ref, sut, cfg.max_lag);
    pair = scale_levels(std::move(pair), cfg.target_spl);
    return trim_silence(std::move(pair), cfg.silence_threshold, cfg.silence_run);
}

}  // namespace csmaq
