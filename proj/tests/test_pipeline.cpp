#include <cmath>
#include <vector>

#include "csmaq/pipeline.hpp"
#include "csmaq/stats.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace csmaq;
using testsupport::make_noise;

namespace {

Waveform delayed_copy(const Waveform& w, std::size_t lead_zeros) {
    Waveform out;
    out.sample_rate = w.sample_rate;
    for (const auto& ch : w.channels) {
        std::vector<double> d(lead_zeros, 0.0);
        d.insert(d.end(), ch.begin(), ch.end());
        out.channels.push_back(std::move(d));
    }
    return out;
}

double rms(const std::vector<double>& x) {
    double acc = 0.0;
    for (double v : x) acc += v * v;
    return std::sqrt(acc / static_cast<double>(x.size()));
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("a known insertion delay is found and removed") {
    const Waveform ref = make_noise(2.5, 0.3, 42);
    const Waveform sut = delayed_copy(ref, 1234);
    const AlignedSignalPair pair = delay_compensate(ref, sut, 48000);
    CHECK(pair.applied_lag == 1234);  // positive: SUT late
    REQUIRE(pair.ref.length() == pair.sut.length());
    REQUIRE(pair.ref.length() > 100000);
    CHECK(pearson_r(pair.ref.channels[0], pair.sut.channels[0]) ==
          doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("aligned signals report zero lag") {
    const Waveform ref = make_noise(2.5, 0.3, 7);
    const AlignedSignalPair pair = delay_compensate(ref, ref, 48000);
    CHECK(pair.applied_lag == 0);
    CHECK(pair.ref.length() == ref.length());
}

TEST_CASE("delay compensation needs enough signal for the search radius") {
    const Waveform tiny = make_noise(0.5, 0.3, 9);  // 24000 < 2 * 48000
    CHECK_THROWS_AS(delay_compensate(tiny, tiny, 48000), domain_error);
}

TEST_CASE("level scaling applies one shared gain and hits the target level") {
    AlignedSignalPair pair;
    pair.ref = make_noise(1.0, 0.2, 3);
    pair.sut = make_noise(1.0, 0.1, 4);
    const double ratio_before =
        rms(pair.sut.channels[0]) / rms(pair.ref.channels[0]);
    const AlignedSignalPair scaled = scale_levels(pair, 65.0);
    CHECK(scaled.gain_ref == scaled.gain_sut);  // REF/SUT differences preserved
    const double ratio_after =
        rms(scaled.sut.channels[0]) / rms(scaled.ref.channels[0]);
    CHECK(ratio_after == doctest::Approx(ratio_before).epsilon(1e-12));

    // Scaling is level-invariant: a 6 dB hotter reference gets half the gain.
    AlignedSignalPair hot;
    hot.ref = pair.ref;
    hot.sut = pair.sut;
    for (auto& ch : hot.ref.channels)
        for (auto& v : ch) v *= 2.0;
    const AlignedSignalPair scaled_hot = scale_levels(hot, 65.0);
    CHECK(scaled_hot.gain_ref == doctest::Approx(scaled.gain_ref / 2.0).epsilon(1e-9));
    CHECK(rms(scaled_hot.ref.channels[0]) ==
          doctest::Approx(rms(scaled.ref.channels[0])).epsilon(1e-9));

    AlignedSignalPair silent;
    silent.ref = make_noise(1.0, 0.0, 5);
    silent.sut = pair.sut;
    CHECK_THROWS_AS(scale_levels(silent, 65.0), domain_error);
}

TEST_CASE("silence trimming removes quiet head and tail only") {
    const std::size_t head = 6000, body = 30000, tail = 9000;
    Waveform w = make_noise(1.0, 0.0, 1);
    w.channels[0].assign(head, 0.0);
    const Waveform noise = make_noise(static_cast<double>(body) / 48000.0, 0.3, 8);
    w.channels[0].insert(w.channels[0].end(), noise.channels[0].begin(),
                         noise.channels[0].end());
    w.channels[0].insert(w.channels[0].end(), tail, 0.0);

    AlignedSignalPair pair;
    pair.ref = w;
    pair.sut = w;
    const AlignedSignalPair trimmed = trim_silence(pair, 200.0 / 32768.0, 1024);
    CHECK(trimmed.ref.length() < w.length());
    CHECK(trimmed.ref.length() >= body);  // every loud sample survives
    CHECK(trimmed.trim_head > 0);
    CHECK(trimmed.trim_tail > 0);
    CHECK(trimmed.trim_head + trimmed.trim_tail + trimmed.ref.length() == w.length());
    CHECK(rms(trimmed.ref.channels[0]) > rms(w.channels[0]));

    AlignedSignalPair silent;
    silent.ref = make_noise(1.0, 0.0, 2);
    silent.sut = silent.ref;
    CHECK_THROWS_AS(trim_silence(silent, 200.0 / 32768.0, 1024), domain_error);
}

TEST_CASE("the full chain is an identity-shape transform for a clean pair") {
    const Waveform w = make_noise(2.5, 0.25, 77, 48000, 2);
    const AlignedSignalPair pair = prepare_pair(w, w);
    CHECK(pair.applied_lag == 0);
    REQUIRE(pair.ref.length() == pair.sut.length());
    REQUIRE(pair.ref.channel_count() == 2);
    for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t i = 0; i < pair.ref.length(); ++i)
            CHECK(pair.ref.channels[c][i] == pair.sut.channels[c][i]);
}

}  // TEST_SUITE
