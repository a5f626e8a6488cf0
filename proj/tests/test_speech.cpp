#include <vector>

#include "csmaq/speech.hpp"
#include "csmaq/stats.hpp"
#include "csmaq/synthetic.hpp"
#include "doctest.h"

using namespace csmaq;

TEST_SUITE("speech") {

TEST_CASE("speech-like sources classify above 0.5, music-like below") {
    for (std::uint64_t seed : {11ull, 12ull, 13ull}) {
        const Waveform sp = synth_source(SourceKind::SpeechLike, 2.5, seed);
        const Waveform mu = synth_source(SourceKind::MusicLike, 2.5, seed + 100);
        const std::vector<double> p_speech = extract_prob_speech(sp);
        const std::vector<double> p_music = extract_prob_speech(mu);
        REQUIRE(!p_speech.empty());
        REQUIRE(!p_music.empty());
        CHECK(mean(p_speech) > 0.5);
        CHECK(mean(p_music) < 0.5);
        CHECK(mean(p_speech) > mean(p_music) + 0.2);
    }
}

TEST_CASE("decisions are probabilities") {
    const Waveform w = synth_source(SourceKind::Mixed, 1.5, 5);
    for (double p : extract_prob_speech(w)) {
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
    }
}

TEST_CASE("frame descriptors are defined and bounded") {
    const Waveform w = synth_source(SourceKind::SpeechLike, 1.5, 3);
    const auto frames =
        LogisticSpeechClassifier::frame_features(w.mono_mix(), w.sample_rate);
    REQUIRE(!frames.empty());
    for (const auto& f : frames) {
        CHECK(f.voicing >= 0.0);
        CHECK(f.voicing <= 1.0);
        CHECK(f.syllabic_mod >= 0.0);
        CHECK(std::isfinite(f.flux_var));
        CHECK(f.flux_var >= 0.0);
    }
}

TEST_CASE("classifier reports a version string") {
    LogisticSpeechClassifier cls;
    CHECK(!cls.version().empty());
}

TEST_CASE("decision averaging onto the 100 ms grid") {
    // 16 ms decisions: frame centers at 8, 24, 40, ... ms. The first 100 ms
    // frame covers centers < 100 ms -> decisions 0..5; the second 6..11.
    std::vector<double> decisions(12);
    for (std::size_t i = 0; i < decisions.size(); ++i)
        decisions[i] = static_cast<double>(i);
    const std::vector<double> synced = sync_prob_speech(decisions, 2);
    REQUIRE(synced.size() == 2);
    CHECK(synced[0] == doctest::Approx((0 + 1 + 2 + 3 + 4 + 5) / 6.0));
    CHECK(synced[1] == doctest::Approx((6 + 7 + 8 + 9 + 10 + 11) / 6.0));
}

}  // TEST_SUITE
