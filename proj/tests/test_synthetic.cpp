#include <cmath>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "csmaq/database.hpp"
#include "csmaq/synthetic.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace csmaq;
using testsupport::read_file;
using testsupport::TempDir;

TEST_SUITE("synthetic") {

TEST_CASE("rendering is bit-deterministic in its inputs") {
    SignalCharacter c;
    c.kind = SourceKind::Mixed;
    c.speechiness = 0.6;
    c.busyness = 0.4;
    const Waveform a = render_signal(c, 1.5, 42);
    const Waveform b = render_signal(c, 1.5, 42);
    REQUIRE(a.length() == b.length());
    REQUIRE(a.channel_count() == b.channel_count());
    for (std::size_t ch = 0; ch < a.channel_count(); ++ch)
        for (std::size_t i = 0; i < a.length(); ++i)
            REQUIRE(a.channels[ch][i] == b.channels[ch][i]);

    const Waveform other = render_signal(c, 1.5, 43);
    bool differs = false;
    for (std::size_t i = 0; i < a.length() && !differs; ++i)
        differs = a.channels[0][i] != other.channels[0][i];
    CHECK(differs);
}

TEST_CASE("severity zero is the identity for every artifact") {
    const Waveform w = synth_source(SourceKind::MusicLike, 1.2, 7);
    for (ArtifactKind kind :
         {ArtifactKind::Lowpass, ArtifactKind::AdditiveNoise, ArtifactKind::HarmonicComb,
          ArtifactKind::ModulationSmear, ArtifactKind::LevelOffset}) {
        ArtifactRecipe recipe;
        recipe.kind = kind;
        recipe.severity = 0.0;
        const Waveform out = apply_artifact(w, recipe, 99);
        REQUIRE(out.length() == w.length());
        for (std::size_t ch = 0; ch < w.channel_count(); ++ch)
            for (std::size_t i = 0; i < w.length(); ++i)
                REQUIRE(out.channels[ch][i] == w.channels[ch][i]);
    }
}

TEST_CASE("artifacts report a physical effect that grows with severity") {
    const Waveform w = synth_source(SourceKind::MusicLike, 1.5, 8);
    for (ArtifactKind kind :
         {ArtifactKind::Lowpass, ArtifactKind::AdditiveNoise, ArtifactKind::HarmonicComb,
          ArtifactKind::ModulationSmear, ArtifactKind::LevelOffset}) {
        double prev = 0.0;
        for (double severity : {0.25, 0.5, 0.75, 1.0}) {
            ArtifactRecipe recipe;
            recipe.kind = kind;
            recipe.severity = severity;
            std::vector<AppliedArtifact> applied;
            apply_artifact(w, recipe, 99, &applied);
            REQUIRE(applied.size() == 1);
            CHECK(applied[0].kind == kind);
            CHECK(applied[0].physical > prev);
            prev = applied[0].physical;
        }
    }
}

TEST_CASE("combination recipes flatten into their parts") {
    const Waveform w = synth_source(SourceKind::Mixed, 1.2, 9);
    ArtifactRecipe combo;
    combo.kind = ArtifactKind::Combination;
    combo.severity = 1.0;
    ArtifactRecipe a, b;
    a.kind = ArtifactKind::ModulationSmear;
    a.severity = 0.5;
    b.kind = ArtifactKind::HarmonicComb;
    b.severity = 0.3;
    combo.parts = {a, b};
    std::vector<AppliedArtifact> applied;
    apply_artifact(w, combo, 17, &applied);
    REQUIRE(applied.size() == 2);
    CHECK(applied[0].kind == ArtifactKind::ModulationSmear);
    CHECK(applied[1].kind == ArtifactKind::HarmonicComb);
    CHECK(!combo.label().empty());
}

TEST_CASE("latent quality is non-increasing in severity for every artifact") {
    LatentQualityModel latent;
    SignalCharacter character;
    character.speechiness = 0.4;
    character.busyness = 0.5;
    const Waveform w = synth_source(SourceKind::Mixed, 1.5, 10);
    for (ArtifactKind kind :
         {ArtifactKind::Lowpass, ArtifactKind::AdditiveNoise, ArtifactKind::HarmonicComb,
          ArtifactKind::ModulationSmear, ArtifactKind::LevelOffset}) {
        double prev = 101.0;
        for (double severity : {0.0, 0.25, 0.5, 0.75, 1.0}) {
            ArtifactRecipe recipe;
            recipe.kind = kind;
            recipe.severity = severity;
            std::vector<AppliedArtifact> applied;
            apply_artifact(w, recipe, 44, &applied);
            const double q = latent.quality(applied, character);
            CHECK(q <= prev);
            CHECK(q >= 0.0);
            CHECK(q <= 100.0);
            prev = q;
        }
    }
}

TEST_CASE("the planted discounts gate the right artifacts") {
    LatentQualityModel latent;
    const Waveform w = synth_source(SourceKind::MusicLike, 1.5, 11);
    ArtifactRecipe lp;
    lp.kind = ArtifactKind::Lowpass;
    lp.severity = 0.8;
    std::vector<AppliedArtifact> applied;
    apply_artifact(w, lp, 45, &applied);

    SignalCharacter music;
    music.speechiness = 0.0;
    SignalCharacter speech;
    speech.speechiness = 1.0;
    // Band limiting barely hurts fully speech-like content.
    const double drop_music = 100.0 - latent.quality(applied, music);
    const double drop_speech = 100.0 - latent.quality(applied, speech);
    CHECK(drop_speech < 0.2 * drop_music);

    ArtifactRecipe noise;
    noise.kind = ArtifactKind::AdditiveNoise;
    noise.severity = 0.8;
    std::vector<AppliedArtifact> applied_noise;
    apply_artifact(w, noise, 46, &applied_noise);
    SignalCharacter calm;
    calm.busyness = 0.0;
    SignalCharacter busy;
    busy.busyness = 1.0;
    const double drop_calm = 100.0 - latent.quality(applied_noise, calm);
    const double drop_busy = 100.0 - latent.quality(applied_noise, busy);
    CHECK(drop_busy < drop_calm);
}

TEST_CASE("database synthesis is reproducible and well-formed") {
    TempDir tmp_a("synthdb_a"), tmp_b("synthdb_b");
    DatabaseSpec spec;
    spec.signals = 4;
    spec.treatments = 4;
    spec.duration = 1.2;
    spec.seed = 5;
    LatentQualityModel latent;
    const SynthResult a = synth_database(spec, latent, tmp_a.str());
    const SynthResult b = synth_database(spec, latent, tmp_b.str());

    CHECK(read_file(a.manifest_path) == read_file(b.manifest_path));
    CHECK(read_file(a.truth_path) == read_file(b.truth_path));
    REQUIRE(a.db.items.size() == 4 * 4);
    a.db.validate();
    for (const auto& item : a.db.items) {
        const double score = ListeningTestDatabase::score_mushra(item);
        CHECK(score >= 0.0);
        CHECK(score <= 100.0);
    }
    // Audio bytes identical across the two runs (spot-check first item).
    const auto rel = a.db.items[0].sut_path;
    CHECK(read_file(a.db.root + "/" + rel) == read_file(b.db.root + "/" + rel));
    // Reference treatments carry the top anchor score.
    for (const auto& item : a.db.items)
        if (item.treatment_id == "t00")
            CHECK(ListeningTestDatabase::score_mushra(item) >= 85.0);
}

TEST_CASE("the default suite renders three disjoint splits") {
    TempDir tmp("suite");
    const SuitePaths paths = synth_default_suite(tmp.str(), 11, LatentQualityModel{}, 6, 4, 1.2);
    const ListeningTestDatabase iso = load_manifest(paths.isolated_manifest);
    const ListeningTestDatabase inter = load_manifest(paths.interaction_manifest);
    const ListeningTestDatabase hold = load_manifest(paths.holdout_manifest);
    CHECK(iso.items.size() == 6 * 4);
    CHECK(inter.items.size() == 6 * 4);
    CHECK(hold.items.size() == 6 * 4);

    std::set<std::string> inter_ids, hold_ids;
    for (const auto& id : inter.signal_ids()) inter_ids.insert(id);
    for (const auto& id : hold.signal_ids()) hold_ids.insert(id);
    for (const auto& id : hold_ids) CHECK(inter_ids.count(id) == 0);
}

TEST_CASE("manifest round-trip preserves rows") {
    TempDir tmp("manifest_rt");
    ListeningTestDatabase db;
    db.root = tmp.str();
    DbItem item;
    item.signal_id = "sig00";
    item.treatment_id = "t01";
    item.ref_path = "a.wav";
    item.sut_path = "b.wav";
    item.mean_score = 73.25;
    db.items.push_back(item);
    save_manifest(db, tmp.file("m.csv"));
    const ListeningTestDatabase back = load_manifest(tmp.file("m.csv"));
    REQUIRE(back.items.size() == 1);
    CHECK(back.items[0].signal_id == "sig00");
    CHECK(back.items[0].mean_score == 73.25);
    CHECK(back.items[0].scale == ScaleKind::Mushra);

    CHECK_THROWS_AS(load_manifest(tmp.file("nope.csv")), io_error);
}

TEST_CASE("difference grades map onto the quality scale") {
    CHECK(sdg_to_mushra(0.0) == doctest::Approx(100.0));
    CHECK(sdg_to_mushra(-4.0) == doctest::Approx(20.0));
    CHECK(sdg_to_mushra(-2.0) == doctest::Approx(60.0));
}

}  // TEST_SUITE
