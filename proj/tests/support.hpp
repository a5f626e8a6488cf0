#pragma once

// Shared fixtures and helpers for the unit tests. All helpers are
// deterministic: anything random takes an explicit seed.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "csmaq/calibration.hpp"
#include "csmaq/database.hpp"
#include "csmaq/features.hpp"
#include "csmaq/pipeline.hpp"
#include "csmaq/waveform.hpp"

namespace testsupport {

/// Unique scratch directory removed on scope exit.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        const auto base = std::filesystem::temp_directory_path();
        for (int i = 0;; ++i) {
            std::filesystem::path candidate =
                base / ("csmaq_test_" + tag + "_" + std::to_string(i));
            std::error_code ec;
            if (std::filesystem::create_directory(candidate, ec)) {
                path_ = candidate;
                return;
            }
        }
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string str() const { return path_.string(); }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

inline csmaq::Waveform make_tone(double hz, double duration, double amplitude,
                                 int rate = 48000, int channels = 1) {
    csmaq::Waveform w;
    w.sample_rate = rate;
    const auto n = static_cast<std::size_t>(duration * rate);
    std::vector<double> ch(n);
    for (std::size_t i = 0; i < n; ++i)
        ch[i] = amplitude * std::sin(2.0 * M_PI * hz * static_cast<double>(i) / rate);
    for (int c = 0; c < channels; ++c) w.channels.push_back(ch);
    return w;
}

inline csmaq::Waveform make_noise(double duration, double amplitude, std::uint64_t seed,
                                  int rate = 48000, int channels = 1) {
    csmaq::Waveform w;
    w.sample_rate = rate;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int c = 0; c < channels; ++c) {
        std::vector<double> ch(static_cast<std::size_t>(duration * rate));
        for (auto& v : ch) v = amplitude * uni(rng);
        w.channels.push_back(ch);
    }
    return w;
}

/// Full per-pair pipeline with default configs, serially.
inline csmaq::FeatureSeries features_for_pair(const csmaq::Waveform& ref,
                                              const csmaq::Waveform& sut) {
    const csmaq::AlignedSignalPair pair = csmaq::prepare_pair(ref, sut);
    return csmaq::extract_features(pair, csmaq::FrontEndConfig{});
}

/// Loads a manifest and runs the full pipeline on every item, serially.
inline csmaq::CalibDataset dataset_from_manifest(const std::string& manifest_path) {
    const csmaq::ListeningTestDatabase db = csmaq::load_manifest(manifest_path);
    csmaq::CalibDataset data;
    data.config_hash = csmaq::FrontEndConfig{}.hash();
    for (const auto& item : db.items) {
        csmaq::CalibItem out;
        out.signal_id = item.signal_id;
        out.treatment_id = item.treatment_id;
        out.score = csmaq::ListeningTestDatabase::score_mushra(item);
        const csmaq::Waveform ref = csmaq::load_waveform(db.root + "/" + item.ref_path);
        const csmaq::Waveform sut = csmaq::load_waveform(db.root + "/" + item.sut_path);
        out.features = features_for_pair(ref, sut);
        data.items.push_back(std::move(out));
    }
    return data;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

}  // namespace testsupport
