#pragma once

#include <string>
#include <vector>

#include "csmaq/common.hpp"

namespace csmaq {

enum class ScaleKind { Mushra, Sdg };

/// One listening-test item: a (signal, treatment) pair with its panel mean.
struct DbItem {
    std::string signal_id;
    std::string treatment_id;
    std::string ref_path;
    std::string sut_path;
    double mean_score = 0.0;
    ScaleKind scale = ScaleKind::Mushra;
};

/// Maps a -4..0 difference grade onto the 0-100 quality scale
/// (linear, anchors: 0 -> 100, -4 -> 20).
double sdg_to_mushra(double sdg);

/// Signals x treatments with mean subjective scores.
struct ListeningTestDatabase {
    std::vector<DbItem> items;
    std::string root;  ///< directory paths are resolved against

    std::vector<std::string> signal_ids() const;          ///< unique, first-seen order
    std::vector<const DbItem*> signal_items(const std::string& signal_id) const;
    /// mean_score converted to the 0-100 scale regardless of item scale.
    static double score_mushra(const DbItem& item);
    /// Checks score ranges, (signal, treatment) uniqueness. Throws domain_error.
    void validate() const;
};

/// CSV manifest with header
/// signal_id,treatment_id,ref_path,sut_path,mean_score,scale.
/// Malformed rows raise io_error naming the row index.
ListeningTestDatabase load_manifest(const std::string& path);
void save_manifest(const ListeningTestDatabase& db, const std::string& path);

}  // namespace csmaq
