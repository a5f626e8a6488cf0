#include "csmaq/database.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace csmaq {

double sdg_to_mushra(double sdg) { return 100.0 + 20.0 * sdg; }

std::vector<std::string> ListeningTestDatabase::signal_ids() const {
    std::vector<std::string> ids;
    for (const auto& item : items)
        if (std::find(ids.begin(), ids.end(), item.signal_id) == ids.end())
            ids.push_back(item.signal_id);
    return ids;
}

std::vector<const DbItem*> ListeningTestDatabase::signal_items(const std::string& signal_id) const {
    std::vector<const DbItem*> out;
    for (const auto& item : items)
        if (item.signal_id == signal_id) out.push_back(&item);
    return out;
}

double ListeningTestDatabase::score_mushra(const DbItem& item) {
    return item.scale == ScaleKind::Mushra ? item.mean_score : sdg_to_mushra(item.mean_score);
}

void ListeningTestDatabase::validate() const {
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& item : items) {
        if (!seen.insert({item.signal_id, item.treatment_id}).second)
            throw domain_error("database: duplicate item " + item.signal_id + "/" +
                               item.treatment_id);
        if (item.scale == ScaleKind::Mushra) {
            if (item.mean_score < 0.0 || item.mean_score > 100.0)
                throw domain_error("database: score out of range for " + item.signal_id + "/" +
                                   item.treatment_id);
        } else if (item.mean_score < -4.0 || item.mean_score > 0.0) {
            throw domain_error("database: difference grade out of range for " + item.signal_id +
                               "/" + item.treatment_id);
        }
    }
}

ListeningTestDatabase load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open " + path);
    ListeningTestDatabase db;
    db.root = std::filesystem::path(path).parent_path().string();

    std::string line;
    if (!std::getline(in, line)) throw io_error(path + ": empty manifest");
    if (line != "signal_id,treatment_id,ref_path,sut_path,mean_score,scale")
        throw io_error(path + ": unexpected header row");

    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 6)
            throw io_error(path + ": malformed row " + std::to_string(row));
        DbItem item;
        item.signal_id = fields[0];
        item.treatment_id = fields[1];
        item.ref_path = fields[2];
        item.sut_path = fields[3];
        try {
            item.mean_score = std::stod(fields[4]);
        } catch (const std::exception&) {
            throw io_error(path + ": bad score at row " + std::to_string(row));
        }
        if (fields[5] == "mushra") item.scale = ScaleKind::Mushra;
        else if (fields[5] == "sdg") item.scale = ScaleKind::Sdg;
        else throw io_error(path + ": unknown scale at row " + std::to_string(row));
        db.items.push_back(std::move(item));
    }
    db.validate();
    return db;
}

void save_manifest(const ListeningTestDatabase& db, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw io_error("cannot write " + path);
    out << "signal_id,treatment_id,ref_path,sut_path,mean_score,scale\n";
    for (const auto& item : db.items)
        out << item.signal_id << "," << item.treatment_id << "," << item.ref_path << ","
            << item.sut_path << "," << format_double(item.mean_score) << ","
            << (item.scale == ScaleKind::Mushra ? "mushra" : "sdg") << "\n";
    if (!out) throw io_error("short write: " + path);
}

}  // namespace csmaq
