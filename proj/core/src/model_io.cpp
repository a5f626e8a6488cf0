#include <fstream>
#include <set>

#include <json.hpp>

#include "csmaq/model.hpp"

namespace csmaq {

namespace {

using nlohmann::json;

constexpr const char* kFormatTag = "csmaq-model";
constexpr const char* kFormatVersion = "1";

void require_keys(const json& j, const std::set<std::string>& keys, const std::string& where) {
    for (const auto& k : keys)
        if (!j.contains(k)) throw io_error("model file: missing key '" + k + "' in " + where);
    for (const auto& [k, v] : j.items())
        if (!keys.count(k)) throw io_error("model file: unknown key '" + k + "' in " + where);
}

json hinge_to_json(const Hinge& h) { return json{{"knot", h.knot}, {"slope", h.slope}}; }

Hinge hinge_from_json(const json& j) {
    require_keys(j, {"knot", "slope"}, "hinge");
    return {j.at("knot").get<double>(), j.at("slope").get<double>()};
}

json bf_to_json(const BasisFunction& bf) {
    json hinges = json::array();
    for (const auto& h : bf.hinges) hinges.push_back(hinge_to_json(h));
    return json{{"dm_index", bf.dm_index}, {"intercept", bf.intercept},
                {"hinges", hinges},       {"x_min", bf.x_min},
                {"x_max", bf.x_max}};
}

BasisFunction bf_from_json(const json& j) {
    require_keys(j, {"dm_index", "intercept", "hinges", "x_min", "x_max"}, "basis_function");
    BasisFunction bf;
    bf.dm_index = j.at("dm_index").get<int>();
    bf.intercept = j.at("intercept").get<double>();
    bf.x_min = j.at("x_min").get<double>();
    bf.x_max = j.at("x_max").get<double>();
    for (const auto& h : j.at("hinges")) bf.hinges.push_back(hinge_from_json(h));
    if (bf.hinges.size() > 3) throw io_error("model file: basis function with > 3 hinges");
    return bf;
}

json dpw_to_json(const CemDpw& cd) {
    return json{{"cem", cem_name(static_cast<int>(cd.cem))},
                {"steepness", cd.dpw.steepness},
                {"midpoint", cd.dpw.midpoint},
                {"inverted", cd.dpw.inverted}};
}

CemDpw dpw_from_json(const json& j) {
    require_keys(j, {"cem", "steepness", "midpoint", "inverted"}, "dpw");
    CemDpw cd;
    const std::string cem = j.at("cem").get<std::string>();
    if (cem == cem_name(0)) cd.cem = Cem::ProbSpeech;
    else if (cem == cem_name(1)) cd.cem = Cem::Epn;
    else if (cem == cem_name(2)) cd.cem = Cem::Pdev;
    else throw io_error("model file: unknown cem '" + cem + "'");
    cd.dpw.steepness = j.at("steepness").get<double>();
    cd.dpw.midpoint = j.at("midpoint").get<double>();
    cd.dpw.inverted = j.at("inverted").get<bool>();
    return cd;
}

json term_to_json(const QualityTerm& t) {
    json dpws = json::array();
    for (const auto& cd : t.dpws) dpws.push_back(dpw_to_json(cd));
    json j{{"id", t.id},         {"coefficient", t.coefficient},
           {"z_mean", t.z_mean}, {"z_std", t.z_std},
           {"dpws", dpws},       {"weight_inverted", t.weight_inverted}};
    if (t.bf_index.has_value()) j["bf_index"] = *t.bf_index;
    else j["bf_index"] = nullptr;
    return j;
}

QualityTerm term_from_json(const json& j) {
    require_keys(j, {"id", "coefficient", "z_mean", "z_std", "dpws", "weight_inverted",
                     "bf_index"},
                 "term");
    QualityTerm t;
    t.id = j.at("id").get<std::string>();
    t.coefficient = j.at("coefficient").get<double>();
    t.z_mean = j.at("z_mean").get<double>();
    t.z_std = j.at("z_std").get<double>();
    t.weight_inverted = j.at("weight_inverted").get<bool>();
    if (!j.at("bf_index").is_null()) t.bf_index = j.at("bf_index").get<int>();
    for (const auto& d : j.at("dpws")) t.dpws.push_back(dpw_from_json(d));
    if (t.dpws.size() > 2) throw io_error("model file: term with > 2 dpws");
    return t;
}

json config_to_json(const FrontEndConfig& c) {
    return json{{"sample_rate", c.sample_rate},
                {"window_size", c.window_size},
                {"hop_size", c.hop_size},
                {"bands", c.bands},
                {"f_min", c.f_min},
                {"f_max", c.f_max},
                {"alpha", c.alpha},
                {"forward_tau", c.forward_tau},
                {"full_scale_spl", c.full_scale_spl},
                {"spread_lower", c.spread_lower},
                {"aux_bins", c.aux_bins}};
}

FrontEndConfig config_from_json(const json& j) {
    require_keys(j,
                 {"sample_rate", "window_size", "hop_size", "bands", "f_min", "f_max", "alpha",
                  "forward_tau", "full_scale_spl", "spread_lower", "aux_bins"},
                 "front_end");
    FrontEndConfig c;
    c.sample_rate = j.at("sample_rate").get<int>();
    c.window_size = j.at("window_size").get<int>();
    c.hop_size = j.at("hop_size").get<int>();
    c.bands = j.at("bands").get<int>();
    c.f_min = j.at("f_min").get<double>();
    c.f_max = j.at("f_max").get<double>();
    c.alpha = j.at("alpha").get<double>();
    c.forward_tau = j.at("forward_tau").get<double>();
    c.full_scale_spl = j.at("full_scale_spl").get<double>();
    c.spread_lower = j.at("spread_lower").get<double>();
    c.aux_bins = j.at("aux_bins").get<int>();
    return c;
}

}  // namespace

std::string serialize_model(const CsmModel& model) {
    json bfs = json::array();
    for (const auto& bf : model.basis_functions) bfs.push_back(bf_to_json(bf));
    json terms = json::array();
    for (const auto& t : model.terms) terms.push_back(term_to_json(t));
    const json j{{"format", kFormatTag},
                 {"format_version", kFormatVersion},
                 {"version", model.version},
                 {"config_hash", model.config_hash},
                 {"front_end", config_to_json(model.front_end)},
                 {"basis_functions", bfs},
                 {"terms", terms},
                 {"provenance", json{{"tool", model.provenance.tool},
                                     {"created", model.provenance.created},
                                     {"seed", model.provenance.seed},
                                     {"note", model.provenance.note}}}};
    return j.dump(2) + "\n";
}

CsmModel deserialize_model(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw io_error(std::string("model file: invalid JSON: ") + e.what());
    }
    require_keys(j,
                 {"format", "format_version", "version", "config_hash", "front_end",
                  "basis_functions", "terms", "provenance"},
                 "model");
    if (j.at("format").get<std::string>() != kFormatTag)
        throw io_error("model file: wrong format tag");
    if (j.at("format_version").get<std::string>() != kFormatVersion)
        throw io_error("model file: unsupported format version");

    CsmModel m;
    m.version = j.at("version").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.front_end = config_from_json(j.at("front_end"));
    if (m.config_hash != m.front_end.hash())
        throw io_error("model file: config_hash does not match front_end block");
    for (const auto& b : j.at("basis_functions")) m.basis_functions.push_back(bf_from_json(b));
    if (m.basis_functions.size() != kDmCount)
        throw io_error("model file: expected one basis function per distortion metric");
    for (const auto& t : j.at("terms")) m.terms.push_back(term_from_json(t));
    if (m.terms.empty()) throw io_error("model file: no terms");
    for (const auto& t : m.terms)
        if (t.bf_index.has_value() &&
            (*t.bf_index < 0 || *t.bf_index >= static_cast<int>(m.basis_functions.size())))
            throw io_error("model file: term references missing basis function");
    const auto& p = j.at("provenance");
    require_keys(p, {"tool", "created", "seed", "note"}, "provenance");
    m.provenance.tool = p.at("tool").get<std::string>();
    m.provenance.created = p.at("created").get<std::string>();
    m.provenance.seed = p.at("seed").get<std::uint64_t>();
    m.provenance.note = p.at("note").get<std::string>();
    return m;
}

void save_model(const CsmModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw io_error("cannot write " + path);
    out << serialize_model(model);
    if (!out) throw io_error("short write: " + path);
}

CsmModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("model not found: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_model(text);
}

}  // namespace csmaq
