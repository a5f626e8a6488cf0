#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "csmaq/calibration.hpp"
#include "csmaq/evaluation.hpp"
#include "csmaq/features.hpp"
#include "csmaq/model.hpp"
#include "csmaq/pipeline.hpp"
#include "csmaq/synthetic.hpp"

using namespace csmaq;

namespace {

struct CommonConfig {
    FrontEndConfig fe;
    PipelineConfig pipe;
    std::string config_path;  // --config flag or CSMAQ_CONFIG env var
    int jobs = 1;
};

void read_config_file(const std::string& path, FrontEndConfig& fe, PipelineConfig& pipe) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw io_error("config parse error in " + path + ": " + e.what());
    }
    for (const auto& [key, value] : j.items()) {
        if (key == "front_end") {
            for (const auto& [k, v] : value.items()) {
                if (k == "sample_rate") fe.sample_rate = v.get<int>();
                else if (k == "window_size") fe.window_size = v.get<int>();
                else if (k == "hop_size") fe.hop_size = v.get<int>();
                else if (k == "bands") fe.bands = v.get<int>();
                else if (k == "f_min") fe.f_min = v.get<double>();
                else if (k == "f_max") fe.f_max = v.get<double>();
                else if (k == "alpha") fe.alpha = v.get<double>();
                else if (k == "forward_tau") fe.forward_tau = v.get<double>();
                else if (k == "full_scale_spl") fe.full_scale_spl = v.get<double>();
                else if (k == "spread_lower") fe.spread_lower = v.get<double>();
                else if (k == "aux_bins") fe.aux_bins = v.get<int>();
                else throw domain_error("unknown config key: front_end." + k);
            }
        } else if (key == "pipeline") {
            for (const auto& [k, v] : value.items()) {
                if (k == "target_spl") pipe.target_spl = v.get<double>();
                else if (k == "max_lag") pipe.max_lag = v.get<int>();
                else if (k == "silence_threshold") pipe.silence_threshold = v.get<double>();
                else if (k == "silence_run") pipe.silence_run = v.get<int>();
                else throw domain_error("unknown config key: pipeline." + k);
            }
        } else {
            throw domain_error("unknown config key: " + key);
        }
    }
}

void finalize_config(CommonConfig& cfg) {
    if (cfg.config_path.empty())
        if (const char* env = std::getenv("CSMAQ_CONFIG")) cfg.config_path = env;
    if (!cfg.config_path.empty()) read_config_file(cfg.config_path, cfg.fe, cfg.pipe);
}

std::string config_line(const CommonConfig& cfg) {
    std::ostringstream out;
    out << "config: hash=" << cfg.fe.hash() << " target_spl=" << format_double(cfg.pipe.target_spl)
        << " max_lag=" << cfg.pipe.max_lag
        << " silence_threshold=" << format_double(cfg.pipe.silence_threshold)
        << " silence_run=" << cfg.pipe.silence_run;
    return out.str();
}

void add_common_flags(CLI::App* cmd, CommonConfig& cfg, bool with_jobs = false) {
    cmd->add_option("--config", cfg.config_path,
                    "JSON config file (default: $CSMAQ_CONFIG if set)");
    cmd->add_option("--target-spl", cfg.pipe.target_spl, "playback level in dB SPL");
    cmd->add_option("--max-lag", cfg.pipe.max_lag, "max alignment lag in samples");
    cmd->add_option("--silence-threshold", cfg.pipe.silence_threshold,
                    "mean-magnitude silence gate");
    cmd->add_option("--silence-run", cfg.pipe.silence_run, "silence window in samples");
    if (with_jobs) cmd->add_option("--jobs", cfg.jobs, "worker threads (output order fixed)");
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
    jobs = std::max(1, jobs);
    if (jobs == 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

FeatureSeries features_for_pair(const std::string& ref_path, const std::string& sut_path,
                                const CommonConfig& cfg) {
    const Waveform ref = load_waveform(ref_path);
    const Waveform sut = load_waveform(sut_path);
    const AlignedSignalPair pair = prepare_pair(ref, sut, cfg.pipe);
    return extract_features(pair, cfg.fe);
}

/// Runs the full per-item pipeline over a manifest; order preserved.
CalibDataset dataset_from_manifest(const std::string& manifest_path, const CommonConfig& cfg) {
    const ListeningTestDatabase db = load_manifest(manifest_path);
    CalibDataset data;
    data.items.resize(db.items.size());
    data.config_hash = cfg.fe.hash();
    parallel_for(db.items.size(), cfg.jobs, [&](std::size_t i) {
        const auto& item = db.items[i];
        CalibItem out;
        out.signal_id = item.signal_id;
        out.treatment_id = item.treatment_id;
        out.score = db.score_mushra(item);
        out.features = features_for_pair(db.root + "/" + item.ref_path,
                                         db.root + "/" + item.sut_path, cfg);
        data.items[i] = std::move(out);
    });
    return data;
}

void write_or_print(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw io_error("cannot write " + out_path);
    out << text;
}

// ---------------------------------------------------------------- score ----

int cmd_score(const std::string& model_path, const std::string& ref_path,
              const std::string& sut_path, const std::string& dump_internal,
              const std::string& format, CommonConfig cfg) {
    finalize_config(cfg);
    const CsmModel model = load_model(model_path);
    cfg.fe = model.front_end;  // scoring always runs under the model's front end
    const FeatureSeries features = features_for_pair(ref_path, sut_path, cfg);
    const ScoreResult result = score(features, model);

    if (format == "csv") {
        std::cout << "score,score_unclamped,config\n"
                  << format_double(result.score) << "," << format_double(result.score_unclamped)
                  << "," << model.config_hash << "\n";
    } else {
        std::cout << "score: " << format_double(result.score) << "\n";
        std::cout << "unclamped: " << format_double(result.score_unclamped) << "\n";
        std::cout << config_line(cfg) << "\n";
        std::cout << "terms:\n";
        for (std::size_t k = 0; k < model.terms.size(); ++k)
            std::cout << "  " << model.terms[k].id
                      << " coef=" << format_double(model.terms[k].coefficient)
                      << " mean=" << format_double(result.term_means[k]) << "\n";
        std::cout << "dm item means:\n";
        for (int m = 0; m < kDmCount; ++m)
            std::cout << "  " << dm_name(m) << "="
                      << format_double(features.item_mean_dm[static_cast<std::size_t>(m)]) << "\n";
        std::cout << "cem item means:\n";
        for (int c = 0; c < kCemCount; ++c)
            std::cout << "  " << cem_name(c) << "="
                      << format_double(features.item_mean_cem[static_cast<std::size_t>(c)]) << "\n";
    }

    if (!dump_internal.empty()) {
        std::ostringstream out;
        out << "# " << config_line(cfg) << "\n";
        out << "time,q_total";
        for (const auto& term : model.terms) out << "," << term.id;
        for (int m = 0; m < kDmCount; ++m) out << "," << dm_name(m);
        for (int c = 0; c < kCemCount; ++c) out << "," << cem_name(c);
        out << "\n";
        const Matrix q = quality_terms(features, model);
        for (std::size_t t = 0; t < q.rows(); ++t) {
            out << format_double(static_cast<double>(t) * features.hop) << ","
                << format_double(result.qm_series[t]);
            for (std::size_t k = 0; k < q.cols(); ++k) out << "," << format_double(q(t, k));
            for (std::size_t m = 0; m < kDmCount; ++m)
                out << "," << format_double(features.dm(t, m));
            for (std::size_t c = 0; c < kCemCount; ++c)
                out << "," << format_double(features.cem(t, c));
            out << "\n";
        }
        write_or_print(out.str(), dump_internal);
    }
    return 0;
}

// ----------------------------------------------------------- batch-score ----

int cmd_batch_score(const std::string& model_path, const std::string& manifest_path,
                    const std::string& out_path, CommonConfig cfg) {
    finalize_config(cfg);
    const CsmModel model = load_model(model_path);
    cfg.fe = model.front_end;
    const ListeningTestDatabase db = load_manifest(manifest_path);
    std::vector<double> objective(db.items.size());
    parallel_for(db.items.size(), cfg.jobs, [&](std::size_t i) {
        const auto& item = db.items[i];
        const FeatureSeries f = features_for_pair(db.root + "/" + item.ref_path,
                                                  db.root + "/" + item.sut_path, cfg);
        objective[i] = score(f, model).score;
    });
    std::ostringstream out;
    out << "signal_id,treatment_id,subjective,objective\n";
    for (std::size_t i = 0; i < db.items.size(); ++i)
        out << db.items[i].signal_id << "," << db.items[i].treatment_id << ","
            << format_double(db.score_mushra(db.items[i])) << ","
            << format_double(objective[i]) << "\n";
    write_or_print(out.str(), out_path);
    return 0;
}

// ------------------------------------------------------------- calibrate ----

int cmd_calibrate(const std::string& bf_manifest, const std::string& interaction_manifest,
                  const std::string& out_path, const std::string& report_path, double alpha,
                  std::uint64_t seed, const std::string& note,
                  const std::string& dump_predictors, CommonConfig cfg) {
    finalize_config(cfg);
    const CalibDataset bf_split = dataset_from_manifest(bf_manifest, cfg);
    const CalibDataset interaction_split = dataset_from_manifest(interaction_manifest, cfg);

    CalibrationOptions opts;
    opts.alpha = alpha;
    opts.seed = seed;
    opts.note = note;
    opts.dump_predictors = dump_predictors;
    const CalibrationResult result = calibrate(bf_split, interaction_split, cfg.fe, opts);
    save_model(result.model, out_path);

    std::ostringstream out;
    out << "items: bf=" << bf_split.items.size()
        << " interaction=" << interaction_split.items.size() << "\n";
    out << config_line(cfg) << "\n";
    out << "candidates (id, target, c_before, c_after, in model):\n";
    for (const auto& cand : result.candidates) {
        bool in_model = false;
        for (const auto& term : result.model.terms)
            if (!term.dpws.empty() && term.bf_index &&
                *term.bf_index == cand.dm_index && term.dpws.size() == cand.dpws.size() &&
                term.dpws[0].dpw.midpoint == cand.dpws[0].dpw.midpoint &&
                term.dpws[0].dpw.steepness == cand.dpws[0].dpw.steepness)
                in_model = true;
        out << "  " << cand.id << "  " << cand.source.label() << "->" << dm_name(cand.dm_index)
            << "  " << format_double(cand.c_before) << "  " << format_double(cand.c_after)
            << (in_model ? "  *" : "") << "\n";
    }
    out << "terms:\n";
    for (const auto& term : result.model.terms) {
        out << "  " << term.id << " coef=" << format_double(term.coefficient);
        if (term.bf_index) out << " dm=" << dm_name(*term.bf_index);
        for (const auto& d : term.dpws)
            out << " dpw(" << cem_name(static_cast<int>(d.cem))
                << ",s=" << format_double(d.dpw.steepness)
                << ",m=" << format_double(d.dpw.midpoint) << (d.dpw.inverted ? ",inv" : "")
                << ")";
        if (term.weight_inverted) out << " weight-inverted";
        out << "\n";
    }
    out << "pool correlations with scores:\n";
    for (std::size_t k = 0; k < result.candidate_names.size(); ++k)
        out << "  " << result.candidate_names[k] << "  r=" << format_double(result.pool_r[k])
            << "\n";
    out << "fit: R=" << format_double(result.fit_r) << " adj_r2=" << format_double(result.fit.adj_r2)
        << " rmse=" << format_double(result.fit.rmse) << "\n";
    const ParameterCount pc = count_parameters(result.model);
    out << "parameters: " << pc.total << "\n";
    for (const auto& w : result.warnings) out << "warning: " << w << "\n";
    out << "model written: " << out_path << "\n";
    write_or_print(out.str(), report_path);
    return 0;
}

// -------------------------------------------------------------- evaluate ----

int cmd_evaluate(const std::string& model_path, const std::string& manifest_path,
                 const std::string& out_path, const std::string& format,
                 std::uint64_t bootstrap_seed, CommonConfig cfg) {
    finalize_config(cfg);
    const CsmModel model = load_model(model_path);
    cfg.fe = model.front_end;
    const CalibDataset data = dataset_from_manifest(manifest_path, cfg);
    EvaluationOptions opts;
    opts.bootstrap_seed = bootstrap_seed;
    const EvaluationReport report = evaluate(model, data, opts);
    write_or_print(format == "csv" ? format_report_csv(report) : format_report_text(report),
                   out_path);
    return 0;
}

// -------------------------------------------------------------- synth-db ----

int cmd_synth_db(const std::string& out_dir, std::uint64_t seed, int signals, int treatments,
                 double duration, const std::string& profile, bool suite, double sigma) {
    LatentQualityModel latent;
    latent.listener_sigma = sigma;
    if (suite) {
        const SuitePaths paths =
            synth_default_suite(out_dir, seed, latent, signals, treatments, duration);
        std::cout << "isolated: " << paths.isolated_manifest << "\n";
        std::cout << "interaction: " << paths.interaction_manifest << "\n";
        std::cout << "holdout: " << paths.holdout_manifest << "\n";
        return 0;
    }
    DatabaseSpec spec;
    spec.signals = signals;
    spec.treatments = treatments;
    spec.duration = duration;
    spec.seed = seed;
    spec.profile =
        profile == "isolated" ? TreatmentProfile::Isolated : TreatmentProfile::Mixed;
    const SynthResult result = synth_database(spec, latent, out_dir);
    std::cout << "manifest: " << result.manifest_path << "\n";
    std::cout << "groundtruth: " << result.truth_path << "\n";
    return 0;
}

// --------------------------------------------------------- inspect-model ----

int cmd_inspect_model(const std::string& model_path) {
    const CsmModel model = load_model(model_path);
    std::cout << "version: " << model.version << "\n";
    std::cout << "config hash: " << model.config_hash << "\n";
    std::cout << "provenance: tool=" << model.provenance.tool
              << " seed=" << model.provenance.seed;
    if (!model.provenance.note.empty()) std::cout << " note=" << model.provenance.note;
    std::cout << "\n";
    std::cout << "basis functions:\n";
    for (const auto& bf : model.basis_functions) {
        std::cout << "  " << dm_name(bf.dm_index) << " intercept="
                  << format_double(bf.intercept) << " range=[" << format_double(bf.x_min)
                  << ", " << format_double(bf.x_max) << "]";
        for (const auto& h : bf.hinges)
            std::cout << " hinge(" << format_double(h.knot) << ", " << format_double(h.slope)
                      << ")";
        std::cout << "\n";
    }
    std::cout << "terms:\n";
    for (const auto& term : model.terms) {
        std::cout << "  " << term.id << " coef=" << format_double(term.coefficient);
        if (term.bf_index) std::cout << " dm=" << dm_name(*term.bf_index);
        for (const auto& d : term.dpws)
            std::cout << " dpw(" << cem_name(static_cast<int>(d.cem))
                      << ",s=" << format_double(d.dpw.steepness)
                      << ",m=" << format_double(d.dpw.midpoint)
                      << (d.dpw.inverted ? ",inv" : "") << ")";
        std::cout << "\n";
    }
    const ParameterCount pc = count_parameters(model);
    std::cout << pc.itemized;
    return 0;
}

// --------------------------------------------------------- dump-features ----

int cmd_dump_features(const std::string& ref_path, const std::string& sut_path,
                      const std::string& out_path, CommonConfig cfg) {
    finalize_config(cfg);
    const FeatureSeries f = features_for_pair(ref_path, sut_path, cfg);
    std::ostringstream out;
    out << "# " << config_line(cfg) << "\n";
    out << "time";
    for (int m = 0; m < kDmCount; ++m) out << "," << dm_name(m);
    for (int c = 0; c < kCemCount; ++c) out << "," << cem_name(c);
    out << "\n";
    for (std::size_t t = 0; t < f.dm.rows(); ++t) {
        out << format_double(static_cast<double>(t) * f.hop);
        for (std::size_t m = 0; m < kDmCount; ++m) out << "," << format_double(f.dm(t, m));
        for (std::size_t c = 0; c < kCemCount; ++c) out << "," << format_double(f.cem(t, c));
        out << "\n";
    }
    write_or_print(out.str(), out_path);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"csmaq: full-reference objective audio quality toolkit"};
    app.require_subcommand(1);

    CommonConfig cfg;
    std::string model_path, ref_path, sut_path, manifest_path, out_path, report_path;
    std::string dump_internal, format = "text", profile = "mixed", note, dump_predictors;
    std::string bf_manifest, interaction_manifest;
    double alpha = 0.05, duration = 2.5, sigma = 8.0;
    std::uint64_t seed = 1, bootstrap_seed = 1;
    int signals = 24, treatments = 7;
    bool suite = false;

    auto* score_cmd = app.add_subcommand("score", "score one REF/SUT pair with a model");
    score_cmd->add_option("--model", model_path)->required();
    score_cmd->add_option("--ref", ref_path)->required();
    score_cmd->add_option("--sut", sut_path)->required();
    score_cmd->add_option("--dump-internal", dump_internal, "write per-frame series CSV");
    score_cmd->add_option("--format", format)->check(CLI::IsMember({"text", "csv"}));
    add_common_flags(score_cmd, cfg);

    auto* batch_cmd = app.add_subcommand("batch-score", "score every manifest item");
    batch_cmd->add_option("--model", model_path)->required();
    batch_cmd->add_option("--manifest", manifest_path)->required();
    batch_cmd->add_option("--out", out_path, "output CSV (default stdout)");
    add_common_flags(batch_cmd, cfg, true);

    auto* calib_cmd = app.add_subcommand("calibrate", "fit a model from two databases");
    calib_cmd->add_option("--bf-db", bf_manifest, "isolated-artifact split manifest")->required();
    calib_cmd->add_option("--interaction-db", interaction_manifest, "mixed split manifest")
        ->required();
    calib_cmd->add_option("--out", out_path, "model JSON path")->required();
    calib_cmd->add_option("--report", report_path, "report path (default stdout)");
    calib_cmd->add_option("--alpha", alpha, "stepwise pruning significance level");
    calib_cmd->add_option("--seed", seed, "recorded in model provenance");
    calib_cmd->add_option("--note", note, "recorded in model provenance");
    calib_cmd->add_option("--dump-predictors", dump_predictors,
                          "write the stepwise pool matrix as CSV");
    add_common_flags(calib_cmd, cfg, true);

    auto* eval_cmd = app.add_subcommand("evaluate", "correlation report on a database");
    eval_cmd->add_option("--model", model_path)->required();
    eval_cmd->add_option("--manifest", manifest_path)->required();
    eval_cmd->add_option("--out", out_path, "report path (default stdout)");
    eval_cmd->add_option("--format", format)->check(CLI::IsMember({"text", "csv"}));
    eval_cmd->add_option("--bootstrap-seed", bootstrap_seed);
    add_common_flags(eval_cmd, cfg, true);

    auto* synth_cmd = app.add_subcommand("synth-db", "render a synthetic listening test");
    synth_cmd->add_option("--out", out_path, "output directory")->required();
    synth_cmd->add_option("--seed", seed);
    synth_cmd->add_option("--signals", signals);
    synth_cmd->add_option("--treatments", treatments);
    synth_cmd->add_option("--duration", duration);
    synth_cmd->add_option("--profile", profile)->check(CLI::IsMember({"isolated", "mixed"}));
    synth_cmd->add_flag("--suite", suite, "render isolated+interaction+holdout suite");
    synth_cmd->add_option("--listener-sigma", sigma, "per-listener score noise");

    auto* inspect_cmd = app.add_subcommand("inspect-model", "print model structure");
    inspect_cmd->add_option("--model", model_path)->required();

    auto* dump_cmd = app.add_subcommand("dump-features", "per-frame DM/CEM CSV for a pair");
    dump_cmd->add_option("--ref", ref_path)->required();
    dump_cmd->add_option("--sut", sut_path)->required();
    dump_cmd->add_option("--out", out_path, "output CSV (default stdout)");
    add_common_flags(dump_cmd, cfg);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;  // usage errors share the I/O exit code
    }

    try {
        if (score_cmd->parsed())
            return cmd_score(model_path, ref_path, sut_path, dump_internal, format, cfg);
        if (batch_cmd->parsed()) return cmd_batch_score(model_path, manifest_path, out_path, cfg);
        if (calib_cmd->parsed())
            return cmd_calibrate(bf_manifest, interaction_manifest, out_path, report_path,
                                 alpha, seed, note, dump_predictors, cfg);
        if (eval_cmd->parsed())
            return cmd_evaluate(model_path, manifest_path, out_path, format, bootstrap_seed, cfg);
        if (synth_cmd->parsed())
            return cmd_synth_db(out_path, seed, signals, treatments, duration, profile, suite,
                                sigma);
        if (inspect_cmd->parsed()) return cmd_inspect_model(model_path);
        if (dump_cmd->parsed()) return cmd_dump_features(ref_path, sut_path, out_path, cfg);
    } catch (const io_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
