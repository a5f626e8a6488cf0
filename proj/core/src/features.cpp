#include "csmaq/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "csmaq/speech.hpp"
#include "csmaq/stats.hpp"

namespace csmaq {

namespace {

constexpr int kSyncRatio = 5;          // 20 ms internal frames per 100 ms frame
constexpr double kModDiffOffset = 1.0; // modulation-difference normalization offset
// Missing components count far less than added ones: losses are owned by
// LinDist, and an even weighting would turn this metric into a second
// band-limiting detector.
constexpr double kMissingWeight = 0.15;
constexpr double kAdaptTau = 0.2;      // gain-equalization smoothing, seconds
constexpr double kNmrFloorDb = -60.0;  // per-band noise-to-mask floor
constexpr double kEhsEps = 1e-6;       // log-spectrum regularizer, power units
constexpr int kEhsLagLow = 2;
constexpr int kEhsLagHigh = 192;
constexpr int kCemWindow = 25;         // 500 ms trailing window, internal frames

void check_shapes(const ExcitationPattern& a, const ExcitationPattern& b) {
    if (a.frames.rows() != b.frames.rows() || a.frames.cols() != b.frames.cols())
        throw domain_error("feature extraction: excitation shape mismatch");
}

/// Averages groups of kSyncRatio internal frames into 100 ms frames.
std::vector<double> sync_100ms(const std::vector<double>& series) {
    const std::size_t t100 = series.size() / kSyncRatio;
    std::vector<double> out(t100, 0.0);
    for (std::size_t t = 0; t < t100; ++t) {
        double acc = 0.0;
        for (int i = 0; i < kSyncRatio; ++i) acc += series[t * kSyncRatio + i];
        out[t] = acc / kSyncRatio;
    }
    return out;
}

}  // namespace

const char* dm_name(int index) {
    static const char* names[kDmCount] = {"rms_mod_diff", "noise_loudness", "lin_dist",
                                          "seg_nmr", "ehs"};
    return names[index];
}

const char* cem_name(int index) {
    static const char* names[kCemCount] = {"prob_speech", "epn", "pdev"};
    return names[index];
}

void FeatureSeries::recompute_means() {
    for (int c = 0; c < kDmCount; ++c) {
        const auto col = dm.column(static_cast<std::size_t>(c));
        item_mean_dm[static_cast<std::size_t>(c)] = mean(col);
    }
    for (int c = 0; c < kCemCount; ++c) {
        const auto col = cem.column(static_cast<std::size_t>(c));
        item_mean_cem[static_cast<std::size_t>(c)] = mean(col);
    }
}

Matrix extract_dms(const ExcitationPattern& e_ref, const ExcitationPattern& e_sut,
                   const ModulationPattern& m_ref, const ModulationPattern& m_sut) {
    check_shapes(e_ref, e_sut);
    if (m_ref.frames.rows() != e_ref.frames.rows() ||
        m_sut.frames.rows() != e_sut.frames.rows())
        throw domain_error("feature extraction: modulation shape mismatch");
    const std::size_t frames = e_ref.frames.rows();
    const std::size_t bands = e_ref.frames.cols();
    const double inv_alpha_exp = 1.0 / e_ref.alpha;

    std::vector<double> rms_mod(frames), noise_loud(frames), lin_dist(frames),
        seg_nmr(frames), ehs(frames);
    std::vector<double> ref_smooth(bands), sut_smooth(bands);
    const double adapt_decay = std::exp(-e_ref.frame_hop / kAdaptTau);

    // Per-band masking offset in dB from the band's pitch value.
    std::vector<double> mask_divisor(bands);
    for (std::size_t b = 0; b < bands; ++b) {
        const double z = pitch_scale(e_ref.band_centers[b]);
        mask_divisor[b] = std::pow(10.0, std::max(3.0, 0.25 * z) / 10.0);
    }

    const std::size_t aux_bins = e_ref.aux_spectrum.cols();
    std::vector<double> log_err(aux_bins);

    for (std::size_t f = 0; f < frames; ++f) {
        double mod_acc = 0.0, added = 0.0, missing = 0.0, lin_acc = 0.0, nmr_acc = 0.0;
        for (std::size_t b = 0; b < bands; ++b) {
            const double lr = e_ref.frames(f, b);
            const double ls = e_sut.frames(f, b);

            const double md =
                (m_sut.frames(f, b) - m_ref.frames(f, b)) / (kModDiffOffset + m_ref.frames(f, b));
            mod_acc += md * md;

            added += std::max(ls - lr, 0.0);
            missing += std::max(lr - ls, 0.0);

            if (f == 0) {
                ref_smooth[b] = lr;
                sut_smooth[b] = ls;
            } else {
                ref_smooth[b] = adapt_decay * ref_smooth[b] + (1.0 - adapt_decay) * lr;
                sut_smooth[b] = adapt_decay * sut_smooth[b] + (1.0 - adapt_decay) * ls;
            }
            // Noise-to-mask ratio in the energy domain (compression undone).
            // Only amplitude the SUT adds over the reference counts as noise;
            // removed energy is linear distortion and belongs to the spectral
            // loss metric below, not to the masking comparison.
            const double er = std::pow(lr, inv_alpha_exp);
            const double es = std::pow(ls, inv_alpha_exp);
            const double excess = std::max(std::sqrt(es) - std::sqrt(er), 0.0);
            const double noise = excess * excess;
            const double mask = er / mask_divisor[b];
            const double nmr_db =
                noise > 0.0 ? std::max(10.0 * std::log10(noise / mask), kNmrFloorDb)
                            : kNmrFloorDb;
            nmr_acc += nmr_db;
        }
        // Long-term per-band gain of SUT relative to REF, loss side only:
        // band-limiting, response tilts, and sustained attenuation pull gain
        // down, while additive disturbances push it up and already belong to
        // NoiseLoudness/SegNMR. Counting both sides would make this metric
        // track noise more strongly than band-limiting.
        for (std::size_t b = 0; b < bands; ++b) {
            const double gain = std::clamp(sut_smooth[b] / ref_smooth[b], 1e-3, 1e3);
            lin_acc += std::max(1.0 - gain, 0.0) * e_ref.frames(f, b);
        }
        const double inv_b = 1.0 / static_cast<double>(bands);
        rms_mod[f] = std::sqrt(mod_acc * inv_b);
        noise_loud[f] = (added + kMissingWeight * missing) * inv_b;
        lin_dist[f] = lin_acc * inv_b;
        // Rebased so the identical-pair floor sits at 0 and the metric is
        // nonnegative like the other distortion metrics.
        seg_nmr[f] = nmr_acc * inv_b - kNmrFloorDb;

        // Harmonic error structure: autocorrelation peak over spectral lag
        // of the mean-removed log error spectrum.
        double lemean = 0.0;
        for (std::size_t k = 0; k < aux_bins; ++k) {
            log_err[k] = std::log(e_sut.aux_spectrum(f, k) + kEhsEps) -
                         std::log(e_ref.aux_spectrum(f, k) + kEhsEps);
            lemean += log_err[k];
        }
        lemean /= static_cast<double>(aux_bins);
        double power = 0.0;
        for (std::size_t k = 0; k < aux_bins; ++k) {
            log_err[k] -= lemean;
            power += log_err[k] * log_err[k];
        }
        double peak = 0.0;
        if (power / static_cast<double>(aux_bins) > 1e-12) {
            const double norm = power / static_cast<double>(aux_bins);
            // The peak search starts after the main lobe (first local
            // minimum): a merely smooth error spectrum keeps high small-lag
            // correlation without any harmonic structure, and the metric
            // must respond to periodicity only.
            double prev = 1e300;
            bool past_lobe = false;
            for (int lag = kEhsLagLow; lag <= kEhsLagHigh; ++lag) {
                double acc = 0.0;
                const std::size_t limit = aux_bins - static_cast<std::size_t>(lag);
                for (std::size_t k = 0; k < limit; ++k)
                    acc += log_err[k] * log_err[k + static_cast<std::size_t>(lag)];
                const double value = acc / static_cast<double>(limit) / norm;
                if (past_lobe) peak = std::max(peak, value);
                else if (value > prev) {
                    past_lobe = true;
                    peak = std::max(peak, value);
                }
                prev = value;
            }
        }
        ehs[f] = std::min(peak, 1.0);
    }

    const auto t100 = static_cast<std::size_t>(frames / kSyncRatio);
    if (t100 == 0) throw domain_error("feature extraction: item shorter than 100 ms");
    Matrix dm(t100, kDmCount);
    const std::vector<std::vector<double>*> cols = {&rms_mod, &noise_loud, &lin_dist, &seg_nmr,
                                                    &ehs};
    for (int c = 0; c < kDmCount; ++c) {
        const auto synced = sync_100ms(*cols[static_cast<std::size_t>(c)]);
        for (std::size_t t = 0; t < t100; ++t) dm(t, static_cast<std::size_t>(c)) = synced[t];
    }
    return dm;
}

void extract_cem_epn_pdev(const ExcitationPattern& e_ref, const ExcitationPattern& e_sut,
                          std::vector<double>& epn, std::vector<double>& pdev) {
    check_shapes(e_ref, e_sut);
    const std::size_t frames = e_ref.frames.rows();
    const std::size_t bands = e_ref.frames.cols();

    std::vector<double> ref_env(frames, 0.0), err_env(frames, 0.0);
    for (std::size_t f = 0; f < frames; ++f) {
        double r = 0.0, d = 0.0;
        for (std::size_t b = 0; b < bands; ++b) {
            r += e_ref.frames(f, b);
            d += std::fabs(e_sut.frames(f, b) - e_ref.frames(f, b));
        }
        ref_env[f] = r;
        err_env[f] = d;
    }

    std::vector<double> epn20(frames, 0.0), pdev20(frames, 0.0);
    for (std::size_t f = 0; f < frames; ++f) {
        const std::size_t lo = f + 1 >= kCemWindow ? f + 1 - kCemWindow : 0;
        const std::size_t len = f + 1 - lo;
        std::span<const double> rw(ref_env.data() + lo, len);
        std::span<const double> ew(err_env.data() + lo, len);

        // Informational-masking effect size: variability of the masker.
        const double m = mean(rw);
        pdev20[f] = m > 0.0 ? sample_stddev(rw) / m : 0.0;

        // Streaming effect size: an error envelope uncorrelated with the
        // signal envelope reads as a separate perceptual stream.
        double err_total = 0.0;
        for (double v : ew) err_total += v;
        if (err_total > 0.0)
            epn20[f] = std::clamp(1.0 - std::fabs(pearson_r(ew, rw)), 0.0, 1.0);
    }

    epn = sync_100ms(epn20);
    pdev = sync_100ms(pdev20);
}

FeatureSeries extract_features(const AlignedSignalPair& pair, const FrontEndConfig& cfg) {
    const std::size_t channels = pair.ref.channel_count();
    if (channels == 0 || channels != pair.sut.channel_count())
        throw domain_error("extract_features: bad channel layout");

    Matrix dm_sum;
    std::vector<double> epn_sum, pdev_sum;
    for (std::size_t c = 0; c < channels; ++c) {
        Waveform ref_ch{{pair.ref.channels[c]}, pair.ref.sample_rate};
        Waveform sut_ch{{pair.sut.channels[c]}, pair.sut.sample_rate};
        const auto e_ref = compute_excitation(ref_ch, cfg);
        const auto e_sut = compute_excitation(sut_ch, cfg);
        const auto m_ref = compute_modulation(e_ref);
        const auto m_sut = compute_modulation(e_sut);
        Matrix dm = extract_dms(e_ref, e_sut, m_ref, m_sut);
        std::vector<double> epn, pdev;
        extract_cem_epn_pdev(e_ref, e_sut, epn, pdev);
        if (c == 0) {
            dm_sum = std::move(dm);
            epn_sum = std::move(epn);
            pdev_sum = std::move(pdev);
        } else {
            if (dm.rows() != dm_sum.rows())
                throw domain_error("extract_features: channel length mismatch");
            for (std::size_t i = 0; i < dm.data().size(); ++i) dm_sum.data()[i] += dm.data()[i];
            for (std::size_t i = 0; i < epn.size(); ++i) epn_sum[i] += epn[i];
            for (std::size_t i = 0; i < pdev.size(); ++i) pdev_sum[i] += pdev[i];
        }
    }
    const double inv_c = 1.0 / static_cast<double>(channels);
    for (double& v : dm_sum.data()) v *= inv_c;
    for (double& v : epn_sum) v *= inv_c;
    for (double& v : pdev_sum) v *= inv_c;

    const std::size_t t100 = dm_sum.rows();
    const auto decisions = extract_prob_speech(pair.ref);
    const auto ps = sync_prob_speech(decisions, t100);

    FeatureSeries out;
    out.dm = std::move(dm_sum);
    out.cem = Matrix(t100, kCemCount);
    for (std::size_t t = 0; t < t100; ++t) {
        out.cem(t, 0) = ps[t];
        out.cem(t, 1) = epn_sum[t];
        out.cem(t, 2) = pdev_sum[t];
    }
    out.hop = 0.1;
    out.config_hash = cfg.hash();
    out.recompute_means();
    return out;
}

void write_feature_cache(const std::vector<FeatureRecord>& records, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw io_error("cannot write " + path);
    const std::string hash = records.empty() ? "none" : records.front().series.config_hash;
    out << "# csmaq-features v1 config=" << hash << "\n";
    out << "signal_id,treatment_id,frame";
    for (int c = 0; c < kDmCount; ++c) out << "," << dm_name(c);
    for (int c = 0; c < kCemCount; ++c) out << "," << cem_name(c);
    out << "\n";
    for (const auto& rec : records) {
        if (rec.series.config_hash != hash)
            throw domain_error("feature cache: mixed front-end configs");
        for (std::size_t t = 0; t < rec.series.dm.rows(); ++t) {
            out << rec.signal_id << "," << rec.treatment_id << "," << t;
            for (int c = 0; c < kDmCount; ++c)
                out << "," << format_double(rec.series.dm(t, static_cast<std::size_t>(c)));
            for (int c = 0; c < kCemCount; ++c)
                out << "," << format_double(rec.series.cem(t, static_cast<std::size_t>(c)));
            out << "\n";
        }
    }
    if (!out) throw io_error("short write: " + path);
}

std::vector<FeatureRecord> read_feature_cache(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("# csmaq-features v1 config=", 0) != 0)
        throw io_error(path + ": not a feature cache file");
    const std::string hash = line.substr(std::string("# csmaq-features v1 config=").size());
    if (!std::getline(in, line)) throw io_error(path + ": missing header row");

    std::vector<FeatureRecord> records;
    std::vector<std::array<double, kDmCount + kCemCount>> rows;
    std::string cur_signal, cur_treatment;

    auto flush = [&]() {
        if (rows.empty()) return;
        FeatureRecord rec;
        rec.signal_id = cur_signal;
        rec.treatment_id = cur_treatment;
        rec.series.dm = Matrix(rows.size(), kDmCount);
        rec.series.cem = Matrix(rows.size(), kCemCount);
        for (std::size_t t = 0; t < rows.size(); ++t) {
            for (int c = 0; c < kDmCount; ++c)
                rec.series.dm(t, static_cast<std::size_t>(c)) = rows[t][static_cast<std::size_t>(c)];
            for (int c = 0; c < kCemCount; ++c)
                rec.series.cem(t, static_cast<std::size_t>(c)) =
                    rows[t][static_cast<std::size_t>(kDmCount + c)];
        }
        rec.series.hop = 0.1;
        rec.series.config_hash = hash;
        rec.series.recompute_means();
        records.push_back(std::move(rec));
        rows.clear();
    };

    std::size_t line_no = 2;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 3 + kDmCount + kCemCount)
            throw io_error(path + ": bad column count at line " + std::to_string(line_no));
        if (fields[0] != cur_signal || fields[1] != cur_treatment) {
            flush();
            cur_signal = fields[0];
            cur_treatment = fields[1];
        }
        std::array<double, kDmCount + kCemCount> row{};
        for (std::size_t c = 0; c < row.size(); ++c) {
            try {
                row[c] = std::stod(fields[3 + c]);
            } catch (const std::exception&) {
                throw io_error(path + ": bad number at line " + std::to_string(line_no));
            }
        }
        rows.push_back(row);
    }
    flush();
    return records;
}

}  // namespace csmaq
