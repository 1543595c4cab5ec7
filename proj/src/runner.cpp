#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "ghostdiff/experiment.hpp"
#include "ghostdiff/rng.hpp"
#include "json.hpp"

namespace ghostdiff {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr std::uint64_t kChunkFrames = 256;
constexpr std::uint64_t kDetectorSeedArm1 = 257;
constexpr std::uint64_t kDetectorSeedArm2 = 258;
constexpr double kPredictionWindowFraction = 0.6;

struct Plan {
    std::vector<std::size_t> fixed_indices;
    std::vector<double> fixed_positions_mm;
    bool autocorr = false;
    std::size_t autocorr_index = 0;
    double autocorr_position_mm = 0.0;
    bool spatial = false;
    std::ptrdiff_t spatial_range_px = 0;
    double spatial_range_mm = 0.0;
    bool visibility = false;
    bool oracle = false;
};

Plan make_plan(const ExperimentConfig& config, const Bench& bench) {
    Plan plan;
    const GridAxis& det = bench.detector_axis;
    for (const auto& e : config.estimators) {
        switch (e.kind) {
            case EstimatorKind::fixed_pixel:
                for (double pos : e.x1_positions_mm) {
                    plan.fixed_indices.push_back(det.index_of(pos * 1000.0));
                    plan.fixed_positions_mm.push_back(pos);
                }
                break;
            case EstimatorKind::autocorrelation:
                if (plan.autocorr)
                    throw std::invalid_argument(
                        "config: estimators: only one autocorrelation per run");
                plan.autocorr = true;
                plan.autocorr_index = det.index_of(e.x1_position_mm * 1000.0);
                plan.autocorr_position_mm = e.x1_position_mm;
                break;
            case EstimatorKind::spatial_average:
                if (plan.spatial)
                    throw std::invalid_argument(
                        "config: estimators: only one spatial_average per run");
                plan.spatial = true;
                plan.spatial_range_px = static_cast<std::ptrdiff_t>(
                    e.max_abs_diff_mm * 1000.0 / det.pitch);
                plan.spatial_range_mm = e.max_abs_diff_mm;
                break;
            case EstimatorKind::visibility:
                plan.visibility = true;
                break;
            case EstimatorKind::gamma_oracle:
                if (plan.oracle)
                    throw std::invalid_argument(
                        "config: estimators: only one gamma_oracle per run");
                plan.oracle = true;
                break;
        }
    }
    return plan;
}

struct AccSet {
    std::optional<MomentAccumulator> means;
    std::vector<MomentAccumulator> fixed;
    std::optional<MomentAccumulator> autoc;
    std::optional<MomentAccumulator> spatial;
    std::optional<GammaAccumulator> gamma;
    std::optional<MomentAccumulator> mc_cross;
    std::optional<MomentAccumulator> mc_hbt;
};

AccSet make_accset(const Plan& plan, const Bench& bench, std::uint64_t frames) {
    const GridAxis& det = bench.detector_axis;
    AccSet acc;
    acc.means.emplace(MomentAccumulator::means_only(det, det, frames));
    for (std::size_t idx : plan.fixed_indices)
        acc.fixed.push_back(MomentAccumulator::fixed_pixel(det, det, idx, frames));
    if (plan.autocorr)
        acc.autoc.emplace(
            MomentAccumulator::fixed_pixel(det, det, plan.autocorr_index, frames));
    if (plan.spatial)
        acc.spatial.emplace(MomentAccumulator::difference_coordinate(
            det, det, plan.spatial_range_px, frames));
    if (plan.oracle) {
        acc.gamma.emplace(GammaAccumulator::full(bench.source_axis));
        acc.mc_cross.emplace(MomentAccumulator::full_matrix(det, det, frames));
        acc.mc_hbt.emplace(MomentAccumulator::full_matrix(det, det, frames));
    }
    return acc;
}

void merge_accsets(AccSet& into, AccSet&& from) {
    into.means->merge_from(std::move(*from.means));
    for (std::size_t i = 0; i < into.fixed.size(); ++i)
        into.fixed[i].merge_from(std::move(from.fixed[i]));
    if (into.autoc) into.autoc->merge_from(std::move(*from.autoc));
    if (into.spatial) into.spatial->merge_from(std::move(*from.spatial));
    if (into.gamma) into.gamma->merge_from(std::move(*from.gamma));
    if (into.mc_cross) into.mc_cross->merge_from(std::move(*from.mc_cross));
    if (into.mc_hbt) into.mc_hbt->merge_from(std::move(*from.mc_hbt));
}

void process_frame(AccSet& acc, const Bench& bench, std::uint64_t master_seed,
                   std::uint64_t k) {
    const std::uint64_t frame_seed = derive_seed(master_seed, k);
    const ComplexField field = synthesize_speckle(bench.speckle, frame_seed);
    if (acc.gamma) acc.gamma->add(k, field);

    const SplitBeams beams = split_beam(field, bench.splitter);
    const ComplexField test = apply_object(beams.test, bench.object);
    const ComplexField b1 = lens_far_field(test, bench.optics);
    const ComplexField b2 = lens_far_field(beams.reference, bench.optics);
    const IntensityFrame i1 =
        detect(b1, bench.detector, derive_seed(frame_seed, kDetectorSeedArm1));
    const IntensityFrame i2 =
        detect(b2, bench.detector, derive_seed(frame_seed, kDetectorSeedArm2));

    acc.means->add(k, i1, i2);
    for (auto& f : acc.fixed) f.add(k, i1, i2);
    if (acc.autoc) acc.autoc->add(k, i1, i1);
    if (acc.spatial) acc.spatial->add(k, i1, i2);
    if (acc.mc_cross) acc.mc_cross->add(k, i1, i2);
    if (acc.mc_hbt) acc.mc_hbt->add(k, i1, i1);
}

std::string format_g(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string pattern_tsv(const Pattern& p) {
    std::string s = "x_mm\tvalue\tstd_err\n";
    for (std::size_t i = 0; i < p.axis.n; ++i) {
        s += format_g(p.axis.coordinate(i) / 1000.0);
        s += '\t';
        s += format_g(p.values[i]);
        s += '\t';
        s += format_g(p.std_err.empty() ? 0.0 : p.std_err[i]);
        s += '\n';
    }
    return s;
}

std::string matrix_tsv(const GridAxis& axis1, const GridAxis& axis2,
                       const RealMatrix& m) {
    std::string s = "x1_mm\tx2_mm\tvalue\n";
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) {
            s += format_g(axis1.coordinate(i) / 1000.0);
            s += '\t';
            s += format_g(axis2.coordinate(j) / 1000.0);
            s += '\t';
            s += format_g(m.at(i, j));
            s += '\n';
        }
    return s;
}

class OutputWriter {
  public:
    OutputWriter(const fs::path& dir, std::vector<OutputRecord>& records)
        : dir_(dir), records_(records) {}

    void write(const std::string& name, const std::string& content) {
        const fs::path path = dir_ / name;
        std::ofstream f(path, std::ios::binary);
        if (!f) throw std::runtime_error("runner: cannot write " + path.string());
        f << content;
        if (!f) throw std::runtime_error("runner: short write to " + path.string());
        records_.push_back({name, fnv1a_hex(content)});
    }

  private:
    fs::path dir_;
    std::vector<OutputRecord>& records_;
};

/// Five percent floor mask of a mean profile.
std::vector<unsigned char> floor_mask(const Pattern& mean) {
    double peak = *std::max_element(mean.values.begin(), mean.values.end());
    std::vector<unsigned char> mask(mean.values.size(), 0);
    if (!(peak > 0.0)) return mask;
    for (std::size_t i = 0; i < mask.size(); ++i)
        mask[i] = mean.values[i] >= 0.05 * peak ? 1 : 0;
    return mask;
}

double masked_rel_rms(const RealMatrix& measured, const RealMatrix& reference,
                      const std::vector<unsigned char>& mask1,
                      const std::vector<unsigned char>& mask2) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < measured.rows; ++i) {
        if (!mask1[i]) continue;
        for (std::size_t j = 0; j < measured.cols; ++j) {
            if (!mask2[j]) continue;
            const double d = measured.at(i, j) - reference.at(i, j);
            num += d * d;
            den += reference.at(i, j) * reference.at(i, j);
        }
    }
    if (!(den > 0.0))
        throw std::runtime_error("runner: oracle reference vanishes on all "
                                 "unmasked points");
    return std::sqrt(num / den);
}

}  // namespace

RunManifest run_experiment(const ExperimentConfig& config,
                           const RunOverrides& overrides) {
    const auto t0 = std::chrono::steady_clock::now();

    const Bench bench = make_bench(config);
    const Plan plan = make_plan(config, bench);

    const std::uint64_t seed = overrides.seed.value_or(config.source.master_seed);
    std::uint64_t frames = config.source.n_frames;
    if (overrides.full_size && config.source.full_frames > 0)
        frames = config.source.full_frames;
    if (overrides.frames) frames = *overrides.frames;
    if (frames == 0)
        throw std::invalid_argument("config: source.n_frames must be positive");

    std::size_t workers = overrides.workers.value_or(1);
    if (workers == 0) workers = 1;

    std::string out_base = config.outputs.directory;
    if (const char* env = std::getenv("GHOSTDIFF_OUT_DIR"); env && *env)
        out_base = env;
    if (overrides.out_dir) out_base = *overrides.out_dir;
    const fs::path dir = fs::path(out_base) / config.name;
    fs::create_directories(dir);

    bool want_tsv = config.outputs.formats.empty();
    bool want_json = config.outputs.formats.empty();
    for (const auto& f : config.outputs.formats) {
        if (f == "tsv") want_tsv = true;
        if (f == "json") want_json = true;
    }

    RunManifest man;
    man.config_hash = fnv1a_hex(serialize_config(config));
    man.seed = seed;
    man.frames = frames;
    man.workers = workers;
    man.directory = dir.string();

    AccSet acc = make_accset(plan, bench, frames);
    if (workers == 1) {
        try {
            for (std::uint64_t k = 0; k < frames; ++k)
                process_frame(acc, bench, seed, k);
        } catch (const std::exception& e) {
            man.errors.push_back({"frame_loop", e.what()});
        }
    } else {
        std::atomic<std::uint64_t> next{0};
        std::mutex merge_mutex;
        std::vector<std::string> worker_errors;
        auto work = [&]() {
            AccSet local = make_accset(plan, bench, frames);
            std::string error;
            try {
                while (true) {
                    const std::uint64_t k0 = next.fetch_add(kChunkFrames);
                    if (k0 >= frames) break;
                    const std::uint64_t k1 = std::min(k0 + kChunkFrames, frames);
                    for (std::uint64_t k = k0; k < k1; ++k)
                        process_frame(local, bench, seed, k);
                }
            } catch (const std::exception& e) {
                error = e.what();
            }
            std::lock_guard<std::mutex> lock(merge_mutex);
            merge_accsets(acc, std::move(local));
            if (!error.empty()) worker_errors.push_back(error);
        };
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
        for (const auto& e : worker_errors) man.errors.push_back({"frame_loop", e});
    }

    OutputWriter out(dir, man.outputs);
    json summary;
    summary["name"] = config.name;
    summary["config_hash"] = man.config_hash;
    summary["seed"] = seed;
    summary["frames"] = frames;

    auto guard = [&man](const std::string& stage, auto&& fn) {
        try {
            fn();
        } catch (const std::exception& e) {
            man.errors.push_back({stage, e.what()});
        }
    };

    if (want_tsv) {
        guard("mean_intensity", [&] {
            out.write("mean_i1.tsv", pattern_tsv(mean_intensity(*acc.means, 1)));
            out.write("mean_i2.tsv", pattern_tsv(mean_intensity(*acc.means, 2)));
        });
        for (std::size_t k = 0; k < acc.fixed.size(); ++k) {
            const std::string label = "p" + std::to_string(k + 1);
            guard("fixed_pixel " + label, [&] {
                out.write("cross_" + label + "_raw.tsv",
                          pattern_tsv(ghost_pattern_fixed_pixel(acc.fixed[k], false)));
                out.write("cross_" + label + "_norm.tsv",
                          pattern_tsv(ghost_pattern_fixed_pixel(acc.fixed[k], true)));
            });
        }
        if (acc.autoc) {
            guard("autocorrelation", [&] {
                out.write("autocorr_raw.tsv", pattern_tsv(autocorrelation(*acc.autoc)));
                out.write("autocorr_norm.tsv",
                          pattern_tsv(ghost_pattern_fixed_pixel(*acc.autoc, true)));
            });
        }
        if (acc.spatial) {
            guard("spatial_average", [&] {
                out.write("spatial_raw.tsv",
                          pattern_tsv(ghost_pattern_spatial_average(*acc.spatial, false)));
                out.write("spatial_norm.tsv",
                          pattern_tsv(ghost_pattern_spatial_average(*acc.spatial, true)));
            });
        }
    }

    if (plan.visibility) {
        guard("visibility", [&] {
            const VisibilityReport rep = visibility(acc.fixed.front());
            if (want_tsv) out.write("visibility.tsv", pattern_tsv(rep.per_point));
            json v;
            v["max"] = rep.max_visibility;
            v["std_err"] = rep.std_err_at_max;
            v["x1_mm"] = plan.fixed_positions_mm.front();
            v["x2_mm"] = rep.per_point.axis.coordinate(rep.argmax) / 1000.0;
            summary["visibility"] = v;
        });
    }

    if (plan.oracle) {
        guard("gamma_oracle", [&] {
            const GammaMatrix gamma = acc.gamma->finalize_full();
            const CorrelationMap oc =
                oracle_correlation(gamma, bench.object, bench.optics, bench.splitter);
            BeamSplitterSpec hbt_split;
            hbt_split.r = bench.splitter.t;
            hbt_split.t = bench.splitter.t;
            const CorrelationMap oh =
                oracle_hbt(gamma, bench.object, bench.optics, hbt_split);
            const RealMatrix mc = cross_correlation(*acc.mc_cross);
            const RealMatrix mh = cross_correlation(*acc.mc_hbt);

            const auto mask1 = floor_mask(mean_intensity(*acc.mc_cross, 1));
            const auto mask2 = floor_mask(mean_intensity(*acc.mc_cross, 2));
            const double cross_rms = masked_rel_rms(mc, oc.values, mask1, mask2);
            const double hbt_rms = masked_rel_rms(mh, oh.values, mask1, mask1);

            if (want_tsv) {
                const GridAxis& det = bench.detector_axis;
                out.write("mc_cross_matrix.tsv", matrix_tsv(det, det, mc));
                out.write("oracle_cross_matrix.tsv",
                          matrix_tsv(oc.axis1, oc.axis2, oc.values));
                out.write("mc_hbt_matrix.tsv", matrix_tsv(det, det, mh));
                out.write("oracle_hbt_matrix.tsv",
                          matrix_tsv(oh.axis1, oh.axis2, oh.values));
            }
            json o;
            o["cross_rel_rms"] = cross_rms;
            o["hbt_rel_rms"] = hbt_rms;
            summary["oracle"] = o;
        });
    }

    if (want_json && bench.object.kind == TransmissionObject::Kind::square_phase_grating) {
        guard("prediction", [&] {
            GratingSpec g;
            g.period_d = bench.object.period_d;
            g.groove_width_a = bench.object.groove_width_a;
            g.phase_shift_dphi = bench.object.phase_shift;
            const DiffractionPrediction pred =
                predict_diffraction(g, bench.optics, 2);
            const double spacing_um = bench.optics.focal_length_mm * 1000.0 *
                                      bench.optics.wavelength_um /
                                      bench.object.period_d;
            json p;
            p["orders"] = pred.orders;
            p["eta"] = pred.eta;
            p["x_mm"] = pred.x;
            p["window_um"] = kPredictionWindowFraction * spacing_um;
            p["lambda_um"] = bench.optics.wavelength_um;
            p["focal_length_mm"] = bench.optics.focal_length_mm;
            p["period_d_um"] = bench.object.period_d;
            out.write("prediction.json", p.dump(2) + "\n");
        });
    }

    if (want_json) {
        guard("summary", [&] {
            if (!plan.fixed_positions_mm.empty()) {
                json fp = json::array();
                for (std::size_t k = 0; k < plan.fixed_positions_mm.size(); ++k) {
                    json e;
                    e["label"] = "p" + std::to_string(k + 1);
                    e["x1_mm"] = plan.fixed_positions_mm[k];
                    e["index"] = plan.fixed_indices[k];
                    fp.push_back(e);
                }
                summary["fixed_pixels"] = fp;
            }
            if (plan.autocorr) summary["autocorr_x1_mm"] = plan.autocorr_position_mm;
            if (plan.spatial) summary["spatial_range_mm"] = plan.spatial_range_mm;
            json files = json::array();
            for (const auto& rec : man.outputs) files.push_back(rec.file);
            summary["files"] = files;
            out.write("summary.json", summary.dump(2) + "\n");
        });
    }

    man.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    json mj;
    mj["config_hash"] = man.config_hash;
    mj["seed"] = man.seed;
    mj["frames"] = man.frames;
    mj["workers"] = man.workers;
    json outs = json::array();
    for (const auto& rec : man.outputs) {
        json r;
        r["file"] = rec.file;
        r["checksum"] = rec.checksum;
        outs.push_back(r);
    }
    mj["outputs"] = outs;
    json errs = json::array();
    for (const auto& e : man.errors) {
        json r;
        r["stage"] = e.stage;
        r["message"] = e.message;
        errs.push_back(r);
    }
    mj["errors"] = errs;
    mj["wall_clock_seconds"] = man.wall_clock_seconds;
    {
        const fs::path path = dir / "manifest.json";
        std::ofstream f(path, std::ios::binary);
        if (!f) throw std::runtime_error("runner: cannot write " + path.string());
        f << mj.dump(2) << "\n";
    }
    return man;
}

}  // namespace ghostdiff
