#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ghostdiff/experiment.hpp"
#include "json.hpp"

namespace ghostdiff {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) {
    throw std::invalid_argument("config: " + msg);
}

const json& need(const json& j, const char* key, const std::string& ctx) {
    auto it = j.find(key);
    if (it == j.end()) fail(ctx + "." + key + " is required");
    return *it;
}

double need_number(const json& j, const char* key, const std::string& ctx) {
    const json& v = need(j, key, ctx);
    if (!v.is_number()) fail(ctx + "." + key + " must be a number");
    return v.get<double>();
}

double opt_number(const json& j, const char* key, double fallback) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_number()) fail(std::string("config field ") + key + " must be a number");
    return it->get<double>();
}

std::uint64_t opt_uint(const json& j, const char* key, std::uint64_t fallback,
                       const std::string& ctx) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_number_unsigned()) fail(ctx + "." + key + " must be a non-negative integer");
    return it->get<std::uint64_t>();
}

std::string need_string(const json& j, const char* key, const std::string& ctx) {
    const json& v = need(j, key, ctx);
    if (!v.is_string()) fail(ctx + "." + key + " must be a string");
    return v.get<std::string>();
}

EstimatorKind estimator_kind_from(const std::string& s) {
    if (s == "fixed_pixel") return EstimatorKind::fixed_pixel;
    if (s == "spatial_average") return EstimatorKind::spatial_average;
    if (s == "autocorrelation") return EstimatorKind::autocorrelation;
    if (s == "visibility") return EstimatorKind::visibility;
    if (s == "gamma_oracle") return EstimatorKind::gamma_oracle;
    fail("estimators type '" + s + "' is unknown");
}

std::string estimator_kind_name(EstimatorKind k) {
    switch (k) {
        case EstimatorKind::fixed_pixel: return "fixed_pixel";
        case EstimatorKind::spatial_average: return "spatial_average";
        case EstimatorKind::autocorrelation: return "autocorrelation";
        case EstimatorKind::visibility: return "visibility";
        case EstimatorKind::gamma_oracle: return "gamma_oracle";
    }
    fail("estimator kind out of range");
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        fail(std::string("not valid JSON: ") + e.what());
    }
    if (!j.is_object()) fail("top level must be an object");

    ExperimentConfig c;
    c.name = need_string(j, "name", "config");
    if (c.name.empty()) fail("config.name must not be empty");

    {
        const json& g = need(j, "grid", "config");
        const json& np = need(g, "n_points", "grid");
        if (!np.is_number_unsigned() || np.get<std::uint64_t>() == 0)
            fail("grid.n_points must be a positive integer");
        c.grid.n_points = np.get<std::size_t>();
        c.grid.pitch_um = opt_number(g, "pitch_um", 0.0);
        c.grid.pixels_per_period = opt_number(g, "pixels_per_period", 0.0);
    }
    {
        const json& s = need(j, "source", "config");
        c.source.delta_x_n_um = need_number(s, "delta_x_n_um", "source");
        c.source.aperture_um = need_number(s, "aperture_um", "source");
        if (auto it = s.find("envelope"); it != s.end())
            c.source.envelope = it->get<std::string>();
        c.source.master_seed = opt_uint(s, "master_seed", 1, "source");
        c.source.n_frames = opt_uint(s, "n_frames", 0, "source");
        c.source.full_frames = opt_uint(s, "full_frames", 0, "source");
    }
    {
        const json& o = need(j, "object", "config");
        c.object.kind = need_string(o, "kind", "object");
        c.object.period_d_um = opt_number(o, "period_d_um", 0.0);
        c.object.groove_width_a_um = opt_number(o, "groove_width_a_um", 0.0);
        c.object.phase_shift_rad = opt_number(o, "phase_shift_rad", 0.0);
        c.object.mask_pitch_um = opt_number(o, "mask_pitch_um", 0.0);
        if (auto it = o.find("mask_real"); it != o.end())
            c.object.mask_real = it->get<std::vector<double>>();
        if (auto it = o.find("mask_imag"); it != o.end())
            c.object.mask_imag = it->get<std::vector<double>>();
    }
    {
        const json& o = need(j, "optics", "config");
        c.optics.lambda_um = need_number(o, "lambda_um", "optics");
        c.optics.focal_length_mm = need_number(o, "focal_length_mm", "optics");
    }
    if (auto it = j.find("beam_splitter"); it != j.end()) {
        c.beam_splitter.kind = need_string(*it, "kind", "beam_splitter");
        c.beam_splitter.r_re = opt_number(*it, "r_re", 0.0);
        c.beam_splitter.r_im = opt_number(*it, "r_im", 0.0);
        c.beam_splitter.t_re = opt_number(*it, "t_re", 0.0);
        c.beam_splitter.t_im = opt_number(*it, "t_im", 0.0);
    }
    if (auto it = j.find("detector"); it != j.end()) {
        c.detector.pixel_pitch_um = opt_number(*it, "pixel_pitch_um", 0.0);
        if (auto sn = it->find("shot_noise"); sn != it->end()) {
            if (!sn->is_boolean()) fail("detector.shot_noise must be a boolean");
            c.detector.shot_noise = sn->get<bool>();
        }
        c.detector.shot_noise_scale = opt_number(*it, "shot_noise_scale", 1.0e4);
    }
    if (auto it = j.find("estimators"); it != j.end()) {
        if (!it->is_array()) fail("config.estimators must be an array");
        for (const json& e : *it) {
            EstimatorConfig ec;
            ec.kind = estimator_kind_from(need_string(e, "type", "estimators"));
            if (auto p = e.find("x1_positions_mm"); p != e.end())
                ec.x1_positions_mm = p->get<std::vector<double>>();
            ec.x1_position_mm = opt_number(e, "x1_position_mm", 0.0);
            ec.max_abs_diff_mm = opt_number(e, "max_abs_diff_mm", 0.0);
            c.estimators.push_back(std::move(ec));
        }
    }
    if (auto it = j.find("outputs"); it != j.end()) {
        if (auto d = it->find("directory"); d != it->end())
            c.outputs.directory = d->get<std::string>();
        if (auto f = it->find("formats"); f != it->end())
            c.outputs.formats = f->get<std::vector<std::string>>();
    }
    return c;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string serialize_config(const ExperimentConfig& c) {
    json j;
    j["name"] = c.name;

    json g;
    g["n_points"] = c.grid.n_points;
    if (c.grid.pitch_um > 0.0) g["pitch_um"] = c.grid.pitch_um;
    if (c.grid.pixels_per_period > 0.0)
        g["pixels_per_period"] = c.grid.pixels_per_period;
    j["grid"] = g;

    json s;
    s["delta_x_n_um"] = c.source.delta_x_n_um;
    s["aperture_um"] = c.source.aperture_um;
    s["envelope"] = c.source.envelope;
    s["master_seed"] = c.source.master_seed;
    s["n_frames"] = c.source.n_frames;
    if (c.source.full_frames > 0) s["full_frames"] = c.source.full_frames;
    j["source"] = s;

    json o;
    o["kind"] = c.object.kind;
    if (c.object.kind == "square_phase_grating") {
        o["period_d_um"] = c.object.period_d_um;
        o["groove_width_a_um"] = c.object.groove_width_a_um;
        o["phase_shift_rad"] = c.object.phase_shift_rad;
    } else if (c.object.kind == "amplitude_mask") {
        o["mask_pitch_um"] = c.object.mask_pitch_um;
        o["mask_real"] = c.object.mask_real;
        o["mask_imag"] = c.object.mask_imag;
    }
    j["object"] = o;

    j["optics"] = {{"lambda_um", c.optics.lambda_um},
                   {"focal_length_mm", c.optics.focal_length_mm}};

    json b;
    b["kind"] = c.beam_splitter.kind;
    if (c.beam_splitter.kind == "custom") {
        b["r_re"] = c.beam_splitter.r_re;
        b["r_im"] = c.beam_splitter.r_im;
        b["t_re"] = c.beam_splitter.t_re;
        b["t_im"] = c.beam_splitter.t_im;
    }
    j["beam_splitter"] = b;

    json d;
    d["pixel_pitch_um"] = c.detector.pixel_pitch_um;
    d["shot_noise"] = c.detector.shot_noise;
    d["shot_noise_scale"] = c.detector.shot_noise_scale;
    j["detector"] = d;

    json est = json::array();
    for (const auto& e : c.estimators) {
        json je;
        je["type"] = estimator_kind_name(e.kind);
        switch (e.kind) {
            case EstimatorKind::fixed_pixel:
                je["x1_positions_mm"] = e.x1_positions_mm;
                break;
            case EstimatorKind::autocorrelation:
                je["x1_position_mm"] = e.x1_position_mm;
                break;
            case EstimatorKind::spatial_average:
                je["max_abs_diff_mm"] = e.max_abs_diff_mm;
                break;
            default:
                break;
        }
        est.push_back(je);
    }
    j["estimators"] = est;

    json out;
    out["directory"] = c.outputs.directory;
    if (!c.outputs.formats.empty()) out["formats"] = c.outputs.formats;
    j["outputs"] = out;

    return j.dump(2) + "\n";
}

Bench make_bench(const ExperimentConfig& c) {
    Bench bench;

    const bool has_pitch = c.grid.pitch_um > 0.0;
    const bool has_ppp = c.grid.pixels_per_period > 0.0;
    if (has_pitch == has_ppp)
        fail("grid needs exactly one of pitch_um and pixels_per_period");
    double pitch = c.grid.pitch_um;
    if (has_ppp) {
        if (c.object.kind != "square_phase_grating" || !(c.object.period_d_um > 0.0))
            fail("grid.pixels_per_period needs a square_phase_grating object with a "
                 "positive period_d_um");
        pitch = c.object.period_d_um / c.grid.pixels_per_period;
    }
    bench.source_axis = GridAxis::centered(c.grid.n_points, pitch);
    try {
        bench.source_axis.validate();
    } catch (const std::invalid_argument& e) {
        fail(std::string("grid: ") + e.what());
    }

    bench.speckle.axis = bench.source_axis;
    bench.speckle.delta_x_n = c.source.delta_x_n_um;
    bench.speckle.aperture = c.source.aperture_um;
    if (c.source.envelope == "hard_pinhole")
        bench.speckle.envelope = EnvelopeKind::hard_pinhole;
    else if (c.source.envelope == "gaussian")
        bench.speckle.envelope = EnvelopeKind::gaussian;
    else
        fail("source.envelope must be 'hard_pinhole' or 'gaussian'");
    try {
        bench.speckle.validate();
    } catch (const std::invalid_argument& e) {
        fail(std::string("source: ") + e.what());
    }
    if (c.source.n_frames == 0) fail("source.n_frames must be positive");

    if (c.object.kind == "identity") {
        bench.object.kind = TransmissionObject::Kind::identity;
    } else if (c.object.kind == "square_phase_grating") {
        bench.object.kind = TransmissionObject::Kind::square_phase_grating;
        bench.object.period_d = c.object.period_d_um;
        bench.object.groove_width_a = c.object.groove_width_a_um;
        bench.object.phase_shift = c.object.phase_shift_rad;
    } else if (c.object.kind == "amplitude_mask") {
        bench.object.kind = TransmissionObject::Kind::amplitude_mask;
        if (c.object.mask_imag.size() != c.object.mask_real.size() &&
            !c.object.mask_imag.empty())
            fail("object.mask_imag must match object.mask_real in length");
        bench.object.mask_axis =
            GridAxis::centered(c.object.mask_real.size(), c.object.mask_pitch_um);
        bench.object.mask.resize(c.object.mask_real.size());
        for (std::size_t i = 0; i < c.object.mask_real.size(); ++i)
            bench.object.mask[i] =
                cplx{c.object.mask_real[i],
                     c.object.mask_imag.empty() ? 0.0 : c.object.mask_imag[i]};
    } else {
        fail("object.kind '" + c.object.kind + "' is unknown");
    }
    try {
        bench.object.validate();
    } catch (const std::invalid_argument& e) {
        fail(std::string("object: ") + e.what());
    }

    bench.optics.wavelength_um = c.optics.lambda_um;
    bench.optics.focal_length_mm = c.optics.focal_length_mm;
    try {
        bench.optics.validate();
    } catch (const std::invalid_argument& e) {
        fail(std::string("optics: ") + e.what());
    }

    if (c.beam_splitter.kind == "balanced") {
        bench.splitter = BeamSplitterSpec::balanced();
    } else if (c.beam_splitter.kind == "custom") {
        bench.splitter.r = cplx{c.beam_splitter.r_re, c.beam_splitter.r_im};
        bench.splitter.t = cplx{c.beam_splitter.t_re, c.beam_splitter.t_im};
    } else {
        fail("beam_splitter.kind must be 'balanced' or 'custom'");
    }
    try {
        bench.splitter.validate();
    } catch (const std::invalid_argument& e) {
        fail(std::string("beam_splitter: ") + e.what());
    }

    bench.detector.pixel_pitch_um = c.detector.pixel_pitch_um;
    bench.detector.add_shot_noise = c.detector.shot_noise;
    bench.detector.shot_noise_scale = c.detector.shot_noise_scale;
    bench.far_axis = far_field_axis(bench.source_axis, bench.optics);
    try {
        bench.detector_axis = detector_axis(bench.far_axis, bench.detector);
    } catch (const std::invalid_argument& e) {
        fail(std::string("detector: ") + e.what());
    }

    bool have_fixed = false;
    for (const auto& e : c.estimators) {
        switch (e.kind) {
            case EstimatorKind::fixed_pixel: {
                if (e.x1_positions_mm.empty())
                    fail("estimators: fixed_pixel needs x1_positions_mm");
                for (double pos : e.x1_positions_mm) {
                    try {
                        bench.detector_axis.index_of(pos * 1000.0);
                    } catch (const std::invalid_argument&) {
                        fail("estimators: fixed_pixel position " +
                             std::to_string(pos) + " mm is off the detector axis");
                    }
                }
                have_fixed = true;
                break;
            }
            case EstimatorKind::autocorrelation: {
                try {
                    bench.detector_axis.index_of(e.x1_position_mm * 1000.0);
                } catch (const std::invalid_argument&) {
                    fail("estimators: autocorrelation position " +
                         std::to_string(e.x1_position_mm) +
                         " mm is off the detector axis");
                }
                break;
            }
            case EstimatorKind::spatial_average: {
                if (!(e.max_abs_diff_mm > 0.0))
                    fail("estimators: spatial_average needs a positive max_abs_diff_mm");
                const double px = e.max_abs_diff_mm * 1000.0 / bench.detector_axis.pitch;
                if (px >= static_cast<double>(bench.detector_axis.n))
                    fail("estimators: spatial_average range exceeds the detector");
                break;
            }
            case EstimatorKind::visibility:
                break;
            case EstimatorKind::gamma_oracle: {
                if (bench.source_axis.n > 128)
                    fail("estimators: gamma_oracle is limited to 128 source grid "
                         "points");
                if (bench.detector_axis.n * bench.detector_axis.n > 16384)
                    fail("estimators: gamma_oracle is limited to 128 detector pixels");
                if (!(bench.detector_axis == bench.far_axis))
                    fail("estimators: gamma_oracle needs native detector sampling "
                         "(detector.pixel_pitch_um = 0)");
                break;
            }
        }
    }
    for (const auto& e : c.estimators)
        if (e.kind == EstimatorKind::visibility && !have_fixed)
            fail("estimators: visibility needs a fixed_pixel estimator in the same "
                 "run");

    for (const auto& f : c.outputs.formats)
        if (f != "tsv" && f != "json")
            fail("outputs.formats entries must be 'tsv' or 'json'");

    return bench;
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

}  // namespace ghostdiff
