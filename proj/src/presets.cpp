#include <stdexcept>

#include "ghostdiff/experiment.hpp"

namespace ghostdiff {

namespace {

/// Coherence lengths are stated as the full width at half maximum of the
/// modulus of the field correlation; the corresponding intensity speckle
/// size is smaller by sqrt(2).
constexpr double kDeltaSpeckle2 = 2.8284271247461903;
constexpr double kDeltaSpeckle6 = 8.485281374238571;
constexpr double kDeltaSpeckle12 = 16.97056274847714;
constexpr double kDeltaSpeckle48 = 67.88225099390856;
constexpr double kDeltaSpeckle14 = 19.79898987322333;
constexpr double kDeltaSpeckle33 = 46.66904755831214;

constexpr double kPhase084Pi = 2.6389378290154264;
constexpr double kGrooveWidth = 4.29;
constexpr double kPeriod = 12.5;
constexpr double kAperture = 332.5;
constexpr double kOrderOnePositionMm = 2.128;

ExperimentConfig bench_base(const std::string& name, double delta_x_n,
                            std::uint64_t seed) {
    ExperimentConfig c;
    c.name = name;
    c.grid.n_points = 1024;
    c.grid.pixels_per_period = 32.0;
    c.source.delta_x_n_um = delta_x_n;
    c.source.aperture_um = kAperture;
    c.source.envelope = "hard_pinhole";
    c.source.master_seed = seed;
    c.source.n_frames = 20000;
    c.source.full_frames = 100000;
    c.object.kind = "square_phase_grating";
    c.object.period_d_um = kPeriod;
    c.object.groove_width_a_um = kGrooveWidth;
    c.object.phase_shift_rad = kPhase084Pi;
    c.optics.lambda_um = 0.532;
    c.optics.focal_length_mm = 50.0;
    c.beam_splitter.kind = "balanced";
    c.outputs.directory = "out";
    return c;
}

EstimatorConfig fixed_at(std::vector<double> positions_mm) {
    EstimatorConfig e;
    e.kind = EstimatorKind::fixed_pixel;
    e.x1_positions_mm = std::move(positions_mm);
    return e;
}

EstimatorConfig autocorr_at(double position_mm) {
    EstimatorConfig e;
    e.kind = EstimatorKind::autocorrelation;
    e.x1_position_mm = position_mm;
    return e;
}

EstimatorConfig spatial(double max_abs_diff_mm) {
    EstimatorConfig e;
    e.kind = EstimatorKind::spatial_average;
    e.max_abs_diff_mm = max_abs_diff_mm;
    return e;
}

EstimatorConfig just(EstimatorKind k) {
    EstimatorConfig e;
    e.kind = k;
    return e;
}

struct PresetRow {
    const char* name;
    const char* description;
};

constexpr PresetRow kPresets[] = {
    {"fig2-dxn2", "far-field mean intensity, 2 um speckles (incoherent limit)"},
    {"fig2-dxn6", "far-field mean intensity, 6 um speckles"},
    {"fig2-dxn12", "far-field mean intensity, 12 um speckles"},
    {"fig2-dxn48", "far-field mean intensity, 48 um speckles (coherent limit)"},
    {"fig3-dxn2", "ghost cross-correlation and autocorrelation, 2 um speckles"},
    {"fig3-dxn12", "ghost cross-correlation and autocorrelation, 12 um speckles"},
    {"fig3-dxn48", "ghost cross-correlation and autocorrelation, 48 um speckles"},
    {"fig5", "bare ghost correlation at three fixed test pixels, 18000 frames"},
    {"fig6", "spatially averaged ghost correlation from 100 frames"},
    {"fig7", "ghost correlation and autocorrelation, 14 um speckles"},
    {"fig8", "ghost correlation and autocorrelation, 33 um speckles"},
    {"fig10a", "normalized ghost cross-correlation, 14 um speckles"},
    {"fig10b", "normalized ghost cross-correlation, 33 um speckles"},
    {"oracle64", "64-point bench cross-checked against the quadrature oracle"},
};

struct GroupRow {
    const char* name;
    std::vector<std::string> members;
};

const std::vector<GroupRow>& groups() {
    static const std::vector<GroupRow> g = {
        {"fig2", {"fig2-dxn2", "fig2-dxn6", "fig2-dxn12", "fig2-dxn48"}},
        {"fig3", {"fig3-dxn2", "fig3-dxn12", "fig3-dxn48"}},
        {"fig10", {"fig10a", "fig10b"}},
    };
    return g;
}

}  // namespace

std::vector<std::string> preset_names() {
    std::vector<std::string> names;
    for (const auto& p : kPresets) names.emplace_back(p.name);
    return names;
}

std::vector<std::string> preset_group_names() {
    std::vector<std::string> names;
    for (const auto& g : groups()) names.push_back(g.name);
    return names;
}

bool is_preset(const std::string& name) {
    for (const auto& p : kPresets)
        if (name == p.name) return true;
    return false;
}

bool is_preset_group(const std::string& name) {
    for (const auto& g : groups())
        if (name == g.name) return true;
    return false;
}

std::vector<std::string> preset_group_members(const std::string& group) {
    for (const auto& g : groups())
        if (group == g.name) return g.members;
    throw std::invalid_argument("presets: unknown group '" + group + "'");
}

std::string preset_description(const std::string& name) {
    for (const auto& p : kPresets)
        if (name == p.name) return p.description;
    throw std::invalid_argument("presets: unknown preset '" + name + "'");
}

ExperimentConfig preset_config(const std::string& name) {
    if (name == "fig2-dxn2") return bench_base(name, kDeltaSpeckle2, 101);
    if (name == "fig2-dxn6") return bench_base(name, kDeltaSpeckle6, 102);
    if (name == "fig2-dxn12") return bench_base(name, kDeltaSpeckle12, 103);
    if (name == "fig2-dxn48") return bench_base(name, kDeltaSpeckle48, 104);

    if (name == "fig3-dxn2" || name == "fig3-dxn12" || name == "fig3-dxn48") {
        double delta = kDeltaSpeckle2;
        std::uint64_t seed = 201;
        if (name == "fig3-dxn12") {
            delta = kDeltaSpeckle12;
            seed = 202;
        } else if (name == "fig3-dxn48") {
            delta = kDeltaSpeckle48;
            seed = 203;
        }
        ExperimentConfig c = bench_base(name, delta, seed);
        c.estimators = {fixed_at({0.0}), autocorr_at(0.0),
                        just(EstimatorKind::visibility)};
        return c;
    }

    if (name == "fig5") {
        ExperimentConfig c = bench_base(name, kDeltaSpeckle2, 501);
        c.source.n_frames = 18000;
        c.source.full_frames = 18000;
        c.estimators = {
            fixed_at({kOrderOnePositionMm, 0.0, -kOrderOnePositionMm})};
        return c;
    }

    if (name == "fig6") {
        ExperimentConfig c = bench_base(name, kDeltaSpeckle2, 601);
        c.source.n_frames = 100;
        c.source.full_frames = 100;
        c.estimators = {spatial(6.0)};
        return c;
    }

    if (name == "fig7" || name == "fig8") {
        const bool seven = name == "fig7";
        ExperimentConfig c = bench_base(name, seven ? kDeltaSpeckle14 : kDeltaSpeckle33,
                                        seven ? 701 : 801);
        c.source.n_frames = 30000;
        c.source.full_frames = 30000;
        c.estimators = {fixed_at({0.0}), autocorr_at(0.0)};
        return c;
    }

    if (name == "fig10a" || name == "fig10b") {
        const bool a = name == "fig10a";
        ExperimentConfig c =
            bench_base(name, a ? kDeltaSpeckle14 : kDeltaSpeckle33, a ? 1001 : 1002);
        c.source.n_frames = 30000;
        c.source.full_frames = 30000;
        c.estimators = {fixed_at({0.0})};
        return c;
    }

    if (name == "oracle64") {
        ExperimentConfig c = bench_base(name, 6.0, 6401);
        c.grid.n_points = 64;
        c.grid.pixels_per_period = 0.0;
        c.grid.pitch_um = 2.0;
        c.source.aperture_um = 96.0;
        c.estimators = {just(EstimatorKind::gamma_oracle)};
        return c;
    }

    throw std::invalid_argument("presets: unknown preset '" + name + "'");
}

}  // namespace ghostdiff
