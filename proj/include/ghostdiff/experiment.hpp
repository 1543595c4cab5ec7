#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ghostdiff/analysis.hpp"
#include "ghostdiff/correlator.hpp"
#include "ghostdiff/optics.hpp"
#include "ghostdiff/speckle.hpp"

namespace ghostdiff {

struct GridConfig {
    std::size_t n_points = 0;
    /// Exactly one of pitch_um and pixels_per_period must be positive;
    /// the latter derives the pitch from the grating period.
    double pitch_um = 0.0;
    double pixels_per_period = 0.0;
};

struct SourceConfig {
    double delta_x_n_um = 0.0;
    double aperture_um = 0.0;
    std::string envelope = "hard_pinhole";
    std::uint64_t master_seed = 1;
    std::uint64_t n_frames = 0;
    /// Frame count for full-size runs; zero means same as n_frames.
    std::uint64_t full_frames = 0;
};

struct ObjectConfig {
    std::string kind = "identity";
    double period_d_um = 0.0;
    double groove_width_a_um = 0.0;
    double phase_shift_rad = 0.0;
    /// Amplitude mask samples on their own axis.
    double mask_pitch_um = 0.0;
    std::vector<double> mask_real;
    std::vector<double> mask_imag;
};

struct OpticsConfig {
    double lambda_um = 0.0;
    double focal_length_mm = 0.0;
};

struct BeamSplitterConfig {
    std::string kind = "balanced";
    double r_re = 0.0, r_im = 0.0;
    double t_re = 0.0, t_im = 0.0;
};

struct DetectorConfig {
    double pixel_pitch_um = 0.0;
    bool shot_noise = false;
    double shot_noise_scale = 1.0e4;
};

enum class EstimatorKind {
    fixed_pixel,
    spatial_average,
    autocorrelation,
    visibility,
    gamma_oracle,
};

struct EstimatorConfig {
    EstimatorKind kind = EstimatorKind::fixed_pixel;
    /// Fixed-pixel test-arm positions, millimeters.
    std::vector<double> x1_positions_mm;
    /// Autocorrelation probe position, millimeters.
    double x1_position_mm = 0.0;
    /// Half range of the difference coordinate, millimeters.
    double max_abs_diff_mm = 0.0;
};

struct OutputConfig {
    std::string directory = "out";
    /// Subset of {"tsv", "json"}; empty means both.
    std::vector<std::string> formats;
};

struct ExperimentConfig {
    std::string name;
    GridConfig grid;
    SourceConfig source;
    ObjectConfig object;
    OpticsConfig optics;
    BeamSplitterConfig beam_splitter;
    DetectorConfig detector;
    std::vector<EstimatorConfig> estimators;
    OutputConfig outputs;
};

/// Parses a config document; throws std::invalid_argument naming the
/// offending field.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config_file(const std::string& path);
std::string serialize_config(const ExperimentConfig& config);

/// Resolved simulation bench: every domain object validated and ready.
struct Bench {
    GridAxis source_axis;
    SpeckleSpec speckle;
    TransmissionObject object;
    OpticalConfig optics;
    BeamSplitterSpec splitter;
    DetectorSpec detector;
    GridAxis far_axis;
    GridAxis detector_axis;
};

/// Builds and validates the bench; throws std::invalid_argument with a
/// message naming the config field on any violation.
Bench make_bench(const ExperimentConfig& config);

struct RunOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> frames;
    std::optional<std::size_t> workers;
    std::optional<std::string> out_dir;
    bool full_size = false;
};

struct OutputRecord {
    std::string file;
    std::string checksum;
};

struct RunError {
    std::string stage;
    std::string message;
};

struct RunManifest {
    std::string config_hash;
    std::uint64_t seed = 0;
    std::uint64_t frames = 0;
    std::size_t workers = 0;
    std::vector<OutputRecord> outputs;
    std::vector<RunError> errors;
    double wall_clock_seconds = 0.0;
    std::string directory;
};

/// Runs the frame loop, finalizes every requested estimator, and writes
/// patterns, prediction, summary, and manifest files. Deterministic per
/// (config, seed) for any worker count. Estimator failures are recorded
/// in the manifest while the remaining outputs are still written.
RunManifest run_experiment(const ExperimentConfig& config,
                           const RunOverrides& overrides = {});

struct CompareRow {
    int order = 0;
    double predicted = 0.0;
    double measured = 0.0;
    double deviation = 0.0;
};

struct CompareReport {
    bool pass = false;
    double tolerance = 0.0;
    std::vector<CompareRow> rows;
    std::vector<std::string> problems;
};

/// Integrates the pattern file around the predicted peak positions and
/// checks the measured ratios against the predicted ones.
CompareReport compare_with_reference(const std::string& pattern_file,
                                     const std::string& prediction_file,
                                     double tolerance);

/// Names of the built-in experiment presets.
std::vector<std::string> preset_names();
/// Preset groups that expand to several presets.
std::vector<std::string> preset_group_names();
std::vector<std::string> preset_group_members(const std::string& group);
bool is_preset(const std::string& name);
bool is_preset_group(const std::string& name);
/// One-line description shown by the preset listing.
std::string preset_description(const std::string& name);
ExperimentConfig preset_config(const std::string& name);

/// FNV-1a checksum of a byte string, rendered as hex.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace ghostdiff
