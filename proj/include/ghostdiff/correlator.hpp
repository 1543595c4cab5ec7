#pragma once

#include <cstdint>
#include <vector>

#include "ghostdiff/grid.hpp"
#include "ghostdiff/reduction.hpp"

namespace ghostdiff {

enum class CorrelatorMode { means_only, fixed_pixel, difference_coordinate, full_matrix };

/// Streaming second-moment sums over intensity frame pairs, mergeable and
/// bit-deterministic under any work distribution.
///
/// Frames are routed to ten jackknife blocks by index (block = index *
/// n_blocks / planned_frames), and each block is a deterministic pairwise
/// reduction over frame indices, so the finalized sums depend only on the
/// set of frames added, never on insertion order or thread count.
class MomentAccumulator {
  public:
    /// First and second moment sums shared by a set of frames.
    struct Sums {
        std::uint64_t cnt = 0;
        std::vector<double> s1;
        std::vector<double> s2;
        std::vector<double> sp;
        void add(const Sums& o);
    };

    struct Totals {
        Sums total;
        std::vector<Sums> blocks;
    };

    /// Mean intensities only.
    static MomentAccumulator means_only(const GridAxis& axis1, const GridAxis& axis2,
                                        std::uint64_t planned_frames,
                                        std::size_t n_blocks = 10);
    /// One test-arm pixel against the full second axis: sums of
    /// I1(fixed) * I2(x). Also keeps full <I1> sums.
    static MomentAccumulator fixed_pixel(const GridAxis& axis1, const GridAxis& axis2,
                                         std::size_t fixed_index,
                                         std::uint64_t planned_frames,
                                         std::size_t n_blocks = 10);
    /// Sums of I1(x) * I2(x - r) over all valid x for each difference
    /// r in [-max_abs_diff, max_abs_diff] grid steps. Axes must match.
    static MomentAccumulator difference_coordinate(const GridAxis& axis1,
                                                   const GridAxis& axis2,
                                                   std::ptrdiff_t max_abs_diff,
                                                   std::uint64_t planned_frames,
                                                   std::size_t n_blocks = 10);
    /// Full n1 x n2 product sums; limited to n1 * n2 <= 16384.
    static MomentAccumulator full_matrix(const GridAxis& axis1, const GridAxis& axis2,
                                         std::uint64_t planned_frames,
                                         std::size_t n_blocks = 10);

    void add(std::uint64_t frame_index, const IntensityFrame& i1,
             const IntensityFrame& i2);
    /// Absorb another accumulator of identical shape built over disjoint
    /// frame indices.
    void merge_from(MomentAccumulator&& other);

    std::uint64_t count() const;
    CorrelatorMode mode() const { return mode_; }
    const GridAxis& axis1() const { return axis1_; }
    const GridAxis& axis2() const { return axis2_; }
    std::size_t fixed_index() const { return fixed_index_; }
    std::ptrdiff_t max_abs_diff() const { return max_abs_diff_; }

    /// Fold every block; blocks with no frames have cnt = 0 and empty sums.
    Totals finalize() const;

  private:
    MomentAccumulator(CorrelatorMode mode, const GridAxis& a1, const GridAxis& a2,
                      std::uint64_t planned, std::size_t n_blocks);
    std::size_t block_of(std::uint64_t frame_index) const;
    Sums make_leaf(const IntensityFrame& i1, const IntensityFrame& i2) const;

    CorrelatorMode mode_;
    GridAxis axis1_;
    GridAxis axis2_;
    std::size_t fixed_index_ = 0;
    std::ptrdiff_t max_abs_diff_ = 0;
    std::uint64_t planned_frames_ = 0;
    std::vector<PairwiseReducer<Sums>> blocks_;
};

/// Mean intensity of arm 1 or arm 2 with jackknife standard errors.
Pattern mean_intensity(const MomentAccumulator& acc, int arm);

/// Background-subtracted correlation matrix
/// G(x1, x2) = <I1 I2> - <I1><I2> from a full-matrix accumulator.
RealMatrix cross_correlation(const MomentAccumulator& acc);

/// G(x1 fixed, x2) versus x2 from a fixed-pixel accumulator. When
/// normalized, divided by <I2(x2)>^2; points where <I2> falls below five
/// percent of its maximum are masked instead of divided.
Pattern ghost_pattern_fixed_pixel(const MomentAccumulator& acc, bool normalized);

/// Intensity autocorrelation C(x, x' fixed) versus x from a fixed-pixel
/// accumulator that was fed the same frame on both inputs.
Pattern autocorrelation(const MomentAccumulator& acc);

/// Pattern versus the difference coordinate r from a
/// difference-coordinate accumulator: the average over frames and valid x
/// of I1(x) I2(x-r) minus the matching background <I1(x)><I2(x-r)>. When
/// normalized, the background-subtracted value is divided by the
/// spatially averaged background, with the usual five percent floor.
Pattern ghost_pattern_spatial_average(const MomentAccumulator& acc, bool normalized);

struct VisibilityReport {
    /// Per-point visibility over x2 (fixed-pixel accumulators only;
    /// empty for full-matrix input).
    Pattern per_point;
    double max_visibility = 0.0;
    double std_err_at_max = 0.0;
    std::size_t argmax = 0;
};

/// Visibility V = G / (<I1><I2> + G) with G clamped at zero from below,
/// evaluated on unmasked points; the maximum over the map is reported
/// with its jackknife standard error.
VisibilityReport visibility(const MomentAccumulator& acc);

}  // namespace ghostdiff
