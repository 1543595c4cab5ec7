#pragma once

#include <cstdint>
#include <vector>

#include "ghostdiff/grid.hpp"
#include "ghostdiff/reduction.hpp"

namespace ghostdiff {

enum class EnvelopeKind { hard_pinhole, gaussian };

/// Source description for one pseudo-thermal speckle realization: grid,
/// transverse coherence length, and illuminated aperture.
struct SpeckleSpec {
    GridAxis axis;
    /// Speckle size: full width at half maximum of the modulus of the
    /// two-point field correlation, micrometers.
    double delta_x_n = 0.0;
    /// Aperture diameter D, micrometers. For the hard pinhole the field is
    /// zero outside |x| <= D/2; for the gaussian envelope D is the full
    /// width at half maximum of the mean intensity profile.
    double aperture = 0.0;
    EnvelopeKind envelope = EnvelopeKind::hard_pinhole;

    double envelope_amplitude(double x) const;
    void validate() const;
};

/// Width of the gaussian spatial-frequency filter that yields a field
/// correlation whose modulus has the requested full width at half maximum.
double filter_sigma_q(double delta_x_n);

/// One speckle field realization: circular gaussian white noise shaped by
/// the coherence filter in the frequency domain, enveloped, and scaled so
/// the mean intensity at the aperture center is one.
ComplexField synthesize_speckle(const SpeckleSpec& spec, std::uint64_t seed);

/// Two-point field correlation on a grid: values(i, j) = <conj(a(x_i)) a(x_j)>.
struct GammaMatrix {
    GridAxis axis;
    ComplexMatrix values;
};

/// Streaming estimator of the two-point field correlation
/// Gamma(x, x') = <conj(a(x)) a(x')>, either the full matrix or one row.
/// Accumulation is a deterministic pairwise reduction over frame indices,
/// so results are bit-identical for any work distribution.
class GammaAccumulator {
  public:
    /// Full-matrix mode; the grid must have at most 2048 points.
    static GammaAccumulator full(const GridAxis& axis);
    /// Single-row mode for large grids.
    static GammaAccumulator row(const GridAxis& axis, std::size_t row_index);

    void add(std::uint64_t frame_index, const ComplexField& field);
    void merge_from(GammaAccumulator&& other);
    std::uint64_t count() const { return reducer_.count(); }

    const GridAxis& axis() const { return axis_; }
    bool is_full() const { return full_; }
    std::size_t row_index() const { return row_; }

    /// Mean outer product; exactly hermitian by construction. Full mode only.
    GammaMatrix finalize_full() const;
    /// Mean of conj(a(row)) a(j) over frames. Row mode only.
    std::vector<cplx> finalize_row() const;

  private:
    struct Sums {
        std::uint64_t cnt = 0;
        std::vector<cplx> v;
        void add(const Sums& o);
    };

    GammaAccumulator(const GridAxis& axis, bool full, std::size_t row);

    GridAxis axis_;
    bool full_ = false;
    std::size_t row_ = 0;
    PairwiseReducer<Sums> reducer_;
};

/// Two-point field correlation matrix of an in-memory ensemble.
GammaMatrix estimate_gamma(const std::vector<ComplexField>& fields);
/// One row of the two-point field correlation of an in-memory ensemble.
std::vector<cplx> estimate_gamma_row(const std::vector<ComplexField>& fields,
                                     std::size_t row_index);

/// Largest deviation, over a deterministic set of probe-point pairs inside
/// the illuminated region, between the measured intensity correlation
/// <I I'> and the gaussian-statistics prediction <I><I'> + |Gamma|^2,
/// relative to <I><I'>. Needs at least one thousand fields. Near zero for
/// thermal fields, near one for a deterministic field.
double siegert_check(const std::vector<ComplexField>& fields);

/// Same statistic across two ensembles: <I_a I_b> against
/// <I_a><I_b> + |<conj(a) b>|^2. Near zero when the ensembles are
/// independent or jointly gaussian.
double siegert_cross_check(const std::vector<ComplexField>& a,
                           const std::vector<ComplexField>& b);

/// Kolmogorov-Smirnov distance between pooled normalized intensities
/// I(x)/<I(x)> at well separated probe points and the unit-mean
/// exponential law expected for polarized thermal light.
double intensity_exponential_ks(const std::vector<ComplexField>& fields);

}  // namespace ghostdiff
