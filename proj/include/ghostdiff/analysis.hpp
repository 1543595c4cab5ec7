#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "ghostdiff/grid.hpp"
#include "ghostdiff/optics.hpp"
#include "ghostdiff/speckle.hpp"

namespace ghostdiff {

/// Square phase grating parameters used for analytic predictions. The
/// phase shift may optionally be tied to a physical groove depth and
/// refractive index, in which case the two descriptions must agree.
struct GratingSpec {
    double period_d = 0.0;
    double groove_width_a = 0.0;
    double phase_shift_dphi = 0.0;
    std::optional<double> groove_depth_delta;
    std::optional<double> refractive_index_n_g;

    /// Checks 0 < a < d, and when depth and index are both present checks
    /// that phase_shift_dphi equals the depth-derived phase at the given
    /// wavelength to within 1e-12. Pass zero to skip the depth check.
    void validate(double lambda_um = 0.0) const;
};

/// Diffraction orders of a grating: amplitudes, strengths, and (once a
/// focal-plane mapping is applied) angles and positions.
struct DiffractionPrediction {
    std::vector<int> orders;
    std::vector<cplx> coefficients;
    /// Strengths eta_n = |c_n|^2; their sum over all orders is at most one.
    std::vector<double> eta;
    /// Diffraction angles in radians, empty until positions are computed.
    std::vector<double> theta;
    /// Focal-plane positions in millimeters, empty until computed.
    std::vector<double> x;
};

/// Closed-form Fourier coefficients of the square phase grating for
/// orders -n_max..n_max.
DiffractionPrediction grating_coefficients(const GratingSpec& g, int n_max);

/// The same coefficients by direct numeric quadrature of the Fourier
/// integral over one period, accurate to 1e-8.
DiffractionPrediction grating_coefficients_quadrature(const GratingSpec& g, int n_max);

/// Phase delay of a groove of depth delta in material of index n_g:
/// (n_g - 1) * 2 pi * delta / lambda.
double phase_from_groove(double n_g, double delta_um, double lambda_um);

/// Focal-plane positions of diffraction orders.
struct PeakPositions {
    /// Propagating orders, in the input order.
    std::vector<int> orders;
    /// Angles theta_n = asin(n lambda / d), radians.
    std::vector<double> theta;
    /// Positions in millimeters.
    std::vector<double> x;
    /// Orders with |n| lambda / d >= 1, excluded from the lists above.
    std::vector<int> evanescent;
};

/// Positions x_n of grating orders in the lens focal plane. The default
/// small-angle mapping is x_n = n F lambda / d; with exact_mapping the
/// exact angle asin(n lambda / d) is used instead.
PeakPositions peak_positions(const OpticalConfig& cfg, double period_d,
                             const std::vector<int>& orders,
                             bool exact_mapping = false);

/// Diffraction prediction with focal-plane angles and positions filled in
/// and evanescent orders dropped.
DiffractionPrediction predict_diffraction(const GratingSpec& g,
                                          const OpticalConfig& cfg, int n_max);

/// Background-subtracted integrals of a pattern around predicted peak
/// positions, and their ratios to the zero-order window.
struct PeakTable {
    std::vector<int> orders;
    std::vector<double> integrated;
    std::vector<double> integrated_se;
    /// Integrated height divided by the zero-order integrated height.
    std::vector<double> ratio;
    std::vector<double> ratio_se;
    /// Per-peak local baseline that was subtracted.
    std::vector<double> baseline;
};

/// Integrates pattern values in a window of the given width (micrometers)
/// around each predicted position, subtracting per peak the median of the
/// two flanking gap regions. Windows must span at least two pixels, must
/// not overlap, and must each contain at least one sample.
PeakTable integrate_peaks(const Pattern& p, const DiffractionPrediction& predicted,
                          double window_um);

/// Full width at half maximum of a single-peaked profile. The baseline is
/// the median of the outer ten percent of samples; crossings are located
/// by linear interpolation. Throws when either flank never crosses half
/// height.
double fwhm(const Pattern& profile);

/// Source geometry for the speckle-regime classifier.
struct SourceGeometry {
    double z_mm = 0.0;
    double d_ph_mm = 0.0;
    double rho_eff_um = 0.0;
    double lambda_um = 0.0;

    void validate() const;
};

enum class SpeckleRegime { ffs, nfs, indeterminate };

struct RegimeReport {
    SpeckleRegime regime = SpeckleRegime::indeterminate;
    /// Expected speckle size in micrometers.
    double predicted_speckle_size_um = 0.0;
    /// Distance bounds of the near-field window and the far-field
    /// threshold, millimeters.
    double nfs_lower_z_mm = 0.0;
    double nfs_upper_z_mm = 0.0;
    double ffs_threshold_z_mm = 0.0;
};

/// Far-field regime when z >= 10 D_ph rho_eff / lambda (speckle size
/// z lambda / D_ph); near-field when 10 rho_eff^2 / lambda <= z <=
/// 0.1 D_ph rho_eff / lambda (speckle size rho_eff); the crossover
/// between the windows is reported as indeterminate.
RegimeReport classify_speckle_regime(const SourceGeometry& geom);

/// Correlation map over pairs of focal-plane points.
struct CorrelationMap {
    GridAxis axis1;
    GridAxis axis2;
    RealMatrix values;
};

/// Ghost correlation G(x1, x2) by direct quadrature: the test kernel
/// carries the object, the reference kernel does not, and the result is
/// |r t|^2 |sum_ij h1*(x1, x_i) h2(x2, x_j) Gamma(x_i, x_j) pitch^2|^2.
/// The source grid is limited to 128 points.
CorrelationMap oracle_correlation(const GammaMatrix& gamma,
                                  const TransmissionObject& obj,
                                  const OpticalConfig& cfg,
                                  const BeamSplitterSpec& bs);

/// Same quadrature with the object in both kernels, as seen by an
/// intensity autocorrelation behind the object.
CorrelationMap oracle_hbt(const GammaMatrix& gamma, const TransmissionObject& obj,
                          const OpticalConfig& cfg,
                          const BeamSplitterSpec& bs = BeamSplitterSpec::balanced());

}  // namespace ghostdiff
