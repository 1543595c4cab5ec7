#pragma once

#include <cstdint>
#include <vector>

#include "ghostdiff/grid.hpp"

namespace ghostdiff {

/// Wavelength and lens focal length shared by both arms.
struct OpticalConfig {
    double wavelength_um = 0.0;
    double focal_length_mm = 0.0;

    double focal_um() const { return focal_length_mm * 1000.0; }
    double wavenumber() const;
    void validate() const;
};

/// Thin transmissive object evaluated pointwise.
struct TransmissionObject {
    enum class Kind { identity, square_phase_grating, amplitude_mask };

    Kind kind = Kind::identity;

    /// Square phase grating: period, groove width, and groove phase shift
    /// in radians. Transmission is exp(i phase_shift) for positions whose
    /// offset into the period lies in [0, groove_width], one elsewhere.
    double period_d = 0.0;
    double groove_width_a = 0.0;
    double phase_shift = 0.0;

    /// Amplitude mask: samples on their own grid, nearest-sample lookup,
    /// unit transmission outside the sampled range. Moduli must not
    /// exceed one.
    GridAxis mask_axis;
    std::vector<cplx> mask;

    cplx transmission_at(double x) const;
    void validate() const;
};

/// Pointwise product of a field with the object transmission evaluated at
/// each grid coordinate.
ComplexField apply_object(const ComplexField& in, const TransmissionObject& object);

/// Beam splitter amplitudes. Energy may not be amplified.
struct BeamSplitterSpec {
    cplx r{0.0, 0.0};
    cplx t{0.0, 0.0};

    static BeamSplitterSpec balanced();
    void validate() const;
};

struct SplitBeams {
    ComplexField test;
    ComplexField reference;
};

/// Two copies of the input scaled by the splitter amplitudes. The test
/// arm carries t, the reference arm carries r; no mirror inversion.
SplitBeams split_beam(const ComplexField& in, const BeamSplitterSpec& bs);

/// Output grid of the lens transform: n points with pitch
/// wavelength * focal / (n * input pitch), centered on the axis.
GridAxis far_field_axis(const GridAxis& input, const OpticalConfig& cfg);

/// Field in the focal plane of a thin lens: the scaled Fourier transform
/// b(xi) = c * sum_j a(x_j) exp(-i (k/F) xi x_j), with c chosen so that
/// sum |b|^2 dxi equals sum |a|^2 dx exactly.
ComplexField lens_far_field(const ComplexField& in, const OpticalConfig& cfg);

/// Square-law detector with optional pixel binning and shot noise.
struct DetectorSpec {
    /// Pixel pitch in micrometers; zero records at the native field
    /// sampling. Otherwise it must be an integer multiple of the field
    /// pitch to within one percent, and each pixel averages that many
    /// samples.
    double pixel_pitch_um = 0.0;
    bool add_shot_noise = false;
    /// Mean photon count registered per unit intensity when shot noise is
    /// enabled; recorded values are counts divided by this scale.
    double shot_noise_scale = 1.0e4;

    void validate() const;
};

/// Grid the detector records on for fields sampled on the given axis:
/// the input grid itself at native pitch, otherwise one point per bin of
/// pixel_pitch_um / pitch samples, centered on each bin.
GridAxis detector_axis(const GridAxis& in, const DetectorSpec& det);

/// Intensity |b|^2 on the detector grid. The seed is consumed only when
/// shot noise is enabled.
IntensityFrame detect(const ComplexField& in, const DetectorSpec& det,
                      std::uint64_t seed);

}  // namespace ghostdiff
