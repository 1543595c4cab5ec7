#include "ghostdiff/optics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <tuple>

#include "ghostdiff/fft.hpp"
#include "ghostdiff/rng.hpp"

namespace ghostdiff {

namespace {

// Phase ramps of the lens transform depend only on the grids and optics,
// so they are computed once per configuration and shared.
struct TwiddleSet {
    std::vector<cplx> pre;
    std::vector<cplx> post;
    cplx global{1.0, 0.0};
};

using TwiddleKey = std::tuple<std::size_t, double, double, double>;

std::mutex twiddle_mutex;

const TwiddleSet& twiddles_for(const GridAxis& in, const GridAxis& out, double k_over_f) {
    static std::map<TwiddleKey, std::unique_ptr<TwiddleSet>> cache;
    TwiddleKey key{in.n, in.pitch, in.origin, k_over_f};
    std::lock_guard<std::mutex> lock(twiddle_mutex);
    auto it = cache.find(key);
    if (it != cache.end()) return *it->second;

    auto tw = std::make_unique<TwiddleSet>();
    tw->pre.resize(in.n);
    tw->post.resize(in.n);
    for (std::size_t j = 0; j < in.n; ++j)
        tw->pre[j] = std::polar(1.0, -k_over_f * out.origin * in.pitch * static_cast<double>(j));
    for (std::size_t m = 0; m < out.n; ++m)
        tw->post[m] = std::polar(1.0, -k_over_f * in.origin * out.pitch * static_cast<double>(m));
    tw->global = std::polar(1.0, -k_over_f * out.origin * in.origin);
    return *cache.emplace(key, std::move(tw)).first->second;
}

}  // namespace

double OpticalConfig::wavenumber() const { return 2.0 * M_PI / wavelength_um; }

void OpticalConfig::validate() const {
    if (!(wavelength_um > 0.0))
        throw std::invalid_argument("optics: wavelength must be positive");
    if (!(focal_length_mm > 0.0))
        throw std::invalid_argument("optics: focal length must be positive");
}

cplx TransmissionObject::transmission_at(double x) const {
    switch (kind) {
        case Kind::identity:
            return cplx{1.0, 0.0};
        case Kind::square_phase_grating: {
            double u = std::fmod(x, period_d);
            if (u < 0.0) u += period_d;
            if (u <= groove_width_a) return std::polar(1.0, phase_shift);
            return cplx{1.0, 0.0};
        }
        case Kind::amplitude_mask: {
            double f = (x - mask_axis.origin) / mask_axis.pitch;
            auto i = static_cast<long long>(std::floor(f + 0.5));
            if (i < 0 || i >= static_cast<long long>(mask_axis.n)) return cplx{1.0, 0.0};
            return mask[static_cast<std::size_t>(i)];
        }
    }
    throw std::logic_error("optics: unknown object kind");
}

void TransmissionObject::validate() const {
    switch (kind) {
        case Kind::identity:
            return;
        case Kind::square_phase_grating:
            if (!(period_d > 0.0))
                throw std::invalid_argument("optics: grating period must be positive");
            if (!(groove_width_a > 0.0) || !(groove_width_a < period_d))
                throw std::invalid_argument(
                    "optics: groove width must lie strictly between zero and the period");
            if (!std::isfinite(phase_shift))
                throw std::invalid_argument("optics: groove phase shift must be finite");
            return;
        case Kind::amplitude_mask: {
            mask_axis.validate();
            if (mask.size() != mask_axis.n)
                throw std::invalid_argument(
                    "optics: mask sample count must match its grid");
            for (const auto& z : mask)
                if (std::abs(z) > 1.0 + 1e-12)
                    throw std::invalid_argument(
                        "optics: mask transmission modulus must not exceed one");
            return;
        }
    }
    throw std::invalid_argument("optics: unknown object kind");
}

ComplexField apply_object(const ComplexField& in, const TransmissionObject& object) {
    object.validate();
    ComplexField out = in;
    for (std::size_t i = 0; i < in.values.size(); ++i)
        out.values[i] = in.values[i] * object.transmission_at(in.axis.coordinate(i));
    return out;
}

BeamSplitterSpec BeamSplitterSpec::balanced() {
    const double s = 1.0 / std::sqrt(2.0);
    return BeamSplitterSpec{cplx{0.0, s}, cplx{s, 0.0}};
}

void BeamSplitterSpec::validate() const {
    double e = std::norm(r) + std::norm(t);
    if (!(e > 0.0))
        throw std::invalid_argument("optics: beam splitter must transmit or reflect");
    if (e > 1.0 + 1e-12)
        throw std::invalid_argument("optics: beam splitter must not amplify energy");
}

SplitBeams split_beam(const ComplexField& in, const BeamSplitterSpec& bs) {
    bs.validate();
    SplitBeams out{in, in};
    for (std::size_t i = 0; i < in.values.size(); ++i) {
        out.test.values[i] = bs.t * in.values[i];
        out.reference.values[i] = bs.r * in.values[i];
    }
    return out;
}

GridAxis far_field_axis(const GridAxis& input, const OpticalConfig& cfg) {
    input.validate();
    cfg.validate();
    double pitch = cfg.wavelength_um * cfg.focal_um() /
                   (static_cast<double>(input.n) * input.pitch);
    return GridAxis::centered(input.n, pitch);
}

ComplexField lens_far_field(const ComplexField& in, const OpticalConfig& cfg) {
    const GridAxis out_axis = far_field_axis(in.axis, cfg);
    const double k_over_f = cfg.wavenumber() / cfg.focal_um();
    const TwiddleSet& tw = twiddles_for(in.axis, out_axis, k_over_f);
    const std::size_t n = in.axis.n;

    ComplexField out{out_axis, in.values};
    for (std::size_t j = 0; j < n; ++j) out.values[j] *= tw.pre[j];
    fft::forward_raw(out.values);

    const double c = std::sqrt(in.axis.pitch / (static_cast<double>(n) * out_axis.pitch));
    for (std::size_t m = 0; m < n; ++m) out.values[m] *= c * tw.global * tw.post[m];
    return out;
}

void DetectorSpec::validate() const {
    if (pixel_pitch_um < 0.0)
        throw std::invalid_argument("optics: pixel pitch must not be negative");
    if (add_shot_noise && !(shot_noise_scale > 0.0))
        throw std::invalid_argument(
            "optics: photon scale must be positive when shot noise is enabled");
}

GridAxis detector_axis(const GridAxis& in, const DetectorSpec& det) {
    det.validate();
    in.validate();

    std::size_t bin = 1;
    if (det.pixel_pitch_um > 0.0) {
        double ratio = det.pixel_pitch_um / in.pitch;
        auto b = static_cast<long long>(std::llround(ratio));
        if (b < 1)
            throw std::invalid_argument(
                "optics: pixel pitch is smaller than the field sampling");
        if (std::fabs(ratio - static_cast<double>(b)) > 0.01 * ratio)
            throw std::invalid_argument(
                "optics: pixel pitch must be an integer multiple of the field pitch");
        bin = static_cast<std::size_t>(b);
    }

    const std::size_t n_out = in.n / bin;
    if (n_out == 0)
        throw std::invalid_argument("optics: pixel pitch exceeds the field extent");

    GridAxis axis;
    axis.n = n_out;
    axis.pitch = in.pitch * static_cast<double>(bin);
    axis.origin = in.origin + in.pitch * 0.5 * static_cast<double>(bin - 1);
    return axis;
}

IntensityFrame detect(const ComplexField& in, const DetectorSpec& det,
                      std::uint64_t seed) {
    const GridAxis axis = detector_axis(in.axis, det);
    const std::size_t n_out = axis.n;
    const auto bin =
        static_cast<std::size_t>(std::llround(axis.pitch / in.axis.pitch));

    IntensityFrame frame{axis, std::vector<double>(n_out, 0.0)};
    const double inv_bin = 1.0 / static_cast<double>(bin);
    for (std::size_t i = 0; i < n_out; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < bin; ++j) s += std::norm(in.values[i * bin + j]);
        frame.values[i] = s * inv_bin;
    }

    if (det.add_shot_noise) {
        SplitMix64 rng(seed);
        for (auto& v : frame.values) {
            double counts = static_cast<double>(poisson_sample(rng, v * det.shot_noise_scale));
            v = counts / det.shot_noise_scale;
        }
    }
    return frame;
}

}  // namespace ghostdiff
