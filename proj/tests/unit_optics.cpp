#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <vector>

#include "ghostdiff/analysis.hpp"
#include "ghostdiff/optics.hpp"
#include "ghostdiff/rng.hpp"
#include "ghostdiff/speckle.hpp"

using namespace ghostdiff;

namespace {

constexpr double kPi = std::numbers::pi;

TransmissionObject bench_grating() {
    TransmissionObject g;
    g.kind = TransmissionObject::Kind::square_phase_grating;
    g.period_d = 12.5;
    g.groove_width_a = 4.29;
    g.phase_shift = 0.84 * kPi;
    return g;
}

ComplexField gaussian_beam(const GridAxis& axis, double waist) {
    auto f = ComplexField::zeros(axis);
    for (std::size_t i = 0; i < axis.n; ++i) {
        const double x = axis.coordinate(i);
        f.values[i] = std::exp(-x * x / (waist * waist));
    }
    return f;
}

double total_power(const ComplexField& f) {
    double s = 0.0;
    for (const auto& z : f.values) s += std::norm(z);
    return s * f.axis.pitch;
}

Pattern intensity_pattern(const ComplexField& f) {
    Pattern p;
    p.axis = f.axis;
    for (const auto& z : f.values) p.values.push_back(std::norm(z));
    return p;
}

}  // namespace

TEST_CASE("grating transmission is the groove phase inside and one outside") {
    const auto g = bench_grating();
    const cplx groove = std::polar(1.0, 0.84 * kPi);
    CHECK(std::abs(g.transmission_at(2.0) - groove) < 1e-15);
    CHECK(std::abs(g.transmission_at(6.0) - cplx{1.0, 0.0}) < 1e-15);
    CHECK(std::abs(g.transmission_at(2.0 + 12.5) - groove) < 1e-15);
    CHECK(std::abs(g.transmission_at(2.0 - 3.0 * 12.5) - groove) < 1e-15);
    for (double x = -30.0; x <= 30.0; x += 0.37)
        CHECK(std::abs(g.transmission_at(x)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("grating validation requires a groove narrower than the period") {
    auto g = bench_grating();
    g.groove_width_a = 12.5;
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
    g.groove_width_a = 0.0;
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
}

TEST_CASE("identity object returns the field unchanged") {
    auto axis = GridAxis::centered(64, 0.5);
    SpeckleSpec spec{axis, 2.0, 30.0, EnvelopeKind::hard_pinhole};
    auto f = synthesize_speckle(spec, 3);
    auto out = apply_object(f, TransmissionObject{});
    bool identical = true;
    for (std::size_t i = 0; i < f.values.size(); ++i)
        identical = identical && out.values[i] == f.values[i];
    CHECK(identical);
}

TEST_CASE("amplitude mask uses nearest sample and unit transmission outside") {
    TransmissionObject m;
    m.kind = TransmissionObject::Kind::amplitude_mask;
    m.mask_axis = GridAxis::centered(5, 2.0);
    m.mask = {cplx{0.1, 0.0}, cplx{0.3, 0.0}, cplx{0.5, 0.0}, cplx{0.7, 0.0},
              cplx{0.9, 0.0}};
    m.validate();
    CHECK(std::abs(m.transmission_at(0.0) - cplx{0.5, 0.0}) < 1e-15);
    CHECK(std::abs(m.transmission_at(1.1) - cplx{0.7, 0.0}) < 1e-15);
    CHECK(std::abs(m.transmission_at(100.0) - cplx{1.0, 0.0}) < 1e-15);
    CHECK(std::abs(m.transmission_at(-100.0) - cplx{1.0, 0.0}) < 1e-15);
    m.mask[2] = cplx{1.5, 0.0};
    CHECK_THROWS_AS(m.validate(), std::invalid_argument);
}

TEST_CASE("balanced splitter halves the energy into each arm") {
    const auto bs = BeamSplitterSpec::balanced();
    CHECK(std::norm(bs.r) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::norm(bs.t) == doctest::Approx(0.5).epsilon(1e-12));
    auto axis = GridAxis::centered(32, 1.0);
    SpeckleSpec spec{axis, 2.5, 30.0, EnvelopeKind::hard_pinhole};
    auto f = synthesize_speckle(spec, 1);
    auto arms = split_beam(f, bs);
    CHECK(total_power(arms.test) + total_power(arms.reference) ==
          doctest::Approx(total_power(f)).epsilon(1e-12));
}

TEST_CASE("splitter validation rejects energy gain") {
    BeamSplitterSpec bs;
    bs.r = cplx{0.9, 0.0};
    bs.t = cplx{0.9, 0.0};
    CHECK_THROWS_AS(bs.validate(), std::invalid_argument);
    bs.t = cplx{0.3, 0.2};
    CHECK_NOTHROW(bs.validate());
}

TEST_CASE("far-field axis pitch is wavelength times focal over span") {
    auto axis = GridAxis::centered(1024, 0.390625);
    OpticalConfig cfg{0.532, 50.0};
    auto far = far_field_axis(axis, cfg);
    CHECK(far.n == axis.n);
    CHECK(far.pitch == doctest::Approx(66.5).epsilon(1e-12));
    CHECK(far.coordinate(far.n / 2) == doctest::Approx(0.0));
}

TEST_CASE("lens transform conserves total power") {
    auto axis = GridAxis::centered(512, 0.78125);
    OpticalConfig cfg{0.532, 50.0};
    SpeckleSpec spec{axis, 3.0, 300.0, EnvelopeKind::hard_pinhole};
    auto f = synthesize_speckle(spec, 21);
    auto far = lens_far_field(f, cfg);
    CHECK(total_power(far) == doctest::Approx(total_power(f)).epsilon(1e-10));
}

TEST_CASE("gaussian beam transforms to the reciprocal waist") {
    auto axis = GridAxis::centered(2048, 0.5);
    OpticalConfig cfg{0.532, 50.0};
    const double waist = 40.0;
    auto far = lens_far_field(gaussian_beam(axis, waist), cfg);
    const double expected_waist =
        cfg.wavelength_um * cfg.focal_um() / (kPi * waist);
    const double expected_fwhm = expected_waist * std::sqrt(2.0 * std::numbers::ln2);
    CHECK(fwhm(intensity_pattern(far)) ==
          doctest::Approx(expected_fwhm).epsilon(0.02));
}

TEST_CASE("slit far field has its first zero at wavelength focal over width") {
    auto axis = GridAxis::centered(4096, 0.5);
    OpticalConfig cfg{0.532, 50.0};
    const double width = 100.0;
    auto f = ComplexField::zeros(axis);
    for (std::size_t i = 0; i < axis.n; ++i)
        f.values[i] = std::fabs(axis.coordinate(i)) <= 0.5 * width ? 1.0 : 0.0;
    auto far = lens_far_field(f, cfg);
    const double x_zero = cfg.wavelength_um * cfg.focal_um() / width;
    const auto near = far.axis.index_of(x_zero);
    double best = 1e300;
    std::size_t best_i = 0;
    for (std::size_t i = near - 3; i <= near + 3; ++i) {
        const double v = std::norm(far.values[i]);
        if (v < best) {
            best = v;
            best_i = i;
        }
    }
    CHECK(std::fabs(far.axis.coordinate(best_i) - x_zero) <= far.axis.pitch);
    CHECK(best / std::norm(far.values[far.axis.n / 2]) < 1e-3);
}

TEST_CASE("pure phase objects do not change the transmitted power") {
    auto axis = GridAxis::centered(256, 1.0);
    SpeckleSpec spec{axis, 3.0, 200.0, EnvelopeKind::hard_pinhole};
    auto f = synthesize_speckle(spec, 12);
    auto out = apply_object(f, bench_grating());
    CHECK(total_power(out) == doctest::Approx(total_power(f)).epsilon(1e-12));
}

TEST_CASE("native detector records the squared modulus") {
    auto axis = GridAxis::centered(32, 1.0);
    auto f = ComplexField::zeros(axis);
    for (std::size_t i = 0; i < axis.n; ++i)
        f.values[i] = cplx{0.1 * static_cast<double>(i), 0.2};
    auto frame = detect(f, DetectorSpec{}, 0);
    CHECK(frame.axis == axis);
    for (std::size_t i = 0; i < axis.n; ++i)
        CHECK(frame.values[i] == doctest::Approx(std::norm(f.values[i])).epsilon(1e-15));
}

TEST_CASE("binned detector box-averages whole bins") {
    auto axis = GridAxis::centered(16, 2.0);
    auto f = ComplexField::zeros(axis);
    for (std::size_t i = 0; i < axis.n; ++i)
        f.values[i] = std::sqrt(static_cast<double>(i + 1));
    DetectorSpec det;
    det.pixel_pitch_um = 8.0;
    auto daxis = detector_axis(axis, det);
    CHECK(daxis.n == 4);
    CHECK(daxis.pitch == doctest::Approx(8.0));
    auto frame = detect(f, det, 0);
    for (std::size_t b = 0; b < 4; ++b) {
        double want = 0.0;
        for (std::size_t j = 0; j < 4; ++j)
            want += std::norm(f.values[4 * b + j]) / 4.0;
        CHECK(frame.values[b] == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("binning widens a narrow peak") {
    auto axis = GridAxis::centered(256, 1.0);
    auto f = ComplexField::zeros(axis);
    for (std::size_t i = 0; i < axis.n; ++i) {
        const double x = axis.coordinate(i);
        f.values[i] = std::exp(-x * x / 8.0);
    }
    DetectorSpec coarse;
    coarse.pixel_pitch_um = 8.0;
    auto fine_frame = detect(f, DetectorSpec{}, 0);
    auto coarse_frame = detect(f, coarse, 0);
    Pattern fine{fine_frame.axis, fine_frame.values, {}, {}};
    Pattern wide{coarse_frame.axis, coarse_frame.values, {}, {}};
    CHECK(fwhm(wide) > fwhm(fine));
}

TEST_CASE("detector validation rejects incommensurate pixel pitches") {
    auto axis = GridAxis::centered(16, 2.0);
    DetectorSpec det;
    det.pixel_pitch_um = 5.0;
    CHECK_THROWS_AS((void)detector_axis(axis, det), std::invalid_argument);
    det.pixel_pitch_um = 1.0;
    CHECK_THROWS_AS((void)detector_axis(axis, det), std::invalid_argument);
    det.pixel_pitch_um = -2.0;
    CHECK_THROWS_AS(det.validate(), std::invalid_argument);
}

TEST_CASE("shot noise has the configured mean and is seed-deterministic") {
    auto axis = GridAxis::centered(8, 1.0);
    auto f = ComplexField::zeros(axis);
    for (auto& z : f.values) z = std::sqrt(2.0);
    DetectorSpec det;
    det.add_shot_noise = true;
    det.shot_noise_scale = 1.0e4;

    auto a = detect(f, det, 99);
    auto b = detect(f, det, 99);
    bool identical = true;
    for (std::size_t i = 0; i < a.values.size(); ++i)
        identical = identical && a.values[i] == b.values[i];
    CHECK(identical);

    double mean = 0.0;
    int count = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        auto frame = detect(f, det, derive_seed(7, seed));
        for (double v : frame.values) {
            mean += v;
            ++count;
        }
    }
    mean /= count;
    CHECK(mean == doctest::Approx(2.0).epsilon(0.005));
}

TEST_CASE("optical config validation rejects non-positive parameters") {
    CHECK_THROWS_AS((OpticalConfig{0.0, 50.0}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((OpticalConfig{0.532, 0.0}.validate()), std::invalid_argument);
    OpticalConfig ok{0.532, 50.0};
    CHECK_NOTHROW(ok.validate());
    CHECK(ok.wavenumber() == doctest::Approx(2.0 * kPi / 0.532).epsilon(1e-12));
}
