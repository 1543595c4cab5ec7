#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "ghostdiff/analysis.hpp"

using namespace ghostdiff;

namespace {

constexpr double kPi = std::numbers::pi;

GratingSpec bench_grating(double phase = 0.84 * kPi) {
    GratingSpec g;
    g.period_d = 12.5;
    g.groove_width_a = 4.29;
    g.phase_shift_dphi = phase;
    return g;
}

const OpticalConfig kCfg{0.532, 50.0};

double eta_of(const DiffractionPrediction& p, int order) {
    for (std::size_t k = 0; k < p.orders.size(); ++k)
        if (p.orders[k] == order) return p.eta[k];
    throw std::logic_error("order not present");
}

}  // namespace

TEST_CASE("closed-form coefficients match direct quadrature") {
    std::mt19937_64 gen(2);
    std::uniform_real_distribution<double> frac(0.05, 0.95);
    std::uniform_real_distribution<double> period(1.0, 100.0);
    std::uniform_real_distribution<double> phase(-2.0 * kPi, 2.0 * kPi);
    for (int trial = 0; trial < 50; ++trial) {
        GratingSpec g;
        g.period_d = period(gen);
        g.groove_width_a = frac(gen) * g.period_d;
        g.phase_shift_dphi = phase(gen);
        auto closed = grating_coefficients(g, 3);
        auto quad = grating_coefficients_quadrature(g, 3);
        REQUIRE(closed.orders == quad.orders);
        for (std::size_t k = 0; k < closed.coefficients.size(); ++k)
            CHECK(std::abs(closed.coefficients[k] - quad.coefficients[k]) < 1e-8);
    }
}

TEST_CASE("order strengths are symmetric and sum to one for a phase grating") {
    auto p = grating_coefficients(bench_grating(0.7123 * kPi), 50);
    double sum = 0.0;
    for (double e : p.eta) sum += e;
    CHECK(sum <= 1.0 + 1e-12);
    CHECK(sum >= 0.99);
    for (int n = 1; n <= 3; ++n)
        CHECK(eta_of(p, n) == doctest::Approx(eta_of(p, -n)).epsilon(1e-12));
}

TEST_CASE("groove phase follows the material dispersion relation") {
    const double n_g = 1.46;
    const double depth = 0.489;
    const double at_red = phase_from_groove(n_g, depth, 0.633);
    const double at_green = phase_from_groove(n_g, depth, 0.532);
    CHECK(at_green == doctest::Approx(at_red * 0.633 / 0.532).epsilon(1e-12));
    CHECK(phase_from_groove(1.0, depth, 0.532) == doctest::Approx(0.0));
    CHECK(at_red == doctest::Approx((n_g - 1.0) * 2.0 * kPi * depth / 0.633));
    CHECK_THROWS_AS((void)phase_from_groove(0.5, depth, 0.532), std::invalid_argument);
    CHECK_THROWS_AS((void)phase_from_groove(n_g, depth, 0.0), std::invalid_argument);
}

TEST_CASE("grating validation ties the phase to depth and index when given") {
    auto g = bench_grating();
    g.groove_depth_delta = 0.4857;
    g.refractive_index_n_g = 1.46;
    g.phase_shift_dphi = phase_from_groove(1.46, 0.4857, 0.532);
    CHECK_NOTHROW(g.validate(0.532));
    g.phase_shift_dphi += 0.1;
    CHECK_THROWS_AS(g.validate(0.532), std::invalid_argument);
    CHECK_NOTHROW(g.validate(0.0));
    auto bad = bench_grating();
    bad.groove_width_a = bad.period_d;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("small-angle order positions are n lambda F over d") {
    auto pos = peak_positions(kCfg, 12.5, {-2, -1, 0, 1, 2});
    REQUIRE(pos.orders.size() == 5);
    for (std::size_t k = 0; k < pos.orders.size(); ++k)
        CHECK(pos.x[k] ==
              doctest::Approx(2.128 * pos.orders[k]).epsilon(1e-12));
    CHECK(pos.evanescent.empty());
}

TEST_CASE("exact mapping uses the true diffraction angle") {
    const double d = 1.0;
    auto linear = peak_positions(kCfg, d, {1});
    auto exact = peak_positions(kCfg, d, {1}, true);
    CHECK(exact.theta[0] == doctest::Approx(std::asin(0.532)).epsilon(1e-12));
    CHECK(exact.x[0] > linear.x[0]);
    CHECK(exact.x[0] == doctest::Approx(50.0 * std::asin(0.532)).epsilon(1e-12));
}

TEST_CASE("orders beyond the grating cutoff are flagged evanescent") {
    auto pos = peak_positions(kCfg, 1.0, {-2, -1, 1, 2});
    CHECK(pos.orders == std::vector<int>{-1, 1});
    CHECK(pos.evanescent == std::vector<int>{-2, 2});
    auto pred = predict_diffraction(bench_grating(), kCfg, 2);
    CHECK(pred.orders.size() == 5);
    CHECK(pred.x.size() == 5);
}

TEST_CASE("width estimate recovers a gaussian and a triangle") {
    const std::size_t n = 401;
    Pattern gauss;
    gauss.axis = GridAxis::centered(n, 0.25);
    const double sigma = 3.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = gauss.axis.coordinate(i);
        gauss.values.push_back(std::exp(-x * x / (2.0 * sigma * sigma)));
    }
    CHECK(fwhm(gauss) ==
          doctest::Approx(2.0 * std::sqrt(2.0 * std::numbers::ln2) * sigma)
              .epsilon(0.01));

    Pattern tri;
    tri.axis = GridAxis::centered(n, 0.25);
    const double base = 20.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = tri.axis.coordinate(i);
        tri.values.push_back(std::max(0.0, 1.0 - std::fabs(x) / base));
    }
    CHECK(fwhm(tri) == doctest::Approx(base).epsilon(0.01));
}

TEST_CASE("width estimate rejects profiles without a half crossing") {
    Pattern flat;
    flat.axis = GridAxis::centered(64, 1.0);
    flat.values.assign(64, 1.0);
    CHECK_THROWS_AS((void)fwhm(flat), std::invalid_argument);
    Pattern ramp;
    ramp.axis = GridAxis::centered(64, 1.0);
    for (std::size_t i = 0; i < 64; ++i)
        ramp.values.push_back(static_cast<double>(i));
    CHECK_THROWS_AS((void)fwhm(ramp), std::runtime_error);
    Pattern tiny;
    tiny.axis = GridAxis::centered(4, 1.0);
    tiny.values.assign(4, 1.0);
    CHECK_THROWS_AS((void)fwhm(tiny), std::invalid_argument);
}

TEST_CASE("speckle regime classifier reproduces the design windows") {
    SourceGeometry geom;
    geom.d_ph_mm = 3.0;
    geom.rho_eff_um = 14.0;
    geom.lambda_um = 0.532;

    geom.z_mm = 5.0;
    auto nfs = classify_speckle_regime(geom);
    CHECK(nfs.regime == SpeckleRegime::nfs);
    CHECK(nfs.predicted_speckle_size_um == doctest::Approx(14.0));
    CHECK(nfs.nfs_lower_z_mm == doctest::Approx(10.0 * 14.0 * 14.0 / 0.532 / 1000.0));
    CHECK(nfs.nfs_upper_z_mm == doctest::Approx(0.1 * 3.0 * 14.0 / 0.532));

    geom.z_mm = 1000.0;
    auto ffs = classify_speckle_regime(geom);
    CHECK(ffs.regime == SpeckleRegime::ffs);
    CHECK(ffs.predicted_speckle_size_um ==
          doctest::Approx(1000.0 * 0.532 / 3.0 * 1000.0 / 1000.0));
    CHECK(ffs.ffs_threshold_z_mm == doctest::Approx(10.0 * 3.0 * 14.0 / 0.532));

    geom.z_mm = 100.0;
    auto mid = classify_speckle_regime(geom);
    CHECK(mid.regime == SpeckleRegime::indeterminate);
    CHECK(mid.predicted_speckle_size_um >= 14.0);

    geom.z_mm = 0.0;
    CHECK_THROWS_AS((void)classify_speckle_regime(geom), std::invalid_argument);
}

TEST_CASE("peak integration recovers planted ratios on a synthetic pattern") {
    auto pred = predict_diffraction(bench_grating(), kCfg, 2);
    Pattern p;
    p.axis = GridAxis{241, 66.5, -120.0 * 66.5};
    p.values.assign(p.axis.n, 0.0);
    const double baseline = 0.3;
    for (std::size_t i = 0; i < p.axis.n; ++i) {
        const double x = p.axis.coordinate(i);
        double v = baseline;
        for (std::size_t k = 0; k < pred.orders.size(); ++k) {
            const double c = pred.x[k] * 1000.0;
            v += pred.eta[k] * std::exp(-(x - c) * (x - c) / (2.0 * 133.0 * 133.0));
        }
        p.values[i] = v;
    }
    auto table = integrate_peaks(p, pred, 11.0 * 66.5);
    REQUIRE(table.orders.size() == 5);
    for (std::size_t k = 0; k < table.orders.size(); ++k) {
        const double want = eta_of(pred, table.orders[k]) / eta_of(pred, 0);
        CHECK(table.ratio[k] == doctest::Approx(want).epsilon(0.01));
    }
}

TEST_CASE("peak integration rejects malformed requests") {
    auto pred = predict_diffraction(bench_grating(), kCfg, 2);
    Pattern p;
    p.axis = GridAxis{241, 66.5, -120.0 * 66.5};
    p.values.assign(p.axis.n, 1.0);

    CHECK_THROWS_AS((void)integrate_peaks(p, pred, 5000.0), std::invalid_argument);
    CHECK_THROWS_AS((void)integrate_peaks(p, pred, 50.0), std::invalid_argument);

    auto no_zero = pred;
    no_zero.orders.erase(no_zero.orders.begin() + 2);
    no_zero.eta.erase(no_zero.eta.begin() + 2);
    no_zero.coefficients.erase(no_zero.coefficients.begin() + 2);
    no_zero.theta.erase(no_zero.theta.begin() + 2);
    no_zero.x.erase(no_zero.x.begin() + 2);
    CHECK_THROWS_AS((void)integrate_peaks(p, no_zero, 11.0 * 66.5),
                    std::invalid_argument);

    // flat pattern: zero-order integral vanishes after baseline subtraction
    CHECK_THROWS_AS((void)integrate_peaks(p, pred, 11.0 * 66.5), std::runtime_error);
}

TEST_CASE("delta-correlated source makes the ghost map shift-invariant") {
    const std::size_t n = 96;
    GridAxis axis = GridAxis::centered(n, 12.5 / 16.0);
    GammaMatrix gamma{axis, ComplexMatrix::zeros(n, n)};
    for (std::size_t i = 0; i < n; ++i) gamma.values.at(i, i) = cplx{1.0, 0.0};

    TransmissionObject obj;
    obj.kind = TransmissionObject::Kind::square_phase_grating;
    obj.period_d = 12.5;
    obj.groove_width_a = 4.29;
    obj.phase_shift = 0.84 * kPi;

    auto map = oracle_correlation(gamma, obj, kCfg, BeamSplitterSpec::balanced());
    const std::size_t c = n / 2;
    // probe on the first diffraction order, six far-field pixels out
    for (std::size_t s : {1ul, 3ul, 7ul}) {
        const double a = map.values.at(c, c + 6);
        const double b = map.values.at(c + s, c + 6 + s);
        CHECK(b == doctest::Approx(a).epsilon(1e-9));
    }
}

TEST_CASE("ghost map of a delta-correlated source shows the grating orders") {
    const std::size_t n = 128;
    GridAxis axis = GridAxis::centered(n, 12.5 / 16.0);
    GammaMatrix gamma{axis, ComplexMatrix::zeros(n, n)};
    for (std::size_t i = 0; i < n; ++i) gamma.values.at(i, i) = cplx{1.0, 0.0};

    TransmissionObject obj;
    obj.kind = TransmissionObject::Kind::square_phase_grating;
    obj.period_d = 12.5;
    obj.groove_width_a = 4.29;
    obj.phase_shift = 0.84 * kPi;

    auto map = oracle_correlation(gamma, obj, kCfg, BeamSplitterSpec::balanced());
    const std::size_t c = n / 2;
    // orders sit 8 far-field pixels apart on this grid
    const double center = map.values.at(c, c);
    const double side = map.values.at(c, c + 8);
    const double gap = map.values.at(c, c + 4);
    CHECK(side / center > 1.0);
    CHECK(gap / center < 0.1);

    // a single-arm intensity autocorrelation of a pure phase object is blind
    auto blind = oracle_hbt(gamma, obj, kCfg);
    CHECK(blind.values.at(c, c + 8) / blind.values.at(c, c) < 1e-6);
}

TEST_CASE("single-arm map of an amplitude object keeps its diffraction orders") {
    const std::size_t n = 128;
    GridAxis axis = GridAxis::centered(n, 12.5 / 16.0);
    GammaMatrix gamma{axis, ComplexMatrix::zeros(n, n)};
    for (std::size_t i = 0; i < n; ++i) gamma.values.at(i, i) = cplx{1.0, 0.0};

    TransmissionObject mask;
    mask.kind = TransmissionObject::Kind::amplitude_mask;
    mask.mask_axis = axis;
    mask.mask.assign(n, cplx{1.0, 0.0});
    for (std::size_t i = 0; i < n; ++i) {
        const double u = std::fmod(axis.coordinate(i) + 625.0, 12.5);
        if (u <= 4.29) mask.mask[i] = cplx{0.2, 0.0};
    }

    auto map = oracle_hbt(gamma, mask, kCfg);
    const std::size_t c = n / 2;
    CHECK(map.values.at(c, c + 8) / map.values.at(c, c) > 1e-3);
}

TEST_CASE("identity objects make both oracle maps identical") {
    const std::size_t n = 48;
    GridAxis axis = GridAxis::centered(n, 2.0);
    GammaMatrix gamma{axis, ComplexMatrix::zeros(n, n)};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double r = axis.coordinate(i) - axis.coordinate(j);
            gamma.values.at(i, j) = std::exp(-r * r / 50.0);
        }
    TransmissionObject id;
    auto bs = BeamSplitterSpec::balanced();
    auto a = oracle_correlation(gamma, id, kCfg, bs);
    auto b = oracle_hbt(gamma, id, kCfg, bs);
    bool identical = a.values.v == b.values.v;
    CHECK(identical);
}

TEST_CASE("oracle maps refuse large source grids") {
    const std::size_t n = 129;
    GridAxis axis = GridAxis::centered(n, 1.0);
    GammaMatrix gamma{axis, ComplexMatrix::zeros(n, n)};
    TransmissionObject id;
    CHECK_THROWS_AS(
        (void)oracle_correlation(gamma, id, kCfg, BeamSplitterSpec::balanced()),
        std::invalid_argument);
}
