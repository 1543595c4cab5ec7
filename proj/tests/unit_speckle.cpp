#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <vector>

#include "ghostdiff/analysis.hpp"
#include "ghostdiff/rng.hpp"
#include "ghostdiff/speckle.hpp"

using namespace ghostdiff;

namespace {

SpeckleSpec small_spec(double delta, double aperture,
                       EnvelopeKind env = EnvelopeKind::hard_pinhole) {
    SpeckleSpec s;
    s.axis = GridAxis::centered(256, 1.3);
    s.delta_x_n = delta;
    s.aperture = aperture;
    s.envelope = env;
    return s;
}

std::vector<ComplexField> ensemble(const SpeckleSpec& spec, std::size_t count,
                                   std::uint64_t master) {
    std::vector<ComplexField> fields;
    fields.reserve(count);
    for (std::size_t k = 0; k < count; ++k)
        fields.push_back(synthesize_speckle(spec, derive_seed(master, k)));
    return fields;
}

Pattern modulus_pattern(const GridAxis& axis, const std::vector<cplx>& row) {
    Pattern p;
    p.axis = axis;
    p.values.reserve(row.size());
    for (const auto& z : row) p.values.push_back(std::abs(z));
    return p;
}

}  // namespace

TEST_CASE("speckle spec validation rejects unusable parameters") {
    CHECK_NOTHROW(small_spec(4.0, 300.0).validate());
    CHECK_THROWS_AS(small_spec(1.0, 300.0).validate(), std::invalid_argument);
    CHECK_THROWS_AS(small_spec(4.0, 500.0).validate(), std::invalid_argument);
    CHECK_THROWS_AS(small_spec(4.0, 0.0).validate(), std::invalid_argument);
    SpeckleSpec bad = small_spec(4.0, 300.0);
    bad.axis.n = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("synthesis is deterministic in the seed") {
    const auto spec = small_spec(4.0, 300.0);
    auto a = synthesize_speckle(spec, 77);
    auto b = synthesize_speckle(spec, 77);
    auto c = synthesize_speckle(spec, 78);
    REQUIRE(a.values.size() == b.values.size());
    bool identical = true, differs = false;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        identical = identical && a.values[i] == b.values[i];
        differs = differs || a.values[i] != c.values[i];
    }
    CHECK(identical);
    CHECK(differs);
}

TEST_CASE("hard pinhole zeroes the field outside the aperture") {
    const auto spec = small_spec(4.0, 200.0);
    auto f = synthesize_speckle(spec, 5);
    for (std::size_t i = 0; i < f.axis.n; ++i) {
        const double x = f.axis.coordinate(i);
        if (std::fabs(x) > 100.0 + 0.5 * f.axis.pitch)
            CHECK(std::abs(f.values[i]) == 0.0);
    }
}

TEST_CASE("mean intensity at the aperture center is one") {
    const auto spec = small_spec(5.0, 300.0);
    const auto fields = ensemble(spec, 4000, 1001);
    const std::size_t c = spec.axis.n / 2;
    double mean = 0.0;
    for (const auto& f : fields) mean += std::norm(f.values[c]);
    mean /= static_cast<double>(fields.size());
    CHECK(mean == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("correlation modulus width tracks the requested speckle size") {
    SpeckleSpec spec;
    spec.axis = GridAxis::centered(1024, 0.390625);
    spec.aperture = 332.5;
    for (double delta : {2.8284271247461903, 8.485281374238571, 16.97056274847714}) {
        spec.delta_x_n = delta;
        const auto fields = ensemble(spec, 3000, 2024);
        auto row = estimate_gamma_row(fields, spec.axis.n / 2);
        const double width = fwhm(modulus_pattern(spec.axis, row));
        CHECK(width == doctest::Approx(delta).epsilon(0.10));
    }
}

TEST_CASE("intensity autocorrelation width is the field width over sqrt two") {
    SpeckleSpec spec;
    spec.axis = GridAxis::centered(1024, 0.390625);
    spec.aperture = 332.5;
    spec.delta_x_n = 2.0 * std::numbers::sqrt2;
    const auto fields = ensemble(spec, 3000, 2025);
    auto row = estimate_gamma_row(fields, spec.axis.n / 2);
    Pattern sq;
    sq.axis = spec.axis;
    for (const auto& z : row) sq.values.push_back(std::norm(z));
    CHECK(fwhm(sq) == doctest::Approx(2.0).epsilon(0.10));
}

TEST_CASE("single-point contrast of thermal speckle is one") {
    const auto spec = small_spec(5.0, 300.0);
    const auto fields = ensemble(spec, 20000, 31);
    const std::size_t c = spec.axis.n / 2;
    double s = 0.0, ss = 0.0;
    for (const auto& f : fields) {
        const double i = std::norm(f.values[c]);
        s += i;
        ss += i * i;
    }
    const double m = s / static_cast<double>(fields.size());
    const double var = ss / static_cast<double>(fields.size()) - m * m;
    CHECK(var / (m * m) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("coherence length beyond the span gives a single flat speckle") {
    auto spec = small_spec(5.0, 300.0);
    spec.delta_x_n = 2.0 * spec.axis.span();
    auto f = synthesize_speckle(spec, 9);
    double s = 0.0, ss = 0.0;
    std::size_t cnt = 0;
    for (std::size_t i = 0; i < f.axis.n; ++i) {
        if (std::fabs(f.axis.coordinate(i)) > 140.0) continue;
        const double v = std::norm(f.values[i]);
        s += v;
        ss += v * v;
        ++cnt;
    }
    const double m = s / static_cast<double>(cnt);
    const double rel_sd = std::sqrt(ss / static_cast<double>(cnt) - m * m) / m;
    CHECK(rel_sd < 0.2);
}

TEST_CASE("gaussian envelope shapes the mean intensity profile") {
    const auto spec = small_spec(4.0, 150.0, EnvelopeKind::gaussian);
    const auto fields = ensemble(spec, 4000, 44);
    Pattern mean;
    mean.axis = spec.axis;
    mean.values.assign(spec.axis.n, 0.0);
    for (const auto& f : fields)
        for (std::size_t i = 0; i < f.axis.n; ++i)
            mean.values[i] += std::norm(f.values[i]) / static_cast<double>(fields.size());
    CHECK(fwhm(mean) == doctest::Approx(150.0).epsilon(0.10));
}

TEST_CASE("estimated correlation matrix is hermitian and positive on the diagonal") {
    const auto spec = small_spec(6.0, 150.0);
    auto fields = ensemble(spec, 64, 17);
    auto gamma = estimate_gamma(fields);
    REQUIRE(gamma.values.rows == spec.axis.n);
    for (std::size_t i = 0; i < spec.axis.n; i += 17) {
        CHECK(gamma.values.at(i, i).imag() == 0.0);
        CHECK(gamma.values.at(i, i).real() >= 0.0);
        for (std::size_t j = 0; j < spec.axis.n; j += 13) {
            const cplx a = gamma.values.at(i, j);
            const cplx b = gamma.values.at(j, i);
            CHECK(a.real() == b.real());
            CHECK(a.imag() == -b.imag());
        }
    }
}

TEST_CASE("row and full correlation estimates agree") {
    const auto spec = small_spec(6.0, 150.0);
    auto fields = ensemble(spec, 50, 23);
    auto gamma = estimate_gamma(fields);
    auto row = estimate_gamma_row(fields, 40);
    for (std::size_t j = 0; j < spec.axis.n; ++j) {
        CHECK(row[j].real() == doctest::Approx(gamma.values.at(40, j).real()).epsilon(1e-12));
        CHECK(row[j].imag() == doctest::Approx(gamma.values.at(40, j).imag()).epsilon(1e-12));
    }
}

TEST_CASE("correlation accumulator merge is bit-identical to sequential use") {
    const auto spec = small_spec(6.0, 150.0);
    auto fields = ensemble(spec, 41, 29);

    auto whole = GammaAccumulator::full(spec.axis);
    for (std::size_t k = 0; k < fields.size(); ++k) whole.add(k, fields[k]);

    auto part_a = GammaAccumulator::full(spec.axis);
    auto part_b = GammaAccumulator::full(spec.axis);
    for (std::size_t k = 0; k < fields.size(); ++k)
        (k % 3 == 0 ? part_a : part_b).add(k, fields[k]);
    part_a.merge_from(std::move(part_b));

    auto ga = whole.finalize_full();
    auto gb = part_a.finalize_full();
    bool identical = true;
    for (std::size_t i = 0; i < ga.values.v.size(); ++i)
        identical = identical && ga.values.v[i] == gb.values.v[i];
    CHECK(identical);
}

TEST_CASE("thermal ensembles satisfy the gaussian moment relation") {
    const auto spec = small_spec(5.0, 300.0);
    const auto fields = ensemble(spec, 3000, 314);
    CHECK(siegert_check(fields) <= 0.1);
}

TEST_CASE("a deterministic ensemble breaks the gaussian moment relation") {
    const auto spec = small_spec(5.0, 300.0);
    auto one = synthesize_speckle(spec, 8);
    std::vector<ComplexField> fields(1500, one);
    CHECK(siegert_check(fields) >= 0.5);
}

TEST_CASE("gaussianity checks need at least one thousand fields") {
    const auto spec = small_spec(5.0, 300.0);
    auto fields = ensemble(spec, 10, 3);
    CHECK_THROWS_AS((void)siegert_check(fields), std::invalid_argument);
}

TEST_CASE("independent ensembles pass the cross moment relation") {
    const auto spec = small_spec(5.0, 300.0);
    const auto a = ensemble(spec, 2000, 100);
    const auto b = ensemble(spec, 2000, 200);
    CHECK(siegert_cross_check(a, b) <= 0.1);
}

TEST_CASE("normalized intensities follow the exponential law") {
    const auto spec = small_spec(5.0, 300.0);
    const auto fields = ensemble(spec, 4000, 555);
    CHECK(intensity_exponential_ks(fields) <= 0.02);
}

TEST_CASE("frequency filter width matches its definition") {
    const double delta = 4.0;
    const double sigma_q = filter_sigma_q(delta);
    CHECK(sigma_q == doctest::Approx(4.0 * std::sqrt(std::numbers::ln2) / delta));
}
