#include "ghostdiff/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ghostdiff {

namespace {

constexpr std::size_t kMaxOracleGrid = 128;

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

/// Composite Simpson integral of exp(-i w x) over [lo, hi].
cplx simpson_exp(double w, double lo, double hi, std::size_t intervals) {
    if (intervals % 2 == 1) ++intervals;
    const double h = (hi - lo) / static_cast<double>(intervals);
    auto f = [w](double x) { return std::polar(1.0, -w * x); };
    cplx s = f(lo) + f(hi);
    for (std::size_t i = 1; i < intervals; ++i)
        s += f(lo + h * static_cast<double>(i)) * (i % 2 == 1 ? 4.0 : 2.0);
    return s * (h / 3.0);
}

}  // namespace

void GratingSpec::validate(double lambda_um) const {
    if (!(period_d > 0.0) || !(groove_width_a > 0.0) || !(groove_width_a < period_d))
        throw std::invalid_argument(
            "analysis: grating needs 0 < groove width < period");
    if (groove_depth_delta.has_value() != refractive_index_n_g.has_value())
        throw std::invalid_argument(
            "analysis: groove depth and refractive index must be given together");
    if (groove_depth_delta && lambda_um > 0.0) {
        const double derived =
            phase_from_groove(*refractive_index_n_g, *groove_depth_delta, lambda_um);
        if (std::fabs(derived - phase_shift_dphi) > 1e-12)
            throw std::invalid_argument(
                "analysis: phase shift disagrees with the groove depth");
    }
}

DiffractionPrediction grating_coefficients(const GratingSpec& g, int n_max) {
    g.validate();
    if (n_max < 2)
        throw std::invalid_argument("analysis: at least orders up to 2 required");
    const double alpha = g.groove_width_a / g.period_d;
    const cplx e_minus_one = std::polar(1.0, g.phase_shift_dphi) - 1.0;

    DiffractionPrediction p;
    for (int n = -n_max; n <= n_max; ++n) {
        cplx c;
        if (n == 0) {
            c = 1.0 + alpha * e_minus_one;
        } else {
            const double u = 2.0 * std::numbers::pi * static_cast<double>(n);
            c = e_minus_one * (1.0 - std::polar(1.0, -u * alpha)) / (cplx{0.0, u});
        }
        p.orders.push_back(n);
        p.coefficients.push_back(c);
        p.eta.push_back(std::norm(c));
    }
    return p;
}

DiffractionPrediction grating_coefficients_quadrature(const GratingSpec& g, int n_max) {
    g.validate();
    if (n_max < 2)
        throw std::invalid_argument("analysis: at least orders up to 2 required");
    const double d = g.period_d;
    const double a = g.groove_width_a;
    const cplx groove = std::polar(1.0, g.phase_shift_dphi);

    DiffractionPrediction p;
    for (int n = -n_max; n <= n_max; ++n) {
        const double w = 2.0 * std::numbers::pi * static_cast<double>(n) / d;
        const std::size_t m = 128 * static_cast<std::size_t>(std::max(1, std::abs(n)));
        const cplx integral =
            groove * simpson_exp(w, 0.0, a, m) + simpson_exp(w, a, d, m);
        const cplx c = integral / d;
        p.orders.push_back(n);
        p.coefficients.push_back(c);
        p.eta.push_back(std::norm(c));
    }
    return p;
}

double phase_from_groove(double n_g, double delta_um, double lambda_um) {
    if (!(n_g >= 1.0))
        throw std::invalid_argument("analysis: refractive index must be at least one");
    if (delta_um < 0.0)
        throw std::invalid_argument("analysis: groove depth must not be negative");
    if (!(lambda_um > 0.0))
        throw std::invalid_argument("analysis: wavelength must be positive");
    return (n_g - 1.0) * 2.0 * std::numbers::pi * delta_um / lambda_um;
}

PeakPositions peak_positions(const OpticalConfig& cfg, double period_d,
                             const std::vector<int>& orders, bool exact_mapping) {
    cfg.validate();
    if (!(period_d > 0.0))
        throw std::invalid_argument("analysis: grating period must be positive");
    PeakPositions out;
    for (int n : orders) {
        const double s = static_cast<double>(n) * cfg.wavelength_um / period_d;
        if (std::fabs(s) >= 1.0) {
            out.evanescent.push_back(n);
            continue;
        }
        out.orders.push_back(n);
        out.theta.push_back(std::asin(s));
        out.x.push_back(cfg.focal_length_mm * (exact_mapping ? std::asin(s) : s));
    }
    return out;
}

DiffractionPrediction predict_diffraction(const GratingSpec& g,
                                          const OpticalConfig& cfg, int n_max) {
    DiffractionPrediction p = grating_coefficients(g, n_max);
    PeakPositions pos = peak_positions(cfg, g.period_d, p.orders);

    DiffractionPrediction kept;
    std::size_t j = 0;
    for (std::size_t i = 0; i < p.orders.size(); ++i) {
        if (j >= pos.orders.size() || pos.orders[j] != p.orders[i]) continue;
        kept.orders.push_back(p.orders[i]);
        kept.coefficients.push_back(p.coefficients[i]);
        kept.eta.push_back(p.eta[i]);
        kept.theta.push_back(pos.theta[j]);
        kept.x.push_back(pos.x[j]);
        ++j;
    }
    return kept;
}

PeakTable integrate_peaks(const Pattern& p, const DiffractionPrediction& predicted,
                          double window_um) {
    p.axis.validate();
    if (p.values.size() != p.axis.n)
        throw std::invalid_argument("analysis: pattern length does not match its axis");
    if (predicted.x.size() != predicted.orders.size() || predicted.orders.empty())
        throw std::invalid_argument(
            "analysis: prediction must carry focal-plane positions");
    if (!(window_um >= 2.0 * p.axis.pitch))
        throw std::invalid_argument(
            "analysis: integration window must span at least two pixels");

    struct Window {
        std::size_t peak;
        std::ptrdiff_t lo;
        std::ptrdiff_t hi;
    };
    const auto n = static_cast<std::ptrdiff_t>(p.axis.n);
    std::vector<Window> win;
    for (std::size_t k = 0; k < predicted.orders.size(); ++k) {
        const double center = predicted.x[k] * 1000.0;
        const double wlo = center - 0.5 * window_um;
        const double whi = center + 0.5 * window_um;
        const auto lo = static_cast<std::ptrdiff_t>(
            std::ceil((wlo - p.axis.origin) / p.axis.pitch - 1e-9));
        const auto hi = static_cast<std::ptrdiff_t>(
            std::floor((whi - p.axis.origin) / p.axis.pitch + 1e-9));
        const std::ptrdiff_t clo = std::max<std::ptrdiff_t>(lo, 0);
        const std::ptrdiff_t chi = std::min<std::ptrdiff_t>(hi, n - 1);
        if (clo > chi)
            throw std::invalid_argument(
                "analysis: an integration window contains no samples");
        win.push_back({k, clo, chi});
    }
    std::sort(win.begin(), win.end(),
              [](const Window& a, const Window& b) { return a.lo < b.lo; });
    for (std::size_t k = 1; k < win.size(); ++k)
        if (win[k].lo <= win[k - 1].hi)
            throw std::invalid_argument("analysis: integration windows overlap");

    struct Gap {
        std::ptrdiff_t lo;
        std::ptrdiff_t hi;
    };
    auto clamp_gap = [n](std::ptrdiff_t lo, std::ptrdiff_t hi) {
        return Gap{std::max<std::ptrdiff_t>(lo, 0), std::min<std::ptrdiff_t>(hi, n - 1)};
    };
    std::vector<Gap> left(win.size()), right(win.size());
    for (std::size_t k = 0; k < win.size(); ++k) {
        if (k + 1 < win.size())
            right[k] = clamp_gap(win[k].hi + 1, win[k + 1].lo - 1);
        if (k > 0) left[k] = clamp_gap(win[k - 1].hi + 1, win[k].lo - 1);
    }
    if (win.size() == 1) {
        const std::ptrdiff_t w = win[0].hi - win[0].lo + 1;
        left[0] = clamp_gap(win[0].lo - w, win[0].lo - 1);
        right[0] = clamp_gap(win[0].hi + 1, win[0].hi + w);
    } else {
        const std::ptrdiff_t wl = right[0].hi - right[0].lo + 1;
        left[0] = clamp_gap(win[0].lo - wl, win[0].lo - 1);
        const std::size_t last = win.size() - 1;
        const std::ptrdiff_t wr = left[last].hi - left[last].lo + 1;
        right[last] = clamp_gap(win[last].hi + 1, win[last].hi + wr);
    }

    const bool have_se = p.std_err.size() == p.values.size();
    PeakTable table;
    table.orders = predicted.orders;
    table.integrated.assign(predicted.orders.size(), 0.0);
    table.integrated_se.assign(predicted.orders.size(), 0.0);
    table.ratio.assign(predicted.orders.size(), 0.0);
    table.ratio_se.assign(predicted.orders.size(), 0.0);
    table.baseline.assign(predicted.orders.size(), 0.0);

    for (std::size_t k = 0; k < win.size(); ++k) {
        std::vector<double> gap_vals;
        double gap_se2 = 0.0;
        for (const Gap& g : {left[k], right[k]}) {
            for (std::ptrdiff_t i = g.lo; i <= g.hi; ++i) {
                gap_vals.push_back(p.values[i]);
                if (have_se) gap_se2 += p.std_err[i] * p.std_err[i];
            }
        }
        const double b = median_of(gap_vals);
        double sum = 0.0;
        double se2 = 0.0;
        for (std::ptrdiff_t i = win[k].lo; i <= win[k].hi; ++i) {
            sum += p.values[i] - b;
            if (have_se) se2 += p.std_err[i] * p.std_err[i];
        }
        const auto n_win = static_cast<double>(win[k].hi - win[k].lo + 1);
        if (have_se && !gap_vals.empty()) {
            const double var_b = 0.5 * std::numbers::pi *
                                 (gap_se2 / static_cast<double>(gap_vals.size())) /
                                 static_cast<double>(gap_vals.size());
            se2 += n_win * n_win * var_b;
        }
        table.integrated[win[k].peak] = sum;
        table.integrated_se[win[k].peak] = std::sqrt(se2);
        table.baseline[win[k].peak] = b;
    }

    std::size_t zero_pos = predicted.orders.size();
    for (std::size_t k = 0; k < predicted.orders.size(); ++k)
        if (predicted.orders[k] == 0) zero_pos = k;
    if (zero_pos == predicted.orders.size())
        throw std::invalid_argument("analysis: prediction lacks the zero order");
    const double h0 = table.integrated[zero_pos];
    const double se0 = table.integrated_se[zero_pos];
    if (h0 == 0.0)
        throw std::runtime_error("analysis: zero-order window integrates to zero");
    for (std::size_t k = 0; k < table.orders.size(); ++k) {
        const double r = table.integrated[k] / h0;
        table.ratio[k] = r;
        table.ratio_se[k] =
            std::sqrt(table.integrated_se[k] * table.integrated_se[k] +
                      r * r * se0 * se0) /
            std::fabs(h0);
    }
    return table;
}

double fwhm(const Pattern& profile) {
    profile.axis.validate();
    const auto& v = profile.values;
    if (v.size() != profile.axis.n || v.size() < 5)
        throw std::invalid_argument("analysis: profile too short for a width estimate");

    const std::size_t side = std::max<std::size_t>(1, v.size() / 20);
    std::vector<double> outer;
    for (std::size_t i = 0; i < side; ++i) {
        outer.push_back(v[i]);
        outer.push_back(v[v.size() - 1 - i]);
    }
    const double baseline = median_of(outer);

    std::size_t pk = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[pk]) pk = i;
    if (!(v[pk] > baseline))
        throw std::invalid_argument("analysis: profile has no peak above baseline");
    const double half = baseline + 0.5 * (v[pk] - baseline);

    auto cross = [&](bool leftward) -> double {
        std::size_t i = pk;
        while (true) {
            if (leftward) {
                if (i == 0) break;
                --i;
            } else {
                if (i + 1 == v.size()) break;
                ++i;
            }
            if (v[i] < half) {
                const std::size_t inner = leftward ? i + 1 : i - 1;
                const double x_out = profile.axis.coordinate(i);
                const double x_in = profile.axis.coordinate(inner);
                const double f = (half - v[i]) / (v[inner] - v[i]);
                return x_out + f * (x_in - x_out);
            }
        }
        throw std::runtime_error("analysis: profile never falls to half height");
    };
    const double xl = cross(true);
    const double xr = cross(false);
    return xr - xl;
}

void SourceGeometry::validate() const {
    if (!(z_mm > 0.0) || !(d_ph_mm > 0.0) || !(rho_eff_um > 0.0) || !(lambda_um > 0.0))
        throw std::invalid_argument("analysis: source geometry must be positive");
}

RegimeReport classify_speckle_regime(const SourceGeometry& geom) {
    geom.validate();
    RegimeReport r;
    r.nfs_lower_z_mm = 10.0 * geom.rho_eff_um * geom.rho_eff_um / geom.lambda_um / 1000.0;
    r.nfs_upper_z_mm = 0.1 * geom.d_ph_mm * geom.rho_eff_um / geom.lambda_um;
    r.ffs_threshold_z_mm = 10.0 * geom.d_ph_mm * geom.rho_eff_um / geom.lambda_um;

    const double vcz_size_um = geom.z_mm * geom.lambda_um / geom.d_ph_mm;
    if (geom.z_mm >= r.ffs_threshold_z_mm) {
        r.regime = SpeckleRegime::ffs;
        r.predicted_speckle_size_um = vcz_size_um;
    } else if (geom.z_mm >= r.nfs_lower_z_mm && geom.z_mm <= r.nfs_upper_z_mm) {
        r.regime = SpeckleRegime::nfs;
        r.predicted_speckle_size_um = geom.rho_eff_um;
    } else {
        r.regime = SpeckleRegime::indeterminate;
        r.predicted_speckle_size_um = std::max(geom.rho_eff_um, vcz_size_um);
    }
    return r;
}

namespace {

CorrelationMap oracle_map(const GammaMatrix& gamma, const TransmissionObject& t1,
                          const TransmissionObject& t2, const OpticalConfig& cfg,
                          const BeamSplitterSpec& bs) {
    gamma.axis.validate();
    cfg.validate();
    bs.validate();
    t1.validate();
    t2.validate();
    const std::size_t n = gamma.axis.n;
    if (n > kMaxOracleGrid)
        throw std::invalid_argument(
            "analysis: the quadrature oracle is limited to 128 grid points");
    if (gamma.values.rows != n || gamma.values.cols != n)
        throw std::invalid_argument(
            "analysis: correlation matrix does not match its axis");

    const GridAxis out = far_field_axis(gamma.axis, cfg);
    const double kf = cfg.wavenumber() / cfg.focal_um();
    const double lam_f = cfg.wavelength_um * cfg.focal_um();
    const double amp_scale = gamma.axis.pitch * gamma.axis.pitch / lam_f;

    auto kernel = [&](const TransmissionObject& t) {
        std::vector<cplx> k(n * n);
        for (std::size_t m = 0; m < n; ++m) {
            const double xi = out.coordinate(m);
            for (std::size_t i = 0; i < n; ++i) {
                const double x = gamma.axis.coordinate(i);
                k[m * n + i] = std::polar(1.0, -kf * xi * x) * t.transmission_at(x);
            }
        }
        return k;
    };
    const std::vector<cplx> k1 = kernel(t1);
    const std::vector<cplx> k2 = kernel(t2);

    std::vector<cplx> p(n * n, cplx{0.0, 0.0});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const cplx g = gamma.values.at(i, j);
            for (std::size_t m2 = 0; m2 < n; ++m2)
                p[i * n + m2] += g * k2[m2 * n + j];
        }

    const double splitter = std::norm(bs.r) * std::norm(bs.t);
    CorrelationMap map{out, out, RealMatrix::zeros(n, n)};
    for (std::size_t m1 = 0; m1 < n; ++m1)
        for (std::size_t m2 = 0; m2 < n; ++m2) {
            cplx m{0.0, 0.0};
            for (std::size_t i = 0; i < n; ++i)
                m += std::conj(k1[m1 * n + i]) * p[i * n + m2];
            map.values.at(m1, m2) = splitter * std::norm(m * amp_scale);
        }
    return map;
}

}  // namespace

CorrelationMap oracle_correlation(const GammaMatrix& gamma,
                                  const TransmissionObject& obj,
                                  const OpticalConfig& cfg,
                                  const BeamSplitterSpec& bs) {
    return oracle_map(gamma, obj, TransmissionObject{}, cfg, bs);
}

CorrelationMap oracle_hbt(const GammaMatrix& gamma, const TransmissionObject& obj,
                          const OpticalConfig& cfg, const BeamSplitterSpec& bs) {
    return oracle_map(gamma, obj, obj, cfg, bs);
}

}  // namespace ghostdiff
