#include "ghostdiff/speckle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ghostdiff/fft.hpp"
#include "ghostdiff/rng.hpp"

namespace ghostdiff {

namespace {

constexpr std::size_t kMaxFullGamma = 2048;
constexpr std::size_t kMinSiegertFields = 1000;
constexpr double kProbeLevel = 0.01;
constexpr std::size_t kMaxProbes = 8;

std::vector<double> mean_intensity(const std::vector<ComplexField>& fields) {
    const std::size_t n = fields.front().values.size();
    std::vector<double> m(n, 0.0);
    for (const auto& f : fields) {
        if (f.values.size() != n)
            throw std::invalid_argument("speckle: ensemble fields must share one grid");
        for (std::size_t i = 0; i < n; ++i) m[i] += std::norm(f.values[i]);
    }
    for (auto& x : m) x /= static_cast<double>(fields.size());
    return m;
}

std::vector<std::size_t> probe_points(const std::vector<double>& mean) {
    double peak = *std::max_element(mean.begin(), mean.end());
    if (!(peak > 0.0)) throw std::invalid_argument("speckle: ensemble has zero intensity");
    std::vector<std::size_t> lit;
    for (std::size_t i = 0; i < mean.size(); ++i)
        if (mean[i] >= kProbeLevel * peak) lit.push_back(i);
    std::vector<std::size_t> probes;
    std::size_t count = std::min(kMaxProbes, lit.size());
    for (std::size_t k = 0; k < count; ++k)
        probes.push_back(lit[(k * (lit.size() - 1)) / (count > 1 ? count - 1 : 1)]);
    probes.erase(std::unique(probes.begin(), probes.end()), probes.end());
    return probes;
}

}  // namespace

double SpeckleSpec::envelope_amplitude(double x) const {
    if (envelope == EnvelopeKind::hard_pinhole)
        return std::fabs(x) <= 0.5 * aperture ? 1.0 : 0.0;
    return std::exp(-2.0 * M_LN2 * x * x / (aperture * aperture));
}

void SpeckleSpec::validate() const {
    axis.validate();
    if (!(delta_x_n >= 2.0 * axis.pitch))
        throw std::invalid_argument(
            "speckle: delta_x_n must be at least two grid pitches");
    if (!(aperture > 0.0))
        throw std::invalid_argument("speckle: aperture must be positive");
    if (!(aperture <= axis.span()))
        throw std::invalid_argument("speckle: aperture must fit inside the grid span");
}

double filter_sigma_q(double delta_x_n) {
    return 4.0 * std::sqrt(M_LN2) / delta_x_n;
}

ComplexField synthesize_speckle(const SpeckleSpec& spec, std::uint64_t seed) {
    spec.validate();
    const std::size_t n = spec.axis.n;
    SplitMix64 rng(seed);

    ComplexField field = ComplexField::zeros(spec.axis);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto [z0, z1] = rng.normal_pair();
        field.values[i] = cplx{z0 * inv_sqrt2, z1 * inv_sqrt2};
    }

    fft::forward_unitary(field.values);

    const double sigma_q = filter_sigma_q(spec.delta_x_n);
    const double dq = 2.0 * M_PI / spec.axis.span();
    double sum_h2 = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const bool positive_half = k < n / 2 + n % 2;
        double kk = positive_half ? static_cast<double>(k)
                                  : static_cast<double>(k) - static_cast<double>(n);
        double q = dq * kk;
        double h = std::exp(-q * q / (2.0 * sigma_q * sigma_q));
        field.values[k] *= h;
        sum_h2 += h * h;
    }

    fft::inverse_unitary(field.values);

    const double scale = 1.0 / std::sqrt(sum_h2 / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i)
        field.values[i] *= scale * spec.envelope_amplitude(spec.axis.coordinate(i));
    return field;
}

void GammaAccumulator::Sums::add(const Sums& o) {
    cnt += o.cnt;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += o.v[i];
}

GammaAccumulator::GammaAccumulator(const GridAxis& axis, bool full, std::size_t row)
    : axis_(axis), full_(full), row_(row) {}

GammaAccumulator GammaAccumulator::full(const GridAxis& axis) {
    axis.validate();
    if (axis.n > kMaxFullGamma)
        throw std::invalid_argument(
            "speckle: full correlation matrix is limited to 2048 grid points");
    return GammaAccumulator(axis, true, 0);
}

GammaAccumulator GammaAccumulator::row(const GridAxis& axis, std::size_t row_index) {
    axis.validate();
    if (row_index >= axis.n)
        throw std::invalid_argument("speckle: row index outside the grid");
    return GammaAccumulator(axis, false, row_index);
}

void GammaAccumulator::add(std::uint64_t frame_index, const ComplexField& field) {
    if (!(field.axis == axis_))
        throw std::invalid_argument("speckle: field grid does not match accumulator");
    const std::size_t n = axis_.n;
    Sums leaf;
    leaf.cnt = 1;
    if (full_) {
        leaf.v.resize(n * n);
        for (std::size_t i = 0; i < n; ++i) {
            const cplx ci = std::conj(field.values[i]);
            for (std::size_t j = 0; j < n; ++j)
                leaf.v[i * n + j] = ci * field.values[j];
        }
    } else {
        leaf.v.resize(n);
        const cplx cr = std::conj(field.values[row_]);
        for (std::size_t j = 0; j < n; ++j) leaf.v[j] = cr * field.values[j];
    }
    reducer_.insert_leaf(frame_index, std::move(leaf));
}

void GammaAccumulator::merge_from(GammaAccumulator&& other) {
    if (!(other.axis_ == axis_) || other.full_ != full_ || other.row_ != row_)
        throw std::invalid_argument("speckle: merging incompatible accumulators");
    reducer_.merge_from(std::move(other.reducer_));
}

GammaMatrix GammaAccumulator::finalize_full() const {
    if (!full_) throw std::logic_error("speckle: accumulator is not in full mode");
    Sums total = reducer_.fold();
    const std::size_t n = axis_.n;
    GammaMatrix g{axis_, ComplexMatrix::zeros(n, n)};
    const double inv = 1.0 / static_cast<double>(total.cnt);
    for (std::size_t i = 0; i < n * n; ++i) g.values.v[i] = total.v[i] * inv;
    return g;
}

std::vector<cplx> GammaAccumulator::finalize_row() const {
    if (full_) throw std::logic_error("speckle: accumulator is not in row mode");
    Sums total = reducer_.fold();
    std::vector<cplx> row(total.v.size());
    const double inv = 1.0 / static_cast<double>(total.cnt);
    for (std::size_t i = 0; i < row.size(); ++i) row[i] = total.v[i] * inv;
    return row;
}

GammaMatrix estimate_gamma(const std::vector<ComplexField>& fields) {
    if (fields.empty()) throw std::invalid_argument("speckle: empty ensemble");
    GammaAccumulator acc = GammaAccumulator::full(fields.front().axis);
    for (std::size_t k = 0; k < fields.size(); ++k) acc.add(k, fields[k]);
    return acc.finalize_full();
}

std::vector<cplx> estimate_gamma_row(const std::vector<ComplexField>& fields,
                                     std::size_t row_index) {
    if (fields.empty()) throw std::invalid_argument("speckle: empty ensemble");
    GammaAccumulator acc = GammaAccumulator::row(fields.front().axis, row_index);
    for (std::size_t k = 0; k < fields.size(); ++k) acc.add(k, fields[k]);
    return acc.finalize_row();
}

double siegert_check(const std::vector<ComplexField>& fields) {
    if (fields.size() < kMinSiegertFields)
        throw std::invalid_argument(
            "speckle: the gaussian-statistics check needs at least 1000 fields");
    auto mean = mean_intensity(fields);
    auto probes = probe_points(mean);
    const std::size_t p = probes.size();
    const double inv_n = 1.0 / static_cast<double>(fields.size());

    std::vector<double> sii(p * p, 0.0);
    std::vector<cplx> sg(p * p, cplx{0.0, 0.0});
    for (const auto& f : fields) {
        for (std::size_t a = 0; a < p; ++a) {
            const cplx fa = f.values[probes[a]];
            const double ia = std::norm(fa);
            for (std::size_t b = 0; b < p; ++b) {
                const cplx fb = f.values[probes[b]];
                sii[a * p + b] += ia * std::norm(fb);
                sg[a * p + b] += std::conj(fa) * fb;
            }
        }
    }

    double worst = 0.0;
    for (std::size_t a = 0; a < p; ++a) {
        for (std::size_t b = 0; b < p; ++b) {
            double measured = sii[a * p + b] * inv_n;
            double base = mean[probes[a]] * mean[probes[b]];
            double predicted = base + std::norm(sg[a * p + b] * inv_n);
            worst = std::max(worst, std::fabs(measured - predicted) / base);
        }
    }
    return worst;
}

double siegert_cross_check(const std::vector<ComplexField>& a,
                           const std::vector<ComplexField>& b) {
    const std::size_t n_frames = std::min(a.size(), b.size());
    if (n_frames < 2) throw std::invalid_argument("speckle: ensembles too small");
    std::vector<ComplexField> ta(a.begin(), a.begin() + n_frames);
    std::vector<ComplexField> tb(b.begin(), b.begin() + n_frames);
    auto ma = mean_intensity(ta);
    auto mb = mean_intensity(tb);
    auto pa = probe_points(ma);
    auto pb = probe_points(mb);
    const double inv_n = 1.0 / static_cast<double>(n_frames);

    double worst = 0.0;
    for (std::size_t ia : pa) {
        for (std::size_t ib : pb) {
            double sii = 0.0;
            cplx sg{0.0, 0.0};
            for (std::size_t k = 0; k < n_frames; ++k) {
                const cplx fa = ta[k].values[ia];
                const cplx fb = tb[k].values[ib];
                sii += std::norm(fa) * std::norm(fb);
                sg += std::conj(fa) * fb;
            }
            double base = ma[ia] * mb[ib];
            double predicted = base + std::norm(sg * inv_n);
            worst = std::max(worst, std::fabs(sii * inv_n - predicted) / base);
        }
    }
    return worst;
}

double intensity_exponential_ks(const std::vector<ComplexField>& fields) {
    if (fields.size() < 2) throw std::invalid_argument("speckle: ensemble too small");
    auto mean = mean_intensity(fields);
    auto probes = probe_points(mean);

    std::vector<double> samples;
    samples.reserve(fields.size() * probes.size());
    for (const auto& f : fields)
        for (std::size_t i : probes)
            samples.push_back(std::norm(f.values[i]) / mean[i]);

    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        double cdf = 1.0 - std::exp(-samples[i]);
        double lo = static_cast<double>(i) / n;
        double hi = static_cast<double>(i + 1) / n;
        d = std::max(d, std::max(std::fabs(cdf - lo), std::fabs(cdf - hi)));
    }
    return d;
}

}  // namespace ghostdiff
