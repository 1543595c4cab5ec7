#include "ghostdiff/correlator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ghostdiff {

namespace {

constexpr double kIntensityFloor = 0.05;
constexpr std::size_t kMaxFullProducts = 16384;

void check_same_shape(const std::vector<double>& a, const std::vector<double>& b,
                      const char* what) {
    if (a.size() != b.size()) throw std::invalid_argument(what);
}

MomentAccumulator::Sums subtract(const MomentAccumulator::Sums& total,
                                 const MomentAccumulator::Sums& part) {
    MomentAccumulator::Sums out = total;
    out.cnt -= part.cnt;
    for (std::size_t i = 0; i < out.s1.size(); ++i) out.s1[i] -= part.s1[i];
    for (std::size_t i = 0; i < out.s2.size(); ++i) out.s2[i] -= part.s2[i];
    for (std::size_t i = 0; i < out.sp.size(); ++i) out.sp[i] -= part.sp[i];
    return out;
}

/// Leave-one-block-out sums for jackknife error estimation.
std::vector<MomentAccumulator::Sums> leave_one_out(const MomentAccumulator::Totals& t) {
    std::vector<MomentAccumulator::Sums> out;
    for (const auto& b : t.blocks)
        if (b.cnt > 0 && b.cnt < t.total.cnt) out.push_back(subtract(t.total, b));
    return out;
}

/// Jackknife standard errors of eval(sums) across leave-one-out replicas.
/// Returns an empty vector when fewer than two blocks carry frames.
template <class Eval>
std::vector<double> jackknife_se(const MomentAccumulator::Totals& t, std::size_t n_out,
                                 Eval&& eval) {
    auto loo = leave_one_out(t);
    if (loo.size() < 2) return {};
    std::vector<std::vector<double>> reps;
    reps.reserve(loo.size());
    for (const auto& s : loo) reps.push_back(eval(s));
    const double nb = static_cast<double>(reps.size());
    std::vector<double> se(n_out, 0.0);
    for (std::size_t i = 0; i < n_out; ++i) {
        double mean = 0.0;
        for (const auto& r : reps) mean += r[i];
        mean /= nb;
        double ss = 0.0;
        for (const auto& r : reps) ss += (r[i] - mean) * (r[i] - mean);
        se[i] = std::sqrt(ss * (nb - 1.0) / nb);
    }
    return se;
}

}  // namespace

void MomentAccumulator::Sums::add(const Sums& o) {
    cnt += o.cnt;
    check_same_shape(s1, o.s1, "correlator: merging sums of different shapes");
    check_same_shape(s2, o.s2, "correlator: merging sums of different shapes");
    check_same_shape(sp, o.sp, "correlator: merging sums of different shapes");
    for (std::size_t i = 0; i < s1.size(); ++i) s1[i] += o.s1[i];
    for (std::size_t i = 0; i < s2.size(); ++i) s2[i] += o.s2[i];
    for (std::size_t i = 0; i < sp.size(); ++i) sp[i] += o.sp[i];
}

MomentAccumulator::MomentAccumulator(CorrelatorMode mode, const GridAxis& a1,
                                     const GridAxis& a2, std::uint64_t planned,
                                     std::size_t n_blocks)
    : mode_(mode), axis1_(a1), axis2_(a2), planned_frames_(planned) {
    a1.validate();
    a2.validate();
    if (n_blocks == 0)
        throw std::invalid_argument("correlator: block count must be positive");
    blocks_.resize(n_blocks);
}

MomentAccumulator MomentAccumulator::means_only(const GridAxis& axis1,
                                                const GridAxis& axis2,
                                                std::uint64_t planned_frames,
                                                std::size_t n_blocks) {
    return MomentAccumulator(CorrelatorMode::means_only, axis1, axis2, planned_frames,
                             n_blocks);
}

MomentAccumulator MomentAccumulator::fixed_pixel(const GridAxis& axis1,
                                                 const GridAxis& axis2,
                                                 std::size_t fixed_index,
                                                 std::uint64_t planned_frames,
                                                 std::size_t n_blocks) {
    MomentAccumulator acc(CorrelatorMode::fixed_pixel, axis1, axis2, planned_frames,
                          n_blocks);
    if (fixed_index >= axis1.n)
        throw std::invalid_argument("correlator: fixed pixel index outside arm-1 axis");
    acc.fixed_index_ = fixed_index;
    return acc;
}

MomentAccumulator MomentAccumulator::difference_coordinate(const GridAxis& axis1,
                                                           const GridAxis& axis2,
                                                           std::ptrdiff_t max_abs_diff,
                                                           std::uint64_t planned_frames,
                                                           std::size_t n_blocks) {
    MomentAccumulator acc(CorrelatorMode::difference_coordinate, axis1, axis2,
                          planned_frames, n_blocks);
    if (!(axis1 == axis2))
        throw std::invalid_argument(
            "correlator: difference mode needs identical detector axes");
    if (max_abs_diff < 0 || max_abs_diff >= static_cast<std::ptrdiff_t>(axis1.n))
        throw std::invalid_argument(
            "correlator: difference range must lie inside the detector overlap");
    acc.max_abs_diff_ = max_abs_diff;
    return acc;
}

MomentAccumulator MomentAccumulator::full_matrix(const GridAxis& axis1,
                                                 const GridAxis& axis2,
                                                 std::uint64_t planned_frames,
                                                 std::size_t n_blocks) {
    if (axis1.n * axis2.n > kMaxFullProducts)
        throw std::invalid_argument(
            "correlator: full-matrix mode is limited to 16384 products");
    return MomentAccumulator(CorrelatorMode::full_matrix, axis1, axis2, planned_frames,
                             n_blocks);
}

std::size_t MomentAccumulator::block_of(std::uint64_t frame_index) const {
    if (planned_frames_ == 0) return 0;
    std::uint64_t b = frame_index * blocks_.size() / planned_frames_;
    return static_cast<std::size_t>(std::min<std::uint64_t>(b, blocks_.size() - 1));
}

MomentAccumulator::Sums MomentAccumulator::make_leaf(const IntensityFrame& i1,
                                                     const IntensityFrame& i2) const {
    Sums leaf;
    leaf.cnt = 1;
    leaf.s1 = i1.values;
    leaf.s2 = i2.values;
    const std::size_t n1 = axis1_.n;
    const std::size_t n2 = axis2_.n;
    switch (mode_) {
        case CorrelatorMode::means_only:
            break;
        case CorrelatorMode::fixed_pixel: {
            const double f = i1.values[fixed_index_];
            leaf.sp.resize(n2);
            for (std::size_t j = 0; j < n2; ++j) leaf.sp[j] = f * i2.values[j];
            break;
        }
        case CorrelatorMode::difference_coordinate: {
            const auto n = static_cast<std::ptrdiff_t>(n1);
            leaf.sp.resize(2 * max_abs_diff_ + 1);
            for (std::ptrdiff_t r = -max_abs_diff_; r <= max_abs_diff_; ++r) {
                const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(0, r);
                const std::ptrdiff_t x1 = n + std::min<std::ptrdiff_t>(0, r);
                double s = 0.0;
                for (std::ptrdiff_t x = x0; x < x1; ++x)
                    s += i1.values[x] * i2.values[x - r];
                leaf.sp[max_abs_diff_ + r] = s;
            }
            break;
        }
        case CorrelatorMode::full_matrix: {
            leaf.sp.resize(n1 * n2);
            for (std::size_t i = 0; i < n1; ++i) {
                const double a = i1.values[i];
                for (std::size_t j = 0; j < n2; ++j)
                    leaf.sp[i * n2 + j] = a * i2.values[j];
            }
            break;
        }
    }
    return leaf;
}

void MomentAccumulator::add(std::uint64_t frame_index, const IntensityFrame& i1,
                            const IntensityFrame& i2) {
    if (!(i1.axis == axis1_) || !(i2.axis == axis2_))
        throw std::invalid_argument("correlator: frame axes do not match accumulator");
    blocks_[block_of(frame_index)].insert_leaf(frame_index, make_leaf(i1, i2));
}

void MomentAccumulator::merge_from(MomentAccumulator&& other) {
    if (other.mode_ != mode_ || !(other.axis1_ == axis1_) || !(other.axis2_ == axis2_) ||
        other.fixed_index_ != fixed_index_ || other.max_abs_diff_ != max_abs_diff_ ||
        other.planned_frames_ != planned_frames_ ||
        other.blocks_.size() != blocks_.size())
        throw std::invalid_argument("correlator: merging incompatible accumulators");
    for (std::size_t b = 0; b < blocks_.size(); ++b)
        blocks_[b].merge_from(std::move(other.blocks_[b]));
}

std::uint64_t MomentAccumulator::count() const {
    std::uint64_t c = 0;
    for (const auto& b : blocks_) c += b.count();
    return c;
}

MomentAccumulator::Totals MomentAccumulator::finalize() const {
    Totals t;
    t.blocks.resize(blocks_.size());
    bool have_total = false;
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
        if (blocks_[b].empty()) continue;
        t.blocks[b] = blocks_[b].fold();
        if (!have_total) {
            t.total = t.blocks[b];
            have_total = true;
        } else {
            t.total.add(t.blocks[b]);
        }
    }
    if (!have_total) throw std::logic_error("correlator: no frames accumulated");
    return t;
}

namespace {

std::vector<double> eval_mean(const MomentAccumulator::Sums& s, int arm) {
    const auto& src = arm == 1 ? s.s1 : s.s2;
    std::vector<double> v(src.size());
    const double inv = 1.0 / static_cast<double>(s.cnt);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = src[i] * inv;
    return v;
}

/// Validity mask from the five percent floor on a mean profile.
std::vector<unsigned char> floor_mask(const std::vector<double>& mean, const char* what) {
    double peak = *std::max_element(mean.begin(), mean.end());
    if (!(peak > 0.0)) throw std::runtime_error(what);
    std::vector<unsigned char> mask(mean.size());
    for (std::size_t i = 0; i < mean.size(); ++i)
        mask[i] = mean[i] >= kIntensityFloor * peak ? 1 : 0;
    return mask;
}

std::vector<double> eval_fixed(const MomentAccumulator::Sums& s, std::size_t fix,
                               bool normalized,
                               const std::vector<unsigned char>& mask) {
    const double inv = 1.0 / static_cast<double>(s.cnt);
    const double m1f = s.s1[fix] * inv;
    std::vector<double> v(s.s2.size());
    for (std::size_t j = 0; j < v.size(); ++j) {
        const double m2 = s.s2[j] * inv;
        const double g = s.sp[j] * inv - m1f * m2;
        if (!normalized) {
            v[j] = g;
        } else if (mask[j]) {
            v[j] = g / (m2 * m2);
        } else {
            v[j] = 0.0;
        }
    }
    return v;
}

std::vector<double> eval_spatial(const MomentAccumulator::Sums& s, std::ptrdiff_t rmax,
                                 bool normalized) {
    const auto n = static_cast<std::ptrdiff_t>(s.s1.size());
    const double inv = 1.0 / static_cast<double>(s.cnt);
    std::vector<double> v(2 * rmax + 1, 0.0);
    for (std::ptrdiff_t r = -rmax; r <= rmax; ++r) {
        const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(0, r);
        const std::ptrdiff_t x1 = n + std::min<std::ptrdiff_t>(0, r);
        double bg = 0.0;
        for (std::ptrdiff_t x = x0; x < x1; ++x)
            bg += (s.s1[x] * inv) * (s.s2[x - r] * inv);
        const double p = s.sp[rmax + r] * inv;
        const double denom = normalized ? bg : static_cast<double>(x1 - x0);
        v[rmax + r] = denom > 0.0 ? (p - bg) / denom : 0.0;
    }
    return v;
}

/// Mean background per valid position at each difference coordinate,
/// used only to build the normalization mask.
std::vector<double> spatial_background(const MomentAccumulator::Sums& s,
                                       std::ptrdiff_t rmax) {
    const auto n = static_cast<std::ptrdiff_t>(s.s1.size());
    const double inv = 1.0 / static_cast<double>(s.cnt);
    std::vector<double> bg(2 * rmax + 1, 0.0);
    for (std::ptrdiff_t r = -rmax; r <= rmax; ++r) {
        double b = 0.0;
        const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(0, r);
        const std::ptrdiff_t x1 = n + std::min<std::ptrdiff_t>(0, r);
        for (std::ptrdiff_t x = x0; x < x1; ++x)
            b += (s.s1[x] * inv) * (s.s2[x - r] * inv);
        bg[rmax + r] = b / static_cast<double>(x1 - x0);
    }
    return bg;
}

void apply_mask(std::vector<double>& v, const std::vector<unsigned char>& mask) {
    for (std::size_t i = 0; i < v.size(); ++i)
        if (!mask[i]) v[i] = 0.0;
}

void require_frames(const MomentAccumulator& acc) {
    if (acc.count() < 2)
        throw std::invalid_argument("correlator: at least two frames required");
}

}  // namespace

Pattern mean_intensity(const MomentAccumulator& acc, int arm) {
    if (arm != 1 && arm != 2)
        throw std::invalid_argument("correlator: arm must be 1 or 2");
    if (acc.count() == 0)
        throw std::invalid_argument("correlator: at least one frame required");
    auto t = acc.finalize();
    Pattern p;
    p.axis = arm == 1 ? acc.axis1() : acc.axis2();
    p.values = eval_mean(t.total, arm);
    p.std_err = jackknife_se(t, p.values.size(),
                             [arm](const auto& s) { return eval_mean(s, arm); });
    return p;
}

RealMatrix cross_correlation(const MomentAccumulator& acc) {
    if (acc.mode() != CorrelatorMode::full_matrix)
        throw std::invalid_argument("correlator: full-matrix accumulator required");
    require_frames(acc);
    auto t = acc.finalize();
    const std::size_t n1 = acc.axis1().n;
    const std::size_t n2 = acc.axis2().n;
    const double inv = 1.0 / static_cast<double>(t.total.cnt);
    RealMatrix g = RealMatrix::zeros(n1, n2);
    for (std::size_t i = 0; i < n1; ++i)
        for (std::size_t j = 0; j < n2; ++j)
            g.at(i, j) = t.total.sp[i * n2 + j] * inv -
                         (t.total.s1[i] * inv) * (t.total.s2[j] * inv);
    return g;
}

Pattern ghost_pattern_fixed_pixel(const MomentAccumulator& acc, bool normalized) {
    if (acc.mode() != CorrelatorMode::fixed_pixel)
        throw std::invalid_argument("correlator: fixed-pixel accumulator required");
    require_frames(acc);
    auto t = acc.finalize();
    const std::size_t fix = acc.fixed_index();

    Pattern p;
    p.axis = acc.axis2();
    std::vector<unsigned char> mask(p.axis.n, 1);
    if (normalized) {
        mask = floor_mask(eval_mean(t.total, 2),
                          "correlator: reference mean intensity is zero everywhere");
        p.valid = mask;
    }
    p.values = eval_fixed(t.total, fix, normalized, mask);
    p.std_err = jackknife_se(t, p.values.size(), [&](const auto& s) {
        return eval_fixed(s, fix, normalized, mask);
    });
    return p;
}

Pattern autocorrelation(const MomentAccumulator& acc) {
    if (acc.mode() != CorrelatorMode::fixed_pixel || !(acc.axis1() == acc.axis2()))
        throw std::invalid_argument(
            "correlator: autocorrelation needs a fixed-pixel accumulator fed the "
            "same arm twice");
    return ghost_pattern_fixed_pixel(acc, false);
}

Pattern ghost_pattern_spatial_average(const MomentAccumulator& acc, bool normalized) {
    if (acc.mode() != CorrelatorMode::difference_coordinate)
        throw std::invalid_argument(
            "correlator: difference-coordinate accumulator required");
    require_frames(acc);
    auto t = acc.finalize();
    const std::ptrdiff_t rmax = acc.max_abs_diff();

    Pattern p;
    p.axis.n = static_cast<std::size_t>(2 * rmax + 1);
    p.axis.pitch = acc.axis1().pitch;
    p.axis.origin = -acc.axis1().pitch * static_cast<double>(rmax);

    p.values = eval_spatial(t.total, rmax, normalized);
    if (normalized) {
        p.valid = floor_mask(spatial_background(t.total, rmax),
                             "correlator: background is zero everywhere");
        apply_mask(p.values, p.valid);
    }
    p.std_err = jackknife_se(t, p.values.size(), [&](const auto& s) {
        auto v = eval_spatial(s, rmax, normalized);
        if (normalized) apply_mask(v, p.valid);
        return v;
    });
    return p;
}

VisibilityReport visibility(const MomentAccumulator& acc) {
    require_frames(acc);
    auto t = acc.finalize();

    auto point_v = [](double m1, double m2, double g) {
        const double gp = std::max(g, 0.0);
        const double den = m1 * m2 + gp;
        return den > 0.0 ? gp / den : 0.0;
    };

    VisibilityReport rep;
    if (acc.mode() == CorrelatorMode::fixed_pixel) {
        const std::size_t fix = acc.fixed_index();
        auto mask = floor_mask(eval_mean(t.total, 2),
                               "correlator: reference mean intensity is zero everywhere");
        auto eval = [&](const MomentAccumulator::Sums& s) {
            const double vinv = 1.0 / static_cast<double>(s.cnt);
            const double m1f = s.s1[fix] * vinv;
            std::vector<double> v(s.s2.size(), 0.0);
            for (std::size_t j = 0; j < v.size(); ++j) {
                if (!mask[j]) continue;
                const double m2 = s.s2[j] * vinv;
                v[j] = point_v(m1f, m2, s.sp[j] * vinv - m1f * m2);
            }
            return v;
        };
        rep.per_point.axis = acc.axis2();
        rep.per_point.values = eval(t.total);
        rep.per_point.valid = mask;
        rep.per_point.std_err = jackknife_se(t, rep.per_point.values.size(), eval);

        bool any = false;
        for (std::size_t j = 0; j < rep.per_point.values.size(); ++j) {
            if (!mask[j]) continue;
            if (!any || rep.per_point.values[j] > rep.max_visibility) {
                rep.max_visibility = rep.per_point.values[j];
                rep.argmax = j;
                any = true;
            }
        }
        if (!any) throw std::runtime_error("correlator: every visibility point masked");
        if (!rep.per_point.std_err.empty())
            rep.std_err_at_max = rep.per_point.std_err[rep.argmax];
        return rep;
    }

    if (acc.mode() != CorrelatorMode::full_matrix)
        throw std::invalid_argument(
            "correlator: visibility needs a fixed-pixel or full-matrix accumulator");

    const std::size_t n1 = acc.axis1().n;
    const std::size_t n2 = acc.axis2().n;
    auto mask1 = floor_mask(eval_mean(t.total, 1),
                            "correlator: test mean intensity is zero everywhere");
    auto mask2 = floor_mask(eval_mean(t.total, 2),
                            "correlator: reference mean intensity is zero everywhere");
    auto eval_at = [&](const MomentAccumulator::Sums& s, std::size_t i, std::size_t j) {
        const double vinv = 1.0 / static_cast<double>(s.cnt);
        const double m1 = s.s1[i] * vinv;
        const double m2 = s.s2[j] * vinv;
        return point_v(m1, m2, s.sp[i * n2 + j] * vinv - m1 * m2);
    };
    bool any = false;
    for (std::size_t i = 0; i < n1; ++i) {
        if (!mask1[i]) continue;
        for (std::size_t j = 0; j < n2; ++j) {
            if (!mask2[j]) continue;
            const double v = eval_at(t.total, i, j);
            if (!any || v > rep.max_visibility) {
                rep.max_visibility = v;
                rep.argmax = i * n2 + j;
                any = true;
            }
        }
    }
    if (!any) throw std::runtime_error("correlator: every visibility point masked");
    auto loo = leave_one_out(t);
    if (loo.size() >= 2) {
        const std::size_t i = rep.argmax / n2;
        const std::size_t j = rep.argmax % n2;
        double mean = 0.0;
        std::vector<double> vals;
        for (const auto& s : loo) vals.push_back(eval_at(s, i, j));
        for (double v : vals) mean += v;
        mean /= static_cast<double>(vals.size());
        double ss = 0.0;
        for (double v : vals) ss += (v - mean) * (v - mean);
        const double nb = static_cast<double>(vals.size());
        rep.std_err_at_max = std::sqrt(ss * (nb - 1.0) / nb);
    }
    return rep;
}

}  // namespace ghostdiff
