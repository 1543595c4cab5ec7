#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ghostdiff {

using cplx = std::complex<double>;

/// Uniform one-dimensional sampling grid. Coordinates are micrometers
/// unless a consumer documents otherwise.
struct GridAxis {
    std::size_t n = 0;
    double pitch = 0.0;
    double origin = 0.0;

    /// Grid of n points with spacing pitch, centered so that index n/2
    /// sits at coordinate zero.
    static GridAxis centered(std::size_t n, double pitch) {
        GridAxis g;
        g.n = n;
        g.pitch = pitch;
        g.origin = -pitch * static_cast<double>(n / 2);
        return g;
    }

    double coordinate(std::size_t i) const {
        return origin + pitch * static_cast<double>(i);
    }

    double span() const { return pitch * static_cast<double>(n); }

    /// Index of the sample nearest to x. Throws if x falls outside the grid
    /// by more than half a pitch.
    std::size_t index_of(double x) const {
        double f = (x - origin) / pitch;
        auto i = static_cast<long long>(f + 0.5);
        if (i < 0 || i >= static_cast<long long>(n))
            throw std::invalid_argument("grid: coordinate " + std::to_string(x) +
                                        " outside axis range");
        return static_cast<std::size_t>(i);
    }

    bool operator==(const GridAxis& o) const {
        return n == o.n && pitch == o.pitch && origin == o.origin;
    }

    void validate() const {
        if (n == 0) throw std::invalid_argument("grid: n must be positive");
        if (!(pitch > 0.0)) throw std::invalid_argument("grid: pitch must be positive");
    }
};

/// Complex field amplitude sampled on a grid.
struct ComplexField {
    GridAxis axis;
    std::vector<cplx> values;

    static ComplexField zeros(const GridAxis& a) {
        return ComplexField{a, std::vector<cplx>(a.n, cplx{0.0, 0.0})};
    }
};

/// Real intensity samples on a grid, as produced by a detector.
struct IntensityFrame {
    GridAxis axis;
    std::vector<double> values;

    static IntensityFrame zeros(const GridAxis& a) {
        return IntensityFrame{a, std::vector<double>(a.n, 0.0)};
    }
};

/// Estimated curve over a grid with optional per-point standard errors and
/// an optional validity mask (empty mask means every point is valid;
/// invalid points hold zero and must be skipped by consumers).
struct Pattern {
    GridAxis axis;
    std::vector<double> values;
    std::vector<double> std_err;
    std::vector<unsigned char> valid;

    bool point_valid(std::size_t i) const {
        return valid.empty() || valid[i] != 0;
    }
};

/// Dense row-major matrix.
template <class T>
struct Dense2 {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<T> v;

    static Dense2 zeros(std::size_t r, std::size_t c) {
        return Dense2{r, c, std::vector<T>(r * c, T{})};
    }

    T& at(std::size_t r, std::size_t c) { return v[r * cols + c]; }
    const T& at(std::size_t r, std::size_t c) const { return v[r * cols + c]; }
};

using RealMatrix = Dense2<double>;
using ComplexMatrix = Dense2<cplx>;

}  // namespace ghostdiff
