#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace gantrust {

using Vec = std::vector<double>;

// Configuration file / parameter validation failure (CLI exit code 2).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite loss during model training (CLI exit code 3).
struct TrainingDivergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dense row-major matrix. Small sizes only, no aliasing tricks.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    Vec a;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), a(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return a[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return a[r * cols + c]; }

    std::size_t size() const { return a.size(); }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

    static Matrix from_row(const Vec& v) {
        Matrix m(1, v.size());
        m.a = v;
        return m;
    }

    Vec row(std::size_t r) const {
        return Vec(a.begin() + static_cast<std::ptrdiff_t>(r * cols),
                   a.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols));
    }
};

inline bool all_finite(const Vec& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

inline bool all_finite(const Matrix& m) { return all_finite(m.a); }

inline double clamp01(double x) { return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x); }

inline double mean_of(const Vec& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

using Rng = std::mt19937_64;

// splitmix64, used to derive independent stream seeds from a master seed.
inline std::uint64_t mix_seed(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
    return mix_seed(mix_seed(master ^ mix_seed(a)) ^ mix_seed(b));
}

}  // namespace gantrust
