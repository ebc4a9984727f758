#pragma once

// Independent reference implementations used to check the library.
// These deliberately avoid the code paths they verify.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "gantrust/fuzzy.hpp"

namespace oracle {

// Exhaustive endpoint enumeration for the center-of-sets bounds. The weighted
// average is linear-fractional in each firing strength, so its extrema over the
// box lie at corners; with n <= ~16 rules the 2^n corners are cheap.
inline std::pair<double, double> km_enumerate(
    std::span<const gantrust::MembershipInterval> firings, std::span<const double> consequents) {
    const std::size_t n = firings.size();
    if (n != consequents.size() || n == 0 || n > 20)
        throw std::invalid_argument("km_enumerate: bad input size");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::uint64_t mask = 0; mask < (1ULL << n); ++mask) {
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double f = (mask >> i) & 1 ? firings[i].upper : firings[i].lower;
            num += f * consequents[i];
            den += f;
        }
        if (den <= 0.0) continue;
        double r = num / den;
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    if (!std::isfinite(lo)) throw std::runtime_error("km_enumerate: no rule fired");
    return {lo, hi};
}

// Globally optimal within-cluster sum of squares by enumerating every k^n
// assignment. Feasible for n <= 8 or so.
inline double kmeans_brute_force(const std::vector<std::vector<double>>& points, int k) {
    const std::size_t n = points.size();
    if (n == 0 || n > 12) throw std::invalid_argument("kmeans_brute_force: bad input size");
    std::size_t total = 1;
    for (std::size_t i = 0; i < n; ++i) total *= k;

    double best = std::numeric_limits<double>::infinity();
    std::vector<int> assign(n);
    for (std::size_t code = 0; code < total; ++code) {
        std::size_t c = code;
        for (std::size_t i = 0; i < n; ++i) {
            assign[i] = static_cast<int>(c % k);
            c /= k;
        }
        double wcss = 0.0;
        for (int cluster = 0; cluster < k; ++cluster) {
            std::vector<double> centroid(points.front().size(), 0.0);
            int count = 0;
            for (std::size_t i = 0; i < n; ++i)
                if (assign[i] == cluster) {
                    for (std::size_t j = 0; j < centroid.size(); ++j)
                        centroid[j] += points[i][j];
                    ++count;
                }
            if (count == 0) continue;
            for (double& x : centroid) x /= count;
            for (std::size_t i = 0; i < n; ++i)
                if (assign[i] == cluster)
                    for (std::size_t j = 0; j < centroid.size(); ++j) {
                        double d = points[i][j] - centroid[j];
                        wcss += d * d;
                    }
        }
        best = std::min(best, wcss);
    }
    return best;
}

}  // namespace oracle
