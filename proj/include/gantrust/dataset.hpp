#pragma once

// Training-set preparation: trust vectors -> PCA features -> 3-way k-means ->
// Higher/Medium/Lower labels. The Lower group is dropped before training.

#include <algorithm>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>

#include "gantrust/core.hpp"

namespace gantrust {

// Fixed-length run of consecutive trust values for one observed device.
struct TrustVector {
    int device_id = -1;
    Vec values;  // oldest -> newest, each in [0,1]
    int end_round = 0;
};

enum class TrustLevel { Higher, Medium, Lower };

inline char trust_level_code(TrustLevel l) {
    switch (l) {
        case TrustLevel::Higher: return 'H';
        case TrustLevel::Medium: return 'M';
        case TrustLevel::Lower: return 'L';
    }
    return '?';
}

struct LabeledVector {
    TrustVector vec;
    TrustLevel level = TrustLevel::Medium;
};

using LabeledDataset = std::vector<LabeledVector>;

namespace detail {

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns eigenvalues
// in descending order with matching eigenvectors as rows.
inline std::pair<Vec, Matrix> jacobi_eigen_sym(Matrix a) {
    const std::size_t n = a.rows;
    Matrix v(n, n);
    for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

    auto off_diag = [&]() {
        double s = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) s += a(p, q) * a(p, q);
        return s;
    };
    double scale = 0.0;
    for (double x : a.a) scale += x * x;
    const double tol = 1e-28 * std::max(scale, 1e-300);

    for (int sweep = 0; sweep < 100 && off_diag() > tol; ++sweep) {
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                if (a(p, q) == 0.0) continue;
                double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
    }

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });

    Vec eigenvalues(n);
    Matrix rows(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        eigenvalues[i] = a(order[i], order[i]);
        for (std::size_t k = 0; k < n; ++k) rows(i, k) = v(k, order[i]);
    }
    return {eigenvalues, rows};
}

}  // namespace detail

struct PcaModel {
    Vec mean;               // length L
    Matrix components;      // d x L, orthonormal rows, leading eigenvectors
    Vec explained_ratio;    // per retained component, non-increasing
};

inline PcaModel pca_fit(const std::vector<TrustVector>& vectors, double variance_target,
                        std::size_t max_components = 5) {
    if (vectors.size() < 2) throw std::invalid_argument("pca_fit: need at least 2 vectors");
    if (variance_target <= 0.0 || variance_target > 1.0)
        throw std::invalid_argument("pca_fit: variance target must be in (0,1]");
    const std::size_t L = vectors.front().values.size();
    for (const auto& v : vectors)
        if (v.values.size() != L) throw std::invalid_argument("pca_fit: inconsistent lengths");

    const double n = static_cast<double>(vectors.size());
    Vec mean(L, 0.0);
    for (const auto& v : vectors)
        for (std::size_t j = 0; j < L; ++j) mean[j] += v.values[j];
    for (double& m : mean) m /= n;

    Matrix cov(L, L);
    for (const auto& v : vectors)
        for (std::size_t i = 0; i < L; ++i) {
            double di = v.values[i] - mean[i];
            for (std::size_t j = i; j < L; ++j) cov(i, j) += di * (v.values[j] - mean[j]);
        }
    for (std::size_t i = 0; i < L; ++i)
        for (std::size_t j = i; j < L; ++j) {
            cov(i, j) /= (n - 1.0);
            cov(j, i) = cov(i, j);
        }

    double total = 0.0;
    for (std::size_t i = 0; i < L; ++i) total += cov(i, i);
    if (total <= 1e-15) throw std::invalid_argument("pca_fit: zero variance");

    auto [eigenvalues, rows] = detail::jacobi_eigen_sym(cov);
    for (double& ev : eigenvalues) ev = std::max(ev, 0.0);

    std::size_t d = 0;
    double cum = 0.0;
    const std::size_t cap = std::min(max_components, L);
    while (d < cap && cum / total < variance_target - 1e-12) {
        cum += eigenvalues[d];
        ++d;
    }
    if (d == 0) d = 1;

    PcaModel model;
    model.mean = std::move(mean);
    model.components = Matrix(d, L);
    model.explained_ratio.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
        model.explained_ratio[i] = eigenvalues[i] / total;
        for (std::size_t j = 0; j < L; ++j) model.components(i, j) = rows(i, j);
    }
    return model;
}

inline Vec pca_transform(const PcaModel& model, const TrustVector& v) {
    if (v.values.size() != model.mean.size())
        throw std::invalid_argument("pca_transform: dimension mismatch");
    Vec out(model.components.rows, 0.0);
    for (std::size_t i = 0; i < model.components.rows; ++i)
        for (std::size_t j = 0; j < model.mean.size(); ++j)
            out[i] += model.components(i, j) * (v.values[j] - model.mean[j]);
    return out;
}

struct KmeansResult {
    std::vector<int> assignment;  // per input point
    std::vector<Vec> means;       // k centers
    double wcss = 0.0;            // within-cluster sum of squares at convergence
    Vec wcss_history;             // one entry per Lloyd iteration
};

namespace detail {

inline double dist2(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace detail

namespace detail {

// One k-means++ seeding followed by Lloyd's iterations. Returns nothing when a
// cluster runs empty mid-iteration (caller retries with a fresh seeding).
inline std::optional<KmeansResult> kmeans_once(const std::vector<Vec>& points, int k,
                                               std::uint64_t seed, int max_iters) {
    Rng rng(seed);
    const std::size_t n = points.size();

    // Duplicates carry zero distance mass, so chosen centers are distinct.
    std::vector<Vec> means;
    std::uniform_int_distribution<std::size_t> first(0, n - 1);
    means.push_back(points[first(rng)]);
    Vec d2(n);
    while (static_cast<int>(means.size()) < k) {
        double total = 0.0;
        std::size_t farthest = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& m : means) best = std::min(best, dist2(points[i], m));
            d2[i] = best;
            total += best;
            if (best > d2[farthest]) farthest = i;
        }
        std::uniform_real_distribution<double> pick(0.0, total);
        double r = pick(rng);
        std::size_t chosen = farthest;  // fallback covers fp rounding of the walk
        for (std::size_t i = 0; i < n; ++i) {
            if (r < d2[i]) {
                chosen = i;
                break;
            }
            r -= d2[i];
        }
        means.push_back(points[chosen]);
    }

    KmeansResult res;
    res.assignment.assign(n, -1);
    for (int iter = 0; iter < max_iters; ++iter) {
        bool changed = false;
        double wcss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            int best = 0;
            double bestd = dist2(points[i], means[0]);
            for (int c = 1; c < k; ++c) {
                double d = dist2(points[i], means[c]);
                if (d < bestd) {
                    bestd = d;
                    best = c;
                }
            }
            wcss += bestd;
            if (res.assignment[i] != best) {
                res.assignment[i] = best;
                changed = true;
            }
        }
        res.wcss_history.push_back(wcss);
        res.wcss = wcss;
        if (!changed) break;

        std::vector<Vec> sums(k, Vec(points.front().size(), 0.0));
        std::vector<int> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < points[i].size(); ++j)
                sums[res.assignment[i]][j] += points[i][j];
            counts[res.assignment[i]]++;
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] == 0) return std::nullopt;
            for (double& s : sums[c]) s /= counts[c];
            means[c] = std::move(sums[c]);
        }
    }
    res.means = std::move(means);
    return res;
}

// Exhaustive assignment scan for tiny inputs. Assignments that leave a cluster
// empty are skipped; with at least k distinct points the optimum never needs one.
inline KmeansResult kmeans_exact(const std::vector<Vec>& points, int k) {
    const std::size_t n = points.size(), dim = points.front().size();
    std::vector<int> assign(n, 0), best_assign;
    double best_wcss = std::numeric_limits<double>::infinity();
    std::vector<int> counts(k, 0);
    std::vector<Vec> sums(k, Vec(dim, 0.0));
    while (true) {
        std::fill(counts.begin(), counts.end(), 0);
        for (int a : assign) counts[a]++;
        if (std::all_of(counts.begin(), counts.end(), [](int c) { return c > 0; })) {
            for (auto& s : sums) std::fill(s.begin(), s.end(), 0.0);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < dim; ++j) sums[assign[i]][j] += points[i][j];
            double wcss = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < dim; ++j) {
                    const double d = points[i][j] - sums[assign[i]][j] / counts[assign[i]];
                    wcss += d * d;
                }
            if (wcss < best_wcss) {
                best_wcss = wcss;
                best_assign = assign;
            }
        }
        std::size_t pos = 0;
        while (pos < n && ++assign[pos] == k) assign[pos++] = 0;
        if (pos == n) break;
    }

    KmeansResult res;
    res.assignment = std::move(best_assign);
    res.wcss = best_wcss;
    res.wcss_history = {best_wcss};
    std::vector<Vec> means(k, Vec(dim, 0.0));
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < dim; ++j) means[res.assignment[i]][j] += points[i][j];
        counts[res.assignment[i]]++;
    }
    for (int c = 0; c < k; ++c)
        for (double& s : means[c]) s /= counts[c];
    res.means = std::move(means);
    return res;
}

}  // namespace detail

// Tiny instances are solved outright by scanning every assignment; restarted
// Lloyd's only makes the local optimum reliable, and the small-input contract
// demands the global one. Larger inputs take the best of several independent
// k-means++ seedings by final within-cluster sum of squares.
inline KmeansResult kmeans_cluster(const std::vector<Vec>& points, int k, std::uint64_t seed,
                                   int max_iters = 300, int restarts = 10) {
    if (k < 1) throw std::invalid_argument("kmeans_cluster: k must be positive");
    if (restarts < 1) throw std::invalid_argument("kmeans_cluster: restarts must be positive");
    std::vector<Vec> distinct;
    for (const auto& p : points)
        if (std::find(distinct.begin(), distinct.end(), p) == distinct.end())
            distinct.push_back(p);
    if (static_cast<int>(distinct.size()) < k)
        throw std::invalid_argument("kmeans_cluster: fewer distinct points than clusters");

    double combos = 1.0;
    for (std::size_t i = 0; i < points.size() && combos <= 20000.0; ++i) combos *= k;
    if (combos <= 20000.0) return detail::kmeans_exact(points, k);

    std::optional<KmeansResult> best;
    for (int r = 0; r < restarts; ++r) {
        auto run = detail::kmeans_once(points, k, derive_seed(seed, 0x6b6du, r), max_iters);
        if (run && (!best || run->wcss < best->wcss)) best = std::move(run);
    }
    if (!best) throw std::runtime_error("kmeans_cluster: empty cluster");
    return *best;
}

// Rank clusters by the average trust of their member vectors; ties broken by
// cluster size (larger ranks higher), then by cluster index.
inline LabeledDataset label_levels(const KmeansResult& clusters,
                                   const std::vector<TrustVector>& vectors) {
    const int k = static_cast<int>(clusters.means.size());
    if (k != 3) throw std::invalid_argument("label_levels: expected 3 clusters");
    if (clusters.assignment.size() != vectors.size())
        throw std::invalid_argument("label_levels: assignment/vector mismatch");

    std::vector<double> mean_trust(3, 0.0);
    std::vector<int> size(3, 0);
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        mean_trust[clusters.assignment[i]] += mean_of(vectors[i].values);
        size[clusters.assignment[i]]++;
    }
    for (int c = 0; c < 3; ++c) {
        if (size[c] == 0) throw std::runtime_error("label_levels: empty cluster");
        mean_trust[c] /= size[c];
    }

    std::vector<int> order{0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int x, int y) {
        if (mean_trust[x] != mean_trust[y]) return mean_trust[x] > mean_trust[y];
        if (size[x] != size[y]) return size[x] > size[y];
        return x < y;
    });
    std::array<TrustLevel, 3> level_of_cluster{};
    level_of_cluster[order[0]] = TrustLevel::Higher;
    level_of_cluster[order[1]] = TrustLevel::Medium;
    level_of_cluster[order[2]] = TrustLevel::Lower;

    LabeledDataset out;
    out.reserve(vectors.size());
    for (std::size_t i = 0; i < vectors.size(); ++i)
        out.push_back({vectors[i], level_of_cluster[clusters.assignment[i]]});
    return out;
}

// Drops the Lower group; the discriminator needs both remaining levels.
inline LabeledDataset build_training_set(const LabeledDataset& dataset) {
    LabeledDataset out;
    int higher = 0;
    for (const auto& e : dataset) {
        if (e.level == TrustLevel::Lower) continue;
        if (e.level == TrustLevel::Higher) ++higher;
        out.push_back(e);
    }
    if (higher == 0)
        throw std::runtime_error("build_training_set: no Higher-level vectors, cannot train");
    return out;
}

// --- CSV import/export -------------------------------------------------------
// Row layout: v1..vL,label,device,round with label one of H/M/L or empty.

struct DatasetRow {
    TrustVector vec;
    std::optional<TrustLevel> level;
};

inline void write_dataset_csv(std::ostream& os, const std::vector<DatasetRow>& rows,
                              std::size_t vector_len) {
    for (std::size_t j = 1; j <= vector_len; ++j) os << 'v' << j << ',';
    os << "label,device,round\n";
    char buf[32];
    for (const auto& r : rows) {
        if (r.vec.values.size() != vector_len)
            throw std::invalid_argument("write_dataset_csv: inconsistent vector length");
        for (double x : r.vec.values) {
            std::snprintf(buf, sizeof(buf), "%.17g", x);
            os << buf << ',';
        }
        if (r.level) os << trust_level_code(*r.level);
        os << ',' << r.vec.device_id << ',' << r.vec.end_round << '\n';
    }
}

inline std::vector<DatasetRow> read_dataset_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::invalid_argument("read_dataset_csv: empty input");
    std::size_t cols = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
    if (cols < 4) throw std::invalid_argument("read_dataset_csv: malformed header");
    const std::size_t L = cols - 3;

    std::vector<DatasetRow> rows;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        DatasetRow row;
        for (std::size_t j = 0; j < L; ++j) {
            if (!std::getline(ss, field, ','))
                throw std::invalid_argument("read_dataset_csv: short row at line " +
                                            std::to_string(lineno));
            double x = std::stod(field);
            if (x < 0.0 || x > 1.0)
                throw std::invalid_argument("read_dataset_csv: trust value outside [0,1] at line " +
                                            std::to_string(lineno));
            row.vec.values.push_back(x);
        }
        if (!std::getline(ss, field, ','))
            throw std::invalid_argument("read_dataset_csv: missing label at line " +
                                        std::to_string(lineno));
        if (field == "H")
            row.level = TrustLevel::Higher;
        else if (field == "M")
            row.level = TrustLevel::Medium;
        else if (field == "L")
            row.level = TrustLevel::Lower;
        else if (!field.empty())
            throw std::invalid_argument("read_dataset_csv: bad label at line " +
                                        std::to_string(lineno));
        if (!std::getline(ss, field, ','))
            throw std::invalid_argument("read_dataset_csv: missing device at line " +
                                        std::to_string(lineno));
        row.vec.device_id = std::stoi(field);
        if (!std::getline(ss, field, ','))
            throw std::invalid_argument("read_dataset_csv: missing round at line " +
                                        std::to_string(lineno));
        row.vec.end_round = std::stoi(field);
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace gantrust
