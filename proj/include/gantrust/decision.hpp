#pragma once

// Device-level trust verdicts: reconstruction/classifier decisions for devices
// running a model, recommendation-based resolution for uncertain cases, and
// the scalar-threshold protocol for devices without a model.

#include "gantrust/autoencoder.hpp"

namespace gantrust {

enum class Verdict { Trusted, Uncertain, Untrusted };
enum class VerdictBasis { Reconstruction, Classifier, Synergetic, Threshold };

struct TrustVerdict {
    Verdict verdict = Verdict::Uncertain;
    VerdictBasis basis = VerdictBasis::Reconstruction;
    int round = 0;
};

// Defaults for recommendation-based resolution: how many trusted recommenders
// are required, and how long temporary trust lasts.
inline constexpr int kRecommendersRequired = 2;
inline constexpr int kTempTrustRounds = 5;

// Reconstruction error above tau_rec condemns the device outright; otherwise
// the class head splits Trusted (Higher) from Uncertain (Medium).
inline TrustVerdict decide(AutoencoderModel& model, const TrustVector& v) {
    if (!model.calibrated) throw std::logic_error("decide: model not calibrated");
    TrustVerdict out;
    out.round = v.end_round;
    if (reconstruct(model, v).error > model.tau_rec) {
        out.verdict = Verdict::Untrusted;
        out.basis = VerdictBasis::Reconstruction;
        return out;
    }
    out.basis = VerdictBasis::Classifier;
    out.verdict = classify_level(model, v) == TrustLevel::Higher ? Verdict::Trusted
                                                                 : Verdict::Uncertain;
    return out;
}

struct Recommendation {
    int neighbor_id = -1;
    Verdict verdict_on_target = Verdict::Uncertain;  // the recommender's view of the target
    Verdict neighbor_standing = Verdict::Uncertain;  // the asker's view of the recommender
};

// Resolves an Uncertain verdict: enough recommenders — themselves trusted by
// the asker — vouching Trusted grants temporary trust; anything less condemns.
inline TrustVerdict synergetic_resolve(const std::vector<Recommendation>& recommendations,
                                       int round, int required = kRecommendersRequired) {
    int vouches = 0;
    for (const auto& r : recommendations)
        if (r.neighbor_standing == Verdict::Trusted && r.verdict_on_target == Verdict::Trusted)
            ++vouches;
    TrustVerdict out;
    out.round = round;
    out.basis = VerdictBasis::Synergetic;
    out.verdict = vouches >= required ? Verdict::Trusted : Verdict::Untrusted;
    return out;
}

// A synergetic Trusted verdict is temporary; it lapses this many rounds later.
inline bool synergetic_expired(const TrustVerdict& v, int now, int temp_rounds = kTempTrustRounds) {
    return v.basis == VerdictBasis::Synergetic && v.verdict == Verdict::Trusted &&
           now - v.round >= temp_rounds;
}

// Pools every scalar trust value from Higher-labeled vectors, sorts
// descending, removes the bottom quarter (floor), and returns the minimum of
// the remainder.
inline double recommend_threshold(const LabeledDataset& dataset) {
    Vec pool;
    for (const auto& e : dataset)
        if (e.level == TrustLevel::Higher)
            pool.insert(pool.end(), e.vec.values.begin(), e.vec.values.end());
    if (pool.empty()) throw std::invalid_argument("recommend_threshold: empty pool");
    std::sort(pool.begin(), pool.end(), std::greater<>());
    const std::size_t drop = pool.size() / 4;
    pool.resize(pool.size() - drop);
    return pool.back();
}

struct ThresholdRecommendation {
    int sender_id = -1;
    double value = 0.0;
    int round = 0;
};

// Exact 1-D 2-means by enumerating contiguous splits of the sorted values
// (optimal clusters are contiguous in one dimension). Outlier thresholds land
// in their own cluster; if the centers sit far apart the minority cluster is
// dropped before averaging.
inline double aggregate_thresholds(const std::vector<ThresholdRecommendation>& received,
                                   double gap = 0.15) {
    if (received.empty()) throw std::invalid_argument("aggregate_thresholds: no recommendations");
    Vec values;
    for (const auto& r : received) {
        if (r.value < 0.0 || r.value > 1.0)
            throw std::invalid_argument("aggregate_thresholds: value outside [0,1]");
        values.push_back(r.value);
    }
    if (values.size() == 1) return values.front();

    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    Vec prefix(n + 1, 0.0), prefix_sq(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        prefix[i + 1] = prefix[i] + values[i];
        prefix_sq[i + 1] = prefix_sq[i] + values[i] * values[i];
    }
    auto wcss_of = [&](std::size_t lo, std::size_t hi) {  // [lo, hi)
        const double cnt = static_cast<double>(hi - lo);
        const double sum = prefix[hi] - prefix[lo];
        return (prefix_sq[hi] - prefix_sq[lo]) - sum * sum / cnt;
    };
    std::size_t best_split = 1;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t s = 1; s < n; ++s) {
        double w = wcss_of(0, s) + wcss_of(s, n);
        if (w < best) {
            best = w;
            best_split = s;
        }
    }
    const std::size_t lo_n = best_split, hi_n = n - best_split;
    const double lo_center = (prefix[best_split] - prefix[0]) / static_cast<double>(lo_n);
    const double hi_center = (prefix[n] - prefix[best_split]) / static_cast<double>(hi_n);

    std::size_t from = 0, to = n;
    if (hi_center - lo_center > gap) {
        if (lo_n < hi_n)
            from = best_split;  // low cluster is the minority
        else if (hi_n < lo_n)
            to = best_split;  // high cluster is the minority
        else
            from = best_split;  // size tie: discard the lower-center cluster
    }
    return (prefix[to] - prefix[from]) / static_cast<double>(to - from);
}

// Scalar rule for devices without a model: meet the threshold, get trusted.
inline Verdict generic_decide(double trust_value, double threshold) {
    if (trust_value < 0.0 || trust_value > 1.0 || threshold < 0.0 || threshold > 1.0)
        throw std::invalid_argument("generic_decide: inputs must be in [0,1]");
    return trust_value >= threshold ? Verdict::Trusted : Verdict::Untrusted;
}

}  // namespace gantrust
