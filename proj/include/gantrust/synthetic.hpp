#pragma once

// Synthetic trust-vector generators for desk-scale experiments: i.i.d. clipped
// Gaussians per coordinate, one distribution per trust level.

#include "gantrust/dataset.hpp"

namespace gantrust {

struct SyntheticLevelParams {
    double mean;
    double sd;
};

inline SyntheticLevelParams synthetic_params(TrustLevel level) {
    switch (level) {
        case TrustLevel::Higher: return {0.90, 0.05};
        case TrustLevel::Medium: return {0.65, 0.07};
        case TrustLevel::Lower: return {0.30, 0.10};
    }
    throw std::invalid_argument("synthetic_params: bad level");
}

inline TrustVector synthetic_vector(TrustLevel level, std::size_t len, Rng& rng, int device = -1,
                                    int round = 0) {
    const auto p = synthetic_params(level);
    std::normal_distribution<double> n(p.mean, p.sd);
    TrustVector v;
    v.device_id = device;
    v.end_round = round;
    v.values.resize(len);
    for (double& x : v.values) x = clamp01(n(rng));
    return v;
}

inline std::vector<TrustVector> synthetic_vectors(TrustLevel level, std::size_t count,
                                                  std::size_t len, Rng& rng) {
    std::vector<TrustVector> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
        out.push_back(synthetic_vector(level, len, rng, static_cast<int>(i), 0));
    return out;
}

// Higher/Medium mixture used for desk-scale training runs.
inline LabeledDataset synthetic_training_set(std::size_t n_higher, std::size_t n_medium,
                                             std::size_t len, Rng& rng) {
    LabeledDataset out;
    out.reserve(n_higher + n_medium);
    for (std::size_t i = 0; i < n_higher; ++i)
        out.push_back({synthetic_vector(TrustLevel::Higher, len, rng, static_cast<int>(i)),
                       TrustLevel::Higher});
    for (std::size_t i = 0; i < n_medium; ++i)
        out.push_back(
            {synthetic_vector(TrustLevel::Medium, len, rng, static_cast<int>(n_higher + i)),
             TrustLevel::Medium});
    return out;
}

}  // namespace gantrust
