#pragma once

// Adversarial autoencoder built from two GAN pairs around an encoder/decoder:
// a latent discriminator shapes the code distribution and a trust
// discriminator with realness + class heads judges the data space. Trained
// with least-squares adversarial losses plus a mean-absolute reconstruction
// term; reconstruction error against calibrated thresholds drives anomaly
// decisions and retraining eligibility.

#include "gantrust/dataset.hpp"
#include "gantrust/nn.hpp"

namespace gantrust {

struct AeConfig {
    std::size_t input_len = 10;
    std::size_t latent_dim = 4;
    std::size_t batch_size = 32;
    int epochs_initial = 200;
    int epochs_update = 50;
    int retrain_batches = 5;    // eligible batches accumulated before retraining
    std::size_t dataset_cap = 2000;
    double lr = 2e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double leaky_slope = 0.2;
};

struct AutoencoderModel {
    AeConfig cfg;
    Network en;    // input_len -> latent_dim, Tanh output
    Network deg;   // latent_dim -> input_len, Sigmoid output
    Network d_t;   // input_len -> 2 linear heads (col 0 realness, col 1 class)
    Network d_l;   // latent_dim -> 1 linear score
    AdamState opt_en, opt_deg, opt_dt, opt_dl;
    double tau_rec = 0.0;
    double tau_strict = 0.0;
    bool trained = false;
    bool calibrated = false;
    LabeledDataset training_set;
    LabeledDataset pending;  // eligible vectors accumulated since last retrain
};

struct EpochStats {
    double d_t_loss = 0.0;
    double d_l_loss = 0.0;
    double gen_score_loss = 0.0;
    double enc_score_loss = 0.0;
    double recon_loss = 0.0;
    double score_real = 0.0;  // mean D_T realness on real vectors
    double score_fake = 0.0;  // mean D_T realness on generated vectors
};

struct TrainStats {
    std::vector<EpochStats> epochs;
};

inline Matrix sample_latent_prior(std::size_t n, std::size_t m, Rng& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix z(n, m);
    for (double& x : z.a) x = u(rng);
    return z;
}

inline AutoencoderModel build_model(const AeConfig& cfg, std::uint64_t seed) {
    if (cfg.latent_dim >= cfg.input_len)
        throw std::invalid_argument("build_model: latent dimension must compress the input");
    if (cfg.input_len == 0 || cfg.batch_size < 2)
        throw std::invalid_argument("build_model: bad sizes");

    AutoencoderModel model;
    model.cfg = cfg;
    Rng rng(mix_seed(seed));
    const double s = cfg.leaky_slope;
    const std::size_t L = cfg.input_len, m = cfg.latent_dim;

    model.en.add_dense(L, 32, rng).add_batchnorm(32).add_leaky_relu(s);
    model.en.add_dense(32, 16, rng).add_batchnorm(16).add_leaky_relu(s);
    model.en.add_dense(16, 8, rng).add_batchnorm(8).add_leaky_relu(s);
    model.en.add_dense(8, m, rng).add_tanh();

    model.deg.add_dense(m, 8, rng).add_batchnorm(8).add_leaky_relu(s);
    model.deg.add_dense(8, 16, rng).add_batchnorm(16).add_leaky_relu(s);
    model.deg.add_dense(16, 32, rng).add_batchnorm(32).add_leaky_relu(s);
    model.deg.add_dense(32, L, rng).add_sigmoid();

    model.d_t.add_dense(L, 32, rng).add_leaky_relu(s);
    model.d_t.add_dense(32, 16, rng).add_leaky_relu(s);
    model.d_t.add_dense(16, 2, rng);

    model.d_l.add_dense(m, 16, rng).add_leaky_relu(s);
    model.d_l.add_dense(16, 8, rng).add_leaky_relu(s);
    model.d_l.add_dense(8, 1, rng);

    for (AdamState* st : {&model.opt_en, &model.opt_deg, &model.opt_dt, &model.opt_dl}) {
        st->lr = cfg.lr;
        st->beta1 = cfg.beta1;
        st->beta2 = cfg.beta2;
    }
    return model;
}

namespace detail {

inline Matrix batch_of(const LabeledDataset& set, const std::vector<std::size_t>& idx,
                       std::size_t first, std::size_t count, std::size_t L) {
    Matrix x(count, L);
    for (std::size_t r = 0; r < count; ++r) {
        const Vec& v = set[idx[first + r]].vec.values;
        for (std::size_t j = 0; j < L; ++j) x(r, j) = v[j];
    }
    return x;
}

inline void check_epoch_finite(const EpochStats& e, int epoch) {
    for (double x : {e.d_t_loss, e.d_l_loss, e.gen_score_loss, e.enc_score_loss, e.recon_loss,
                     e.score_real, e.score_fake})
        if (!std::isfinite(x))
            throw TrainingDivergence("train: non-finite loss at epoch " + std::to_string(epoch));
}

}  // namespace detail

// Runs the four-player schedule per batch: latent discriminator, trust
// discriminator, encoder, then decoder/generator. Stores the training set on
// the model so later retraining can extend it.
inline TrainStats train(AutoencoderModel& model, const LabeledDataset& training_set, int epochs,
                        std::size_t batch_size, std::uint64_t seed) {
    const std::size_t L = model.cfg.input_len, m = model.cfg.latent_dim;
    if (epochs < 0) throw std::invalid_argument("train: negative epochs");
    if (training_set.size() < 2 * batch_size)
        throw std::invalid_argument("train: need at least two batches of vectors");
    bool has_higher = false;
    for (const auto& e : training_set) {
        if (e.vec.values.size() != L) throw std::invalid_argument("train: vector length mismatch");
        if (e.level == TrustLevel::Higher) has_higher = true;
        if (e.level == TrustLevel::Lower)
            throw std::invalid_argument("train: Lower-level vector in training set");
    }
    if (!has_higher) throw std::invalid_argument("train: no Higher-level vectors");

    model.training_set = training_set;
    TrainStats stats;
    if (epochs == 0) return stats;

    Rng rng(mix_seed(seed));
    std::vector<std::size_t> idx(training_set.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    const std::size_t batches = training_set.size() / batch_size;
    const Vec ones(batch_size, 1.0), zeros(batch_size, 0.0);

    for (int epoch = 0; epoch < epochs; ++epoch) {
        std::shuffle(idx.begin(), idx.end(), rng);
        EpochStats es;
        for (std::size_t b = 0; b < batches; ++b) {
            Matrix x = detail::batch_of(model.training_set, idx, b * batch_size, batch_size, L);
            Vec class_target(batch_size);
            for (std::size_t r = 0; r < batch_size; ++r)
                class_target[r] =
                    model.training_set[idx[b * batch_size + r]].level == TrustLevel::Higher ? 1.0
                                                                                            : 0.0;

            // (1) latent discriminator: prior -> 1, encoded -> 0
            model.d_l.zero_grad();
            Matrix z_prior = sample_latent_prior(batch_size, m, rng);
            Matrix s_real = model.d_l.forward(z_prior, true);
            auto lg_real = least_squares_loss(s_real.a, ones);
            Matrix ds(batch_size, 1);
            ds.a = lg_real.grad;
            model.d_l.backward(ds);
            Matrix z_fake = model.en.forward(x, true);
            Matrix s_fake = model.d_l.forward(z_fake, true);
            auto lg_fake = least_squares_loss(s_fake.a, zeros);
            ds.a = lg_fake.grad;
            model.d_l.backward(ds);
            adam_step(model.opt_dl, model.d_l);
            es.d_l_loss += lg_real.loss + lg_fake.loss;

            // (2) trust discriminator: realness 1 for real / 0 for generated,
            // class head supervised on real vectors only
            model.d_t.zero_grad();
            Matrix st_real = model.d_t.forward(x, true);
            Vec real_col(batch_size), class_col(batch_size);
            for (std::size_t r = 0; r < batch_size; ++r) {
                real_col[r] = st_real(r, 0);
                class_col[r] = st_real(r, 1);
            }
            auto lg_dt_real = least_squares_loss(real_col, ones);
            auto lg_class = least_squares_loss(class_col, class_target);
            Matrix dst(batch_size, 2);
            for (std::size_t r = 0; r < batch_size; ++r) {
                dst(r, 0) = lg_dt_real.grad[r];
                dst(r, 1) = lg_class.grad[r];
            }
            model.d_t.backward(dst);

            Matrix z2 = sample_latent_prior(batch_size, m, rng);
            Matrix gen = model.deg.forward(z2, true);
            Matrix st_fake = model.d_t.forward(gen, true);
            Vec fake_col(batch_size);
            for (std::size_t r = 0; r < batch_size; ++r) fake_col[r] = st_fake(r, 0);
            auto lg_dt_fake = least_squares_loss(fake_col, zeros);
            for (std::size_t r = 0; r < batch_size; ++r) {
                dst(r, 0) = lg_dt_fake.grad[r];
                dst(r, 1) = 0.0;
            }
            model.d_t.backward(dst);
            adam_step(model.opt_dt, model.d_t);
            es.d_t_loss += lg_dt_real.loss + lg_dt_fake.loss + lg_class.loss;
            es.score_real += mean_of(real_col);
            es.score_fake += mean_of(fake_col);

            // (3) encoder: fool the latent discriminator + reconstruction
            model.en.zero_grad();
            Matrix z = model.en.forward(x, true);
            Matrix s_enc = model.d_l.forward(z, true);
            auto lg_enc = least_squares_loss(s_enc.a, ones);
            ds.a = lg_enc.grad;
            Matrix dz_score = model.d_l.backward(ds);
            Matrix y = model.deg.forward(z, true);
            auto lg_rec_en = mae_loss(x.a, y.a);
            Matrix dyr(batch_size, L);
            dyr.a = lg_rec_en.grad;
            Matrix dz_rec = model.deg.backward(dyr);
            for (std::size_t i = 0; i < dz_score.a.size(); ++i) dz_score.a[i] += dz_rec.a[i];
            model.en.backward(dz_score);
            adam_step(model.opt_en, model.en);
            es.enc_score_loss += lg_enc.loss;

            // (4) decoder/generator: fool the trust discriminator + reconstruction
            model.deg.zero_grad();
            Matrix z3 = sample_latent_prior(batch_size, m, rng);
            Matrix gen2 = model.deg.forward(z3, true);
            Matrix st_gen = model.d_t.forward(gen2, true);
            Vec gen_col(batch_size);
            for (std::size_t r = 0; r < batch_size; ++r) gen_col[r] = st_gen(r, 0);
            auto lg_gen = least_squares_loss(gen_col, ones);
            Matrix dst2(batch_size, 2);
            for (std::size_t r = 0; r < batch_size; ++r) {
                dst2(r, 0) = lg_gen.grad[r];
                dst2(r, 1) = 0.0;
            }
            Matrix dgen = model.d_t.backward(dst2);
            model.deg.backward(dgen);
            Matrix z4 = model.en.forward(x, true);
            Matrix y2 = model.deg.forward(z4, true);
            auto lg_rec = mae_loss(x.a, y2.a);
            dyr.a = lg_rec.grad;
            model.deg.backward(dyr);
            adam_step(model.opt_deg, model.deg);
            es.gen_score_loss += lg_gen.loss;
            es.recon_loss += lg_rec.loss;
        }
        const double nb = static_cast<double>(batches);
        es.d_t_loss /= nb;
        es.d_l_loss /= nb;
        es.gen_score_loss /= nb;
        es.enc_score_loss /= nb;
        es.recon_loss /= nb;
        es.score_real /= nb;
        es.score_fake /= nb;
        detail::check_epoch_finite(es, epoch);
        stats.epochs.push_back(es);
    }
    model.trained = true;
    return stats;
}

struct Reconstruction {
    Vec output;
    double error = 0.0;  // mean absolute difference input vs output
};

inline Reconstruction reconstruct(AutoencoderModel& model, const TrustVector& v) {
    if (!model.trained) throw std::logic_error("reconstruct: model not trained");
    if (v.values.size() != model.cfg.input_len)
        throw std::invalid_argument("reconstruct: vector length mismatch");
    Matrix x = Matrix::from_row(v.values);
    Matrix z = model.en.forward(x, false);
    Matrix y = model.deg.forward(z, false);
    Reconstruction r;
    r.output = y.a;
    r.error = mae_loss(v.values, y.a).loss;
    return r;
}

// Nearest-rank percentile of an unsorted sample, pct in (0,1].
inline double nearest_rank_percentile(Vec values, double pct) {
    if (values.empty()) throw std::invalid_argument("nearest_rank_percentile: empty sample");
    if (pct <= 0.0 || pct > 1.0) throw std::invalid_argument("nearest_rank_percentile: bad pct");
    std::sort(values.begin(), values.end());
    std::size_t rank = static_cast<std::size_t>(
        std::ceil(pct * static_cast<double>(values.size())));
    rank = std::clamp<std::size_t>(rank, 1, values.size());
    return values[rank - 1];
}

inline double median_of(Vec values) {
    if (values.empty()) throw std::invalid_argument("median_of: empty sample");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

inline std::pair<double, double> calibrate_thresholds(AutoencoderModel& model,
                                                      const LabeledDataset& training_set) {
    if (!model.trained) throw std::logic_error("calibrate_thresholds: model not trained");
    if (training_set.empty()) throw std::invalid_argument("calibrate_thresholds: empty set");
    Vec errors;
    errors.reserve(training_set.size());
    for (const auto& e : training_set) errors.push_back(reconstruct(model, e.vec).error);
    model.tau_rec = nearest_rank_percentile(errors, 0.95);
    model.tau_strict = median_of(errors);
    model.calibrated = true;
    return {model.tau_rec, model.tau_strict};
}

inline TrustLevel classify_level(AutoencoderModel& model, const TrustVector& v) {
    if (!model.trained) throw std::logic_error("classify_level: model not trained");
    if (v.values.size() != model.cfg.input_len)
        throw std::invalid_argument("classify_level: vector length mismatch");
    Matrix s = model.d_t.forward(Matrix::from_row(v.values), false);
    return s(0, 1) >= 0.5 ? TrustLevel::Higher : TrustLevel::Medium;
}

struct EligibleResult {
    LabeledDataset eligible;  // this call's eligible vectors, labels at collection time
    bool retrain_due = false;
};

// Vectors whose reconstruction error stays within the strict threshold are
// queued (with their inferred labels) for the next retraining round.
inline EligibleResult collect_eligible(AutoencoderModel& model,
                                       const std::vector<TrustVector>& tested) {
    if (!model.calibrated) throw std::logic_error("collect_eligible: model not calibrated");
    EligibleResult res;
    for (const auto& v : tested) {
        if (reconstruct(model, v).error <= model.tau_strict)
            res.eligible.push_back({v, classify_level(model, v)});
    }
    model.pending.insert(model.pending.end(), res.eligible.begin(), res.eligible.end());
    res.retrain_due =
        model.pending.size() >= model.cfg.batch_size * static_cast<std::size_t>(model.cfg.retrain_batches);
    return res;
}

// Appends pending eligible vectors (evicting oldest beyond the cap), continues
// training from current parameters, and recalibrates both thresholds.
inline TrainStats retrain(AutoencoderModel& model, int epochs_update, std::uint64_t seed) {
    if (model.pending.empty()) return {};
    LabeledDataset updated = model.training_set;
    updated.insert(updated.end(), model.pending.begin(), model.pending.end());
    if (updated.size() > model.cfg.dataset_cap)
        updated.erase(updated.begin(),
                      updated.begin() + static_cast<std::ptrdiff_t>(updated.size() - model.cfg.dataset_cap));
    model.pending.clear();
    TrainStats stats = train(model, updated, epochs_update, model.cfg.batch_size, seed);
    calibrate_thresholds(model, model.training_set);
    return stats;
}

// --- Serialization ------------------------------------------------------------
// Payload a training device shares with its neighbors: the four networks plus
// the calibrated thresholds. Training set, pending queue, and optimizer state
// stay local.

inline nlohmann::json model_to_json(const AutoencoderModel& model) {
    return nlohmann::json{{"input_len", model.cfg.input_len},
                          {"latent_dim", model.cfg.latent_dim},
                          {"tau_rec", model.tau_rec},
                          {"tau_strict", model.tau_strict},
                          {"en", network_to_json(model.en)},
                          {"deg", network_to_json(model.deg)},
                          {"d_t", network_to_json(model.d_t)},
                          {"d_l", network_to_json(model.d_l)}};
}

inline AutoencoderModel model_from_json(const nlohmann::json& j, const AeConfig& base = {}) {
    AutoencoderModel model;
    model.cfg = base;
    model.cfg.input_len = j.at("input_len").get<std::size_t>();
    model.cfg.latent_dim = j.at("latent_dim").get<std::size_t>();
    model.tau_rec = j.at("tau_rec").get<double>();
    model.tau_strict = j.at("tau_strict").get<double>();
    model.en = network_from_json(j.at("en"));
    model.deg = network_from_json(j.at("deg"));
    model.d_t = network_from_json(j.at("d_t"));
    model.d_l = network_from_json(j.at("d_l"));
    model.trained = true;
    model.calibrated = true;
    return model;
}

}  // namespace gantrust
