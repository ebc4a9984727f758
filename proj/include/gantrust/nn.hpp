#pragma once

// Minimal dense-network core: layers, activations, losses, Adam. Exact
// gradients with explicit accumulation; everything double precision, seeded,
// and deterministic.

#include <span>
#include <variant>

#include <nlohmann/json.hpp>

#include "gantrust/core.hpp"

namespace gantrust {

struct DenseLayer {
    Matrix w;  // out x in
    Vec b;     // out
    Matrix gw;
    Vec gb;
    Matrix x_cache;
    bool cache_valid = false;

    DenseLayer(std::size_t in, std::size_t out, Rng& rng) : w(out, in), b(out, 0.0) {
        const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
        std::uniform_real_distribution<double> u(-bound, bound);
        for (double& x : w.a) x = u(rng);
        gw = Matrix(out, in);
        gb.assign(out, 0.0);
    }
};

struct BatchNormLayer {
    Vec gamma, beta;
    Vec run_mean, run_var;
    double eps = 1e-5;
    double momentum = 0.9;  // fraction of the running estimate retained per batch
    Vec ggamma, gbeta;
    Matrix xhat_cache;
    Vec inv_std_cache;
    bool cache_valid = false;

    explicit BatchNormLayer(std::size_t features, double eps_ = 1e-5, double momentum_ = 0.9)
        : gamma(features, 1.0),
          beta(features, 0.0),
          run_mean(features, 0.0),
          run_var(features, 1.0),
          eps(eps_),
          momentum(momentum_),
          ggamma(features, 0.0),
          gbeta(features, 0.0) {
        if (eps <= 0.0) throw std::invalid_argument("batchnorm: epsilon must be positive");
    }
};

struct LeakyReluLayer {
    double slope = 0.2;
    Matrix x_cache;
    bool cache_valid = false;
};

struct SigmoidLayer {
    Matrix y_cache;
    bool cache_valid = false;
};

struct TanhLayer {
    Matrix y_cache;
    bool cache_valid = false;
};

using Layer = std::variant<DenseLayer, BatchNormLayer, LeakyReluLayer, SigmoidLayer, TanhLayer>;

namespace detail {

inline void check_finite(const Matrix& m, const char* where) {
    if (!all_finite(m.a)) throw TrainingDivergence(std::string(where) + ": non-finite values");
}

}  // namespace detail

class Network {
  public:
    std::vector<Layer> layers;

    Network& add_dense(std::size_t in, std::size_t out, Rng& rng) {
        layers.emplace_back(DenseLayer(in, out, rng));
        return *this;
    }
    Network& add_batchnorm(std::size_t features, double eps = 1e-5, double momentum = 0.9) {
        layers.emplace_back(BatchNormLayer(features, eps, momentum));
        return *this;
    }
    Network& add_leaky_relu(double slope = 0.2) {
        layers.emplace_back(LeakyReluLayer{slope});
        return *this;
    }
    Network& add_sigmoid() {
        layers.emplace_back(SigmoidLayer{});
        return *this;
    }
    Network& add_tanh() {
        layers.emplace_back(TanhLayer{});
        return *this;
    }

    // Runs the batch (rows = samples) through every layer. Train mode caches
    // activations for backward and updates batch-norm running statistics;
    // inference mode touches no state and uses running statistics only.
    Matrix forward(const Matrix& x, bool train) {
        if (!all_finite(x.a)) throw std::invalid_argument("forward: non-finite input");
        Matrix cur = x;
        for (auto& layer : layers) cur = forward_layer(layer, cur, train);
        detail::check_finite(cur, "forward");
        return cur;
    }

    // Propagates the loss gradient back through the stack, accumulating (+=)
    // into per-layer parameter gradients, and returns the input gradient.
    Matrix backward(const Matrix& dy) {
        Matrix cur = dy;
        for (auto it = layers.rbegin(); it != layers.rend(); ++it)
            cur = backward_layer(*it, cur);
        return cur;
    }

    void zero_grad() {
        for (auto& layer : layers)
            std::visit(
                [](auto& l) {
                    using T = std::decay_t<decltype(l)>;
                    if constexpr (std::is_same_v<T, DenseLayer>) {
                        std::fill(l.gw.a.begin(), l.gw.a.end(), 0.0);
                        std::fill(l.gb.begin(), l.gb.end(), 0.0);
                    } else if constexpr (std::is_same_v<T, BatchNormLayer>) {
                        std::fill(l.ggamma.begin(), l.ggamma.end(), 0.0);
                        std::fill(l.gbeta.begin(), l.gbeta.end(), 0.0);
                    }
                },
                layer);
    }

    // Trainable parameters flattened in layer order (dense: weights row-major
    // then bias; batch norm: gamma then beta). Running statistics are state,
    // not parameters.
    Vec collect_params() const {
        Vec out;
        for (const auto& layer : layers)
            std::visit(
                [&](const auto& l) {
                    using T = std::decay_t<decltype(l)>;
                    if constexpr (std::is_same_v<T, DenseLayer>) {
                        out.insert(out.end(), l.w.a.begin(), l.w.a.end());
                        out.insert(out.end(), l.b.begin(), l.b.end());
                    } else if constexpr (std::is_same_v<T, BatchNormLayer>) {
                        out.insert(out.end(), l.gamma.begin(), l.gamma.end());
                        out.insert(out.end(), l.beta.begin(), l.beta.end());
                    }
                },
                layer);
        return out;
    }

    Vec collect_grads() const {
        Vec out;
        for (const auto& layer : layers)
            std::visit(
                [&](const auto& l) {
                    using T = std::decay_t<decltype(l)>;
                    if constexpr (std::is_same_v<T, DenseLayer>) {
                        out.insert(out.end(), l.gw.a.begin(), l.gw.a.end());
                        out.insert(out.end(), l.gb.begin(), l.gb.end());
                    } else if constexpr (std::is_same_v<T, BatchNormLayer>) {
                        out.insert(out.end(), l.ggamma.begin(), l.ggamma.end());
                        out.insert(out.end(), l.gbeta.begin(), l.gbeta.end());
                    }
                },
                layer);
        return out;
    }

    void load_params(const Vec& flat) {
        std::size_t pos = 0;
        auto take = [&](auto first, auto last) {
            for (auto it = first; it != last; ++it) {
                if (pos >= flat.size()) throw std::invalid_argument("load_params: too few values");
                *it = flat[pos++];
            }
        };
        for (auto& layer : layers)
            std::visit(
                [&](auto& l) {
                    using T = std::decay_t<decltype(l)>;
                    if constexpr (std::is_same_v<T, DenseLayer>) {
                        take(l.w.a.begin(), l.w.a.end());
                        take(l.b.begin(), l.b.end());
                    } else if constexpr (std::is_same_v<T, BatchNormLayer>) {
                        take(l.gamma.begin(), l.gamma.end());
                        take(l.beta.begin(), l.beta.end());
                    }
                },
                layer);
        if (pos != flat.size()) throw std::invalid_argument("load_params: too many values");
    }

    std::size_t param_count() const { return collect_params().size(); }

  private:
    Matrix forward_layer(Layer& layer, const Matrix& x, bool train) {
        return std::visit(
            [&](auto& l) -> Matrix {
                using T = std::decay_t<decltype(l)>;
                if constexpr (std::is_same_v<T, DenseLayer>) {
                    if (x.cols != l.w.cols)
                        throw std::invalid_argument("dense: input width mismatch");
                    Matrix y(x.rows, l.w.rows);
                    for (std::size_t r = 0; r < x.rows; ++r)
                        for (std::size_t o = 0; o < l.w.rows; ++o) {
                            double s = l.b[o];
                            for (std::size_t i = 0; i < l.w.cols; ++i) s += x(r, i) * l.w(o, i);
                            y(r, o) = s;
                        }
                    l.cache_valid = train;
                    if (train) l.x_cache = x;
                    return y;
                } else if constexpr (std::is_same_v<T, BatchNormLayer>) {
                    const std::size_t f = l.gamma.size();
                    if (x.cols != f) throw std::invalid_argument("batchnorm: width mismatch");
                    Matrix y(x.rows, f);
                    if (train) {
                        if (x.rows < 2)
                            throw std::invalid_argument(
                                "batchnorm: train mode needs batch size >= 2");
                        Vec mean(f, 0.0), var(f, 0.0);
                        const double n = static_cast<double>(x.rows);
                        for (std::size_t r = 0; r < x.rows; ++r)
                            for (std::size_t j = 0; j < f; ++j) mean[j] += x(r, j);
                        for (double& m : mean) m /= n;
                        for (std::size_t r = 0; r < x.rows; ++r)
                            for (std::size_t j = 0; j < f; ++j) {
                                double d = x(r, j) - mean[j];
                                var[j] += d * d;
                            }
                        for (double& v : var) v /= n;  // biased batch variance
                        l.xhat_cache = Matrix(x.rows, f);
                        l.inv_std_cache.resize(f);
                        for (std::size_t j = 0; j < f; ++j)
                            l.inv_std_cache[j] = 1.0 / std::sqrt(var[j] + l.eps);
                        for (std::size_t r = 0; r < x.rows; ++r)
                            for (std::size_t j = 0; j < f; ++j) {
                                double xh = (x(r, j) - mean[j]) * l.inv_std_cache[j];
                                l.xhat_cache(r, j) = xh;
                                y(r, j) = l.gamma[j] * xh + l.beta[j];
                            }
                        for (std::size_t j = 0; j < f; ++j) {
                            l.run_mean[j] = l.momentum * l.run_mean[j] + (1.0 - l.momentum) * mean[j];
                            l.run_var[j] = l.momentum * l.run_var[j] + (1.0 - l.momentum) * var[j];
                        }
                        l.cache_valid = true;
                    } else {
                        for (std::size_t r = 0; r < x.rows; ++r)
                            for (std::size_t j = 0; j < f; ++j)
                                y(r, j) = l.gamma[j] * (x(r, j) - l.run_mean[j]) /
                                              std::sqrt(l.run_var[j] + l.eps) +
                                          l.beta[j];
                        l.cache_valid = false;
                    }
                    return y;
                } else if constexpr (std::is_same_v<T, LeakyReluLayer>) {
                    Matrix y(x.rows, x.cols);
                    for (std::size_t i = 0; i < x.a.size(); ++i)
                        y.a[i] = x.a[i] >= 0.0 ? x.a[i] : l.slope * x.a[i];
                    l.cache_valid = train;
                    if (train) l.x_cache = x;
                    return y;
                } else if constexpr (std::is_same_v<T, SigmoidLayer>) {
                    Matrix y(x.rows, x.cols);
                    for (std::size_t i = 0; i < x.a.size(); ++i)
                        y.a[i] = 1.0 / (1.0 + std::exp(-x.a[i]));
                    l.cache_valid = train;
                    if (train) l.y_cache = y;
                    return y;
                } else {
                    Matrix y(x.rows, x.cols);
                    for (std::size_t i = 0; i < x.a.size(); ++i) y.a[i] = std::tanh(x.a[i]);
                    l.cache_valid = train;
                    if (train) l.y_cache = y;
                    return y;
                }
            },
            layer);
    }

    Matrix backward_layer(Layer& layer, const Matrix& dy) {
        return std::visit(
            [&](auto& l) -> Matrix {
                using T = std::decay_t<decltype(l)>;
                if (!l.cache_valid)
                    throw std::logic_error("backward: stale cache (no matching forward)");
                l.cache_valid = false;
                if constexpr (std::is_same_v<T, DenseLayer>) {
                    const Matrix& x = l.x_cache;
                    if (dy.rows != x.rows || dy.cols != l.w.rows)
                        throw std::invalid_argument("dense: gradient shape mismatch");
                    for (std::size_t o = 0; o < l.w.rows; ++o) {
                        for (std::size_t r = 0; r < x.rows; ++r) l.gb[o] += dy(r, o);
                        for (std::size_t i = 0; i < l.w.cols; ++i) {
                            double s = 0.0;
                            for (std::size_t r = 0; r < x.rows; ++r) s += dy(r, o) * x(r, i);
                            l.gw(o, i) += s;
                        }
                    }
                    Matrix dx(x.rows, l.w.cols);
                    for (std::size_t r = 0; r < x.rows; ++r)
                        for (std::size_t i = 0; i < l.w.cols; ++i) {
                            double s = 0.0;
                            for (std::size_t o = 0; o < l.w.rows; ++o) s += dy(r, o) * l.w(o, i);
                            dx(r, i) = s;
                        }
                    return dx;
                } else if constexpr (std::is_same_v<T, BatchNormLayer>) {
                    const std::size_t f = l.gamma.size();
                    const Matrix& xh = l.xhat_cache;
                    if (dy.rows != xh.rows || dy.cols != f)
                        throw std::invalid_argument("batchnorm: gradient shape mismatch");
                    const double n = static_cast<double>(dy.rows);
                    Matrix dx(dy.rows, f);
                    for (std::size_t j = 0; j < f; ++j) {
                        double sum_dy = 0.0, sum_dy_xh = 0.0;
                        for (std::size_t r = 0; r < dy.rows; ++r) {
                            sum_dy += dy(r, j);
                            sum_dy_xh += dy(r, j) * xh(r, j);
                        }
                        l.gbeta[j] += sum_dy;
                        l.ggamma[j] += sum_dy_xh;
                        const double scale = l.gamma[j] * l.inv_std_cache[j];
                        for (std::size_t r = 0; r < dy.rows; ++r)
                            dx(r, j) = scale * (dy(r, j) - sum_dy / n - xh(r, j) * sum_dy_xh / n);
                    }
                    return dx;
                } else if constexpr (std::is_same_v<T, LeakyReluLayer>) {
                    const Matrix& x = l.x_cache;
                    if (dy.rows != x.rows || dy.cols != x.cols)
                        throw std::invalid_argument("leaky_relu: gradient shape mismatch");
                    Matrix dx(dy.rows, dy.cols);
                    for (std::size_t i = 0; i < dy.a.size(); ++i)
                        dx.a[i] = dy.a[i] * (x.a[i] >= 0.0 ? 1.0 : l.slope);
                    return dx;
                } else if constexpr (std::is_same_v<T, SigmoidLayer>) {
                    const Matrix& y = l.y_cache;
                    if (dy.rows != y.rows || dy.cols != y.cols)
                        throw std::invalid_argument("sigmoid: gradient shape mismatch");
                    Matrix dx(dy.rows, dy.cols);
                    for (std::size_t i = 0; i < dy.a.size(); ++i)
                        dx.a[i] = dy.a[i] * y.a[i] * (1.0 - y.a[i]);
                    return dx;
                } else {
                    const Matrix& y = l.y_cache;
                    if (dy.rows != y.rows || dy.cols != y.cols)
                        throw std::invalid_argument("tanh: gradient shape mismatch");
                    Matrix dx(dy.rows, dy.cols);
                    for (std::size_t i = 0; i < dy.a.size(); ++i)
                        dx.a[i] = dy.a[i] * (1.0 - y.a[i] * y.a[i]);
                    return dx;
                }
            },
            layer);
    }
};

// --- Adam ---------------------------------------------------------------------

struct AdamState {
    double lr = 2e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double eps = 1e-8;
    Vec m, v;
    long long t = 0;
};

inline void adam_step(AdamState& state, Vec& params, const Vec& grads) {
    if (params.size() != grads.size())
        throw std::invalid_argument("adam_step: parameter/gradient size mismatch");
    if (!all_finite(grads)) throw TrainingDivergence("adam_step: non-finite gradients");
    if (state.m.empty()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
    }
    if (state.m.size() != params.size())
        throw std::invalid_argument("adam_step: state size mismatch");

    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i] * grads[i];
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        params[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
}

// Convenience wrapper: one optimizer step over a network's accumulated grads.
inline void adam_step(AdamState& state, Network& net) {
    Vec params = net.collect_params();
    adam_step(state, params, net.collect_grads());
    net.load_params(params);
}

// --- Losses -------------------------------------------------------------------

struct LossGrad {
    double loss = 0.0;
    Vec grad;  // with respect to the first argument (scores / outputs)
};

inline LossGrad least_squares_loss(std::span<const double> scores,
                                   std::span<const double> targets) {
    if (scores.size() != targets.size())
        throw std::invalid_argument("least_squares_loss: length mismatch");
    if (scores.empty()) throw std::invalid_argument("least_squares_loss: empty batch");
    LossGrad out;
    out.grad.resize(scores.size());
    const double n = static_cast<double>(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const double d = scores[i] - targets[i];
        out.loss += d * d / n;
        out.grad[i] = 2.0 * d / n;
    }
    return out;
}

// Mean absolute difference; out.grad is with respect to `outputs`, with
// subgradient 0 at exact ties.
inline LossGrad mae_loss(std::span<const double> inputs, std::span<const double> outputs) {
    if (inputs.size() != outputs.size()) throw std::invalid_argument("mae_loss: length mismatch");
    if (inputs.empty()) throw std::invalid_argument("mae_loss: empty batch");
    LossGrad out;
    out.grad.resize(outputs.size());
    const double n = static_cast<double>(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const double d = outputs[i] - inputs[i];
        out.loss += std::abs(d) / n;
        out.grad[i] = d > 0.0 ? 1.0 / n : d < 0.0 ? -1.0 / n : 0.0;
    }
    return out;
}

// --- Serialization ------------------------------------------------------------
// Layer list header plus row-major parameter arrays; running statistics are
// included so shared models infer identically.

inline nlohmann::json network_to_json(const Network& net) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& layer : net.layers)
        std::visit(
            [&](const auto& l) {
                using T = std::decay_t<decltype(l)>;
                nlohmann::json j;
                if constexpr (std::is_same_v<T, DenseLayer>) {
                    j["type"] = "dense";
                    j["in"] = l.w.cols;
                    j["out"] = l.w.rows;
                    j["w"] = l.w.a;
                    j["b"] = l.b;
                } else if constexpr (std::is_same_v<T, BatchNormLayer>) {
                    j["type"] = "batchnorm";
                    j["features"] = l.gamma.size();
                    j["gamma"] = l.gamma;
                    j["beta"] = l.beta;
                    j["run_mean"] = l.run_mean;
                    j["run_var"] = l.run_var;
                    j["eps"] = l.eps;
                    j["momentum"] = l.momentum;
                } else if constexpr (std::is_same_v<T, LeakyReluLayer>) {
                    j["type"] = "leaky_relu";
                    j["slope"] = l.slope;
                } else if constexpr (std::is_same_v<T, SigmoidLayer>) {
                    j["type"] = "sigmoid";
                } else {
                    j["type"] = "tanh";
                }
                layers.push_back(std::move(j));
            },
            layer);
    return nlohmann::json{{"layers", std::move(layers)}};
}

inline Network network_from_json(const nlohmann::json& j) {
    Network net;
    if (!j.contains("layers") || !j["layers"].is_array())
        throw std::invalid_argument("network_from_json: missing layer list");
    for (const auto& lj : j["layers"]) {
        const std::string type = lj.at("type").get<std::string>();
        if (type == "dense") {
            const std::size_t in = lj.at("in").get<std::size_t>();
            const std::size_t out = lj.at("out").get<std::size_t>();
            Rng dummy(0);
            DenseLayer l(in, out, dummy);
            l.w.a = lj.at("w").get<Vec>();
            l.b = lj.at("b").get<Vec>();
            if (l.w.a.size() != in * out || l.b.size() != out)
                throw std::invalid_argument("network_from_json: dense size mismatch");
            net.layers.emplace_back(std::move(l));
        } else if (type == "batchnorm") {
            const std::size_t f = lj.at("features").get<std::size_t>();
            BatchNormLayer l(f, lj.at("eps").get<double>(), lj.at("momentum").get<double>());
            l.gamma = lj.at("gamma").get<Vec>();
            l.beta = lj.at("beta").get<Vec>();
            l.run_mean = lj.at("run_mean").get<Vec>();
            l.run_var = lj.at("run_var").get<Vec>();
            if (l.gamma.size() != f || l.beta.size() != f || l.run_mean.size() != f ||
                l.run_var.size() != f)
                throw std::invalid_argument("network_from_json: batchnorm size mismatch");
            net.layers.emplace_back(std::move(l));
        } else if (type == "leaky_relu") {
            net.layers.emplace_back(LeakyReluLayer{lj.at("slope").get<double>()});
        } else if (type == "sigmoid") {
            net.layers.emplace_back(SigmoidLayer{});
        } else if (type == "tanh") {
            net.layers.emplace_back(TanhLayer{});
        } else {
            throw std::invalid_argument("network_from_json: unknown layer type " + type);
        }
    }
    return net;
}

}  // namespace gantrust
