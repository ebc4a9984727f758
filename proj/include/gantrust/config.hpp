#pragma once
// Scenario configuration: every tunable of the pipeline in one flat struct,
// loadable from `key = value` text files with strict validation.

#include <array>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "gantrust/autoencoder.hpp"
#include "gantrust/core.hpp"
#include "gantrust/fuzzy.hpp"

namespace gantrust {

struct ScenarioConfig {
    // Population and geometry (meters).
    int device_count = 100;
    double field_width = 200.0;
    double field_height = 200.0;
    double bs_x = 100.0;
    double bs_y = 250.0;
    double radio_range = 60.0;

    // Capability-role split, percent of all devices (must sum to 100).
    int role_super_pct = 30;
    int role_advanced_pct = 50;
    int role_generic_pct = 20;

    // Adversary population. Capability split is percent of the malicious
    // subset (must sum to 100); misbehaviour probabilities are per forward.
    double malicious_pct = 30.0;
    int cap_higher_pct = 30;
    int cap_medium_pct = 40;
    int cap_lower_pct = 30;
    double misbehave_higher = 0.6;
    double misbehave_medium = 0.4;
    double misbehave_lower = 0.2;
    double fault_prob = 0.02;

    // Round loop.
    int round_budget = 1500;
    int bootstrap_rounds = 50;
    double election_p = 0.1;

    // First-order radio model.
    double packet_bits = 4000.0;
    double initial_energy = 1.3;      // joules per device
    double e_elec = 50e-9;            // J/bit electronics
    double eps_fs = 10e-12;           // J/bit/m^2 free-space amplifier
    double eps_mp = 0.0013e-12;       // J/bit/m^4 multipath amplifier

    // Evidence and trust vectors.
    int window_len = 20;              // overheard behaviours kept per neighbour
    int vector_len = 10;              // trust values per classification vector

    // Fuzzy rule weights and trapezoid breakpoints (a b c d).
    double weight_drop = 0.35;
    double weight_delay = 0.25;
    double weight_tamper = 0.40;
    std::array<double, 4> fuzzy_low_upper{0.0, 0.0, 0.20, 0.45};
    std::array<double, 4> fuzzy_low_lower{0.0, 0.0, 0.15, 0.35};
    std::array<double, 4> fuzzy_medium_upper{0.20, 0.45, 0.55, 0.80};
    std::array<double, 4> fuzzy_medium_lower{0.30, 0.48, 0.52, 0.70};
    std::array<double, 4> fuzzy_high_upper{0.55, 0.80, 1.0, 1.0};
    std::array<double, 4> fuzzy_high_lower{0.65, 0.85, 1.0, 1.0};

    // Dataset preparation.
    double variance_target = 0.90;
    int max_components = 5;
    int kmeans_restarts = 10;
    int kmeans_max_iters = 300;
    int min_training_vectors = 300;

    // Autoencoder training.
    int latent_dim = 4;
    int batch_size = 32;
    int epochs_initial = 200;
    int epochs_update = 50;
    int retrain_batches = 5;
    int dataset_cap = 2000;
    double learning_rate = 2e-4;
    double adam_beta1 = 0.5;
    double adam_beta2 = 0.999;
    double leaky_slope = 0.2;

    // Decision protocol.
    int recommenders_required = 2;
    int temp_trust_rounds = 5;
    double threshold_gap = 0.15;

    // Between two failed training attempts a Super waits this many rounds
    // before re-running the dataset pipeline (keeps degenerate pools cheap).
    int train_retry_gap = 25;

    // Harness.
    std::uint64_t seed = 42;
    int sweep_seeds = 3;
};

inline AeConfig ae_config_from(const ScenarioConfig& c) {
    AeConfig a;
    a.input_len = static_cast<std::size_t>(c.vector_len);
    a.latent_dim = static_cast<std::size_t>(c.latent_dim);
    a.batch_size = static_cast<std::size_t>(c.batch_size);
    a.epochs_initial = c.epochs_initial;
    a.epochs_update = c.epochs_update;
    a.retrain_batches = c.retrain_batches;
    a.dataset_cap = static_cast<std::size_t>(c.dataset_cap);
    a.lr = c.learning_rate;
    a.beta1 = c.adam_beta1;
    a.beta2 = c.adam_beta2;
    a.leaky_slope = c.leaky_slope;
    return a;
}

inline FuzzyModel fuzzy_model_from(const ScenarioConfig& c) {
    auto trap = [](const std::array<double, 4>& q) {
        return Trapezoid{q[0], q[1], q[2], q[3]};
    };
    FuzzyModel m;
    m.low = {AttrGrade::Low, trap(c.fuzzy_low_upper), trap(c.fuzzy_low_lower)};
    m.medium = {AttrGrade::Medium, trap(c.fuzzy_medium_upper), trap(c.fuzzy_medium_lower)};
    m.high = {AttrGrade::High, trap(c.fuzzy_high_upper), trap(c.fuzzy_high_lower)};
    m.weight_drop = c.weight_drop;
    m.weight_delay = c.weight_delay;
    m.weight_tamper = c.weight_tamper;
    m.rebuild_rules();
    validate_fuzzy_model(m);
    return m;
}

namespace detail {

inline std::string trim_copy(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_double_value(const std::string& key, const std::string& text) {
    std::size_t used = 0;
    double v = 0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': not a number: '" + text + "'");
    }
    if (used != text.size())
        throw ConfigError("key '" + key + "': trailing characters in '" + text + "'");
    if (!std::isfinite(v)) throw ConfigError("key '" + key + "': value must be finite");
    return v;
}

inline long long parse_int_value(const std::string& key, const std::string& text) {
    std::size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(text, &used);
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': not an integer: '" + text + "'");
    }
    if (used != text.size())
        throw ConfigError("key '" + key + "': trailing characters in '" + text + "'");
    return v;
}

inline std::uint64_t parse_u64_value(const std::string& key, const std::string& text) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(text, &used);
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': not an unsigned integer: '" + text + "'");
    }
    if (used != text.size())
        throw ConfigError("key '" + key + "': trailing characters in '" + text + "'");
    return static_cast<std::uint64_t>(v);
}

// Four whitespace-separated trapezoid breakpoints.
inline std::array<double, 4> parse_quad_value(const std::string& key, const std::string& text) {
    std::istringstream in(text);
    std::array<double, 4> q{};
    for (double& x : q)
        if (!(in >> x))
            throw ConfigError("key '" + key + "': expected four numbers, got '" + text + "'");
    std::string rest;
    if (in >> rest)
        throw ConfigError("key '" + key + "': expected four numbers, got '" + text + "'");
    return q;
}

}  // namespace detail

// Range and cross-field checks shared by load_config and CLI overrides.
inline void validate_config(const ScenarioConfig& c) {
    auto require = [](bool ok, const std::string& msg) {
        if (!ok) throw ConfigError(msg);
    };
    require(c.device_count >= 1, "device_count must be >= 1");
    require(c.field_width > 0 && c.field_height > 0, "field dimensions must be positive");
    require(c.radio_range > 0, "radio_range must be positive");
    auto pct_ok = [](int p) { return p >= 0 && p <= 100; };
    require(pct_ok(c.role_super_pct) && pct_ok(c.role_advanced_pct) && pct_ok(c.role_generic_pct),
            "role percentages must lie in [0,100]");
    require(c.role_super_pct + c.role_advanced_pct + c.role_generic_pct == 100,
            "role percentages must sum to 100");
    require(c.malicious_pct >= 0.0 && c.malicious_pct <= 100.0,
            "malicious_pct out of range [0,100]");
    require(pct_ok(c.cap_higher_pct) && pct_ok(c.cap_medium_pct) && pct_ok(c.cap_lower_pct),
            "capability percentages must lie in [0,100]");
    require(c.cap_higher_pct + c.cap_medium_pct + c.cap_lower_pct == 100,
            "capability percentages must sum to 100");
    auto prob_ok = [](double p) { return p >= 0.0 && p <= 1.0; };
    require(prob_ok(c.misbehave_higher) && prob_ok(c.misbehave_medium) &&
                prob_ok(c.misbehave_lower),
            "misbehaviour probabilities must lie in [0,1]");
    require(prob_ok(c.fault_prob), "fault_prob must lie in [0,1]");
    require(c.round_budget >= 1, "round_budget must be >= 1");
    require(c.bootstrap_rounds >= 0, "bootstrap_rounds must be >= 0");
    require(c.election_p > 0.0 && c.election_p <= 1.0, "election_p must lie in (0,1]");
    require(c.packet_bits > 0, "packet_bits must be positive");
    require(c.initial_energy > 0, "initial_energy must be positive");
    require(c.e_elec > 0 && c.eps_fs > 0 && c.eps_mp > 0, "radio constants must be positive");
    require(c.window_len >= 1, "window_len must be >= 1");
    require(c.vector_len >= 2, "vector_len must be >= 2");
    require(c.variance_target > 0.0 && c.variance_target <= 1.0,
            "variance_target must lie in (0,1]");
    require(c.max_components >= 1, "max_components must be >= 1");
    require(c.kmeans_restarts >= 1, "kmeans_restarts must be >= 1");
    require(c.kmeans_max_iters >= 1, "kmeans_max_iters must be >= 1");
    require(c.latent_dim >= 1, "latent_dim must be >= 1");
    require(c.latent_dim < c.vector_len, "latent_dim must be smaller than vector_len");
    require(c.batch_size >= 1, "batch_size must be >= 1");
    require(c.epochs_initial >= 0 && c.epochs_update >= 0, "epoch counts must be >= 0");
    require(c.retrain_batches >= 1, "retrain_batches must be >= 1");
    require(c.dataset_cap >= 2 * c.batch_size,
            "dataset_cap must hold at least two training batches");
    require(c.min_training_vectors >= 2 * c.batch_size,
            "min_training_vectors must cover at least two batches");
    require(c.learning_rate > 0, "learning_rate must be positive");
    require(c.adam_beta1 >= 0 && c.adam_beta1 < 1, "adam_beta1 must lie in [0,1)");
    require(c.adam_beta2 >= 0 && c.adam_beta2 < 1, "adam_beta2 must lie in [0,1)");
    require(c.leaky_slope >= 0 && c.leaky_slope < 1, "leaky_slope must lie in [0,1)");
    require(c.recommenders_required >= 1, "recommenders_required must be >= 1");
    require(c.temp_trust_rounds >= 1, "temp_trust_rounds must be >= 1");
    require(c.threshold_gap >= 0 && c.threshold_gap <= 1, "threshold_gap must lie in [0,1]");
    require(c.train_retry_gap >= 1, "train_retry_gap must be >= 1");
    require(c.sweep_seeds >= 1, "sweep_seeds must be >= 1");
    fuzzy_model_from(c);  // throws ConfigError on malformed sets or weights
}

namespace detail {

struct ConfigKeyTable {
    std::map<std::string, std::function<void(ScenarioConfig&, const std::string&)>> setters;

    void add_int(const std::string& k, int ScenarioConfig::* f) {
        setters[k] = [k, f](ScenarioConfig& c, const std::string& v) {
            long long x = parse_int_value(k, v);
            if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
                throw ConfigError("key '" + k + "': integer out of range");
            c.*f = static_cast<int>(x);
        };
    }
    void add_double(const std::string& k, double ScenarioConfig::* f) {
        setters[k] = [k, f](ScenarioConfig& c, const std::string& v) {
            c.*f = parse_double_value(k, v);
        };
    }
    void add_quad(const std::string& k, std::array<double, 4> ScenarioConfig::* f) {
        setters[k] = [k, f](ScenarioConfig& c, const std::string& v) {
            c.*f = parse_quad_value(k, v);
        };
    }
    void add_u64(const std::string& k, std::uint64_t ScenarioConfig::* f) {
        setters[k] = [k, f](ScenarioConfig& c, const std::string& v) {
            c.*f = parse_u64_value(k, v);
        };
    }
};

inline const ConfigKeyTable& config_key_table() {
    static const ConfigKeyTable table = [] {
        ConfigKeyTable t;
        t.add_int("device_count", &ScenarioConfig::device_count);
        t.add_double("field_width", &ScenarioConfig::field_width);
        t.add_double("field_height", &ScenarioConfig::field_height);
        t.add_double("bs_x", &ScenarioConfig::bs_x);
        t.add_double("bs_y", &ScenarioConfig::bs_y);
        t.add_double("radio_range", &ScenarioConfig::radio_range);
        t.add_int("role_super_pct", &ScenarioConfig::role_super_pct);
        t.add_int("role_advanced_pct", &ScenarioConfig::role_advanced_pct);
        t.add_int("role_generic_pct", &ScenarioConfig::role_generic_pct);
        t.add_double("malicious_pct", &ScenarioConfig::malicious_pct);
        t.add_int("cap_higher_pct", &ScenarioConfig::cap_higher_pct);
        t.add_int("cap_medium_pct", &ScenarioConfig::cap_medium_pct);
        t.add_int("cap_lower_pct", &ScenarioConfig::cap_lower_pct);
        t.add_double("misbehave_higher", &ScenarioConfig::misbehave_higher);
        t.add_double("misbehave_medium", &ScenarioConfig::misbehave_medium);
        t.add_double("misbehave_lower", &ScenarioConfig::misbehave_lower);
        t.add_double("fault_prob", &ScenarioConfig::fault_prob);
        t.add_int("round_budget", &ScenarioConfig::round_budget);
        t.add_int("bootstrap_rounds", &ScenarioConfig::bootstrap_rounds);
        t.add_double("election_p", &ScenarioConfig::election_p);
        t.add_double("packet_bits", &ScenarioConfig::packet_bits);
        t.add_double("initial_energy", &ScenarioConfig::initial_energy);
        t.add_double("e_elec", &ScenarioConfig::e_elec);
        t.add_double("eps_fs", &ScenarioConfig::eps_fs);
        t.add_double("eps_mp", &ScenarioConfig::eps_mp);
        t.add_int("window_len", &ScenarioConfig::window_len);
        t.add_int("vector_len", &ScenarioConfig::vector_len);
        t.add_double("weight_drop", &ScenarioConfig::weight_drop);
        t.add_double("weight_delay", &ScenarioConfig::weight_delay);
        t.add_double("weight_tamper", &ScenarioConfig::weight_tamper);
        t.add_quad("fuzzy_low_upper", &ScenarioConfig::fuzzy_low_upper);
        t.add_quad("fuzzy_low_lower", &ScenarioConfig::fuzzy_low_lower);
        t.add_quad("fuzzy_medium_upper", &ScenarioConfig::fuzzy_medium_upper);
        t.add_quad("fuzzy_medium_lower", &ScenarioConfig::fuzzy_medium_lower);
        t.add_quad("fuzzy_high_upper", &ScenarioConfig::fuzzy_high_upper);
        t.add_quad("fuzzy_high_lower", &ScenarioConfig::fuzzy_high_lower);
        t.add_double("variance_target", &ScenarioConfig::variance_target);
        t.add_int("max_components", &ScenarioConfig::max_components);
        t.add_int("kmeans_restarts", &ScenarioConfig::kmeans_restarts);
        t.add_int("kmeans_max_iters", &ScenarioConfig::kmeans_max_iters);
        t.add_int("min_training_vectors", &ScenarioConfig::min_training_vectors);
        t.add_int("latent_dim", &ScenarioConfig::latent_dim);
        t.add_int("batch_size", &ScenarioConfig::batch_size);
        t.add_int("epochs_initial", &ScenarioConfig::epochs_initial);
        t.add_int("epochs_update", &ScenarioConfig::epochs_update);
        t.add_int("retrain_batches", &ScenarioConfig::retrain_batches);
        t.add_int("dataset_cap", &ScenarioConfig::dataset_cap);
        t.add_double("learning_rate", &ScenarioConfig::learning_rate);
        t.add_double("adam_beta1", &ScenarioConfig::adam_beta1);
        t.add_double("adam_beta2", &ScenarioConfig::adam_beta2);
        t.add_double("leaky_slope", &ScenarioConfig::leaky_slope);
        t.add_int("recommenders_required", &ScenarioConfig::recommenders_required);
        t.add_int("temp_trust_rounds", &ScenarioConfig::temp_trust_rounds);
        t.add_double("threshold_gap", &ScenarioConfig::threshold_gap);
        t.add_int("train_retry_gap", &ScenarioConfig::train_retry_gap);
        t.add_u64("seed", &ScenarioConfig::seed);
        t.add_int("sweep_seeds", &ScenarioConfig::sweep_seeds);
        return t;
    }();
    return table;
}

}  // namespace detail

// Flat `key = value` text. `#` starts a comment; blank lines are skipped;
// unknown and repeated keys are rejected; omitted keys keep their defaults.
inline ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    ScenarioConfig cfg;
    const auto& table = detail::config_key_table();
    std::set<std::string> seen;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::string text = detail::trim_copy(line);
        if (text.empty()) continue;
        std::size_t eq = text.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
        std::string key = detail::trim_copy(text.substr(0, eq));
        std::string value = detail::trim_copy(text.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
        auto it = table.setters.find(key);
        if (it == table.setters.end())
            throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        if (!seen.insert(key).second)
            throw ConfigError("line " + std::to_string(lineno) + ": repeated key '" + key + "'");
        it->second(cfg, value);
    }
    validate_config(cfg);
    return cfg;
}

}  // namespace gantrust
