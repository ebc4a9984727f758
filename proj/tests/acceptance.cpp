// Release acceptance gate: ten self-contained checks, one PASS/FAIL line
// each. Exits 0 only when every check passes.
//
//   acceptance <path-to-cli-binary>
//
// The CLI path is needed by the artifact-determinism check, which spawns the
// real executable twice and byte-compares its output tables.

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "gantrust/harness.hpp"
#include "gantrust/synthetic.hpp"
#include "oracles.hpp"

namespace {

using namespace gantrust;
using Clock = std::chrono::steady_clock;

struct Outcome {
    bool ok = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

bool near(double a, double b, double tol = 1e-12) { return std::abs(a - b) <= tol; }

std::string fmt(const char* f, ...) {
    char buf[256];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof buf, f, args);
    va_end(args);
    return buf;
}

// --- 1: analytic gradients vs central finite differences ----------------------

Outcome criterion_gradients() {
    const auto t0 = Clock::now();
    Rng rng(0x9aad1e47);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> depth_d(1, 4), out_d(1, 7), dim_d(2, 6), rows_d(3, 6),
        kind_d(0, 4);
    const double h = 1e-5;
    auto close = [](double a, double f) {
        return std::abs(a - f) <= 1e-4 * std::max(std::abs(a), std::abs(f)) ||
               std::abs(a - f) <= 1e-7;
    };

    double max_rel = 0.0;
    long long checked = 0;
    bool saw_dense = false, saw_norm = false, saw_act = false;
    for (int net_i = 0; net_i < 20; ++net_i) {
        Network net;
        int width = dim_d(rng);
        const int in_dim = width;
        const int depth = depth_d(rng);
        for (int l = 0; l < depth; ++l) {
            switch (kind_d(rng)) {
                case 0: {
                    const int out = out_d(rng);
                    net.add_dense(static_cast<std::size_t>(width), static_cast<std::size_t>(out),
                                  rng);
                    width = out;
                    saw_dense = true;
                    break;
                }
                case 1:
                    net.add_batchnorm(static_cast<std::size_t>(width));
                    saw_norm = true;
                    break;
                case 2:
                    net.add_leaky_relu(0.2);
                    saw_act = true;
                    break;
                case 3:
                    net.add_sigmoid();
                    saw_act = true;
                    break;
                default:
                    net.add_tanh();
                    saw_act = true;
                    break;
            }
        }
        const int rows = rows_d(rng);
        Matrix x(static_cast<std::size_t>(rows), static_cast<std::size_t>(in_dim));
        for (double& v : x.a) v = 4.0 * unit(rng) - 2.0;
        Vec targets(static_cast<std::size_t>(rows * width));
        for (double& v : targets) v = unit(rng);

        auto loss_of = [&](const Matrix& in) {
            return least_squares_loss(net.forward(in, true).a, targets).loss;
        };

        net.zero_grad();
        Matrix y = net.forward(x, true);
        auto lg = least_squares_loss(y.a, targets);
        Matrix dy(y.rows, y.cols);
        dy.a = lg.grad;
        Matrix dx = net.backward(dy);
        Vec analytic = net.collect_grads();

        auto record = [&](double a, double fd) {
            ++checked;
            if (std::max(std::abs(a), std::abs(fd)) > 1e-7)
                max_rel = std::max(max_rel,
                                   std::abs(a - fd) / std::max(std::abs(a), std::abs(fd)));
            return close(a, fd);
        };

        Vec params = net.collect_params();
        for (std::size_t i = 0; i < params.size(); ++i) {
            Vec p = params;
            p[i] = params[i] + h;
            net.load_params(p);
            const double up = loss_of(x);
            p[i] = params[i] - h;
            net.load_params(p);
            const double down = loss_of(x);
            if (!record(analytic[i], (up - down) / (2.0 * h)))
                return {false, fmt("net %d parameter %zu gradient mismatch", net_i, i)};
        }
        net.load_params(params);
        for (std::size_t i = 0; i < x.a.size(); ++i) {
            Matrix xp = x;
            xp.a[i] = x.a[i] + h;
            const double up = loss_of(xp);
            xp.a[i] = x.a[i] - h;
            const double down = loss_of(xp);
            if (!record(dx.a[i], (up - down) / (2.0 * h)))
                return {false, fmt("net %d input %zu gradient mismatch", net_i, i)};
        }
    }
    const double dt = seconds_since(t0);
    const bool ok = saw_dense && saw_norm && saw_act && dt < 10.0;
    return {ok, fmt("20 random stacks, %lld gradients, max rel err %.1e in %.1fs", checked,
                    max_rel, dt)};
}

// --- 2: iterative type-reduction vs exhaustive enumeration --------------------

Outcome criterion_type_reduction() {
    const auto t0 = Clock::now();
    Rng rng(0x7d38c2);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> count(1, 8);
    double worst = 0.0;
    for (int done = 0; done < 200;) {
        const int n = count(rng);
        std::vector<MembershipInterval> f(static_cast<std::size_t>(n));
        std::vector<double> c(static_cast<std::size_t>(n));
        bool any = false;
        for (int i = 0; i < n; ++i) {
            const double a = unit(rng), b = unit(rng);
            f[static_cast<std::size_t>(i)] = {std::min(a, b), std::max(a, b)};
            if (done % 3 == 0 && i % 2 == 0) f[static_cast<std::size_t>(i)].lower = 0.0;
            c[static_cast<std::size_t>(i)] = unit(rng);
            any = any || f[static_cast<std::size_t>(i)].upper > 0.0;
        }
        if (!any) continue;
        ++done;
        const auto [yl, yr] = type_reduce_km(f, c);
        const auto [ol, oh] = oracle::km_enumerate(f, c);
        worst = std::max({worst, std::abs(yl - ol), std::abs(yr - oh)});
        if (worst > 1e-9)
            return {false, fmt("bound mismatch %.2e on rule set %d", worst, done)};
    }
    const double dt = seconds_since(t0);
    return {dt < 5.0, fmt("200 rule sets, worst endpoint gap %.1e in %.1fs", worst, dt)};
}

// --- 3: trust monotone non-increasing in each misbehavior rate ----------------

Outcome criterion_monotonicity() {
    const auto model = FuzzyModel::defaults();
    const int n = 21;
    auto value = [&](int i, int j, int k) {
        return evaluate_trust({i / 20.0, j / 20.0, k / 20.0}, model).value;
    };
    long long violations = 0;
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
            double a = value(0, j, k), b = value(j, 0, k), c = value(j, k, 0);
            for (int i = 1; i < n; ++i) {
                const double na = value(i, j, k), nb = value(j, i, k), nc = value(j, k, i);
                if (na > a + 1e-12) ++violations;
                if (nb > b + 1e-12) ++violations;
                if (nc > c + 1e-12) ++violations;
                a = na;
                b = nb;
                c = nc;
            }
        }
    return {violations == 0,
            fmt("21^3 grid per axis, %lld violations", violations)};
}

// --- 4: adversarial training reaches a stable equilibrium ---------------------

Outcome criterion_equilibrium() {
    const auto t0 = Clock::now();
    Rng rng(0x6eb5a1);
    const LabeledDataset set = synthetic_training_set(250, 250, 10, rng);
    AutoencoderModel model = build_model({}, 0x1c2d3e);
    const TrainStats stats = train(model, set, 200, 32, 0x4f5a6b);
    if (stats.epochs.size() != 200) return {false, "training did not run 200 epochs"};
    for (const EpochStats& e : stats.epochs)
        if (!std::isfinite(e.d_t_loss) || !std::isfinite(e.d_l_loss) ||
            !std::isfinite(e.gen_score_loss) || !std::isfinite(e.enc_score_loss) ||
            !std::isfinite(e.recon_loss))
            return {false, "non-finite loss during training"};
    double real = 0.0, fake = 0.0;
    for (std::size_t e = 180; e < 200; ++e) {
        real += stats.epochs[e].score_real / 20.0;
        fake += stats.epochs[e].score_fake / 20.0;
    }
    const double dt = seconds_since(t0);
    const double gap = std::abs(real - fake);
    return {gap <= 0.2 && dt < 120.0,
            fmt("500 vectors, 200 epochs: final-20 realness gap %.3f in %.1fs", gap, dt)};
}

// --- 5: reconstruction error separates low-trust vectors ----------------------

Outcome criterion_separation() {
    Rng rng(0x51a7e5);
    const LabeledDataset set = synthetic_training_set(250, 250, 10, rng);
    AutoencoderModel model = build_model({}, 0x2b3c4d);
    train(model, set, 200, 32, 0x5e6f70);
    calibrate_thresholds(model, model.training_set);

    const int n_held = 500;
    int lower_flagged = 0, higher_flagged = 0;
    for (int i = 0; i < n_held; ++i)
        if (reconstruct(model, synthetic_vector(TrustLevel::Lower, 10, rng)).error >
            model.tau_rec)
            ++lower_flagged;
    for (int i = 0; i < n_held; ++i)
        if (reconstruct(model, synthetic_vector(TrustLevel::Higher, 10, rng)).error >
            model.tau_rec)
            ++higher_flagged;

    const int n_class = 400;
    int correct = 0;
    for (int i = 0; i < n_class; ++i) {
        const TrustLevel level = i % 2 == 1 ? TrustLevel::Medium : TrustLevel::Higher;
        if (classify_level(model, synthetic_vector(level, 10, rng)) == level) ++correct;
    }

    const bool ok = lower_flagged > n_held * 80 / 100 &&
                    higher_flagged <= n_held * 10 / 100 &&
                    correct >= n_class * 85 / 100;
    return {ok, fmt("low-trust flagged %d/%d, high-trust false flags %d/%d, class acc %d/%d",
                    lower_flagged, n_held, higher_flagged, n_held, correct, n_class)};
}

// --- 6: security guarantee at half-malicious load -----------------------------

Outcome criterion_security() {
    const auto t0 = Clock::now();
    double rate_sum = 0.0;
    int ceased = 0;
    std::string rates;
    for (int i = 0; i < 5; ++i) {
        ScenarioConfig cfg;
        cfg.malicious_pct = 50.0;
        cfg.seed = 42 + static_cast<std::uint64_t>(i);
        const ScenarioResult res = run_scenario(cfg);
        rate_sum += res.summary.security_rate;
        if (res.summary.total_attacks == 0 ||
            res.summary.last_attack_round < cfg.round_budget)
            ++ceased;
        rates += fmt("%s%.2f", i ? "/" : "", res.summary.security_rate);
    }
    const double mean = rate_sum / 5.0;
    const double dt = seconds_since(t0);
    const bool ok = mean >= 0.2 && ceased >= 4 && dt < 600.0;
    return {ok, fmt("50%% malicious, 5 seeds: rates %s (mean %.3f), ceased %d/5, %.0fs",
                    rates.c_str(), mean, ceased, dt)};
}

// --- 7: sweep trends follow the malicious share -------------------------------

Outcome criterion_trends() {
    ScenarioConfig base;  // defaults; three derived seeds per percentage
    const SweepTable table = sweep_malicious(base);
    int violations = 0;
    std::string attacks;
    for (std::size_t i = 0; i < table.aggregates.size(); ++i) {
        const SweepAggregate& b = table.aggregates[i];
        attacks += fmt("%s%.0f", i ? "/" : "", b.total_attacks.mean);
        if (i == 0) continue;
        const SweepAggregate& a = table.aggregates[i - 1];
        const auto slack = [](const MetricStats& x, const MetricStats& y) {
            return std::max(x.stddev, y.stddev);
        };
        if (b.total_attacks.mean < a.total_attacks.mean - slack(a.total_attacks, b.total_attacks))
            ++violations;
        if (b.hnd.mean > a.hnd.mean + slack(a.hnd, b.hnd)) ++violations;
        if (b.throughput.mean > a.throughput.mean + slack(a.throughput, b.throughput))
            ++violations;
    }
    return {violations == 0,
            fmt("attack means %s; %d trend violations beyond one sigma", attacks.c_str(),
                violations)};
}

// --- 8: threshold protocol worked examples ------------------------------------

Outcome criterion_thresholds() {
    auto higher = [](Vec values) {
        return LabeledVector{TrustVector{0, std::move(values), 0}, TrustLevel::Higher};
    };
    auto medium = [](Vec values) {
        return LabeledVector{TrustVector{0, std::move(values), 0}, TrustLevel::Medium};
    };
    auto recs = [](std::initializer_list<double> values) {
        std::vector<ThresholdRecommendation> out;
        int id = 0;
        for (double v : values) out.push_back({id++, v, 0});
        return out;
    };

    const LabeledDataset eight{higher({0.95, 0.93, 0.90, 0.88}),
                               higher({0.85, 0.82, 0.80, 0.78}),
                               medium({0.10, 0.20, 0.30, 0.40})};
    bool ok = recommend_threshold(eight) == 0.82;                       // trim 2 of 8, min
    ok = ok && recommend_threshold(LabeledDataset{higher({0.9})}) == 0.9;
    ok = ok && recommend_threshold(LabeledDataset{higher({0.9, 0.8, 0.7, 0.6, 0.5})}) == 0.6;
    ok = ok && near(aggregate_thresholds(recs({0.80, 0.82, 0.81, 0.30})), 0.81);
    ok = ok && aggregate_thresholds(recs({0.7})) == 0.7;
    ok = ok && near(aggregate_thresholds(recs({0.80, 0.81})), 0.805);
    ok = ok && near(aggregate_thresholds(recs({0.50, 0.65})), 0.575);  // gap not exceeded
    ok = ok && near(aggregate_thresholds(recs({0.6, 0.6, 0.6})), 0.6);
    return {ok, "trim and aggregation worked examples including boundary gaps"};
}

// --- 9: fixed-seed CLI runs emit identical artifact tables --------------------

Outcome criterion_determinism(const std::string& cli) {
    if (cli.empty()) return {false, "no CLI path given (usage: acceptance <cli>)"};
    namespace fs = std::filesystem;
    const fs::path base = fs::temp_directory_path() / "acceptance_determinism";
    std::error_code ec;
    fs::remove_all(base, ec);
    const std::string a = (base / "a").string(), b = (base / "b").string();
    for (const std::string& dir : {a, b}) {
        const std::string cmd =
            "\"" + cli + "\" simulate --seed 42 --out-dir \"" + dir + "\" >/dev/null 2>&1";
        if (std::system(cmd.c_str()) != 0) return {false, "CLI simulate run failed"};
    }
    for (const char* name : {"metrics.csv", "events.csv"}) {
        const std::string x = slurp(a + "/" + name), y = slurp(b + "/" + name);
        if (x.empty() || x != y) return {false, fmt("%s differs between reruns", name)};
    }
    return {true, "two CLI runs at seed 42: metrics.csv and events.csv byte-identical"};
}

// --- 10: feature extraction and clustering vs independent oracles -------------

std::vector<TrustVector> random_vectors(std::size_t n, std::size_t len, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<TrustVector> out;
    for (std::size_t i = 0; i < n; ++i) {
        Vec v(len);
        for (double& x : v) x = u(rng);
        out.push_back({static_cast<int>(i), std::move(v), static_cast<int>(i)});
    }
    return out;
}

std::pair<Vec, std::vector<Vec>> eigen_covariance_oracle(const std::vector<TrustVector>& vs) {
    const std::size_t n = vs.size(), len = vs.front().values.size();
    Eigen::MatrixXd x(n, len);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < len; ++j)
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = vs[i].values[j];
    Eigen::RowVectorXd mean = x.colwise().mean();
    Eigen::MatrixXd c =
        (x.rowwise() - mean).transpose() * (x.rowwise() - mean) / static_cast<double>(n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
    Vec evals;
    std::vector<Vec> evecs;
    for (std::size_t i = 0; i < len; ++i) {
        const auto k = static_cast<Eigen::Index>(len - 1 - i);  // ascending -> descending
        evals.push_back(es.eigenvalues()(k));
        Vec v(len);
        for (std::size_t j = 0; j < len; ++j) v[j] = es.eigenvectors()(static_cast<Eigen::Index>(j), k);
        evecs.push_back(std::move(v));
    }
    return {evals, evecs};
}

double sign_insensitive_gap(const Vec& a, const Vec& b) {
    double plus = 0.0, minus = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        plus = std::max(plus, std::abs(a[i] - b[i]));
        minus = std::max(minus, std::abs(a[i] + b[i]));
    }
    return std::min(plus, minus);
}

Outcome criterion_oracles() {
    Rng rng(0x0dac1e5);
    std::uniform_int_distribution<std::size_t> n_d(8, 40);
    double worst_pca = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t len = 3 + static_cast<std::size_t>(trial % 4);
        const auto vs = random_vectors(n_d(rng), len, rng);
        const auto [evals, evecs] = eigen_covariance_oracle(vs);
        double total = 0.0;
        for (double e : evals) total += e;
        const PcaModel model = pca_fit(vs, 0.95);
        if (model.components.rows < 1) return {false, "pca kept no components"};
        for (std::size_t i = 0; i < model.components.rows; ++i) {
            worst_pca = std::max(worst_pca,
                                 std::abs(model.explained_ratio[i] - evals[i] / total));
            Vec row(len);
            for (std::size_t j = 0; j < len; ++j) row[j] = model.components(i, j);
            worst_pca = std::max(worst_pca, sign_insensitive_gap(row, evecs[i]));
        }
        if (worst_pca > 1e-8)
            return {false, fmt("pca oracle gap %.2e on trial %d", worst_pca, trial)};
    }

    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst_km = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Vec> pts;
        for (int i = 0; i < 6; ++i) pts.push_back({u(rng), u(rng)});
        const KmeansResult res =
            kmeans_cluster(pts, 3, derive_seed(0x6b6d, static_cast<std::uint64_t>(trial)));
        worst_km = std::max(worst_km, std::abs(res.wcss - oracle::kmeans_brute_force(
                                                              {pts.begin(), pts.end()}, 3)));
        if (worst_km > 1e-9)
            return {false, fmt("clustering above brute-force optimum by %.2e", worst_km)};
    }
    return {true, fmt("50 pca instances (gap %.1e) and 50 clustering instances (gap %.1e)",
                      worst_pca, worst_km)};
}

}  // namespace

int main(int argc, char** argv) {
    const std::string cli = argc > 1 ? argv[1] : "";
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"analytic gradients match finite differences", criterion_gradients},
        {"type-reduction matches exhaustive enumeration", criterion_type_reduction},
        {"fuzzy trust monotone in each misbehavior rate", criterion_monotonicity},
        {"adversarial training reaches a stable equilibrium", criterion_equilibrium},
        {"reconstruction error separates low-trust vectors", criterion_separation},
        {"attacks cease under half-malicious load", criterion_security},
        {"sweep trends follow the malicious share", criterion_trends},
        {"threshold trim and aggregation worked examples", criterion_thresholds},
        {"fixed-seed CLI runs reproduce artifacts exactly", [&] { return criterion_determinism(cli); }},
        {"feature extraction and clustering match oracles", criterion_oracles},
    };

    int passed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome out;
        try {
            out = criteria[i].second();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        if (out.ok) ++passed;
        std::printf("%s %2zu/10 %-52s %s\n", out.ok ? "PASS" : "FAIL", i + 1,
                    criteria[i].first, out.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("acceptance: %d/10 criteria passed\n", passed);
    return passed == static_cast<int>(criteria.size()) ? 0 : 1;
}
