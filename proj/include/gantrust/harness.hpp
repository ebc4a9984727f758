#pragma once
// Experiment harness: scenario runs, summary metrics, malicious-percentage
// sweeps, CSV/JSON artifact writers, and SVG chart emission.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gantrust/config.hpp"
#include "gantrust/sim.hpp"

namespace gantrust {

// --- Summary metrics ----------------------------------------------------------

struct SummaryMetrics {
    double security_rate = 1.0;    // (R_total - last attack round) / R_total
    long long total_attacks = 0;
    int last_attack_round = 0;     // 0 when no attack ever happened
    int fnd = 0;                   // first device death round; R_total if none
    int hnd = 0;                   // half devices dead round; R_total if unreached
    long long throughput = 0;      // packets delivered untampered and undelayed
    bool trained = false;          // at least one model finished training
};

// Rebuilds the summary from the event log alone. `r_total` is the round
// budget the run was configured with; lifetime milestones that never happened
// report the full budget.
inline SummaryMetrics compute_metrics(const std::vector<Event>& events, int r_total,
                                      int device_count) {
    SummaryMetrics m;
    m.fnd = r_total;
    m.hnd = r_total;
    int deaths = 0;
    const int half = (device_count + 1) / 2;
    for (const Event& e : events) {
        if (e.kind == "attack") {
            m.total_attacks++;
            m.last_attack_round = std::max(m.last_attack_round, e.round);
        } else if (e.kind == "deliver") {
            m.throughput += std::stoll(e.value);
        } else if (e.kind == "death") {
            deaths++;
            if (deaths == 1) m.fnd = std::min(m.fnd, e.round);
            if (deaths == half) m.hnd = std::min(m.hnd, e.round);
        } else if (e.kind == "train") {
            m.trained = true;
        }
    }
    m.security_rate =
        clamp01(static_cast<double>(r_total - m.last_attack_round) / static_cast<double>(r_total));
    return m;
}

struct ScenarioResult {
    NetworkState state;
    SummaryMetrics summary;
};

// Full scenario: initialize, run rounds until the budget is spent or every
// device is dead, then summarize. Training divergence propagates.
inline ScenarioResult run_scenario(const ScenarioConfig& cfg) {
    ScenarioResult res{init_network(cfg), {}};
    while (res.state.round < cfg.round_budget && alive_count(res.state) > 0)
        run_round(res.state);
    res.summary = compute_metrics(res.state.events, cfg.round_budget, cfg.device_count);
    res.summary.trained = res.state.have_train_stats;
    return res;
}

// --- Malicious-percentage sweep -----------------------------------------------

struct SweepRun {
    double malicious_pct = 0.0;
    std::uint64_t seed = 0;
    SummaryMetrics metrics;
};

struct MetricStats {
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation; 0 for a single run
};

struct SweepAggregate {
    double malicious_pct = 0.0;
    MetricStats security_rate, total_attacks, last_attack_round, fnd, hnd, throughput;
};

struct SweepTable {
    std::vector<SweepRun> runs;             // percentage-major, seed-minor
    std::vector<SweepAggregate> aggregates;  // one per percentage
};

inline MetricStats stats_of(const std::vector<double>& xs) {
    MetricStats s;
    if (xs.empty()) return s;
    for (double x : xs) s.mean += x;
    s.mean /= static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double acc = 0.0;
        for (double x : xs) acc += (x - s.mean) * (x - s.mean);
        s.stddev = std::sqrt(acc / static_cast<double>(xs.size() - 1));
    }
    return s;
}

// The same derived seed set is reused at every percentage so that sweep points
// differ only in the malicious share, not in the random draws.
inline std::vector<std::uint64_t> sweep_seed_set(const ScenarioConfig& base) {
    std::vector<std::uint64_t> seeds;
    seeds.reserve(static_cast<std::size_t>(base.sweep_seeds));
    for (int i = 0; i < base.sweep_seeds; ++i)
        seeds.push_back(derive_seed(base.seed, 0x7377, static_cast<std::uint64_t>(i)));
    return seeds;
}

inline SweepTable sweep_malicious(const ScenarioConfig& base,
                                  const std::vector<double>& percentages = {10, 20, 30, 40, 50}) {
    SweepTable table;
    const std::vector<std::uint64_t> seeds = sweep_seed_set(base);
    for (double pct : percentages) {
        std::vector<SummaryMetrics> metrics;
        for (std::uint64_t seed : seeds) {
            ScenarioConfig cfg = base;
            cfg.malicious_pct = pct;
            cfg.seed = seed;
            ScenarioResult res = run_scenario(cfg);
            table.runs.push_back({pct, seed, res.summary});
            metrics.push_back(res.summary);
        }
        auto column = [&](auto field) {
            std::vector<double> xs;
            xs.reserve(metrics.size());
            for (const SummaryMetrics& m : metrics) xs.push_back(static_cast<double>(m.*field));
            return stats_of(xs);
        };
        SweepAggregate agg;
        agg.malicious_pct = pct;
        agg.security_rate = column(&SummaryMetrics::security_rate);
        agg.total_attacks = column(&SummaryMetrics::total_attacks);
        agg.last_attack_round = column(&SummaryMetrics::last_attack_round);
        agg.fnd = column(&SummaryMetrics::fnd);
        agg.hnd = column(&SummaryMetrics::hnd);
        agg.throughput = column(&SummaryMetrics::throughput);
        table.aggregates.push_back(agg);
    }
    return table;
}

// --- Artifact writers ---------------------------------------------------------

// All doubles are printed with %.17g so a value survives a write/read
// round-trip and identical runs produce identical bytes.
inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    return out;
}

inline void write_metrics_csv(std::ostream& out, const NetworkState& st) {
    out << "round,alive,delivered,attacks,energy_remaining\n";
    for (const MetricsRow& r : st.metrics)
        out << r.round << ',' << r.alive << ',' << r.delivered << ',' << r.attacks << ','
            << format_double(r.energy_remaining) << '\n';
}

inline void write_events_csv(std::ostream& out, const NetworkState& st) {
    out << "round,kind,actor,target,value\n";
    for (const Event& e : st.events) {
        out << e.round << ',' << e.kind << ',';
        if (e.actor >= 0) out << e.actor;
        out << ',';
        if (e.target >= 0) out << e.target;
        out << ',' << e.value << '\n';
    }
}

inline void write_training_csv(std::ostream& out, const TrainStats& stats) {
    out << "epoch,d_t_loss,d_l_loss,gen_score_loss,enc_score_loss,recon_loss,"
           "score_real,score_fake\n";
    int epoch = 1;
    for (const EpochStats& e : stats.epochs)
        out << epoch++ << ',' << format_double(e.d_t_loss) << ',' << format_double(e.d_l_loss)
            << ',' << format_double(e.gen_score_loss) << ',' << format_double(e.enc_score_loss)
            << ',' << format_double(e.recon_loss) << ',' << format_double(e.score_real) << ','
            << format_double(e.score_fake) << '\n';
}

inline void write_summary_json(std::ostream& out, const SummaryMetrics& m,
                               const ScenarioConfig& cfg) {
    out << "{\n"
        << "  \"device_count\": " << cfg.device_count << ",\n"
        << "  \"malicious_pct\": " << format_double(cfg.malicious_pct) << ",\n"
        << "  \"seed\": " << cfg.seed << ",\n"
        << "  \"round_budget\": " << cfg.round_budget << ",\n"
        << "  \"security_rate\": " << format_double(m.security_rate) << ",\n"
        << "  \"total_attacks\": " << m.total_attacks << ",\n"
        << "  \"last_attack_round\": " << m.last_attack_round << ",\n"
        << "  \"fnd\": " << m.fnd << ",\n"
        << "  \"hnd\": " << m.hnd << ",\n"
        << "  \"throughput\": " << m.throughput << ",\n"
        << "  \"trained\": " << (m.trained ? "true" : "false") << "\n"
        << "}\n";
}

inline void write_sweep_csv(std::ostream& out, const SweepTable& table) {
    out << "malicious_pct,kind,seed,security_rate,total_attacks,last_attack_round,fnd,hnd,"
           "throughput,std_security_rate,std_total_attacks,std_last_attack_round,std_fnd,"
           "std_hnd,std_throughput\n";
    for (const SweepRun& r : table.runs)
        out << format_double(r.malicious_pct) << ",run," << r.seed << ','
            << format_double(r.metrics.security_rate) << ',' << r.metrics.total_attacks << ','
            << r.metrics.last_attack_round << ',' << r.metrics.fnd << ',' << r.metrics.hnd << ','
            << r.metrics.throughput << ",,,,,,\n";
    for (const SweepAggregate& a : table.aggregates)
        out << format_double(a.malicious_pct) << ",aggregate,," << format_double(a.security_rate.mean)
            << ',' << format_double(a.total_attacks.mean) << ','
            << format_double(a.last_attack_round.mean) << ',' << format_double(a.fnd.mean) << ','
            << format_double(a.hnd.mean) << ',' << format_double(a.throughput.mean) << ','
            << format_double(a.security_rate.stddev) << ',' << format_double(a.total_attacks.stddev)
            << ',' << format_double(a.last_attack_round.stddev) << ','
            << format_double(a.fnd.stddev) << ',' << format_double(a.hnd.stddev) << ','
            << format_double(a.throughput.stddev) << '\n';
}

// Path-taking conveniences for the writers above.
inline void write_metrics_csv(const std::string& path, const NetworkState& st) {
    std::ofstream out = open_output(path);
    write_metrics_csv(out, st);
}
inline void write_events_csv(const std::string& path, const NetworkState& st) {
    std::ofstream out = open_output(path);
    write_events_csv(out, st);
}
inline void write_training_csv(const std::string& path, const TrainStats& stats) {
    std::ofstream out = open_output(path);
    write_training_csv(out, stats);
}
inline void write_summary_json(const std::string& path, const SummaryMetrics& m,
                               const ScenarioConfig& cfg) {
    std::ofstream out = open_output(path);
    write_summary_json(out, m, cfg);
}
inline void write_sweep_csv(const std::string& path, const SweepTable& table) {
    std::ofstream out = open_output(path);
    write_sweep_csv(out, table);
}

// --- CSV reading (for the chart step) -----------------------------------------

// Our own artifact format: comma-separated, no quoting (event text is
// sanitized at the source), first line is the header.
struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    bool empty() const { return rows.empty(); }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
}

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read file: " + path);
    CsvTable t;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (first) {
            t.columns = split_csv_line(line);
            first = false;
        } else {
            std::vector<std::string> cells = split_csv_line(line);
            cells.resize(t.columns.size());
            t.rows.push_back(std::move(cells));
        }
    }
    return t;
}

inline int column_index(const CsvTable& t, const std::string& name) {
    for (std::size_t i = 0; i < t.columns.size(); ++i)
        if (t.columns[i] == name) return static_cast<int>(i);
    return -1;
}

inline int require_column(const CsvTable& t, const std::string& name) {
    const int idx = column_index(t, name);
    if (idx < 0) throw ConfigError("table is missing column '" + name + "'");
    return idx;
}

// Rows whose `column` cell equals `value`. A table without a header (no file
// was written) passes through untouched.
inline CsvTable filter_rows(const CsvTable& t, const std::string& column,
                            const std::string& value) {
    if (t.columns.empty()) return t;
    CsvTable out;
    out.columns = t.columns;
    const int idx = require_column(t, column);
    for (const auto& row : t.rows)
        if (row[static_cast<std::size_t>(idx)] == value) out.rows.push_back(row);
    return out;
}

// --- SVG line charts ----------------------------------------------------------

struct ChartSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

// Pulls one series per y column out of a table. A header that lacks a
// requested column is an error; a table without any header (no file was
// written) yields empty series, rendered as bare axes.
inline std::vector<ChartSeries> chart_series_from(const CsvTable& t, const std::string& x_col,
                                                  const std::vector<std::string>& y_cols) {
    std::vector<ChartSeries> series;
    if (t.columns.empty()) {
        for (const std::string& name : y_cols) series.push_back({name, {}, {}});
        return series;
    }
    const int xi = require_column(t, x_col);
    for (const std::string& name : y_cols) {
        const int yi = require_column(t, name);
        ChartSeries s;
        s.label = name;
        for (const auto& row : t.rows) {
            s.x.push_back(std::stod(row[static_cast<std::size_t>(xi)]));
            s.y.push_back(std::stod(row[static_cast<std::size_t>(yi)]));
        }
        series.push_back(std::move(s));
    }
    return series;
}

// One polyline per series. Series live on very different scales (losses vs
// packet counts), so each is min-max normalized into the plot area and the
// y axis is labeled accordingly.
inline std::string render_line_chart(const std::string& title, const std::string& x_label,
                                     const std::vector<ChartSeries>& series) {
    static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                     "#9467bd", "#8c564b", "#17becf"};
    const double width = 800, height = 420;
    const double left = 60, right = 640, top = 50, bottom = 370;

    double x_min = 0, x_max = 1;
    bool have_x = false;
    for (const ChartSeries& s : series)
        for (double v : s.x) {
            if (!have_x) {
                x_min = x_max = v;
                have_x = true;
            }
            x_min = std::min(x_min, v);
            x_max = std::max(x_max, v);
        }

    auto map_x = [&](double v) {
        if (x_max == x_min) return (left + right) / 2.0;
        return left + (v - x_min) / (x_max - x_min) * (right - left);
    };

    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n"
        << "  <rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
        << "\" fill=\"white\"/>\n"
        << "  <text x=\"" << (left + right) / 2 << "\" y=\"28\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"16\">"
        << title << "</text>\n"
        << "  <line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << right << "\" y2=\""
        << bottom << "\" stroke=\"black\"/>\n"
        << "  <line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
        << bottom << "\" stroke=\"black\"/>\n"
        << "  <text x=\"" << (left + right) / 2 << "\" y=\"" << height - 12
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << x_label
        << "</text>\n"
        << "  <text x=\"18\" y=\"" << (top + bottom) / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
           "transform=\"rotate(-90 18 "
        << (top + bottom) / 2 << ")\">normalized per series</text>\n";
    if (have_x) {
        out << "  <text x=\"" << left << "\" y=\"" << bottom + 18
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
            << format_double(x_min) << "</text>\n"
            << "  <text x=\"" << right << "\" y=\"" << bottom + 18
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
            << format_double(x_max) << "</text>\n";
    }

    for (std::size_t i = 0; i < series.size(); ++i) {
        const ChartSeries& s = series[i];
        const char* color = kPalette[i % (sizeof kPalette / sizeof kPalette[0])];
        const double legend_y = top + 16.0 * static_cast<double>(i);
        out << "  <rect x=\"" << right + 14 << "\" y=\"" << legend_y - 9
            << "\" width=\"10\" height=\"10\" fill=\"" << color << "\"/>\n"
            << "  <text x=\"" << right + 30 << "\" y=\"" << legend_y
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.label << "</text>\n";
        if (s.y.empty()) continue;
        double y_min = s.y.front(), y_max = s.y.front();
        for (double v : s.y) {
            y_min = std::min(y_min, v);
            y_max = std::max(y_max, v);
        }
        auto map_y = [&](double v) {
            if (y_max == y_min) return (top + bottom) / 2.0;
            return bottom - (v - y_min) / (y_max - y_min) * (bottom - top);
        };
        out << "  <polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        char buf[64];
        for (std::size_t k = 0; k < s.x.size(); ++k) {
            std::snprintf(buf, sizeof buf, "%.2f,%.2f", map_x(s.x[k]), map_y(s.y[k]));
            out << (k ? " " : "") << buf;
        }
        out << "\"/>\n";
    }
    out << "</svg>\n";
    return out.str();
}

inline void write_chart(const std::string& path, const std::string& title,
                        const std::string& x_label, const std::vector<ChartSeries>& series) {
    bool any_points = false;
    for (const ChartSeries& s : series) any_points = any_points || !s.y.empty();
    if (!any_points)
        std::cerr << "warning: no data for " << path << "; emitting empty axes\n";
    open_output(path) << render_line_chart(title, x_label, series);
}

// The four standard charts. `training` feeds the loss/score pair;
// the aggregate rows of `sweep` feed the security and performance panels.
inline void emit_plots(const CsvTable& training, const CsvTable& sweep,
                       const std::string& out_dir) {
    write_chart(out_dir + "/losses.svg", "Training losses per epoch", "epoch",
                chart_series_from(training, "epoch",
                                  {"d_t_loss", "d_l_loss", "gen_score_loss", "enc_score_loss",
                                   "recon_loss"}));
    write_chart(out_dir + "/scores.svg", "Discriminator realness scores per epoch", "epoch",
                chart_series_from(training, "epoch", {"score_real", "score_fake"}));
    const CsvTable agg =
        sweep.columns.empty() ? sweep : filter_rows(sweep, "kind", "aggregate");
    write_chart(out_dir + "/security.svg", "Security vs malicious share", "malicious %",
                chart_series_from(agg, "malicious_pct", {"security_rate", "total_attacks"}));
    write_chart(out_dir + "/performance.svg", "Network performance vs malicious share",
                "malicious %",
                chart_series_from(agg, "malicious_pct", {"fnd", "hnd", "throughput"}));
}

}  // namespace gantrust
