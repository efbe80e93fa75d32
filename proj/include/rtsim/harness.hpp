#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rtsim/config.hpp"
#include "rtsim/metrics.hpp"
#include "rtsim/simulator.hpp"

namespace rtsim {

struct RunRow {
    double deadline = 0.0;
    double alpha = 0.0;
    std::uint64_t seed = 0;
    MetricsRecord metrics;
    MetricsSummary summary;
};

struct ExperimentResult {
    std::vector<RunRow> rows; // deterministic (deadline, alpha, seed) order
    std::string csv;
    std::string plot;
};

// Executes a single sweep point.
inline RunRow run_point(const ScenarioConfig& cfg, double deadline, double alpha,
                        std::uint64_t seed, std::ostream* trace = nullptr) {
    Simulator sim(build_topology(cfg, seed), make_run_config(cfg, deadline, alpha, seed));
    sim.set_trace(trace);
    const RunSummary rs = sim.run();
    RunRow row;
    row.deadline = deadline;
    row.alpha = alpha;
    row.seed = seed;
    row.metrics = rs.metrics;
    row.summary = summarize(rs.metrics);
    return row;
}

namespace detail {

inline void mean_std(const std::vector<double>& xs, double& mean, double& sd) {
    mean = 0.0;
    sd = 0.0;
    if (xs.empty()) return;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    if (xs.size() < 2) return;
    double acc = 0.0;
    for (double x : xs) acc += (x - mean) * (x - mean);
    sd = std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

} // namespace detail

// One engine run per (deadline x alpha x seed); one CSV row each, plus a
// plot-data file aggregating mean and stddev over seeds per sweep point.
// The sweep variable is the deadline unless only alpha is swept.
inline ExperimentResult run_experiment(const ScenarioConfig& cfg) {
    ExperimentResult out;
    std::ostringstream csv;
    csv << csv_header() << '\n';
    const std::string routing = to_string(cfg.protocol);
    const std::string policy = to_string(cfg.policy);

    for (double deadline : cfg.deadlines) {
        for (double alpha : cfg.alphas) {
            for (std::uint64_t seed : cfg.seeds) {
                RunRow row = run_point(cfg, deadline, alpha, seed);
                csv << csv_row(cfg.name, policy, routing, deadline, alpha, seed, row.metrics)
                    << '\n';
                out.rows.push_back(std::move(row));
            }
        }
    }
    out.csv = csv.str();

    const bool alpha_sweep = cfg.alphas.size() > 1 && cfg.deadlines.size() == 1;
    std::ostringstream plot;
    for (double deadline : cfg.deadlines) {
        for (double alpha : cfg.alphas) {
            std::vector<double> miss, drop;
            for (const RunRow& r : out.rows) {
                if (r.deadline == deadline && r.alpha == alpha) {
                    miss.push_back(r.summary.miss_ratio);
                    drop.push_back(r.summary.drop_ratio);
                }
            }
            double mm = 0.0, ms = 0.0, dm = 0.0, ds = 0.0;
            detail::mean_std(miss, mm, ms);
            detail::mean_std(drop, dm, ds);
            char buf[160];
            std::snprintf(buf, sizeof(buf), "%g %.6f %.6f %.6f %.6f\n",
                          alpha_sweep ? alpha : deadline, mm, ms, dm, ds);
            plot << buf;
        }
    }
    out.plot = plot.str();
    return out;
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << content;
}

// Writes <name>.csv and <name>.plot into `dir`.
inline void write_experiment(const ExperimentResult& res, const ScenarioConfig& cfg,
                             const std::string& dir) {
    const std::string base = dir.empty() ? cfg.name : dir + "/" + cfg.name;
    write_file(base + ".csv", res.csv);
    write_file(base + ".plot", res.plot);
}

// Mean of a metric over seeds at a (deadline, alpha) point.
inline double mean_metric(const std::vector<RunRow>& rows, double deadline,
                          bool drop_ratio = false) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const RunRow& r : rows) {
        if (r.deadline == deadline) {
            sum += drop_ratio ? r.summary.drop_ratio : r.summary.miss_ratio;
            ++count;
        }
    }
    return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

// Topology dump: one line per node, `id x y energy zone`.
inline std::string topology_dump(const Topology& topo) {
    std::ostringstream out;
    for (const TopologyNode& n : topo.nodes()) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%d %g %g %g %s\n", n.id, n.pos.x, n.pos.y,
                      n.energy.remaining, to_string(n.energy.zone(topo.zone_thresholds())));
        out << buf;
    }
    return out.str();
}

} // namespace rtsim
