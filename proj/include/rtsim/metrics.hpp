#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "rtsim/scheduling.hpp"

namespace rtsim {

// Per-run packet accounting. The conservation identity
//   published == on_time + late + dropped + in_flight
// must hold whenever a summary is taken, and the drop ratio can never
// exceed the miss ratio (late and in-flight packets miss without being
// dropped).
struct MetricsRecord {
    std::int64_t published = 0;
    std::int64_t delivered_on_time = 0;
    std::int64_t delivered_late = 0;
    std::int64_t dropped = 0;
    std::int64_t in_flight_at_end = 0;
    std::array<std::int64_t, 4> drop_reasons{}; // indexed by DropReason
    std::vector<double> delays;                 // delivered end-to-end delays
    std::int64_t control_messages = 0;
    std::int64_t collisions = 0;

    void record_published() { ++published; }

    void record_delivered(double delay, bool on_time) {
        if (on_time) {
            ++delivered_on_time;
        } else {
            ++delivered_late;
        }
        delays.push_back(delay);
    }

    void record_dropped(DropReason reason) {
        ++dropped;
        ++drop_reasons[static_cast<std::size_t>(reason)];
    }

    std::int64_t terminated() const { return delivered_on_time + delivered_late + dropped; }

    double miss_ratio() const {
        if (published == 0) return 0.0;
        return static_cast<double>(delivered_late + dropped + in_flight_at_end) /
               static_cast<double>(published);
    }

    double drop_ratio() const {
        if (published == 0) return 0.0;
        return static_cast<double>(dropped) / static_cast<double>(published);
    }
};

struct MetricsSummary {
    double miss_ratio = 0.0;
    double drop_ratio = 0.0;
    double mean_delay = 0.0;
    double median_delay = 0.0;
    double p95_delay = 0.0;
    std::int64_t control_messages = 0;
    bool empty_run = false; // published == 0, ratios reported as zero
};

inline double percentile(std::vector<double> sorted, double p) {
    if (sorted.empty()) return 0.0;
    const auto n = static_cast<double>(sorted.size());
    auto idx = static_cast<std::size_t>(std::max(0.0, std::ceil(p * n) - 1.0));
    idx = std::min(idx, sorted.size() - 1);
    return sorted[idx];
}

inline MetricsSummary summarize(const MetricsRecord& rec) {
    if (rec.published !=
        rec.delivered_on_time + rec.delivered_late + rec.dropped + rec.in_flight_at_end) {
        throw std::logic_error("metrics conservation violated: published=" +
                               std::to_string(rec.published));
    }
    MetricsSummary s;
    s.empty_run = rec.published == 0;
    s.miss_ratio = rec.miss_ratio();
    s.drop_ratio = rec.drop_ratio();
    s.control_messages = rec.control_messages;
    if (!rec.delays.empty()) {
        std::vector<double> sorted = rec.delays;
        std::sort(sorted.begin(), sorted.end());
        double sum = 0.0;
        for (double d : sorted) sum += d;
        s.mean_delay = sum / static_cast<double>(sorted.size());
        s.median_delay = percentile(sorted, 0.50);
        s.p95_delay = percentile(sorted, 0.95);
    }
    return s;
}

inline const char* csv_header() {
    return "scenario,policy,routing,deadline_s,alpha,seed,published,on_time,late,dropped,"
           "in_flight,miss_ratio,drop_ratio,mean_delay_s,p95_delay_s,control_msgs";
}

inline std::string csv_row(const std::string& scenario, const std::string& policy,
                           const std::string& routing, double deadline, double alpha,
                           std::uint64_t seed, const MetricsRecord& rec) {
    const MetricsSummary s = summarize(rec);
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "%s,%s,%s,%g,%g,%llu,%lld,%lld,%lld,%lld,%lld,%.6f,%.6f,%.6f,%.6f,%lld",
                  scenario.c_str(), policy.c_str(), routing.c_str(), deadline, alpha,
                  static_cast<unsigned long long>(seed),
                  static_cast<long long>(rec.published),
                  static_cast<long long>(rec.delivered_on_time),
                  static_cast<long long>(rec.delivered_late),
                  static_cast<long long>(rec.dropped),
                  static_cast<long long>(rec.in_flight_at_end), s.miss_ratio, s.drop_ratio,
                  s.mean_delay, s.p95_delay, static_cast<long long>(s.control_messages));
    return buf;
}

} // namespace rtsim
