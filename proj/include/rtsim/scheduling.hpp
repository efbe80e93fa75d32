#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "rtsim/topology.hpp"

namespace rtsim {

using PacketId = std::int32_t;

enum class PolicyVariant : std::uint8_t {
    Srts,         // per-hop delay from source-fixed deadline and distance
    Drts,         // per-hop delay from remaining slack and remaining distance
    NlrtsStatic,  // geometric slack split, source-fixed basis
    NlrtsDynamic, // geometric slack split, remaining-slack basis
    Svm,          // velocity priority fixed at the source, no delaying
    Dvm,          // velocity priority recomputed per hop, no delaying
    Fifo,
};

inline const char* to_string(PolicyVariant v) {
    switch (v) {
    case PolicyVariant::Srts: return "srts";
    case PolicyVariant::Drts: return "drts";
    case PolicyVariant::NlrtsStatic: return "nlrts-static";
    case PolicyVariant::NlrtsDynamic: return "nlrts-dynamic";
    case PolicyVariant::Svm: return "svm";
    case PolicyVariant::Dvm: return "dvm";
    case PolicyVariant::Fifo: return "fifo";
    }
    return "?";
}

inline bool is_vms(PolicyVariant v) {
    return v == PolicyVariant::Svm || v == PolicyVariant::Dvm;
}

enum class DistanceMetric : std::uint8_t { Hops, Euclidean };

struct Policy {
    PolicyVariant variant = PolicyVariant::Drts;
    double alpha = 0.7; // fraction of slack spent on intentional delay
    DistanceMetric metric = DistanceMetric::Hops;
    double ohd = 250.0;           // one-hop distance for the Euclidean metric, meters
    double dvm_epsilon = 1e-3;    // slack floor for overdue packets under DVM
    double exponent_cap = 60.0;   // nonlinear 2^x exponent cap
};

// Per-hop outcomes recorded while a packet travels.
struct HopRecord {
    NodeId node = kNoNode;
    double arrived = 0.0;
    double released = 0.0;
    double delivered = 0.0; // TxEnd of the successful hop transmission
};

enum class PacketState : std::uint8_t { InFlight, DeliveredOnTime, DeliveredLate, Dropped };

enum class DropReason : std::uint8_t { MacFailure, QueueOverflow, GfVoid, RouteFailure };

inline const char* to_string(DropReason r) {
    switch (r) {
    case DropReason::MacFailure: return "mac_failure";
    case DropReason::QueueOverflow: return "queue_overflow";
    case DropReason::GfVoid: return "gf_void";
    case DropReason::RouteFailure: return "route_failure";
    }
    return "?";
}

struct Packet {
    PacketId id = -1;
    NodeId source = kNoNode;
    NodeId sink = kNoNode;
    double created_at = 0.0;
    double e2e_deadline = 0.0;      // relative, carried in the packet header
    double distance_at_source = 0.0; // source->sink distance in policy metric units
    double velocity_at_source = 0.0; // SVM priority, fixed when published
    std::int32_t hops_traversed = 0;
    PacketState state = PacketState::InFlight;
    DropReason drop_reason = DropReason::MacFailure;
    std::vector<HopRecord> per_hop;

    double elapsed(double now) const { return now - created_at; }
};

// One-hop transmission delay estimate, exponentially smoothed.
class EtdEstimator {
public:
    EtdEstimator() = default;
    EtdEstimator(double initial, double smoothing) : etd_(initial), smoothing_(smoothing) {}

    double etd() const { return etd_; }
    bool initialized() const { return initialized_; }

    void update(double sample) {
        if (sample < 0.0) throw std::invalid_argument("EtdEstimator: negative delay sample");
        if (!initialized_) {
            // First measurement replaces the configured prior outright.
            etd_ = sample;
            initialized_ = true;
        } else {
            etd_ = (1.0 - smoothing_) * etd_ + smoothing_ * sample;
        }
    }

private:
    double etd_ = 0.0;
    double smoothing_ = 0.2;
    bool initialized_ = false;
};

// EETD: the one-hop estimate projected over the remaining distance.
// Under the hop metric, ohd == 1 and remaining_distance is a hop count.
inline double compute_eetd(double etd, double remaining_distance, double ohd) {
    if (ohd <= 0.0) throw std::invalid_argument("compute_eetd: one-hop distance must be > 0");
    return etd * remaining_distance / ohd;
}

// Divisors that stand for "number of hops still to pay for" are rounded up
// and never fall below one at a non-sink node.
inline double hops_equivalent(double distance, double ohd) {
    return std::max(1.0, std::ceil(distance / ohd));
}

// Equal split of the slack over the whole path, fixed at the source:
// TD = (deadline - EETD) / distance * alpha, clamped at zero.
inline double target_delay_static(double deadline, double eetd, double distance, double ohd,
                                  double alpha) {
    const double slack = std::max(0.0, deadline - eetd);
    return slack / hops_equivalent(distance, ohd) * alpha;
}

// Per-hop recomputation from the remaining slack and remaining distance.
inline double target_delay_dynamic(double deadline, double elapsed, double etd,
                                   double remaining_distance, double ohd, double alpha) {
    const double eetd = compute_eetd(etd, remaining_distance, ohd);
    const double slack = std::max(0.0, (deadline - elapsed) - eetd);
    return slack / hops_equivalent(remaining_distance, ohd) * alpha;
}

// Geometric slack split: the divisor halves with every hop toward the sink,
// so packets bank extra time for the contested region near it. The exponent
// is real-valued under the Euclidean metric and capped to avoid underflow.
inline double target_delay_nonlinear(double slack_basis, double eetd, double remaining_distance,
                                     double ohd, double alpha, double exponent_cap = 60.0) {
    if (ohd <= 0.0) throw std::invalid_argument("target_delay_nonlinear: ohd must be > 0");
    const double slack = std::max(0.0, slack_basis - eetd);
    const double exponent = remaining_distance / ohd;
    if (exponent > exponent_cap) return 0.0;
    return slack / std::exp2(exponent) * alpha;
}

// Requested velocity for the VMS baselines; higher velocity outranks lower.
// SVM fixes it at the source, DVM recomputes per hop from the remaining
// slack (with a floor so overdue packets keep a finite, maximal rank).
inline double vms_velocity(double distance, double time_budget, double epsilon = 1e-3) {
    return distance / std::max(epsilon, time_budget);
}

// Transmit queue entry. RTS keys on release_time = arrival + target delay;
// the VMS variants key on velocity and never delay.
struct QueueEntry {
    PacketId packet = -1;
    double arrival = 0.0;
    double release_time = 0.0;
    double velocity = 0.0;
    std::uint64_t arrival_seq = 0;
};

enum class QueueDiscipline : std::uint8_t { ReleaseTime, Velocity };

// Bounded per-node transmit queue. Pops follow the discipline; overflow
// evicts the least urgent entry (latest release, or lowest velocity under
// VMS) so the most urgent traffic survives.
class ReleaseQueue {
public:
    ReleaseQueue() = default;
    ReleaseQueue(std::size_t capacity, QueueDiscipline discipline)
        : capacity_(capacity), discipline_(discipline) {}

    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    const std::vector<QueueEntry>& entries() const { return entries_; }

    // Inserts and, on overflow, returns the evicted packet id.
    PacketId push(QueueEntry e) {
        e.arrival_seq = next_seq_++;
        entries_.push_back(e);
        if (entries_.size() <= capacity_) return -1;
        std::size_t worst = 0;
        for (std::size_t i = 1; i < entries_.size(); ++i) {
            if (less_urgent(entries_[i], entries_[worst])) worst = i;
        }
        const PacketId dropped = entries_[worst].packet;
        entries_.erase(entries_.begin() + static_cast<std::ptrdiff_t>(worst));
        return dropped;
    }

    bool has_due(double now) const {
        for (const QueueEntry& e : entries_) {
            if (e.release_time <= now) return true;
        }
        return false;
    }

    // Pops the entry to transmit next at `now`, or packet -1 when nothing
    // is due yet.
    QueueEntry pop_due(double now) {
        std::ptrdiff_t best = -1;
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            if (entries_[i].release_time > now) continue;
            if (best < 0 || more_urgent(entries_[i], entries_[static_cast<std::size_t>(best)])) {
                best = static_cast<std::ptrdiff_t>(i);
            }
        }
        if (best < 0) return QueueEntry{};
        QueueEntry e = entries_[static_cast<std::size_t>(best)];
        entries_.erase(entries_.begin() + best);
        return e;
    }

private:
    bool more_urgent(const QueueEntry& x, const QueueEntry& y) const {
        if (discipline_ == QueueDiscipline::Velocity) {
            if (x.velocity != y.velocity) return x.velocity > y.velocity;
        } else if (x.release_time != y.release_time) {
            return x.release_time < y.release_time;
        }
        return x.arrival_seq < y.arrival_seq; // FIFO within ties
    }

    bool less_urgent(const QueueEntry& x, const QueueEntry& y) const {
        if (discipline_ == QueueDiscipline::Velocity) {
            if (x.velocity != y.velocity) return x.velocity < y.velocity;
        } else if (x.release_time != y.release_time) {
            return x.release_time > y.release_time;
        }
        return x.arrival_seq > y.arrival_seq;
    }

    std::size_t capacity_ = 64;
    QueueDiscipline discipline_ = QueueDiscipline::ReleaseTime;
    std::vector<QueueEntry> entries_;
    std::uint64_t next_seq_ = 0;
};

} // namespace rtsim
