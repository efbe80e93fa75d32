#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "rtsim/rng.hpp"
#include "rtsim/scheduling.hpp"
#include "rtsim/topology.hpp"

namespace rtsim {

// Abstract shared-medium contention model: slotted binary-exponential
// backoff in front of every transmission, and a collision whenever two
// transmissions overlap in time with senders inside mutual interference
// range. No carrier sensing, no capture effect.
struct MacParams {
    double bandwidth_bps = 2'000'000.0;
    std::uint32_t packet_bytes = 32;
    double slot_s = 20e-6;
    std::uint32_t w0 = 32;          // initial contention window, slots
    std::uint32_t max_retries = 5;
    std::uint32_t queue_capacity = 8; // interface queue between scheduler and radio
    double interference_range = 250.0; // defaults to the radio range
    double sense_range = 250.0;        // carrier-sense range, >= interference
    double frame_overhead_s = 0.0;  // fixed per-frame airtime beyond payload
    std::uint32_t priority_classes = 8;   // VMS prioritizing extension
    double velocity_bin = 250.0;          // m/s per priority class step

    // Payload airtime: packetBits / bandwidth.
    double payload_time() const {
        return static_cast<double>(packet_bytes) * 8.0 / bandwidth_bps;
    }

    double frame_time() const { return payload_time() + frame_overhead_s; }

    // Mean idle-channel backoff, used to seed the delay estimator.
    double mean_initial_backoff() const {
        return slot_s * static_cast<double>(w0 - 1) / 2.0;
    }

    // Contention window after `retries` failed attempts (doubles each time).
    std::uint32_t window(std::uint32_t retries, std::uint32_t priority_class = 0) const {
        std::uint32_t w = base_window(priority_class);
        for (std::uint32_t i = 0; i < retries; ++i) w = std::min(w * 2, 65536u);
        return std::max(1u, w);
    }

    // VMS prioritizing extension: the contention window scales with class
    // rank, so a higher class (lower ordinal) gets earlier channel access
    // in expectation. Class 0 with one configured class reproduces the
    // plain window, which is what RTS and FIFO use.
    std::uint32_t base_window(std::uint32_t priority_class) const {
        const std::uint32_t k = std::max(1u, priority_classes);
        const std::uint32_t c = std::min(priority_class, k - 1);
        return std::max(1u, w0 * (c + 1) / k);
    }

    // Quantizes a requested velocity into a class ordinal; faster packets
    // map to lower ordinals (higher priority).
    std::uint32_t velocity_class(double velocity) const {
        const std::uint32_t k = std::max(1u, priority_classes);
        const double bins = std::floor(std::max(0.0, velocity) / velocity_bin);
        const auto reach = static_cast<std::uint32_t>(std::min<double>(bins, k - 1));
        return (k - 1) - reach;
    }

    double draw_backoff(Rng& rng, std::uint32_t retries, std::uint32_t priority_class = 0) const {
        return slot_s * static_cast<double>(rng.uniform_int(window(retries, priority_class)));
    }
};

// Measured one-hop delay fed to the ETD estimator: time from MAC handoff to
// acknowledged completion.
inline double measure_hop_delay(double send_ready, double ack_time) {
    if (ack_time < send_ready) throw std::invalid_argument("measure_hop_delay: ack before send");
    return ack_time - send_ready;
}

enum class FrameKind : std::uint8_t { Data, RouteRequest, RouteRepair, RouteError };

inline const char* to_string(FrameKind k) {
    switch (k) {
    case FrameKind::Data: return "data";
    case FrameKind::RouteRequest: return "rreq";
    case FrameKind::RouteRepair: return "rrpr";
    case FrameKind::RouteError: return "err";
    }
    return "?";
}

// One transmission job owned by a node's MAC. Data frames retry with a
// doubled window up to max_retries; broadcasts (receiver == kNoNode) get a
// single attempt.
struct Frame {
    std::int32_t id = -1;
    FrameKind kind = FrameKind::Data;
    NodeId sender = kNoNode;
    NodeId receiver = kNoNode; // kNoNode -> broadcast to all live neighbors
    PacketId packet = -1;
    std::int32_t control = -1; // control-message slab index
    double send_ready = 0.0;   // when the frame was handed to the MAC
    std::uint32_t retries = 0;
    std::uint32_t priority_class = 0;
    bool collided = false;
    bool on_air = false;
    double tx_start = 0.0;
    double tx_end = 0.0;
    // Backoff countdown state: remaining slots and when counting resumed.
    // The counter freezes while the channel is busy and resumes after, so
    // stations that deferred keep their place in line.
    std::uint32_t slots_left = 0;
    double counting_since = 0.0;
    // Senders of transmissions that overlapped this frame in time; whether
    // they corrupt it is decided at the receiver when the frame resolves.
    std::vector<NodeId> overlap_senders;
};

// Tracks transmissions currently on the air. Senders listen before talking:
// a transmission at least one slot old is sensed as busy and the attempt
// defers past it. Starts within the same slot slip through the sensing
// window and overlap. Two overlapping transmissions whose senders are in
// mutual interference range fail outright; beyond sensing range they are
// hidden terminals, and a reception fails when any overlapping sender was
// within interference range of the receiver.
class Channel {
public:
    explicit Channel(double interference_range = 250.0, double sense_range = 250.0)
        : range_(interference_range), sense_range_(std::max(interference_range, sense_range)) {}

    struct Sense {
        bool busy = false;
        double onset = 0.0; // earliest start among sensed transmissions
        double until = 0.0; // latest end among sensed transmissions
    };

    // Carrier sense at an attempt. Transmissions younger than one slot are
    // still invisible to the sender.
    Sense sense(NodeId sender, double now, double slot, const std::vector<Frame>& frames,
                const Topology& topo) const {
        Sense s;
        for (std::int32_t other_id : on_air_) {
            const Frame& other = frames[static_cast<std::size_t>(other_id)];
            if (now - other.tx_start < slot - 1e-12) continue; // not sensable yet
            if (topo.dist(sender, other.sender) <= sense_range_) {
                s.onset = s.busy ? std::min(s.onset, other.tx_start) : other.tx_start;
                s.until = std::max(s.until, other.tx_end);
                s.busy = true;
            }
        }
        return s;
    }

    // Registers a starting transmission. Senders in mutual range collide as
    // a set; all overlaps are recorded for receiver-side interference.
    void begin(Frame& frame, std::vector<Frame>& frames, const Topology& topo) {
        for (std::int32_t other_id : on_air_) {
            Frame& other = frames[static_cast<std::size_t>(other_id)];
            other.overlap_senders.push_back(frame.sender);
            frame.overlap_senders.push_back(other.sender);
            if (topo.dist(frame.sender, other.sender) <= range_) {
                other.collided = true;
                frame.collided = true;
            }
        }
        on_air_.push_back(frame.id);
        frame.on_air = true;
    }

    // Hidden-terminal check: did any overlapping transmission land on this
    // receiver with interfering power?
    bool interfered_at(const Frame& frame, NodeId receiver, const Topology& topo) const {
        for (NodeId s : frame.overlap_senders) {
            if (topo.dist(s, receiver) <= range_) return true;
        }
        return false;
    }

    void end(Frame& frame) {
        on_air_.erase(std::remove(on_air_.begin(), on_air_.end(), frame.id), on_air_.end());
        frame.on_air = false;
    }

private:
    double range_;
    double sense_range_;
    std::vector<std::int32_t> on_air_;
};

} // namespace rtsim
