#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rtsim/event.hpp"
#include "rtsim/mac.hpp"
#include "rtsim/metrics.hpp"
#include "rtsim/rng.hpp"
#include "rtsim/routing.hpp"
#include "rtsim/scheduling.hpp"
#include "rtsim/topology.hpp"

namespace rtsim {

// Scenario directive: kill or revive a node at a fixed time.
struct NodeDirective {
    double time = 0.0;
    NodeId node = kNoNode;
    bool revive = false;
};

struct TrafficSpec {
    bool bursty = false;
    double rate_pps = 2.0;
    double burst_on_s = 5.0;
    double burst_off_s = 5.0;
    std::vector<NodeId> sources; // empty -> every non-sink node
};

// Everything one run needs beyond the topology.
struct RunConfig {
    std::string scenario = "run";
    Policy policy;
    RoutingProtocol protocol = RoutingProtocol::ShortestPath;
    bool power_aware = true;
    bool vn_repair = true;
    MacParams mac;
    TrafficSpec traffic;
    double sim_time = 120.0;
    double deadline = 1.0;
    std::uint64_t seed = 1;
    std::size_t queue_capacity = 64;
    double etd_smoothing = 0.2;
    double repair_timeout = 1.0;
    double energy_check_period = 0.0; // 0 -> disabled
    std::vector<NodeDirective> directives;
};

struct RunSummary {
    MetricsRecord metrics;
    std::uint64_t events_dispatched = 0;
    std::uint64_t frames_sent = 0;
    std::uint64_t repairs_started = 0;
    std::uint64_t vn_splices = 0;
    std::uint64_t rreq_floods = 0;
};

// Deterministic single-run discrete-event simulator. One instance runs one
// (scenario, seed) point; query packets() afterwards for per-packet detail.
class Simulator {
public:
    Simulator(Topology topology, RunConfig cfg)
        : topo_(std::move(topology)), cfg_(std::move(cfg)) {
        if (is_vms(cfg_.policy.variant)) {
            // RTS and FIFO contend in a single class.
        } else {
            cfg_.mac.priority_classes = 1;
        }
        nodes_.resize(topo_.size());
        const double etd0 = cfg_.mac.payload_time() + cfg_.mac.mean_initial_backoff();
        const QueueDiscipline discipline = is_vms(cfg_.policy.variant)
                                               ? QueueDiscipline::Velocity
                                               : QueueDiscipline::ReleaseTime;
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            NodeRt& n = nodes_[i];
            n.queue = ReleaseQueue(cfg_.queue_capacity, discipline);
            n.ifq = ReleaseQueue(cfg_.mac.queue_capacity, discipline);
            n.etd = EtdEstimator(etd0, cfg_.etd_smoothing);
            n.mac_rng = Rng::stream(cfg_.seed, 0x10000u + i);
            n.traffic_rng = Rng::stream(cfg_.seed, 0x20000u + i);
        }
        channel_ = Channel(cfg_.mac.interference_range, cfg_.mac.sense_range);
        routes_ = build_sp_routes(topo_, cfg_.power_aware);
        attach_virtual_nodes(routes_, topo_);
        directives_ = cfg_.directives;
        std::stable_sort(directives_.begin(), directives_.end(),
                         [](const NodeDirective& a, const NodeDirective& b) {
                             return a.time < b.time;
                         });
    }

    void set_trace(std::ostream* out) { trace_ = out; }

    RunSummary run() {
        queue_.clock().end = cfg_.sim_time;
        queue_.schedule(cfg_.sim_time, EventKind::SimEnd);
        setup_traffic();
        if (cfg_.energy_check_period > 0.0) {
            queue_.schedule(cfg_.energy_check_period, EventKind::EnergyCheck);
        }

        while (!queue_.empty()) {
            apply_directives(queue_.peek().time);
            const Event e = queue_.pop();
            ++summary_.events_dispatched;
            if (e.kind == EventKind::SimEnd) {
                trace(e.time, EventKind::SimEnd, kNoNode, -1, "");
                break;
            }
            dispatch(e);
        }
        finalize();
        return summary_;
    }

    const Topology& topology() const { return topo_; }
    const std::vector<RouteEntry>& routes() const { return routes_; }
    const std::vector<Packet>& packets() const { return packets_; }
    const MetricsRecord& metrics() const { return summary_.metrics; }
    double now() const { return queue_.now(); }

private:
    struct NodeRt {
        ReleaseQueue queue; // scheduler stage: holds packets until release
        ReleaseQueue ifq;   // bounded interface queue in front of the radio
        std::deque<std::int32_t> control_fifo;
        bool mac_busy = false;
        EtdEstimator etd;
        Rng mac_rng{0};
        Rng traffic_rng{0};
        bool repair_pending = false;
        std::int32_t repair_id = -1;
        std::vector<PacketId> parked;
    };

    struct Repair {
        std::int32_t id = -1;
        NodeId broken_at = kNoNode;
        NodeId failed = kNoNode;
        PacketId trigger = -1;
        bool done = false;
        bool dead = false;
        // Current phase and flood identity; path_so_far carries the error
        // leg from the breaking node back to the origin.
        RepairMessage msg;
        // VN splice state
        NodeId vn = kNoNode;
        NodeId succ = kNoNode;
        // flood state
        std::vector<NodeId> parent; // first-arrival reverse paths
        std::vector<char> seen;
        bool flooding = false;

        NodeId source() const { return msg.origin; }
        const std::vector<NodeId>& err_path() const { return msg.path_so_far; }
    };

    // ---- traffic ---------------------------------------------------------

    void setup_traffic() {
        const double period = 1.0 / cfg_.traffic.rate_pps;
        if (cfg_.traffic.bursty) {
            // Network-wide synchronized on/off gate, starting on.
            const double cycle = cfg_.traffic.burst_on_s + cfg_.traffic.burst_off_s;
            bool on = true;
            double t = cfg_.traffic.burst_on_s;
            while (t < cfg_.sim_time) {
                queue_.schedule(t, EventKind::TrafficToggle);
                on = !on;
                t += on ? cfg_.traffic.burst_on_s : cfg_.traffic.burst_off_s;
                if (cycle <= 0.0) break;
            }
        }
        sources_.clear();
        for (NodeId s : cfg_.traffic.sources) {
            if (s != topo_.sink()) sources_.push_back(s);
        }
        if (cfg_.traffic.sources.empty()) {
            for (std::size_t i = 0; i < topo_.size(); ++i) {
                if (static_cast<NodeId>(i) != topo_.sink()) {
                    sources_.push_back(static_cast<NodeId>(i));
                }
            }
        }
        for (NodeId s : sources_) {
            const double phase = nodes_[static_cast<std::size_t>(s)].traffic_rng.uniform(0.0, period);
            if (phase < cfg_.sim_time) queue_.schedule(phase, EventKind::Publish, s);
        }
    }

    void on_publish(NodeId src) {
        const double period = 1.0 / cfg_.traffic.rate_pps;
        const double next = queue_.now() + period;
        if (next < cfg_.sim_time) queue_.schedule(next, EventKind::Publish, src);

        if (!burst_on_ || !topo_.live(src)) return;
        if (needs_route() && !routes_[static_cast<std::size_t>(src)].reachable()) {
            return; // unreachable nodes never publish
        }

        Packet p;
        p.id = static_cast<PacketId>(packets_.size());
        p.source = src;
        p.sink = topo_.sink();
        p.created_at = queue_.now();
        p.e2e_deadline = cfg_.deadline;
        p.distance_at_source = distance_to_sink(src, cfg_.policy.metric, topo_, routes_);
        p.velocity_at_source =
            vms_velocity(p.distance_at_source, p.e2e_deadline, cfg_.policy.dvm_epsilon);
        packets_.push_back(std::move(p));
        summary_.metrics.record_published();
        trace(queue_.now(), EventKind::Publish, src, packets_.back().id, "");
        arrive_at(src, packets_.back().id);
    }

    // ---- packet movement -------------------------------------------------

    // Hop distances require routing tables; greedy forwarding with the
    // Euclidean metric runs without them.
    bool needs_route() const {
        return cfg_.protocol == RoutingProtocol::ShortestPath ||
               cfg_.policy.metric == DistanceMetric::Hops;
    }

    void arrive_at(NodeId node, PacketId pid) {
        Packet& p = packets_[static_cast<std::size_t>(pid)];
        p.per_hop.push_back(HopRecord{node, queue_.now(), 0.0, 0.0});
        enqueue_at(node, pid);
    }

    // Computes the policy's target delay (or velocity) and queues the
    // packet for release; the scheduler's output is exactly this queuing
    // delay.
    void enqueue_at(NodeId node, PacketId pid) {
        Packet& p = packets_[static_cast<std::size_t>(pid)];
        NodeRt& rt = nodes_[static_cast<std::size_t>(node)];
        const double now = queue_.now();

        if (needs_route() && !routes_[static_cast<std::size_t>(node)].reachable()) {
            drop_packet(pid, DropReason::RouteFailure);
            return;
        }

        const Policy& pol = cfg_.policy;
        const double ohd_units = pol.metric == DistanceMetric::Hops ? 1.0 : pol.ohd;
        const double etd = rt.etd.etd();
        const double remaining = node == topo_.sink()
                                     ? 0.0
                                     : distance_to_sink(node, pol.metric, topo_, routes_);
        double td = 0.0;
        double velocity = 0.0;
        switch (pol.variant) {
        case PolicyVariant::Fifo:
            break;
        case PolicyVariant::Srts: {
            const double eetd = compute_eetd(etd, p.distance_at_source, ohd_units);
            td = target_delay_static(p.e2e_deadline, eetd, p.distance_at_source, ohd_units,
                                     pol.alpha);
            break;
        }
        case PolicyVariant::Drts:
            td = target_delay_dynamic(p.e2e_deadline, p.elapsed(now), etd, remaining, ohd_units,
                                      pol.alpha);
            break;
        case PolicyVariant::NlrtsStatic: {
            const double eetd = compute_eetd(etd, p.distance_at_source, ohd_units);
            td = target_delay_nonlinear(p.e2e_deadline, eetd, remaining, ohd_units, pol.alpha,
                                        pol.exponent_cap);
            break;
        }
        case PolicyVariant::NlrtsDynamic: {
            const double eetd = compute_eetd(etd, remaining, ohd_units);
            td = target_delay_nonlinear(p.e2e_deadline - p.elapsed(now), eetd, remaining,
                                        ohd_units, pol.alpha, pol.exponent_cap);
            break;
        }
        case PolicyVariant::Svm:
            velocity = p.velocity_at_source;
            break;
        case PolicyVariant::Dvm:
            velocity = vms_velocity(remaining, p.e2e_deadline - p.elapsed(now), pol.dvm_epsilon);
            break;
        }

        QueueEntry entry;
        entry.packet = pid;
        entry.arrival = now;
        entry.release_time = now + td;
        entry.velocity = velocity;
        const PacketId evicted = rt.queue.push(entry);
        if (evicted >= 0) drop_packet(evicted, DropReason::QueueOverflow);
        if (evicted < 0 || evicted != pid) {
            queue_.schedule(entry.release_time, EventKind::QueueRelease, node);
        }
    }

    // Moves every due packet from the scheduler stage to the bounded
    // interface queue; what does not fit is congestion loss.
    void promote_due(NodeId node) {
        NodeRt& rt = nodes_[static_cast<std::size_t>(node)];
        const double now = queue_.now();
        while (rt.queue.has_due(now)) {
            const QueueEntry entry = rt.queue.pop_due(now);
            const PacketId evicted = rt.ifq.push(entry);
            if (evicted >= 0) drop_packet(evicted, DropReason::QueueOverflow);
        }
    }

    void on_queue_release(NodeId node) {
        trace(queue_.now(), EventKind::QueueRelease, node, -1, "");
        mac_try_start(node);
    }

    // ---- MAC service -----------------------------------------------------

    std::int32_t new_frame(FrameKind kind, NodeId sender, NodeId receiver, PacketId pid,
                           std::int32_t control, std::uint32_t priority_class) {
        Frame f;
        f.id = static_cast<std::int32_t>(frames_.size());
        f.kind = kind;
        f.sender = sender;
        f.receiver = receiver;
        f.packet = pid;
        f.control = control;
        f.send_ready = queue_.now();
        f.priority_class = priority_class;
        frames_.push_back(f);
        ++summary_.frames_sent;
        return f.id;
    }

    void mac_try_start(NodeId node) {
        NodeRt& rt = nodes_[static_cast<std::size_t>(node)];
        if (!topo_.live(node)) return;
        promote_due(node);
        if (rt.mac_busy) return;

        // Control frames take precedence over data.
        if (!rt.control_fifo.empty()) {
            const std::int32_t fid = rt.control_fifo.front();
            rt.control_fifo.pop_front();
            start_attempt(fid);
            return;
        }
        const double now = queue_.now();
        if (rt.ifq.empty()) return;
        QueueEntry entry = rt.ifq.pop_due(now);
        Packet& p = packets_[static_cast<std::size_t>(entry.packet)];
        // The packet was handed to the MAC at its release time; waiting for
        // the transmitter to free up counts as MAC queuing in the hop-delay
        // measurement.
        const double handoff = entry.release_time;
        if (!p.per_hop.empty()) p.per_hop.back().released = handoff;

        NodeId next = kNoNode;
        if (cfg_.protocol == RoutingProtocol::GreedyForwarding) {
            next = gf_next_hop(node, topo_.sink(), topo_, cfg_.power_aware);
            if (next == kNoNode) {
                drop_packet(entry.packet, DropReason::GfVoid);
                mac_try_start(node);
                return;
            }
        } else {
            const RouteEntry& route = routes_[static_cast<std::size_t>(node)];
            if (!route.reachable()) {
                drop_packet(entry.packet, DropReason::RouteFailure);
                mac_try_start(node);
                return;
            }
            next = route.next_hop;
            if (!topo_.live(next)) {
                start_repair(node, next, entry.packet);
                mac_try_start(node);
                return;
            }
        }
        const std::uint32_t cls = is_vms(cfg_.policy.variant)
                                      ? cfg_.mac.velocity_class(entry.velocity)
                                      : 0u;
        const std::int32_t fid = new_frame(FrameKind::Data, node, next, entry.packet, -1, cls);
        frames_[static_cast<std::size_t>(fid)].send_ready = handoff;
        rt.mac_busy = true;
        schedule_attempt(fid);
    }

    void start_attempt(std::int32_t fid) {
        nodes_[static_cast<std::size_t>(frames_[static_cast<std::size_t>(fid)].sender)].mac_busy =
            true;
        schedule_attempt(fid);
    }

    void schedule_attempt(std::int32_t fid) {
        Frame& f = frames_[static_cast<std::size_t>(fid)];
        NodeRt& rt = nodes_[static_cast<std::size_t>(f.sender)];
        f.slots_left = rt.mac_rng.uniform_int(cfg_.mac.window(f.retries, f.priority_class));
        f.counting_since = queue_.now();
        queue_.schedule(queue_.now() + f.slots_left * cfg_.mac.slot_s, EventKind::TxStart, fid);
    }

    void on_tx_start(std::int32_t fid) {
        Frame& f = frames_[static_cast<std::size_t>(fid)];
        if (!topo_.live(f.sender)) {
            // Sender died during backoff; the frame evaporates with it.
            if (f.kind == FrameKind::Data &&
                packets_[static_cast<std::size_t>(f.packet)].state == PacketState::InFlight) {
                drop_packet(f.packet, DropReason::RouteFailure);
            }
            return;
        }
        const Channel::Sense s =
            channel_.sense(f.sender, queue_.now(), cfg_.mac.slot_s, frames_, topo_);
        if (s.busy) {
            // Freeze the countdown: credit the idle slots counted before the
            // channel went busy and resume with the remainder afterwards.
            const double idle = std::max(0.0, s.onset - f.counting_since);
            const auto consumed = static_cast<std::uint32_t>(idle / cfg_.mac.slot_s);
            f.slots_left -= std::min(f.slots_left, consumed);
            f.counting_since = s.until;
            trace(queue_.now(), EventKind::TxStart, f.sender, f.packet, "defer");
            queue_.schedule(s.until + f.slots_left * cfg_.mac.slot_s, EventKind::TxStart, fid);
            return;
        }
        topo_.consume_energy(f.sender, EnergyAction::Transmit);
        f.tx_start = queue_.now();
        f.tx_end = queue_.now() + cfg_.mac.frame_time();
        f.collided = false;
        f.overlap_senders.clear();
        channel_.begin(f, frames_, topo_);
        trace(queue_.now(), EventKind::TxStart, f.sender, f.packet, to_string(f.kind));
        queue_.schedule(f.tx_end, EventKind::TxEnd, fid);
    }

    // Handlers below work on a copy of the frame: sending follow-up frames
    // grows the slab and would invalidate references into it.
    void on_tx_end(std::int32_t fid) {
        channel_.end(frames_[static_cast<std::size_t>(fid)]);
        const Frame f = frames_[static_cast<std::size_t>(fid)];
        NodeRt& rt = nodes_[static_cast<std::size_t>(f.sender)];

        if (f.receiver == kNoNode) {
            rt.mac_busy = false;
            if (f.collided) {
                // Broadcasts get a single attempt.
                ++summary_.metrics.collisions;
                trace(queue_.now(), EventKind::TxEnd, f.sender, f.packet, "collided");
            } else {
                trace(queue_.now(), EventKind::TxEnd, f.sender, f.packet, "broadcast");
                for (NodeId nb : topo_.neighbors(f.sender)) {
                    if (!topo_.live(nb)) continue;
                    if (channel_.interfered_at(f, nb, topo_)) continue;
                    topo_.consume_energy(nb, EnergyAction::Receive);
                    on_control_rx(f, nb);
                }
            }
            mac_try_start(f.sender);
            return;
        }

        if (f.collided || channel_.interfered_at(f, f.receiver, topo_)) {
            ++summary_.metrics.collisions;
            trace(queue_.now(), EventKind::TxEnd, f.sender, f.packet, "collided");
            const std::uint32_t retries = ++frames_[static_cast<std::size_t>(fid)].retries;
            if (retries > cfg_.mac.max_retries) {
                rt.mac_busy = false;
                resolve_failed_frame(f);
                mac_try_start(f.sender);
            } else {
                schedule_attempt(fid); // doubled window
            }
            return;
        }

        if (!topo_.live(f.receiver)) {
            // Link broke while the frame was in service.
            trace(queue_.now(), EventKind::TxEnd, f.sender, f.packet, "link_broken");
            rt.mac_busy = false;
            resolve_failed_frame(f);
            mac_try_start(f.sender);
            return;
        }

        topo_.consume_energy(f.receiver, EnergyAction::Receive);
        rt.mac_busy = false;
        if (f.kind == FrameKind::Data) {
            rt.etd.update(measure_hop_delay(f.send_ready, queue_.now()));
            Packet& p = packets_[static_cast<std::size_t>(f.packet)];
            ++p.hops_traversed;
            if (!p.per_hop.empty()) p.per_hop.back().delivered = queue_.now();
            trace(queue_.now(), EventKind::TxEnd, f.sender, f.packet,
                  "delivered to=" + std::to_string(f.receiver));
            if (f.receiver == p.sink) {
                deliver_packet(f.packet);
            } else {
                arrive_at(f.receiver, f.packet);
            }
        } else {
            trace(queue_.now(), EventKind::TxEnd, f.sender, f.packet,
                  std::string(to_string(f.kind)) + " to=" + std::to_string(f.receiver));
            on_control_rx(f, f.receiver);
        }
        mac_try_start(f.sender);
    }

    void resolve_failed_frame(const Frame f) {
        if (f.kind == FrameKind::Data) {
            if (!topo_.live(f.receiver)) {
                start_repair(f.sender, f.receiver, f.packet);
            } else {
                drop_packet(f.packet, DropReason::MacFailure);
            }
            return;
        }
        if (f.control >= 0) control_frame_failed(f);
    }

    // ---- terminal states -------------------------------------------------

    void deliver_packet(PacketId pid) {
        Packet& p = packets_[static_cast<std::size_t>(pid)];
        ensure_in_flight(p, "deliver");
        const double now = queue_.now();
        p.per_hop.push_back(HopRecord{p.sink, now, now, now});
        const double delay = p.elapsed(now);
        const bool on_time = delay <= p.e2e_deadline;
        p.state = on_time ? PacketState::DeliveredOnTime : PacketState::DeliveredLate;
        summary_.metrics.record_delivered(delay, on_time);
    }

    void drop_packet(PacketId pid, DropReason reason) {
        Packet& p = packets_[static_cast<std::size_t>(pid)];
        ensure_in_flight(p, "drop");
        p.state = PacketState::Dropped;
        p.drop_reason = reason;
        summary_.metrics.record_dropped(reason);
    }

    static void ensure_in_flight(const Packet& p, const char* what) {
        if (p.state != PacketState::InFlight) {
            throw std::logic_error(std::string("packet ") + std::to_string(p.id) +
                                   " terminated twice (" + what + ")");
        }
    }

    // ---- route repair ----------------------------------------------------

    void send_control(FrameKind kind, NodeId from, NodeId to, std::int32_t repair_id) {
        const std::int32_t fid = new_frame(kind, from, to, -1, repair_id, 0);
        nodes_[static_cast<std::size_t>(from)].control_fifo.push_back(fid);
        ++summary_.metrics.control_messages;
        mac_try_start(from);
    }

    // A data send found its next hop dead. Try a local virtual-node splice;
    // otherwise fall back to an error message to the source and a fresh
    // route-request flood. The packet waits at the detecting node.
    void start_repair(NodeId broken_at, NodeId failed, PacketId pid) {
        NodeRt& rt = nodes_[static_cast<std::size_t>(broken_at)];
        if (rt.repair_pending) {
            rt.parked.push_back(pid);
            return;
        }
        ++summary_.repairs_started;
        Repair r;
        const std::int32_t rid = static_cast<std::int32_t>(repairs_.size());
        r.id = rid;
        r.broken_at = broken_at;
        r.failed = failed;
        r.msg.seq = next_repair_seq_++;
        r.trigger = pid;
        rt.repair_pending = true;
        rt.repair_id = rid;
        rt.parked.push_back(pid);

        const Packet& p = packets_[static_cast<std::size_t>(pid)];
        r.msg.origin = p.source;
        r.msg.target = topo_.sink();

        NodeId vn = kNoNode;
        NodeId succ = kNoNode;
        if (cfg_.vn_repair && failed != topo_.sink()) {
            succ = routes_[static_cast<std::size_t>(failed)].next_hop;
            if (succ != kNoNode) {
                for (const VirtualNodeEntry& e :
                     routes_[static_cast<std::size_t>(broken_at)].virtual_nodes) {
                    if (e.protects == failed && topo_.live(e.vn)) {
                        vn = e.vn;
                        break; // entries are ordered best zone first, then id
                    }
                }
            }
        }
        if (vn != kNoNode) {
            ++summary_.vn_splices;
            r.vn = vn;
            r.succ = succ;
            r.msg.phase = RepairMessage::Phase::RRpr;
            repairs_.push_back(std::move(r));
            queue_.schedule(queue_.now() + cfg_.repair_timeout, EventKind::RepairTimer, rid);
            // One message to the virtual node, which relays one to the node
            // after the failed hop.
            send_control(FrameKind::RouteRepair, broken_at, vn, rid);
            return;
        }

        // Err phase: walk the packet's traversed path back to its source.
        r.msg.phase = RepairMessage::Phase::Err;
        r.msg.path_so_far = reverse_path(p);
        repairs_.push_back(std::move(r));
        if (repairs_.back().err_path().size() < 2 ||
            repairs_.back().err_path().front() != broken_at) {
            launch_flood(rid); // the break is at the source itself
        } else {
            send_control(FrameKind::RouteError, repairs_.back().err_path()[0],
                         repairs_.back().err_path()[1], rid);
        }
    }

    // Distinct node chain the packet traversed, latest node first.
    std::vector<NodeId> reverse_path(const Packet& p) const {
        std::vector<NodeId> path;
        for (const HopRecord& h : p.per_hop) {
            if (path.empty() || path.back() != h.node) path.push_back(h.node);
        }
        std::reverse(path.begin(), path.end());
        return path;
    }

    void launch_flood(std::int32_t repair_id) {
        Repair& r = repairs_[static_cast<std::size_t>(repair_id)];
        // No live path at all: fail fast instead of flooding.
        const std::vector<std::int32_t> hops = bfs_hops(topo_);
        if (hops[static_cast<std::size_t>(r.source())] < 0 || !topo_.live(r.source())) {
            repair_failed(repair_id);
            return;
        }
        ++summary_.rreq_floods;
        r.flooding = true;
        r.parent.assign(topo_.size(), kNoNode);
        r.seen.assign(topo_.size(), 0);
        r.msg.phase = RepairMessage::Phase::RReq;
        r.seen[static_cast<std::size_t>(r.source())] = 1;
        queue_.schedule(queue_.now() + cfg_.repair_timeout, EventKind::RepairTimer, r.id);
        send_control(FrameKind::RouteRequest, r.source(), kNoNode, r.id);
    }

    void on_control_rx(const Frame& f, NodeId at) {
        Repair& r = repairs_[static_cast<std::size_t>(f.control)];
        if (r.done || r.dead) return;
        switch (f.kind) {
        case FrameKind::RouteRepair:
            if (at == r.vn) {
                send_control(FrameKind::RouteRepair, r.vn, r.succ, r.id);
            } else if (at == r.succ) {
                complete_vn_splice(r);
            } else {
                // reply leg of a flood repair
                flood_reply_rx(r, at);
            }
            break;
        case FrameKind::RouteError: {
            auto it = std::find(r.msg.path_so_far.begin(), r.msg.path_so_far.end(), at);
            if (it == r.msg.path_so_far.end()) return;
            const std::size_t idx = static_cast<std::size_t>(it - r.msg.path_so_far.begin());
            if (idx + 1 < r.msg.path_so_far.size()) {
                send_control(FrameKind::RouteError, at, r.msg.path_so_far[idx + 1], r.id);
            } else {
                launch_flood(r.id); // reached the source
            }
            break;
        }
        case FrameKind::RouteRequest: {
            if (!r.flooding || r.seen[static_cast<std::size_t>(at)]) return;
            r.seen[static_cast<std::size_t>(at)] = 1;
            r.parent[static_cast<std::size_t>(at)] = f.sender;
            if (at == topo_.sink()) {
                // the target answers along the first-arrival reverse path
                r.msg.phase = RepairMessage::Phase::RRpr;
                send_control(FrameKind::RouteRepair, at, r.parent[static_cast<std::size_t>(at)],
                             r.id);
            } else {
                send_control(FrameKind::RouteRequest, at, kNoNode, r.id);
            }
            break;
        }
        case FrameKind::Data:
            break;
        }
    }

    void flood_reply_rx(Repair& r, NodeId at) {
        if (!r.flooding || r.parent.empty()) return;
        if (at == r.source()) {
            complete_flood_repair(r);
            return;
        }
        const NodeId next = r.parent[static_cast<std::size_t>(at)];
        if (next == kNoNode) return;
        send_control(FrameKind::RouteRepair, at, next, r.id);
    }

    void complete_vn_splice(Repair& r) {
        r.done = true;
        routes_[static_cast<std::size_t>(r.broken_at)].next_hop = r.vn;
        RouteEntry& vn_route = routes_[static_cast<std::size_t>(r.vn)];
        vn_route.next_hop = r.succ;
        vn_route.hop_count = routes_[static_cast<std::size_t>(r.failed)].hop_count;
        attach_virtual_nodes(routes_, topo_);
        finish_repair(r);
    }

    void complete_flood_repair(Repair& r) {
        r.done = true;
        // The reply's reverse path stands in for on-demand state; tables are
        // refreshed from the live topology in one sweep.
        routes_ = build_sp_routes(topo_, cfg_.power_aware);
        attach_virtual_nodes(routes_, topo_);
        finish_repair(r);
    }

    void finish_repair(Repair& r) {
        NodeRt& rt = nodes_[static_cast<std::size_t>(r.broken_at)];
        rt.repair_pending = false;
        rt.repair_id = -1;
        std::vector<PacketId> parked = std::move(rt.parked);
        rt.parked.clear();
        for (PacketId pid : parked) {
            if (packets_[static_cast<std::size_t>(pid)].state == PacketState::InFlight) {
                enqueue_at(r.broken_at, pid);
            }
        }
    }

    void repair_failed(std::int32_t repair_id) {
        Repair& r = repairs_[static_cast<std::size_t>(repair_id)];
        if (r.done || r.dead) return;
        r.dead = true;
        NodeRt& rt = nodes_[static_cast<std::size_t>(r.broken_at)];
        rt.repair_pending = false;
        rt.repair_id = -1;
        std::vector<PacketId> parked = std::move(rt.parked);
        rt.parked.clear();
        for (PacketId pid : parked) {
            if (packets_[static_cast<std::size_t>(pid)].state == PacketState::InFlight) {
                drop_packet(pid, DropReason::RouteFailure);
            }
        }
    }

    void control_frame_failed(const Frame& f) {
        Repair& r = repairs_[static_cast<std::size_t>(f.control)];
        if (r.done || r.dead) return;
        if (f.kind == FrameKind::RouteRepair && r.vn != kNoNode &&
            (f.receiver == r.vn || f.receiver == r.succ)) {
            // Splice leg failed; fall back to the error phase.
            r.vn = kNoNode;
            r.msg.phase = RepairMessage::Phase::Err;
            r.msg.path_so_far = reverse_path(packets_[static_cast<std::size_t>(r.trigger)]);
            if (r.err_path().size() < 2 || r.err_path().front() != r.broken_at) {
                launch_flood(r.id);
            } else {
                send_control(FrameKind::RouteError, r.err_path()[0], r.err_path()[1], r.id);
            }
            return;
        }
        repair_failed(f.control);
    }

    void on_repair_timer(std::int32_t repair_id) {
        trace(queue_.now(), EventKind::RepairTimer, kNoNode, -1,
              "repair=" + std::to_string(repair_id));
        repair_failed(repair_id);
    }

    // ---- directives and upkeep --------------------------------------------

    void apply_directives(double upto) {
        while (directive_idx_ < directives_.size() && directives_[directive_idx_].time <= upto) {
            const NodeDirective& d = directives_[directive_idx_++];
            if (d.revive) {
                topo_.revive(d.node);
                continue;
            }
            topo_.kill(d.node);
            NodeRt& rt = nodes_[static_cast<std::size_t>(d.node)];
            rt.mac_busy = false;
            rt.control_fifo.clear();
            for (ReleaseQueue* q : {&rt.queue, &rt.ifq}) {
                while (!q->empty()) {
                    const QueueEntry e = q->pop_due(std::numeric_limits<double>::infinity());
                    if (e.packet >= 0 && packets_[static_cast<std::size_t>(e.packet)].state ==
                                             PacketState::InFlight) {
                        drop_packet(e.packet, DropReason::RouteFailure);
                    }
                }
            }
            for (PacketId pid : rt.parked) {
                if (packets_[static_cast<std::size_t>(pid)].state == PacketState::InFlight) {
                    drop_packet(pid, DropReason::RouteFailure);
                }
            }
            rt.parked.clear();
            rt.repair_pending = false;
        }
    }

    void on_energy_check() {
        routes_ = build_sp_routes(topo_, cfg_.power_aware);
        attach_virtual_nodes(routes_, topo_);
        const double next = queue_.now() + cfg_.energy_check_period;
        if (next < cfg_.sim_time) queue_.schedule(next, EventKind::EnergyCheck);
    }

    void dispatch(const Event& e) {
        switch (e.kind) {
        case EventKind::Publish: on_publish(e.a); break;
        case EventKind::QueueRelease: on_queue_release(e.a); break;
        case EventKind::TxStart: on_tx_start(e.a); break;
        case EventKind::TxEnd: on_tx_end(e.a); break;
        case EventKind::RepairTimer: on_repair_timer(e.a); break;
        case EventKind::EnergyCheck: on_energy_check(); break;
        case EventKind::TrafficToggle:
            burst_on_ = !burst_on_;
            trace(queue_.now(), EventKind::TrafficToggle, kNoNode, -1,
                  burst_on_ ? "on" : "off");
            break;
        case EventKind::SimEnd: break;
        }
    }

    void finalize() {
        std::int64_t in_flight = 0;
        for (const Packet& p : packets_) {
            if (p.state == PacketState::InFlight) ++in_flight;
        }
        summary_.metrics.in_flight_at_end = in_flight;
    }

    void trace(double t, EventKind kind, NodeId node, PacketId pid, const std::string& detail) {
        if (!trace_) return;
        char head[96];
        std::snprintf(head, sizeof(head), "%.9f\t%s\t", t, to_string(kind));
        (*trace_) << head << (node == kNoNode ? std::string("-") : std::to_string(node)) << '\t'
                  << (pid < 0 ? std::string("-") : std::to_string(pid)) << '\t' << detail << '\n';
    }

    Topology topo_;
    RunConfig cfg_;
    EventQueue queue_;
    Channel channel_{250.0};
    std::vector<RouteEntry> routes_;
    std::vector<NodeRt> nodes_;
    std::vector<Packet> packets_;
    std::vector<Frame> frames_;
    std::vector<Repair> repairs_;
    std::vector<NodeDirective> directives_;
    std::size_t directive_idx_ = 0;
    std::vector<NodeId> sources_;
    bool burst_on_ = true;
    std::uint32_t next_repair_seq_ = 1;
    RunSummary summary_;
    std::ostream* trace_ = nullptr;
};

} // namespace rtsim
