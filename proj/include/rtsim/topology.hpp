#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "rtsim/rng.hpp"

namespace rtsim {

using NodeId = std::int32_t;
constexpr NodeId kNoNode = -1;

struct NodePosition {
    double x = 0.0;
    double y = 0.0;
};

inline double distance(const NodePosition& a, const NodePosition& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return std::sqrt(dx * dx + dy * dy);
}

enum class PowerZone : std::uint8_t { Active, Critical, Danger };

inline const char* to_string(PowerZone z) {
    switch (z) {
    case PowerZone::Active: return "active";
    case PowerZone::Critical: return "critical";
    case PowerZone::Danger: return "danger";
    }
    return "?";
}

struct ZoneThresholds {
    double active = 0.30; // ratio above this -> Active
    double danger = 0.10; // ratio at or below this -> Danger
};

// Zone is a pure function of the remaining/capacity ratio.
inline PowerZone power_zone(double remaining, double capacity, ZoneThresholds th = {}) {
    if (capacity <= 0.0) throw std::invalid_argument("power_zone: capacity must be > 0");
    const double ratio = remaining / capacity;
    if (ratio > th.active) return PowerZone::Active;
    if (ratio > th.danger) return PowerZone::Critical;
    return PowerZone::Danger;
}

struct EnergyState {
    double remaining = 1e6;
    double capacity = 1e6;

    PowerZone zone(ZoneThresholds th = {}) const { return power_zone(remaining, capacity, th); }
};

enum class EnergyAction : std::uint8_t { Transmit, Receive };

struct EnergyCosts {
    double transmit = 1.0;
    double receive = 0.5;
};

enum class Corner : std::uint8_t { Northwest, Northeast, Southwest, Southeast };

struct TopologyNode {
    NodeId id = kNoNode;
    NodePosition pos;
    EnergyState energy;
    bool killed = false; // scenario kill directive; revive clears it
};

// Node deployment plus the neighbor graph induced by the radio range.
// y grows northward; the northwest corner is (0, area).
class Topology {
public:
    Topology() = default;
    Topology(std::vector<TopologyNode> nodes, NodeId sink, double area, double radio_range,
             ZoneThresholds zones = {}, EnergyCosts costs = {})
        : nodes_(std::move(nodes)), sink_(sink), area_(area), radio_range_(radio_range),
          zones_(zones), costs_(costs) {
        rebuild_neighbors();
    }

    std::size_t size() const { return nodes_.size(); }
    NodeId sink() const { return sink_; }
    double area() const { return area_; }
    double radio_range() const { return radio_range_; }
    const ZoneThresholds& zone_thresholds() const { return zones_; }
    const EnergyCosts& energy_costs() const { return costs_; }

    const TopologyNode& node(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)); }
    TopologyNode& node(NodeId id) { return nodes_.at(static_cast<std::size_t>(id)); }
    const std::vector<TopologyNode>& nodes() const { return nodes_; }

    const std::vector<NodeId>& neighbors(NodeId id) const {
        return neighbors_.at(static_cast<std::size_t>(id));
    }

    double dist(NodeId a, NodeId b) const { return distance(node(a).pos, node(b).pos); }

    PowerZone zone(NodeId id) const { return node(id).energy.zone(zones_); }

    // A node is live when it has not been killed and still has energy.
    // A node at zero energy is inert: it neither transmits nor forwards.
    bool live(NodeId id) const {
        const TopologyNode& n = node(id);
        return !n.killed && n.energy.remaining > 0.0;
    }

    void kill(NodeId id) { node(id).killed = true; }
    void revive(NodeId id) { node(id).killed = false; }

    // Decrements energy by the configured per-action cost, clamped at zero.
    EnergyState consume_energy(NodeId id, EnergyAction action) {
        TopologyNode& n = node(id);
        const double cost = action == EnergyAction::Transmit ? costs_.transmit : costs_.receive;
        n.energy.remaining = std::max(0.0, n.energy.remaining - cost);
        return n.energy;
    }

    void set_energy_fraction(NodeId id, double fraction) {
        TopologyNode& n = node(id);
        n.energy.remaining = std::clamp(fraction, 0.0, 1.0) * n.energy.capacity;
    }

private:
    void rebuild_neighbors() {
        const std::size_t n = nodes_.size();
        neighbors_.assign(n, {});
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                if (distance(nodes_[i].pos, nodes_[j].pos) <= radio_range_) {
                    neighbors_[i].push_back(static_cast<NodeId>(j));
                    neighbors_[j].push_back(static_cast<NodeId>(i));
                }
            }
        }
    }

    std::vector<TopologyNode> nodes_;
    NodeId sink_ = kNoNode;
    double area_ = 1000.0;
    double radio_range_ = 250.0;
    ZoneThresholds zones_;
    EnergyCosts costs_;
    std::vector<std::vector<NodeId>> neighbors_;
};

// One node at the center of each tile of a k x k grid; n must be a perfect
// square. Node ids are row-major from the southwest corner (x fastest).
inline Topology deploy_grid(std::size_t n, double area, Corner sink_corner,
                            ZoneThresholds zones = {}, EnergyCosts costs = {},
                            double radio_range = 250.0, double capacity = 1e6) {
    const auto k = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
    if (k * k != n || n == 0) {
        throw std::invalid_argument("deploy_grid: node count must be a perfect square, got " +
                                    std::to_string(n));
    }
    const double tile = area / static_cast<double>(k);
    std::vector<TopologyNode> nodes;
    nodes.reserve(n);
    for (std::size_t iy = 0; iy < k; ++iy) {
        for (std::size_t ix = 0; ix < k; ++ix) {
            TopologyNode node;
            node.id = static_cast<NodeId>(iy * k + ix);
            node.pos = {tile / 2.0 + static_cast<double>(ix) * tile,
                        tile / 2.0 + static_cast<double>(iy) * tile};
            node.energy = {capacity, capacity};
            nodes.push_back(node);
        }
    }
    const std::size_t last = k - 1;
    std::size_t sx = 0, sy = 0;
    switch (sink_corner) {
    case Corner::Northwest: sx = 0; sy = last; break;
    case Corner::Northeast: sx = last; sy = last; break;
    case Corner::Southwest: sx = 0; sy = 0; break;
    case Corner::Southeast: sx = last; sy = 0; break;
    }
    const NodeId sink = static_cast<NodeId>(sy * k + sx);
    return Topology(std::move(nodes), sink, area, radio_range, zones, costs);
}

// Sink choice for random deployments: the node nearest the area center,
// ties by lowest id.
inline NodeId pick_central_sink(const std::vector<NodePosition>& positions, double area) {
    const NodePosition center{area / 2.0, area / 2.0};
    NodeId best = 0;
    double best_d = distance(positions.at(0), center);
    for (std::size_t i = 1; i < positions.size(); ++i) {
        const double d = distance(positions[i], center);
        if (d < best_d) {
            best_d = d;
            best = static_cast<NodeId>(i);
        }
    }
    return best;
}

// n positions uniform over the square; draw order is (x, y) per node in id
// order, so a given rng stream always produces the same layout.
inline Topology deploy_random(std::size_t n, double area, Rng& rng, ZoneThresholds zones = {},
                              EnergyCosts costs = {}, double radio_range = 250.0,
                              double capacity = 1e6) {
    if (n < 1) throw std::invalid_argument("deploy_random: need at least one node");
    std::vector<TopologyNode> nodes;
    std::vector<NodePosition> positions;
    nodes.reserve(n);
    positions.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        TopologyNode node;
        node.id = static_cast<NodeId>(i);
        node.pos = {rng.uniform(0.0, area), rng.uniform(0.0, area)};
        node.energy = {capacity, capacity};
        positions.push_back(node.pos);
        nodes.push_back(node);
    }
    const NodeId sink = pick_central_sink(positions, area);
    return Topology(std::move(nodes), sink, area, radio_range, zones, costs);
}

} // namespace rtsim
