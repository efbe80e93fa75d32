#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <limits>
#include <stdexcept>
#include <vector>

#include "rtsim/scheduling.hpp"
#include "rtsim/topology.hpp"

namespace rtsim {

enum class RoutingProtocol : std::uint8_t { ShortestPath, GreedyForwarding };

inline const char* to_string(RoutingProtocol p) {
    return p == RoutingProtocol::ShortestPath ? "sp" : "gf";
}

// Off-path substitute recorded with the route: adjacent to both path
// neighbors of the node it protects, so a local splice always reconnects
// the path.
struct VirtualNodeEntry {
    NodeId vn = kNoNode;
    NodeId protects = kNoNode;
    PowerZone battery_zone = PowerZone::Active;
};

struct RouteEntry {
    NodeId next_hop = kNoNode;
    std::int32_t hop_count = -1; // -1 -> unreachable
    std::int32_t critical_on_path = 0;
    std::vector<VirtualNodeEntry> virtual_nodes; // protecting this node's successor

    bool reachable() const { return hop_count >= 0; }
};

struct RepairMessage {
    enum class Phase : std::uint8_t { RReq, RRpr, Err };
    Phase phase = Phase::RReq;
    NodeId origin = kNoNode;
    NodeId target = kNoNode;
    std::vector<NodeId> path_so_far;
    std::uint32_t seq = 0;
};

namespace detail {

// Relay eligibility for path construction. The filter never applies to the
// sink; with power awareness on, Danger-zone nodes cannot relay.
inline bool relay_ok(const Topology& topo, NodeId id, bool power_aware) {
    if (id == topo.sink()) return true;
    if (!topo.live(id)) return false;
    return !power_aware || topo.zone(id) != PowerZone::Danger;
}

} // namespace detail

// Builds every node's route toward the sink over the neighbor graph.
//
// With power awareness off this is plain BFS hop count, next hop = any
// neighbor one hop closer, ties by lowest id. With power awareness on,
// Danger-zone relays are excluded and paths minimize (number of Critical
// relays, then hop count) lexicographically; nodes the filtered graph
// cannot reach fall back to the unfiltered shortest path.
inline std::vector<RouteEntry> build_sp_routes(const Topology& topo, bool power_aware) {
    const std::size_t n = topo.size();
    const NodeId sink = topo.sink();
    std::vector<RouteEntry> routes(n);

    struct Cost {
        std::int64_t critical = -1;
        std::int64_t hops = -1;
        bool valid() const { return hops >= 0; }
        bool operator<(const Cost& o) const {
            if (critical != o.critical) return critical < o.critical;
            return hops < o.hops;
        }
    };

    // Lexicographic Dijkstra outward from the sink. dist[v] is the cost of
    // the best v->sink path; the step cost of leaving v adds v's own
    // criticality, so relay zones count and endpoint zones do not.
    auto relax_all = [&](bool filtered) {
        std::vector<Cost> dist(n);
        std::vector<NodeId> next(n, kNoNode);
        dist[static_cast<std::size_t>(sink)] = Cost{0, 0};

        std::vector<char> done(n, 0);
        for (;;) {
            NodeId u = kNoNode;
            for (std::size_t i = 0; i < n; ++i) {
                if (done[i] || !dist[i].valid()) continue;
                if (u == kNoNode || dist[i] < dist[static_cast<std::size_t>(u)]) {
                    u = static_cast<NodeId>(i);
                }
            }
            if (u == kNoNode) break;
            done[static_cast<std::size_t>(u)] = 1;
            const Cost du = dist[static_cast<std::size_t>(u)];

            Cost via; // cost contributed by stepping onto u from a neighbor
            via.critical = du.critical +
                           ((filtered && u != sink && topo.zone(u) == PowerZone::Critical) ? 1 : 0);
            via.hops = du.hops + 1;
            if (u != sink && !detail::relay_ok(topo, u, filtered)) continue;

            for (NodeId v : topo.neighbors(u)) {
                const auto vi = static_cast<std::size_t>(v);
                if (v == sink || done[vi]) continue;
                if (!topo.live(v)) continue;
                const bool better = !dist[vi].valid() || via < dist[vi] ||
                                    (!(dist[vi] < via) && u < next[vi]);
                if (better) {
                    dist[vi] = via;
                    next[vi] = u;
                }
            }
        }
        return std::pair(dist, next);
    };

    auto [dist, next] = relax_all(power_aware);
    std::vector<Cost> plain_dist;
    std::vector<NodeId> plain_next;
    if (power_aware) {
        // Fallback for nodes with no all-non-Danger path.
        auto [d, nx] = relax_all(false);
        plain_dist = std::move(d);
        plain_next = std::move(nx);
    }

    for (std::size_t i = 0; i < n; ++i) {
        const auto id = static_cast<NodeId>(i);
        if (id == sink) {
            routes[i].hop_count = 0;
            routes[i].next_hop = sink;
            continue;
        }
        if (!topo.live(id)) continue;
        if (dist[i].valid()) {
            routes[i].hop_count = static_cast<std::int32_t>(dist[i].hops);
            routes[i].critical_on_path = static_cast<std::int32_t>(dist[i].critical);
            routes[i].next_hop = next[i];
        } else if (power_aware && plain_dist[i].valid()) {
            routes[i].hop_count = static_cast<std::int32_t>(plain_dist[i].hops);
            routes[i].next_hop = plain_next[i];
        }
        // else: unreachable, never publishes
    }
    return routes;
}

// Plain BFS hop distances to the sink, ignoring zones. Used for packet
// distance accounting and reachability checks.
inline std::vector<std::int32_t> bfs_hops(const Topology& topo, bool live_only = true) {
    const std::size_t n = topo.size();
    std::vector<std::int32_t> dist(n, -1);
    std::deque<NodeId> frontier;
    dist[static_cast<std::size_t>(topo.sink())] = 0;
    frontier.push_back(topo.sink());
    while (!frontier.empty()) {
        const NodeId u = frontier.front();
        frontier.pop_front();
        for (NodeId v : topo.neighbors(u)) {
            const auto vi = static_cast<std::size_t>(v);
            if (dist[vi] >= 0) continue;
            if (live_only && !topo.live(v)) continue;
            dist[vi] = dist[static_cast<std::size_t>(u)] + 1;
            frontier.push_back(v);
        }
    }
    return dist;
}

// Greedy geographic forwarding: the eligible neighbor strictly closer to
// the sink with maximal progress, ties by lowest id; kNoNode on a void.
inline NodeId gf_next_hop(NodeId current, NodeId sink, const Topology& topo, bool power_aware) {
    const double here = topo.dist(current, sink);
    NodeId best = kNoNode;
    double best_d = here;
    for (NodeId v : topo.neighbors(current)) {
        if (!topo.live(v)) continue;
        if (v != sink && power_aware && topo.zone(v) == PowerZone::Danger) continue;
        const double d = topo.dist(v, sink);
        if (d < best_d) { // strict progress required
            best_d = d;
            best = v;
        }
    }
    return best;
}

// Records every eligible virtual node along a path: for each interior node
// p, any live off-path node adjacent to both of p's path neighbors can
// stand in for p. Entries are ordered by path position, then best battery
// zone, then lowest id.
inline std::vector<VirtualNodeEntry> select_virtual_nodes(const std::vector<NodeId>& path,
                                                          const Topology& topo) {
    std::vector<VirtualNodeEntry> out;
    if (path.size() < 3) return out;
    std::vector<char> on_path(topo.size(), 0);
    for (NodeId p : path) on_path[static_cast<std::size_t>(p)] = 1;

    for (std::size_t i = 1; i + 1 < path.size(); ++i) {
        const NodeId pred = path[i - 1];
        const NodeId succ = path[i + 1];
        std::vector<VirtualNodeEntry> candidates;
        for (NodeId v : topo.neighbors(pred)) {
            if (on_path[static_cast<std::size_t>(v)] || !topo.live(v)) continue;
            const auto& succ_nb = topo.neighbors(succ);
            if (std::find(succ_nb.begin(), succ_nb.end(), v) == succ_nb.end()) continue;
            candidates.push_back({v, path[i], topo.zone(v)});
        }
        std::sort(candidates.begin(), candidates.end(),
                  [](const VirtualNodeEntry& a, const VirtualNodeEntry& b) {
                      if (a.battery_zone != b.battery_zone) return a.battery_zone < b.battery_zone;
                      return a.vn < b.vn;
                  });
        out.insert(out.end(), candidates.begin(), candidates.end());
    }
    return out;
}

// Follows next hops from `node` to the sink. Empty when unreachable; bails
// out on (stale) routing loops.
inline std::vector<NodeId> path_to_sink(NodeId node, const Topology& topo,
                                        const std::vector<RouteEntry>& routes) {
    std::vector<NodeId> path;
    NodeId cur = node;
    while (cur != kNoNode) {
        path.push_back(cur);
        if (cur == topo.sink()) return path;
        if (path.size() > topo.size()) break;
        cur = routes[static_cast<std::size_t>(cur)].next_hop;
    }
    return {};
}

// Fills each route entry's virtual-node list with the substitutes that
// protect that node's successor, so the predecessor that detects a broken
// link holds exactly the entries it needs for a local splice.
inline void attach_virtual_nodes(std::vector<RouteEntry>& routes, const Topology& topo) {
    for (std::size_t i = 0; i < routes.size(); ++i) {
        routes[i].virtual_nodes.clear();
        const auto id = static_cast<NodeId>(i);
        if (id == topo.sink() || !routes[i].reachable()) continue;
        const std::vector<NodeId> path = path_to_sink(id, topo, routes);
        if (path.size() < 3) continue;
        for (const VirtualNodeEntry& e : select_virtual_nodes(path, topo)) {
            if (e.protects == routes[i].next_hop) routes[i].virtual_nodes.push_back(e);
        }
    }
}

// Routing-layer distance consumed by the scheduler.
inline double distance_to_sink(NodeId node, DistanceMetric metric, const Topology& topo,
                               const std::vector<RouteEntry>& routes) {
    if (metric == DistanceMetric::Euclidean) return topo.dist(node, topo.sink());
    const RouteEntry& r = routes.at(static_cast<std::size_t>(node));
    if (!r.reachable()) {
        throw std::runtime_error("distance_to_sink: node " + std::to_string(node) +
                                 " has no route to the sink");
    }
    return static_cast<double>(r.hop_count);
}

} // namespace rtsim
