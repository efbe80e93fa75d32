#pragma once

#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rtsim/mac.hpp"
#include "rtsim/routing.hpp"
#include "rtsim/scheduling.hpp"
#include "rtsim/simulator.hpp"
#include "rtsim/topology.hpp"

namespace rtsim {

struct ConfigError : std::runtime_error {
    ConfigError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_no(line) {}
    std::size_t line_no;
};

enum class Deployment : std::uint8_t { Grid, Random, Custom };

enum class SinkPlacement : std::uint8_t { Corner, Center, Explicit };

// A full experiment description: one deployment, one policy/routing pair,
// swept over deadlines, alphas and seeds. All defaults follow the standard
// parameter set (100 nodes on 1000 m x 1000 m, 250 m range, 2 Mbps, 32 B
// packets, 2 packets/s, 120 s).
struct ScenarioConfig {
    std::string name = "scenario";
    double sim_time = 120.0;
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};

    Deployment deployment = Deployment::Grid;
    std::size_t node_count = 100;
    double area = 1000.0;
    double radio_range = 250.0;
    SinkPlacement sink_placement = SinkPlacement::Corner;
    Corner sink_corner = Corner::Northwest;
    NodeId sink_node = kNoNode;
    std::vector<TopologyNode> custom_nodes;
    double energy_capacity = 1e6;
    EnergyCosts energy_costs;
    ZoneThresholds zones;
    std::vector<std::pair<NodeId, double>> energy_fractions;
    double energy_check_period = 0.0;

    MacParams mac;
    bool interference_set = false;
    bool sense_set = false;

    RoutingProtocol protocol = RoutingProtocol::ShortestPath;
    bool power_aware = true;
    bool vn_repair = true;
    double repair_timeout = 1.0;

    PolicyVariant policy = PolicyVariant::Drts;
    std::vector<double> alphas{0.7};
    std::optional<DistanceMetric> metric; // unset -> follows the routing protocol
    std::size_t queue_capacity = 64;
    double etd_smoothing = 0.2;
    std::optional<double> ohd; // unset -> radio range
    double dvm_epsilon = 1e-3;
    double exponent_cap = 60.0;

    TrafficSpec traffic;
    std::vector<double> deadlines{1.0};

    std::vector<NodeDirective> directives;
    std::string out_dir;

    DistanceMetric effective_metric() const {
        if (metric) return *metric;
        return protocol == RoutingProtocol::ShortestPath ? DistanceMetric::Hops
                                                         : DistanceMetric::Euclidean;
    }

    double effective_ohd() const { return ohd ? *ohd : radio_range; }
    double effective_interference() const {
        return interference_set ? mac.interference_range : radio_range;
    }
    double effective_sense() const {
        return sense_set ? mac.sense_range : effective_interference();
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

inline double parse_num(const std::string& v, std::size_t line) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError(line, "not a number: '" + v + "'");
    }
}

inline std::int64_t parse_int(const std::string& v, std::size_t line) {
    try {
        std::size_t pos = 0;
        const std::int64_t x = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError(line, "not an integer: '" + v + "'");
    }
}

inline bool parse_switch(const std::string& v, std::size_t line) {
    if (v == "on" || v == "true" || v == "1" || v == "yes") return true;
    if (v == "off" || v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(line, "expected on/off, got '" + v + "'");
}

inline std::vector<double> parse_num_list(const std::string& v, std::size_t line) {
    std::vector<double> out;
    for (const std::string& item : split(v, ',')) {
        if (!item.empty()) out.push_back(parse_num(item, line));
    }
    if (out.empty()) throw ConfigError(line, "empty list");
    return out;
}

inline PolicyVariant parse_policy(const std::string& v, std::size_t line) {
    if (v == "srts") return PolicyVariant::Srts;
    if (v == "drts") return PolicyVariant::Drts;
    if (v == "nlrts-static" || v == "nlrts") return PolicyVariant::NlrtsStatic;
    if (v == "nlrts-dynamic") return PolicyVariant::NlrtsDynamic;
    if (v == "svm") return PolicyVariant::Svm;
    if (v == "dvm") return PolicyVariant::Dvm;
    if (v == "fifo") return PolicyVariant::Fifo;
    throw ConfigError(line, "unknown policy '" + v + "'");
}

} // namespace detail

// Parses the line-based `key = value` scenario format. Sections group keys
// (`[mac]` + `slot_us` is the same as a bare `mac.slot_us`); `[failures]`
// accepts `fail node <id> at <t>` and `revive node <id> at <t>` directives.
// Unknown keys, malformed lines and out-of-range values fail with the
// offending line number.
inline ScenarioConfig parse_config(const std::string& text) {
    using namespace detail;
    ScenarioConfig cfg;
    std::string section;
    std::istringstream in(text);
    std::string raw;
    std::size_t line_no = 0;

    auto fail_directive = [&](const std::string& line, bool revive) {
        std::istringstream ls(line);
        std::string word, node_word, at_word;
        std::int64_t id = -1;
        double t = -1.0;
        ls >> word >> node_word >> id >> at_word >> t;
        if (node_word != "node" || at_word != "at" || ls.fail() || id < 0 || t < 0.0) {
            throw ConfigError(line_no, "malformed directive (expected '" + word +
                                           " node <id> at <t>')");
        }
        cfg.directives.push_back({t, static_cast<NodeId>(id), revive});
    };

    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(line_no, "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        if (section == "failures") {
            if (line.rfind("fail ", 0) == 0) {
                fail_directive(line, false);
                continue;
            }
            if (line.rfind("revive ", 0) == 0) {
                fail_directive(line, true);
                continue;
            }
            throw ConfigError(line_no, "unknown failure directive");
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(line_no, "expected 'key = value'");
        std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) throw ConfigError(line_no, "empty key or value");
        if (!section.empty() && key.find('.') == std::string::npos) key = section + "." + key;

        if (key == "sim.name") {
            cfg.name = value;
        } else if (key == "sim.time_s") {
            cfg.sim_time = parse_num(value, line_no);
            if (cfg.sim_time <= 0.0) throw ConfigError(line_no, "time_s must be > 0");
        } else if (key == "sim.seeds") {
            cfg.seeds.clear();
            for (double s : parse_num_list(value, line_no)) {
                if (s < 0.0) throw ConfigError(line_no, "seeds must be >= 0");
                cfg.seeds.push_back(static_cast<std::uint64_t>(s));
            }
        } else if (key == "topology.deployment") {
            if (value == "grid") {
                cfg.deployment = Deployment::Grid;
            } else if (value == "random") {
                cfg.deployment = Deployment::Random;
                cfg.sink_placement = SinkPlacement::Center;
            } else if (value == "custom") {
                cfg.deployment = Deployment::Custom;
            } else {
                throw ConfigError(line_no, "unknown deployment '" + value + "'");
            }
        } else if (key == "topology.nodes") {
            const std::int64_t n = parse_int(value, line_no);
            if (n < 1) throw ConfigError(line_no, "node count must be >= 1");
            cfg.node_count = static_cast<std::size_t>(n);
        } else if (key == "topology.area_m") {
            cfg.area = parse_num(value, line_no);
            if (cfg.area <= 0.0) throw ConfigError(line_no, "area_m must be > 0");
        } else if (key == "topology.radio_range_m") {
            cfg.radio_range = parse_num(value, line_no);
            if (cfg.radio_range <= 0.0) throw ConfigError(line_no, "radio_range_m must be > 0");
        } else if (key == "topology.sink") {
            if (value == "northwest") {
                cfg.sink_placement = SinkPlacement::Corner;
                cfg.sink_corner = Corner::Northwest;
            } else if (value == "northeast") {
                cfg.sink_placement = SinkPlacement::Corner;
                cfg.sink_corner = Corner::Northeast;
            } else if (value == "southwest") {
                cfg.sink_placement = SinkPlacement::Corner;
                cfg.sink_corner = Corner::Southwest;
            } else if (value == "southeast") {
                cfg.sink_placement = SinkPlacement::Corner;
                cfg.sink_corner = Corner::Southeast;
            } else if (value == "center") {
                cfg.sink_placement = SinkPlacement::Center;
            } else {
                cfg.sink_placement = SinkPlacement::Explicit;
                cfg.sink_node = static_cast<NodeId>(parse_int(value, line_no));
            }
        } else if (key == "topology.node") {
            std::istringstream ns(value);
            std::int64_t id = -1;
            double x = 0.0, y = 0.0;
            ns >> id >> x >> y;
            if (ns.fail() || id < 0) throw ConfigError(line_no, "expected 'node = <id> <x> <y>'");
            TopologyNode node;
            node.id = static_cast<NodeId>(id);
            node.pos = {x, y};
            cfg.custom_nodes.push_back(node);
        } else if (key == "topology.energy_capacity") {
            cfg.energy_capacity = parse_num(value, line_no);
            if (cfg.energy_capacity <= 0.0) throw ConfigError(line_no, "capacity must be > 0");
        } else if (key == "topology.tx_cost") {
            cfg.energy_costs.transmit = parse_num(value, line_no);
        } else if (key == "topology.rx_cost") {
            cfg.energy_costs.receive = parse_num(value, line_no);
        } else if (key == "topology.zone_active") {
            cfg.zones.active = parse_num(value, line_no);
        } else if (key == "topology.zone_danger") {
            cfg.zones.danger = parse_num(value, line_no);
        } else if (key == "topology.energy") {
            std::istringstream es(value);
            std::int64_t id = -1;
            double frac = -1.0;
            es >> id >> frac;
            if (es.fail() || id < 0 || frac < 0.0 || frac > 1.0) {
                throw ConfigError(line_no, "expected 'energy = <id> <fraction in [0,1]>'");
            }
            cfg.energy_fractions.emplace_back(static_cast<NodeId>(id), frac);
        } else if (key == "topology.energy_check_period_s") {
            cfg.energy_check_period = parse_num(value, line_no);
            if (cfg.energy_check_period < 0.0) {
                throw ConfigError(line_no, "energy_check_period_s must be >= 0");
            }
        } else if (key == "mac.bandwidth_bps") {
            cfg.mac.bandwidth_bps = parse_num(value, line_no);
            if (cfg.mac.bandwidth_bps <= 0.0) throw ConfigError(line_no, "bandwidth must be > 0");
        } else if (key == "mac.packet_bytes") {
            const std::int64_t b = parse_int(value, line_no);
            if (b < 1) throw ConfigError(line_no, "packet_bytes must be >= 1");
            cfg.mac.packet_bytes = static_cast<std::uint32_t>(b);
        } else if (key == "mac.slot_us") {
            cfg.mac.slot_s = parse_num(value, line_no) * 1e-6;
            if (cfg.mac.slot_s <= 0.0) throw ConfigError(line_no, "slot_us must be > 0");
        } else if (key == "mac.w0") {
            const std::int64_t w = parse_int(value, line_no);
            if (w < 1) throw ConfigError(line_no, "w0 must be >= 1");
            cfg.mac.w0 = static_cast<std::uint32_t>(w);
        } else if (key == "mac.max_retries") {
            const std::int64_t r = parse_int(value, line_no);
            if (r < 0) throw ConfigError(line_no, "max_retries must be >= 0");
            cfg.mac.max_retries = static_cast<std::uint32_t>(r);
        } else if (key == "mac.queue_capacity") {
            const std::int64_t c = parse_int(value, line_no);
            if (c < 1) throw ConfigError(line_no, "mac queue_capacity must be >= 1");
            cfg.mac.queue_capacity = static_cast<std::uint32_t>(c);
        } else if (key == "mac.interference_range_m") {
            cfg.mac.interference_range = parse_num(value, line_no);
            cfg.interference_set = true;
        } else if (key == "mac.sense_range_m") {
            cfg.mac.sense_range = parse_num(value, line_no);
            if (cfg.mac.sense_range <= 0.0) throw ConfigError(line_no, "sense range must be > 0");
            cfg.sense_set = true;
        } else if (key == "mac.frame_overhead_us") {
            cfg.mac.frame_overhead_s = parse_num(value, line_no) * 1e-6;
            if (cfg.mac.frame_overhead_s < 0.0) {
                throw ConfigError(line_no, "frame_overhead_us must be >= 0");
            }
        } else if (key == "mac.priority_classes") {
            const std::int64_t k = parse_int(value, line_no);
            if (k < 1) throw ConfigError(line_no, "priority_classes must be >= 1");
            cfg.mac.priority_classes = static_cast<std::uint32_t>(k);
        } else if (key == "mac.velocity_bin_mps") {
            cfg.mac.velocity_bin = parse_num(value, line_no);
            if (cfg.mac.velocity_bin <= 0.0) throw ConfigError(line_no, "bin must be > 0");
        } else if (key == "routing.protocol") {
            if (value == "sp") {
                cfg.protocol = RoutingProtocol::ShortestPath;
            } else if (value == "gf") {
                cfg.protocol = RoutingProtocol::GreedyForwarding;
            } else {
                throw ConfigError(line_no, "unknown routing protocol '" + value + "'");
            }
        } else if (key == "routing.power_aware") {
            cfg.power_aware = parse_switch(value, line_no);
        } else if (key == "routing.vn") {
            cfg.vn_repair = parse_switch(value, line_no);
        } else if (key == "routing.repair_timeout_s") {
            cfg.repair_timeout = parse_num(value, line_no);
            if (cfg.repair_timeout <= 0.0) throw ConfigError(line_no, "timeout must be > 0");
        } else if (key == "sched.policy") {
            cfg.policy = parse_policy(value, line_no);
        } else if (key == "sched.alpha") {
            cfg.alphas = parse_num_list(value, line_no);
            for (double a : cfg.alphas) {
                if (a <= 0.0 || a > 1.0) throw ConfigError(line_no, "alpha must be in (0,1]");
            }
        } else if (key == "sched.metric") {
            if (value == "hops") {
                cfg.metric = DistanceMetric::Hops;
            } else if (value == "euclidean") {
                cfg.metric = DistanceMetric::Euclidean;
            } else if (value == "auto") {
                cfg.metric.reset();
            } else {
                throw ConfigError(line_no, "unknown metric '" + value + "'");
            }
        } else if (key == "sched.queue_capacity") {
            const std::int64_t c = parse_int(value, line_no);
            if (c < 1) throw ConfigError(line_no, "queue_capacity must be >= 1");
            cfg.queue_capacity = static_cast<std::size_t>(c);
        } else if (key == "sched.etd_smoothing") {
            cfg.etd_smoothing = parse_num(value, line_no);
            if (cfg.etd_smoothing <= 0.0 || cfg.etd_smoothing > 1.0) {
                throw ConfigError(line_no, "etd_smoothing must be in (0,1]");
            }
        } else if (key == "sched.ohd_m") {
            const double v = parse_num(value, line_no);
            if (v <= 0.0) throw ConfigError(line_no, "ohd_m must be > 0");
            cfg.ohd = v;
        } else if (key == "sched.dvm_epsilon_s") {
            cfg.dvm_epsilon = parse_num(value, line_no);
            if (cfg.dvm_epsilon <= 0.0) throw ConfigError(line_no, "epsilon must be > 0");
        } else if (key == "sched.exponent_cap") {
            cfg.exponent_cap = parse_num(value, line_no);
        } else if (key == "traffic.mode") {
            if (value == "steady") {
                cfg.traffic.bursty = false;
            } else if (value == "bursty") {
                cfg.traffic.bursty = true;
            } else {
                throw ConfigError(line_no, "unknown traffic mode '" + value + "'");
            }
        } else if (key == "traffic.rate_pps") {
            cfg.traffic.rate_pps = parse_num(value, line_no);
            if (cfg.traffic.rate_pps <= 0.0) throw ConfigError(line_no, "rate must be > 0");
        } else if (key == "traffic.burst_on_s") {
            cfg.traffic.burst_on_s = parse_num(value, line_no);
            if (cfg.traffic.burst_on_s <= 0.0) throw ConfigError(line_no, "burst_on must be > 0");
        } else if (key == "traffic.burst_off_s") {
            cfg.traffic.burst_off_s = parse_num(value, line_no);
            if (cfg.traffic.burst_off_s < 0.0) throw ConfigError(line_no, "burst_off must be >= 0");
        } else if (key == "traffic.sources") {
            cfg.traffic.sources.clear();
            if (value != "all") {
                for (double s : parse_num_list(value, line_no)) {
                    cfg.traffic.sources.push_back(static_cast<NodeId>(s));
                }
            }
        } else if (key == "traffic.deadline_s") {
            cfg.deadlines = parse_num_list(value, line_no);
            for (double d : cfg.deadlines) {
                if (d <= 0.0) throw ConfigError(line_no, "deadline must be > 0");
            }
        } else if (key == "output.dir") {
            cfg.out_dir = value;
        } else {
            throw ConfigError(line_no, "unknown key '" + key + "'");
        }
    }

    if (cfg.deployment == Deployment::Custom && cfg.custom_nodes.empty()) {
        throw ConfigError(line_no, "custom deployment needs at least one 'node =' entry");
    }
    if (cfg.seeds.empty()) throw ConfigError(line_no, "need at least one seed");
    return cfg;
}

// Builds the deployment for one run. Random layouts draw from a dedicated
// stream of the run seed, so the same seed always yields the same field.
inline Topology build_topology(const ScenarioConfig& cfg, std::uint64_t seed) {
    Topology topo;
    switch (cfg.deployment) {
    case Deployment::Grid:
        topo = deploy_grid(cfg.node_count, cfg.area, cfg.sink_corner, cfg.zones,
                           cfg.energy_costs, cfg.radio_range, cfg.energy_capacity);
        break;
    case Deployment::Random: {
        Rng rng = Rng::stream(seed, 0x7057u);
        topo = deploy_random(cfg.node_count, cfg.area, rng, cfg.zones, cfg.energy_costs,
                             cfg.radio_range, cfg.energy_capacity);
        break;
    }
    case Deployment::Custom: {
        std::vector<TopologyNode> nodes = cfg.custom_nodes;
        std::sort(nodes.begin(), nodes.end(),
                  [](const TopologyNode& a, const TopologyNode& b) { return a.id < b.id; });
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (nodes[i].id != static_cast<NodeId>(i)) {
                throw std::runtime_error("custom node ids must be dense from 0");
            }
            nodes[i].energy = {cfg.energy_capacity, cfg.energy_capacity};
        }
        NodeId sink = cfg.sink_node;
        if (cfg.sink_placement != SinkPlacement::Explicit) {
            std::vector<NodePosition> pos;
            pos.reserve(nodes.size());
            for (const TopologyNode& n : nodes) pos.push_back(n.pos);
            sink = pick_central_sink(pos, cfg.area);
        }
        topo = Topology(std::move(nodes), sink, cfg.area, cfg.radio_range, cfg.zones,
                        cfg.energy_costs);
        break;
    }
    }
    if (cfg.deployment != Deployment::Custom && cfg.sink_placement == SinkPlacement::Explicit) {
        topo = Topology(topo.nodes(), cfg.sink_node, cfg.area, cfg.radio_range, cfg.zones,
                        cfg.energy_costs);
    }
    for (const auto& [id, frac] : cfg.energy_fractions) {
        if (id < 0 || static_cast<std::size_t>(id) >= topo.size()) {
            throw std::runtime_error("energy directive for unknown node " + std::to_string(id));
        }
        topo.set_energy_fraction(id, frac);
    }
    return topo;
}

// Resolves one (deadline, alpha, seed) sweep point into a run description.
inline RunConfig make_run_config(const ScenarioConfig& cfg, double deadline, double alpha,
                                 std::uint64_t seed) {
    RunConfig rc;
    rc.scenario = cfg.name;
    rc.policy.variant = cfg.policy;
    rc.policy.alpha = alpha;
    rc.policy.metric = cfg.effective_metric();
    rc.policy.ohd = cfg.effective_ohd();
    rc.policy.dvm_epsilon = cfg.dvm_epsilon;
    rc.policy.exponent_cap = cfg.exponent_cap;
    rc.protocol = cfg.protocol;
    rc.power_aware = cfg.power_aware;
    rc.vn_repair = cfg.vn_repair;
    rc.mac = cfg.mac;
    rc.mac.interference_range = cfg.effective_interference();
    rc.mac.sense_range = cfg.effective_sense();
    rc.traffic = cfg.traffic;
    rc.sim_time = cfg.sim_time;
    rc.deadline = deadline;
    rc.seed = seed;
    rc.queue_capacity = cfg.queue_capacity;
    rc.etd_smoothing = cfg.etd_smoothing;
    rc.repair_timeout = cfg.repair_timeout;
    rc.energy_check_period = cfg.energy_check_period;
    rc.directives = cfg.directives;
    return rc;
}

} // namespace rtsim
