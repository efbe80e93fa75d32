#include <catch2/catch.hpp>

#include "rtsim/topology.hpp"

#include <cmath>
#include <set>

using namespace rtsim;

TEST_CASE("grid places one node at the center of each tile", "[topology]") {
    const Topology topo = deploy_grid(100, 1000.0, Corner::Northwest);
    REQUIRE(topo.size() == 100);
    // every coordinate is 50 mod 100
    for (const TopologyNode& n : topo.nodes()) {
        CHECK(std::fmod(n.pos.x - 50.0, 100.0) == 0.0);
        CHECK(std::fmod(n.pos.y - 50.0, 100.0) == 0.0);
        CHECK(n.pos.x >= 50.0);
        CHECK(n.pos.x <= 950.0);
    }
    CHECK(topo.node(0).pos.x == 50.0);
    CHECK(topo.node(0).pos.y == 50.0);
    CHECK(topo.node(1).pos.x == 150.0);
    CHECK(topo.node(99).pos.x == 950.0);
    CHECK(topo.node(99).pos.y == 950.0);
}

TEST_CASE("northwest sink is the node nearest (0, area)", "[topology]") {
    const Topology topo = deploy_grid(100, 1000.0, Corner::Northwest);
    const NodeId sink = topo.sink();
    CHECK(topo.node(sink).pos.x == 50.0);
    CHECK(topo.node(sink).pos.y == 950.0);
    double best = 1e18;
    NodeId nearest = kNoNode;
    for (const TopologyNode& n : topo.nodes()) {
        const double d = distance(n.pos, {0.0, 1000.0});
        if (d < best) {
            best = d;
            nearest = n.id;
        }
    }
    CHECK(nearest == sink);
}

TEST_CASE("degenerate one-node grid is its own sink", "[topology]") {
    const Topology topo = deploy_grid(1, 1000.0, Corner::Northwest);
    REQUIRE(topo.size() == 1);
    CHECK(topo.node(0).pos.x == 500.0);
    CHECK(topo.node(0).pos.y == 500.0);
    CHECK(topo.sink() == 0);
}

TEST_CASE("non-square node counts are rejected", "[topology]") {
    REQUIRE_THROWS_AS(deploy_grid(99, 1000.0, Corner::Northwest), std::invalid_argument);
}

TEST_CASE("random deployment is deterministic per seed", "[topology]") {
    Rng r1(77), r2(77), r3(78);
    const Topology a = deploy_random(100, 1000.0, r1);
    const Topology b = deploy_random(100, 1000.0, r2);
    const Topology c = deploy_random(100, 1000.0, r3);
    bool same = true, diff = false;
    for (std::size_t i = 0; i < 100; ++i) {
        same = same && a.node(static_cast<NodeId>(i)).pos.x == b.node(static_cast<NodeId>(i)).pos.x &&
               a.node(static_cast<NodeId>(i)).pos.y == b.node(static_cast<NodeId>(i)).pos.y;
        diff = diff || a.node(static_cast<NodeId>(i)).pos.x != c.node(static_cast<NodeId>(i)).pos.x;
    }
    CHECK(same);
    CHECK(diff);
}

TEST_CASE("random sink minimizes distance to the area center", "[topology]") {
    Rng rng(123);
    const Topology topo = deploy_random(100, 1000.0, rng);
    const double sink_d = distance(topo.node(topo.sink()).pos, {500.0, 500.0});
    for (const TopologyNode& n : topo.nodes()) {
        CHECK(sink_d <= distance(n.pos, {500.0, 500.0}));
    }
}

TEST_CASE("sink pick is the argmin over forced positions", "[topology]") {
    // (999,999) is 705.7 m from the center, (0,0) is 707.1 m
    CHECK(pick_central_sink({{0.0, 0.0}, {999.0, 999.0}}, 1000.0) == 1);
    CHECK(pick_central_sink({{0.0, 0.0}, {499.0, 501.0}}, 1000.0) == 1);
    CHECK(pick_central_sink({{400.0, 500.0}, {0.0, 0.0}}, 1000.0) == 0);
}

TEST_CASE("neighbor relation is symmetric and range-bounded", "[topology]") {
    Rng rng(5);
    const Topology topo = deploy_random(60, 1000.0, rng);
    for (std::size_t i = 0; i < topo.size(); ++i) {
        const auto id = static_cast<NodeId>(i);
        for (NodeId nb : topo.neighbors(id)) {
            CHECK(topo.dist(id, nb) <= topo.radio_range());
            const auto& back = topo.neighbors(nb);
            CHECK(std::find(back.begin(), back.end(), id) != back.end());
        }
    }
}

TEST_CASE("power zones follow the configured thresholds", "[topology]") {
    const ZoneThresholds th{0.3, 0.1};
    CHECK(power_zone(1.0, 1.0, th) == PowerZone::Active);
    CHECK(power_zone(0.2, 1.0, th) == PowerZone::Critical);
    CHECK(power_zone(0.05, 1.0, th) == PowerZone::Danger);
    // boundaries: Active requires ratio strictly above the threshold
    CHECK(power_zone(0.3, 1.0, th) == PowerZone::Critical);
    CHECK(power_zone(0.1, 1.0, th) == PowerZone::Danger);
    REQUIRE_THROWS_AS(power_zone(1.0, 0.0, th), std::invalid_argument);
}

TEST_CASE("energy consumption decrements, clamps and reclassifies", "[topology]") {
    std::vector<TopologyNode> nodes(2);
    nodes[0].id = 0;
    nodes[0].pos = {0.0, 0.0};
    nodes[0].energy = {100.0, 100.0};
    nodes[1].id = 1;
    nodes[1].pos = {100.0, 0.0};
    nodes[1].energy = {0.5, 100.0};
    Topology topo(nodes, 0, 1000.0, 250.0);

    CHECK(topo.consume_energy(0, EnergyAction::Transmit).remaining == 99.0);
    CHECK(topo.consume_energy(0, EnergyAction::Receive).remaining == 98.5);

    // clamp at zero; the node goes inert
    CHECK(topo.consume_energy(1, EnergyAction::Transmit).remaining == 0.0);
    CHECK_FALSE(topo.live(1));

    // crossing a threshold flips the zone exactly at the boundary
    topo.node(0).energy.remaining = 30.0;
    CHECK(topo.zone(0) == PowerZone::Critical);
    topo.node(0).energy.remaining = 30.000001;
    CHECK(topo.zone(0) == PowerZone::Active);
}

TEST_CASE("energy is monotone under arbitrary action sequences", "[topology]") {
    std::vector<TopologyNode> nodes(1);
    nodes[0].id = 0;
    nodes[0].energy = {50.0, 50.0};
    Topology topo(nodes, 0, 1000.0, 250.0);
    Rng rng(3);
    double last = 50.0;
    for (int i = 0; i < 500; ++i) {
        const auto action = rng.uniform_int(2) == 0 ? EnergyAction::Transmit
                                                    : EnergyAction::Receive;
        const double now = topo.consume_energy(0, action).remaining;
        REQUIRE(now <= last);
        REQUIRE(now >= 0.0);
        last = now;
    }
}

TEST_CASE("kill and revive directives toggle liveness", "[topology]") {
    const Topology base = deploy_grid(4, 1000.0, Corner::Southwest);
    Topology topo = base;
    CHECK(topo.live(2));
    topo.kill(2);
    CHECK_FALSE(topo.live(2));
    topo.revive(2);
    CHECK(topo.live(2));
}
