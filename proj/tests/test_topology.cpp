#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>

#include "planesim/topology.hpp"

using namespace planesim;

namespace {

TopologySpec make_spec(uint32_t radix, uint32_t planes, uint32_t down, uint32_t up) {
    TopologySpec s;
    s.switch_radix = radix;
    s.planes = planes;
    s.t0_downlinks = down;
    s.t0_uplinks = up;
    s.link_speed_bps = 100'000'000'000ull;
    return s;
}

// Brute-force leaf count: walk the explicitly constructed link list.
uint64_t brute_force_leaf_count(const Topology& t) {
    std::set<uint32_t> nics;
    for (const Link& l : t.links())
        if (l.kind == LinkKind::NicT0) nics.insert(l.a_index);
    return nics.size();
}

// Exhaustive walk counting simple up-down paths between two NICs in the
// explicit graph, independent of the closed-form count.
uint64_t brute_force_path_count(const Topology& t, uint32_t src, uint32_t dst) {
    uint64_t count = 0;
    uint32_t sg = t.group_of(src), dg = t.group_of(dst);
    for (uint32_t p = 0; p < t.planes(); ++p) {
        if (sg == dg) {
            ++count; // direct via the shared T0
            continue;
        }
        // each T0-T1 link out of src's T0 continues to dst's T0 through the T1
        for (const Link& l : t.links()) {
            if (l.kind != LinkKind::T0T1 || l.plane != p || l.a_index != sg) continue;
            // T1 l.b_index connects down to dst's T0 exactly once in a full mesh
            bool connects = false;
            for (const Link& m : t.links()) {
                if (m.kind == LinkKind::T0T1 && m.plane == p && m.a_index == dg && m.b_index == l.b_index) {
                    connects = true;
                    break;
                }
            }
            if (connects) ++count;
        }
    }
    return count;
}

} // namespace

TEST_CASE("spec invariants are enforced with the violated equation named") {
    TopologySpec s = make_spec(8, 2, 4, 3);
    CHECK_THROWS_WITH_AS(s.validate(),
                         doctest::Contains("t0_downlinks + t0_uplinks == switch_radix"), TopologyError);
    s = make_spec(8, 0, 4, 4);
    CHECK_THROWS_AS(s.validate(), TopologyError);
    s = make_spec(8, 2, 4, 4);
    CHECK_NOTHROW(s.validate());
}

TEST_CASE("paper-scale arithmetic: radix-512, 8 planes, full bisection") {
    TopologySpec s = make_spec(512, 8, 256, 256);
    CHECK(s.nic_count() == 131072);
    CHECK(s.t0_per_plane() == 512);
    CHECK(s.t1_per_plane() == 256);
    CHECK(s.full_bisection());
}

TEST_CASE("derived: radix-64 single plane") {
    TopologySpec s = make_spec(64, 1, 32, 32);
    Topology t(s);
    CHECK(t.nic_count() == 2048);
    CHECK(t.t0_per_plane() == 64);
    CHECK(t.t1_per_plane() == 32);
    CHECK(brute_force_leaf_count(t) == 2048);
}

TEST_CASE("degenerate minimal Clos") {
    TopologySpec s = make_spec(2, 1, 1, 1);
    Topology t(s);
    CHECK(t.nic_count() == 2);
    CHECK(t.t1_per_plane() == 1);
    CHECK(brute_force_leaf_count(t) == 2);
}

TEST_CASE("leaf-count formula equals brute force across radixes and planes") {
    for (uint32_t radix : {2u, 4u, 8u, 16u, 64u}) {
        for (uint32_t planes : {1u, 2u, 4u, 8u}) {
            TopologySpec s = make_spec(radix, planes, radix / 2, radix - radix / 2);
            Topology t(s);
            CHECK(brute_force_leaf_count(t) == s.nic_count());
        }
    }
}

TEST_CASE("per-plane subgraphs are edge-disjoint complete bipartite meshes") {
    Topology t(make_spec(8, 4, 4, 4));
    std::set<std::tuple<uint32_t, uint32_t, uint32_t>> seen; // (plane, t0, t1)
    std::vector<uint64_t> per_plane(4, 0);
    for (const Link& l : t.links()) {
        if (l.kind != LinkKind::T0T1) continue;
        auto key = std::make_tuple(l.plane, l.a_index, l.b_index);
        CHECK(seen.insert(key).second); // no duplicate edges anywhere
        ++per_plane[l.plane];
    }
    for (uint32_t p = 0; p < 4; ++p) CHECK(per_plane[p] == 8 * 4); // t0_count x uplinks
}

TEST_CASE("every NIC has one port per plane on its group's T0s") {
    Topology t(make_spec(8, 4, 4, 4));
    for (uint32_t n = 0; n < t.nic_count(); ++n) {
        for (uint32_t p = 0; p < 4; ++p) {
            const Link& l = t.link(t.nic_t0_link(n, p));
            CHECK(l.plane == p);
            CHECK(l.a_index == n);
            CHECK(l.b_index == t.group_of(n));
        }
    }
}

TEST_CASE("classify_pair") {
    Topology t(make_spec(8, 2, 4, 4));
    CHECK(t.classify_pair(0, 1) == PairClass::T0Local);
    CHECK(t.classify_pair(0, 4) == PairClass::CrossT1);
    CHECK_THROWS_AS(t.classify_pair(0, 0), TopologyError);   // self-pair rejected
    CHECK_THROWS_AS(t.classify_pair(0, 999), TopologyError); // unknown NIC
}

TEST_CASE("enumerate_paths matches the exhaustive graph walk and is duplicate-free") {
    for (uint32_t radix : {4u, 8u, 16u}) {
        for (uint32_t planes : {1u, 2u, 4u}) {
            Topology t(make_spec(radix, planes, radix / 2, radix / 2));
            uint32_t local_dst = 1, cross_dst = radix / 2; // first NIC of group 1
            for (uint32_t dst : {local_dst, cross_dst}) {
                auto paths = t.enumerate_paths(0, dst);
                CHECK(paths.size() == brute_force_path_count(t, 0, dst));
                std::set<std::tuple<uint32_t, uint32_t, bool>> uniq;
                for (const PathId& p : paths) {
                    CHECK(p.dst_downlink == t.downlink_of(dst));
                    CHECK(uniq.insert({p.plane, p.t0_uplink, p.local}).second);
                }
            }
        }
    }
}

TEST_CASE("T0-local pairs get exactly the P direct paths") {
    Topology t(make_spec(8, 4, 4, 4));
    auto paths = t.enumerate_paths(0, 1);
    CHECK(paths.size() == 4);
    for (const PathId& p : paths) CHECK(p.local);
}

TEST_CASE("enumeration is topology-static: a downed link stays enumerated") {
    Topology t(make_spec(8, 2, 4, 4));
    t.mutable_link(t.t0_t1_link(0, 0, 2)).up = false;
    auto paths = t.enumerate_paths(0, 4);
    CHECK(paths.size() == 2 * 4);
    bool found = false;
    for (const PathId& p : paths)
        if (p.plane == 0 && p.t0_uplink == 2) found = true;
    CHECK(found);
}

TEST_CASE("path_links names the exact links a path crosses") {
    Topology t(make_spec(8, 2, 4, 4));
    PathId p{1, 3, t.downlink_of(5), false};
    auto links = t.path_links(0, 5, p);
    REQUIRE(links.size() == 4);
    CHECK(links[0] == t.nic_t0_link(0, 1));
    CHECK(links[1] == t.t0_t1_link(1, t.group_of(0), 3));
    CHECK(links[2] == t.t0_t1_link(1, t.group_of(5), 3));
    CHECK(links[3] == t.nic_t0_link(5, 1));
}

TEST_CASE("capacity report reproduces the 3/5 switch and 2/3 optics ratios") {
    CapacityReport r = capacity_report(make_spec(512, 8, 256, 256));
    CHECK(r.nic_count == 131072);
    CHECK(r.switch_count == 6144);
    CHECK(r.baseline_switch_count == 10240);
    // exact rational checks
    CHECK(r.switch_count * 5 == r.baseline_switch_count * 3);
    CHECK(r.optics_count * 3 == doctest::Approx(r.baseline_optics_count * 2).epsilon(1e-12));
    CHECK(r.ratio_vs_3tier_switches == doctest::Approx(0.6));
    CHECK(r.ratio_vs_3tier_optics == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("single T0-T1 link loss fractions match the paper's bullets") {
    // 800G single plane with 32 uplinks
    TopologySpec s800 = make_spec(64, 1, 32, 32);
    s800.link_speed_bps = 800'000'000'000ull;
    CHECK(capacity_report(s800).per_link_loss_fraction == 1.0 / 32);
    // 100G plane with 256 uplinks
    CHECK(capacity_report(make_spec(512, 8, 256, 256)).per_link_loss_fraction == 1.0 / 256);
    // NIC-T0 loss: one of eight planes
    CHECK(capacity_report(make_spec(512, 8, 256, 256)).nic_link_loss_fraction == 1.0 / 8);
}

TEST_CASE("asymmetric specs are permitted but flagged") {
    CapacityReport r = capacity_report(make_spec(8, 2, 6, 2));
    CHECK_FALSE(r.full_bisection);
    CHECK(r.per_link_loss_fraction == 0.5);
    std::string json = r.to_json();
    CHECK(json.find("\"full_bisection\": false") != std::string::npos);
}

TEST_CASE("capacity report json carries the fixed key names") {
    std::string json = capacity_report(make_spec(8, 2, 4, 4)).to_json();
    for (const char* key : {"switch_count", "optics_count", "ratio_vs_3tier_switches",
                            "ratio_vs_3tier_optics", "per_link_loss_fraction"})
        CHECK(json.find(key) != std::string::npos);
}
