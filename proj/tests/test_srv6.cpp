#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>

#include "planesim/entropy.hpp"
#include "planesim/rng.hpp"
#include "planesim/srv6.hpp"

using namespace planesim;

namespace {
TopologySpec make_spec(uint32_t radix, uint32_t planes) {
    TopologySpec s;
    s.switch_radix = radix;
    s.planes = planes;
    s.t0_downlinks = radix / 2;
    s.t0_uplinks = radix / 2;
    return s;
}
constexpr uint32_t kLoc = 0xfbf00000u;
} // namespace

TEST_CASE("uSID field packing round-trips and overflows are rejected") {
    uint16_t u = make_usid(UsidKind::T1, 5, 1234);
    CHECK(usid_kind(u) == UsidKind::T1);
    CHECK(usid_plane(u) == 5);
    CHECK(usid_index(u) == 1234);
    CHECK_THROWS_AS(make_usid(UsidKind::T0, 8, 0), Srv6Error);    // plane field is 3 bits
    CHECK_THROWS_AS(make_usid(UsidKind::T0, 0, 2048), Srv6Error); // index field is 11 bits
}

TEST_CASE("ipv6 text form renders and parses") {
    Srv6Address a;
    a.locator = kLoc;
    a.usid[0] = 0x8123;
    a.usid[1] = 0x4001;
    std::string text = a.to_ipv6();
    CHECK(text == "fbf0:0:8123:4001::");
    auto parsed = Srv6Address::parse_ipv6(text);
    REQUIRE(parsed.has_value());
    CHECK(*parsed == a);

    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
        Srv6Address r;
        r.locator = rng.next_u32();
        for (auto& u : r.usid) u = static_cast<uint16_t>(rng.next_u64());
        auto round = Srv6Address::parse_ipv6(r.to_ipv6());
        REQUIRE(round.has_value());
        CHECK(*round == r);
    }
    CHECK(Srv6Address{}.to_ipv6() == "::");
    CHECK_FALSE(Srv6Address::parse_ipv6("not an address").has_value());
    CHECK_FALSE(Srv6Address::parse_ipv6("1:2:3:4:5:6:7:8:9").has_value());
}

TEST_CASE("the shift step consumes exactly one uSID and zero-fills the tail") {
    Srv6Address a;
    a.locator = kLoc;
    for (int i = 0; i < 6; ++i) a.usid[i] = static_cast<uint16_t>(0x1000 + i);
    Srv6Address s = a;
    for (int k = 1; k <= 6; ++k) {
        s = s.shifted();
        for (int i = 0; i < 6; ++i) {
            uint16_t expect = (i + k < 6) ? static_cast<uint16_t>(0x1000 + i + k) : 0;
            CHECK(s.usid[i] == expect);
        }
    }
}

TEST_CASE("forward_step: shift then static lookup, per the uN dataplane") {
    SwitchSrv6Config cfg;
    cfg.locator = kLoc;
    cfg.my_usid = 0xA001;
    uint64_t next_key = (static_cast<uint64_t>(kLoc) << 16) | 0xB002;
    cfg.static_fib[next_key] = 7;

    Srv6Address addr;
    addr.locator = kLoc;
    addr.usid = {0xA001, 0xB002, 0xC003, kUsidEnd, 0, 0};

    ForwardResult r = forward_step(cfg, addr);
    CHECK(r.outcome == ForwardOutcome::Forward);
    CHECK(r.egress_port == 7);
    CHECK(r.next.usid[0] == 0xB002);
    CHECK(r.next.usid[1] == 0xC003);
    CHECK(r.next.usid[2] == kUsidEnd);
    CHECK(r.next.usid[5] == 0);

    SUBCASE("post-shift END means terminal delivery") {
        Srv6Address last;
        last.locator = kLoc;
        last.usid = {0xA001, 0xB002, kUsidEnd, 0, 0, 0};
        ForwardResult d = forward_step(cfg, last);
        CHECK(d.outcome == ForwardOutcome::Deliver);
        CHECK(d.egress_port == 7);
    }
    SUBCASE("wrong locator is NOT_FOR_ME") {
        Srv6Address bad = addr;
        bad.locator ^= 1;
        CHECK(forward_step(cfg, bad).outcome == ForwardOutcome::NotForMe);
        CHECK(switch_process(cfg, bad).outcome == ForwardOutcome::NotForMe);
    }
    SUBCASE("missing route is a blackhole") {
        Srv6Address miss = addr;
        miss.usid[1] = 0xBBBB;
        CHECK(forward_step(cfg, miss).outcome == ForwardOutcome::FibMiss);
    }
}

TEST_CASE("allocation: (locator || uSID) unique fabric-wide, radix-4 toy checked exhaustively") {
    Topology t(make_spec(4, 2));
    Srv6Allocation alloc(t, kLoc);
    std::set<uint64_t> keys;
    for (uint32_t p = 0; p < 2; ++p) {
        for (uint32_t i = 0; i < t.t0_per_plane(); ++i) CHECK(keys.insert(alloc.t0_config(p, i).my_key()).second);
        for (uint32_t u = 0; u < t.t1_per_plane(); ++u) CHECK(keys.insert(alloc.t1_config(p, u).my_key()).second);
    }
    CHECK(keys.size() == 2 * (t.t0_per_plane() + t.t1_per_plane()));
}

TEST_CASE("plane number rides in every uSID of the address") {
    Topology t(make_spec(8, 4));
    Srv6Allocation alloc(t, kLoc);
    Srv6Template tmpl = alloc.build_template(5);
    for (uint32_t plane = 0; plane < 4; ++plane) {
        Srv6Address a = tmpl.specialize(PathId{plane, 2, t.downlink_of(5), false});
        CHECK(usid_plane(a.usid[0]) == plane);
        CHECK(usid_plane(a.usid[1]) == plane);
        CHECK(usid_plane(a.usid[2]) == plane);
        CHECK(a.usid[3] == kUsidEnd);
    }
    // changing plane changes all uSIDs
    Srv6Address p0 = tmpl.specialize(PathId{0, 2, t.downlink_of(5), false});
    Srv6Address p1 = tmpl.specialize(PathId{1, 2, t.downlink_of(5), false});
    for (int i = 0; i < 3; ++i) CHECK(p0.usid[i] != p1.usid[i]);
}

TEST_CASE("templates for NICs in one T0 group differ only in the dst uSID downlink bits") {
    Topology t(make_spec(8, 2));
    Srv6Allocation alloc(t, kLoc);
    for (uint32_t a = 4; a < 8; ++a) { // group 1
        for (uint32_t b = 4; b < 8; ++b) {
            Srv6Address aa = alloc.build_template(a).specialize(PathId{1, 3, t.downlink_of(a), false});
            Srv6Address ab = alloc.build_template(b).specialize(PathId{1, 3, t.downlink_of(b), false});
            CHECK(aa.usid[0] == ab.usid[0]);
            CHECK(aa.usid[1] == ab.usid[1]);
            CHECK(usid_kind(aa.usid[2]) == UsidKind::Dst);
            if (a != b) CHECK(usid_index(aa.usid[2]) != usid_index(ab.usid[2]));
        }
    }
}

TEST_CASE("T0-local template is a two-uSID address delivered in one switch hop") {
    Topology t(make_spec(8, 2));
    Srv6Allocation alloc(t, kLoc);
    Srv6Address a = alloc.build_template(1).specialize(PathId{0, 0, t.downlink_of(1), true});
    CHECK(usid_kind(a.usid[0]) == UsidKind::Dst);
    CHECK(a.usid[1] == kUsidEnd);
    RouteTrace tr = trace_route(t, alloc, 0, a);
    CHECK(tr.delivered);
    CHECK(tr.delivered_nic == 1);
    CHECK(tr.hops.size() == 1);
    CHECK_FALSE(tr.hops[0].is_t1);
}

TEST_CASE("ev_to_address is deterministic and injective over the path set") {
    Topology t(make_spec(8, 4));
    Srv6Allocation alloc(t, kLoc);
    uint32_t dst = 9;
    Srv6Template tmpl = alloc.build_template(dst);
    std::set<Srv6Address> seen;
    std::set<std::string> rendered;
    for (uint32_t plane = 0; plane < 4; ++plane) {
        for (uint32_t u = 0; u < 4; ++u) {
            uint32_t ev = encode_ev(EvFields{plane, u, 0}, 0x7777);
            Srv6Address a = ev_to_address(tmpl, ev, false, 4, 4);
            CHECK(a == ev_to_address(tmpl, ev, false, 4, 4)); // same EV, two calls
            CHECK(seen.insert(a).second);
            CHECK(rendered.insert(a.to_ipv6()).second);
        }
    }
    CHECK(seen.size() == 16);
    CHECK_THROWS_AS(ev_to_address(tmpl, encode_ev(EvFields{5, 0, 0}, 0), false, 4, 4), Srv6Error);
    CHECK_THROWS_AS(ev_to_address(tmpl, encode_ev(EvFields{0, 7, 0}, 0), false, 4, 4), Srv6Error);
}

TEST_CASE("round-trip: every (destination, path) walks exactly the encoded switches") {
    for (uint32_t planes : {1u, 2u, 4u}) {
        Topology t(make_spec(8, planes));
        Srv6Allocation alloc(t, kLoc);
        for (uint32_t dst = 0; dst < t.nic_count(); ++dst) {
            Srv6Template tmpl = alloc.build_template(dst);
            for (uint32_t src = 0; src < t.nic_count(); ++src) {
                if (src == dst) continue;
                for (const PathId& path : t.enumerate_paths(src, dst)) {
                    Srv6Address a = tmpl.specialize(path);
                    RouteTrace tr = trace_route(t, alloc, src, a);
                    REQUIRE(tr.delivered);
                    CHECK(tr.delivered_nic == dst);
                    if (path.local) {
                        REQUIRE(tr.hops.size() == 1);
                        CHECK(tr.hops[0].index == t.group_of(src));
                    } else {
                        REQUIRE(tr.hops.size() == 3);
                        CHECK(tr.hops[0].index == t.group_of(src));
                        CHECK(tr.hops[1].is_t1);
                        CHECK(tr.hops[1].index == path.t0_uplink);
                        CHECK(tr.hops[2].index == t.group_of(dst));
                        for (const TraceHop& h : tr.hops) CHECK(h.plane == path.plane);
                    }
                }
            }
        }
    }
}

TEST_CASE("fib dump is json with one entry per switch") {
    Topology t(make_spec(4, 1));
    Srv6Allocation alloc(t, kLoc);
    std::string j = alloc.fib_json();
    CHECK(j.find("t0_p0_0") != std::string::npos);
    CHECK(j.find("t1_p0_0") != std::string::npos);
}
