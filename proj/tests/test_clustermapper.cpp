#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "planesim/clustermapper.hpp"
#include "test_util.hpp"

using namespace planesim;
using namespace planesim::testutil;

namespace {

struct CmRig {
    std::unique_ptr<Rig> rig;
    std::unique_ptr<Clustermapper> cm;

    explicit CmRig(uint32_t radix = 8, uint32_t planes = 2, SimTime period = 100 * kMicrosecond) {
        rig = make_rig(radix, planes);
        ClustermapperConfig cfg;
        cfg.period = period;
        cfg.window = 50 * kMillisecond;
        cfg.down_consecutive = 5;
        cm = std::make_unique<Clustermapper>(*rig->fabric, cfg);
        cm->start();
    }
    void run_for(SimTime t) { rig->loop.run_until(rig->loop.now() + t); }
};

} // namespace

TEST_CASE("healthy fabric: full coverage each period, zero faults, zero false positives") {
    CmRig c;
    c.run_for(5 * kMillisecond);
    CHECK(c.cm->probes_lost() == 0);
    CHECK(c.cm->localize(c.rig->loop.now()).empty());
    CHECK(c.cm->coverage_gaps(c.rig->loop.now()).empty());
    // per-link probe rate: every NIC-T0 link probed once per period
    // 32 NICs x 2 planes x (1 T0 probe + 1 T1 probe share) per period
    uint64_t periods = 5 * kMillisecond / (100 * kMicrosecond);
    uint64_t expected = 32 * 2 * 2 * periods;
    CHECK(c.cm->probes_sent() >= expected - 32 * 2 * 2);
    CHECK(c.cm->probes_sent() <= expected + 32 * 2 * 2);
}

TEST_CASE("T1 probe assignment covers every T0-T1 link each period") {
    CmRig c(8, 2);
    c.run_for(kMillisecond);
    SimTime now = c.rig->loop.now();
    const TopologySpec& spec = c.rig->spec;
    for (uint32_t p = 0; p < spec.planes; ++p) {
        for (uint32_t g = 0; g < c.rig->topo->t0_per_plane(); ++g) {
            for (uint32_t u = 0; u < spec.t0_uplinks; ++u) {
                uint32_t agent = g * spec.t0_downlinks + (u % spec.t0_downlinks);
                CHECK(c.cm->health(agent, p, static_cast<int32_t>(u), now) != LinkHealth::NoData);
            }
        }
    }
}

TEST_CASE("probe ground truth: a probe rides exactly the path its address encodes") {
    CmRig c;
    // Out-and-back addresses must deliver back to the agent through the named
    // switches; trace the address statically.
    Srv6Template tmpl = c.rig->alloc->build_template(3);
    PathId via_t1{1, 2, c.rig->topo->downlink_of(3), false};
    RouteTrace tr = trace_route(*c.rig->topo, *c.rig->alloc, 3, tmpl.specialize(via_t1));
    REQUIRE(tr.delivered);
    CHECK(tr.delivered_nic == 3);
    REQUIRE(tr.hops.size() == 3);
    CHECK(tr.hops[1].is_t1);
    CHECK(tr.hops[1].index == 2);
}

TEST_CASE("NIC-T0 link fault localizes to exactly that link") {
    CmRig c;
    FailureEvent down;
    down.kind = FailureEvent::Kind::LinkDown;
    down.link = c.rig->topo->nic_t0_link(5, 1);
    c.rig->fabric->inject(down);
    c.run_for(3 * kMillisecond);
    auto faults = c.cm->localize(c.rig->loop.now());
    REQUIRE(faults.size() == 1);
    CHECK(faults[0].kind == Fault::Kind::NicT0Link);
    CHECK(faults[0].nic == 5);
    CHECK(faults[0].plane == 1);
}

TEST_CASE("agent with a down port reports it as a local port fault, zero probes on that plane") {
    CmRig c;
    FailureEvent down;
    down.kind = FailureEvent::Kind::LinkDown;
    down.link = c.rig->topo->nic_t0_link(0, 0);
    c.rig->fabric->inject(down);
    uint64_t before = c.cm->probes_sent();
    c.run_for(3 * kMillisecond);
    auto faults = c.cm->localize(c.rig->loop.now());
    REQUIRE(faults.size() == 1);
    CHECK(faults[0].kind == Fault::Kind::NicT0Link);
    CHECK(faults[0].nic == 0);
    // the agent sent nothing on the dead plane: per period it now emits only
    // the other plane's probes
    uint64_t periods = 30;
    uint64_t sent = c.cm->probes_sent() - before;
    uint64_t full = 32 * 2 * 2 * periods;
    CHECK(sent <= full - periods); // at least its own plane-0 probes missing
}

TEST_CASE("T0-T1 link fault: T0 probes clean, T1 probes through it fail") {
    CmRig c;
    FailureEvent down;
    down.kind = FailureEvent::Kind::LinkDown;
    down.link = c.rig->topo->t0_t1_link(1, 2, 3); // plane 1, T0 2, uplink 3
    c.rig->fabric->inject(down);
    c.run_for(3 * kMillisecond);
    auto faults = c.cm->localize(c.rig->loop.now());
    REQUIRE(faults.size() == 1);
    CHECK(faults[0].kind == Fault::Kind::T0T1Link);
    CHECK(faults[0].plane == 1);
    CHECK(faults[0].t0 == 2);
    CHECK(faults[0].uplink == 3);
}

TEST_CASE("T0 blackhole: every agent under it fails, localized as the switch") {
    CmRig c;
    FailureEvent bh;
    bh.kind = FailureEvent::Kind::SwitchBlackhole;
    bh.is_t1 = false;
    bh.plane = 0;
    bh.index = 3;
    c.rig->fabric->inject(bh);
    c.run_for(3 * kMillisecond);
    auto faults = c.cm->localize(c.rig->loop.now());
    REQUIRE(faults.size() == 1);
    CHECK(faults[0].kind == Fault::Kind::T0Switch);
    CHECK(faults[0].plane == 0);
    CHECK(faults[0].t0 == 3);
}

TEST_CASE("T1 blackhole: probes through it fail from every group while links stay up") {
    CmRig c;
    FailureEvent bh;
    bh.kind = FailureEvent::Kind::SwitchBlackhole;
    bh.is_t1 = true;
    bh.plane = 1;
    bh.index = 2;
    c.rig->fabric->inject(bh);
    c.run_for(3 * kMillisecond);
    auto faults = c.cm->localize(c.rig->loop.now());
    REQUIRE(faults.size() == 1);
    CHECK(faults[0].kind == Fault::Kind::T1Switch);
    CHECK(faults[0].plane == 1);
    CHECK(faults[0].uplink == 2);
    // links report administratively up while the probes fail
    for (uint32_t g = 0; g < c.rig->topo->t0_per_plane(); ++g)
        CHECK(c.rig->topo->link(c.rig->topo->t0_t1_link(1, g, 2)).up);
    std::string json = c.cm->health_json(c.rig->loop.now());
    CHECK(json.find("\"probe_state\": \"down\"") != std::string::npos);
    CHECK(json.find("\"link_admin_up\": true") != std::string::npos);
}

TEST_CASE("lossy NIC-T0 link yields a plane-scoped denylist entry") {
    CmRig c;
    FailureEvent lossy;
    lossy.kind = FailureEvent::Kind::RandomDrop;
    lossy.rate = 0.05;
    lossy.nic_scope = 5;
    lossy.plane_scope = 1;
    c.rig->fabric->inject(lossy);
    c.run_for(30 * kMillisecond);
    Denylist dl = c.cm->derive_denylist(c.rig->loop.now());
    REQUIRE(dl.entries().size() == 1);
    CHECK(dl.entries()[0].nic == 5);
    CHECK(dl.entries()[0].plane == 1);
}

TEST_CASE("a dead T0-T1 link yields no denylist entry under the default policy") {
    CmRig c;
    FailureEvent down;
    down.kind = FailureEvent::Kind::LinkDown;
    down.link = c.rig->topo->t0_t1_link(0, 1, 1);
    c.rig->fabric->inject(down);
    c.run_for(10 * kMillisecond);
    CHECK(c.cm->derive_denylist(c.rig->loop.now()).empty());
}

TEST_CASE("empty map yields an empty denylist") {
    auto rig = make_rig(8, 2);
    Clustermapper cm(*rig->fabric, ClustermapperConfig{});
    CHECK(cm.derive_denylist(0).empty());
    CHECK(cm.localize(0).empty());
}
