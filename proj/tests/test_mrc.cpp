#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>

#include "planesim/mrc.hpp"
#include "test_util.hpp"

using namespace planesim;
using namespace planesim::testutil;

namespace {

struct MrcPair {
    std::unique_ptr<Rig> rig;
    TestSink sink;
    std::unique_ptr<MrcQp> a, b;

    MrcPair(uint32_t radix, uint32_t planes, uint32_t src, uint32_t dst, MrcConfig cfg = MrcConfig{},
            FabricConfig fc = FabricConfig{}, const Denylist& dl = Denylist{}, uint64_t seed = 42) {
        rig = make_rig(radix, planes, fc);
        cfg.trace = true;
        a = std::make_unique<MrcQp>(*rig->fabric, 1, src, dst, cfg, dl, seed, &sink);
        b = std::make_unique<MrcQp>(*rig->fabric, 1, dst, src, cfg, dl, seed + 1, &sink);
        a->start();
        b->start();
    }
    void run_for(SimTime t) { rig->loop.run_until(rig->loop.now() + t); }
};

} // namespace

TEST_CASE("qp_create: EV set equally split across planes, denylist honored") {
    MrcConfig cfg;
    cfg.size_target = 128;
    MrcPair p(16, 8, 0, 9, cfg); // cross-T1 on radix-16: 8 uplinks
    for (uint32_t pl = 0; pl < 8; ++pl) CHECK(p.a->evs().active_count(pl) == 8); // min(128/8, uplinks)

    Denylist dl;
    DenylistEntry e;
    e.t0 = 0; // src group
    e.uplink = 3;
    dl.add(e);
    MrcPair q(16, 8, 0, 9, cfg, FabricConfig{}, dl);
    for (const EvRecord& r : q.a->evs().records()) CHECK(decode_ev(r.value).t0_uplink != 3);
}

TEST_CASE("post_write segments into MTU packets with consecutive PSNs, EV stamped per packet") {
    MrcPair p(8, 2, 0, 5);
    p.a->post_write(32768, false);
    p.run_for(100 * kMillisecond);
    CHECK(p.a->stats().data_pkts_sent == 8); // 32KB / 4KB
    CHECK(p.a->stats().completed_msgs == 1);
    CHECK(p.b->stats().delivered_bytes == 32768);
    std::set<uint64_t> psns;
    std::set<uint32_t> evs;
    for (const auto& tx : p.sink.traces) {
        if (tx.event != "tx") continue;
        psns.insert(tx.psn);
        evs.insert(tx.ev);
    }
    CHECK(psns.size() == 8);
    CHECK(*psns.begin() == 0);
    CHECK(*psns.rbegin() == 7);
    // sprayed across >= min(|active|, packets) distinct EVs
    CHECK(evs.size() == 8);
    CHECK(p.b->placement_contiguous(32768));
}

TEST_CASE("zero-length write emits a single header-only packet and completes") {
    MrcPair p(8, 2, 0, 5);
    bool done = false;
    p.a->set_send_completion([&](SimTime, uint64_t) { done = true; });
    p.a->post_write(0, false);
    p.run_for(50 * kMillisecond);
    CHECK(p.a->stats().data_pkts_sent == 1);
    CHECK(done);
}

TEST_CASE("write-with-immediate raises a receiver completion") {
    MrcPair p(8, 2, 0, 5);
    uint64_t recv_bytes = 0;
    p.b->set_recv_completion([&](SimTime, uint64_t, uint64_t bytes) { recv_bytes = bytes; });
    p.a->post_write(10000, true);
    p.run_for(50 * kMillisecond);
    CHECK(recv_bytes == 10000);
    CHECK(p.b->stats().recv_completions == 1);
}

TEST_CASE("T0-local QPs spray over exactly the P direct paths") {
    MrcPair p(8, 4, 0, 1);
    CHECK(p.a->t0_local());
    for (uint32_t pl = 0; pl < 4; ++pl) CHECK(p.a->evs().active_count(pl) == 1);
    p.a->post_write(65536, false);
    p.run_for(100 * kMillisecond);
    CHECK(p.b->stats().delivered_bytes == 65536);
}

TEST_CASE("loss retires the EV, promotes a same-plane backup, retransmits elsewhere") {
    MrcPair p(16, 2, 0, 9);
    // hard-drop one active EV end to end
    uint32_t victim = p.a->evs().records()[0].value;
    uint32_t victim_plane = decode_ev(victim).plane;
    FailureEvent ev;
    ev.kind = FailureEvent::Kind::EvDropRate;
    ev.ev = victim;
    ev.rate = 1.0;
    p.rig->fabric->inject(ev);

    for (int i = 0; i < 40; ++i) p.a->post_write(32768, false);
    p.run_for(500 * kMillisecond);
    CHECK(p.a->stats().completed_msgs == 40);
    CHECK(p.b->placement_contiguous(40 * 32768ull));
    REQUIRE(p.sink.count("deactivated") >= 1);
    // the victim was deactivated and the replacement came from the same plane
    bool saw_victim = false;
    for (const auto& r : p.sink.ev_rows) {
        if (r.event == "deactivated" && r.ev == victim) saw_victim = true;
        if (r.event == "activated") CHECK(r.plane == victim_plane);
    }
    CHECK(saw_victim);
    // retransmits never reuse the EV they failed on
    CHECK(p.a->stats().retransmits > 0);
    for (const auto& tx : p.sink.traces)
        if (tx.event == "retx") CHECK(tx.ev != victim);
}

TEST_CASE("trims trigger fast retransmission without retiring the EV") {
    FabricConfig fc;
    fc.queue_capacity_bytes = 32 * 1024; // small queues force trims
    MrcConfig cfg;
    cfg.size_target = 16;
    // two senders into one receiver: incast on the last hop
    auto rig = make_rig(8, 2, fc);
    TestSink sink;
    MrcConfig c = cfg;
    c.trace = true;
    Denylist dl;
    MrcQp a1(*rig->fabric, 1, 0, 4, c, dl, 1, &sink);
    MrcQp a2(*rig->fabric, 1, 4, 0, c, dl, 2, &sink);
    MrcQp b1(*rig->fabric, 2, 1, 4, c, dl, 3, &sink);
    MrcQp b2(*rig->fabric, 2, 4, 1, c, dl, 4, &sink);
    a1.start();
    a2.start();
    b1.start();
    b2.start();
    for (int i = 0; i < 30; ++i) {
        a1.post_write(65536, false);
        b1.post_write(65536, false);
    }
    rig->loop.run_until(2 * kSecond);
    CHECK(rig->fabric->counters().trims > 0);
    CHECK(a2.stats().delivered_bytes == 30 * 65536ull);
    CHECK(b2.stats().delivered_bytes == 30 * 65536ull);
    // congestion-only run: trims and ECN never retire an EV
    CHECK(sink.count("deactivated") == 0);
    CHECK(a1.stats().trim_nacks + b1.stats().trim_nacks > 0);
}

TEST_CASE("a trim NACK is answered within the same event-loop step on a different EV") {
    MrcPair p(16, 2, 0, 9);
    for (int i = 0; i < 4; ++i) p.a->post_write(32768, false);
    p.run_for(5 * kMicrosecond); // packets in flight, nothing acked yet
    SimTime now = p.rig->loop.now();
    uint32_t original_ev = 0;
    for (const auto& tx : p.sink.traces)
        if (tx.event == "tx" && tx.psn == 3) original_ev = tx.ev;
    REQUIRE(original_ev != 0);
    Packet nack;
    nack.kind = PktKind::MrcTrimNack;
    nack.flow = 1;
    nack.inner_src = 9;
    nack.inner_dst = 0;
    nack.psn = 3;
    p.a->on_packet(std::move(nack), now);
    bool immediate = false;
    for (const auto& tx : p.sink.traces) {
        if (tx.event == "retx" && tx.psn == 3) {
            CHECK(tx.t == now);
            CHECK(tx.ev != original_ev);
            immediate = true;
        }
    }
    CHECK(immediate);
    CHECK(p.a->stats().trim_nacks == 1);
    CHECK(p.sink.count("deactivated") == 0); // trim never retires

    SUBCASE("a stale NACK after the ack is ignored") {
        p.run_for(kSecond);
        uint64_t before = p.a->stats().retransmits;
        Packet stale;
        stale.kind = PktKind::MrcTrimNack;
        stale.flow = 1;
        stale.inner_src = 9;
        stale.inner_dst = 0;
        stale.psn = 3;
        p.a->on_packet(std::move(stale), p.rig->loop.now());
        CHECK(p.a->stats().stale_trim_nacks == 1);
        CHECK(p.a->stats().retransmits == before);
    }
}

TEST_CASE("ECN penalties steer selection away without removing EVs") {
    // Oversubscribed fabric: three group-0 senders share two uplinks per
    // plane, so T1 egress queues build and mark.
    FabricConfig fc;
    fc.queue_capacity_bytes = 32 * 1024;
    auto rig = [&] {
        auto r = std::make_unique<Rig>();
        r->spec.switch_radix = 8;
        r->spec.planes = 2;
        r->spec.t0_downlinks = 6;
        r->spec.t0_uplinks = 2;
        r->spec.link_speed_bps = 1'000'000'000ull;
        r->spec.propagation_delay = kMicrosecond;
        r->topo = std::make_unique<Topology>(r->spec);
        r->alloc = std::make_unique<Srv6Allocation>(*r->topo, 0xfbf00000u);
        r->fabric = std::make_unique<Fabric>(*r->topo, *r->alloc, fc, r->loop);
        return r;
    }();
    TestSink sink;
    MrcConfig cfg;
    cfg.size_target = 8;
    Denylist dl;
    std::vector<std::unique_ptr<MrcQp>> qps;
    for (uint32_t i = 0; i < 3; ++i) {
        auto s = std::make_unique<MrcQp>(*rig->fabric, i, i, 6 + i, cfg, dl, 10 + i, &sink);
        auto d = std::make_unique<MrcQp>(*rig->fabric, i, 6 + i, i, cfg, dl, 20 + i, &sink);
        s->start();
        d->start();
        for (int m = 0; m < 40; ++m) s->post_write(65536, false);
        qps.push_back(std::move(s));
        qps.push_back(std::move(d));
    }
    rig->loop.run_until(4 * kSecond);
    CHECK(rig->fabric->counters().ecn_marks > 0);
    CHECK(sink.count("deactivated") == 0);
    for (size_t i = 0; i < qps.size(); i += 2) CHECK(qps[i + 1]->stats().delivered_bytes == 40 * 65536ull);
}

TEST_CASE("probe resurrection returns a retired EV to the backup set") {
    MrcConfig cfg;
    cfg.probe_interval = 2 * kMillisecond;
    cfg.resurrect_threshold = 3;
    cfg.size_target = 8;  // 4 per plane active
    cfg.backup_target = 8; // plus backups, so the resurrected EV stays backup
    MrcPair p(16, 2, 0, 9, cfg);
    uint32_t victim = p.a->evs().records()[0].value;
    FailureEvent ev;
    ev.kind = FailureEvent::Kind::EvDropRate;
    ev.ev = victim;
    ev.rate = 1.0;
    p.rig->fabric->inject(ev);
    for (int i = 0; i < 30; ++i) p.a->post_write(32768, false);
    p.run_for(300 * kMillisecond);
    REQUIRE(p.sink.count("deactivated") >= 1);
    CHECK(p.sink.count("resurrected") == 0); // still dropping: no false resurrection
    // heal the path
    FailureEvent clear = ev;
    clear.kind = FailureEvent::Kind::EvDropClear;
    p.rig->fabric->inject(clear);
    p.run_for(300 * kMillisecond);
    CHECK(p.sink.count("resurrected") >= 1);
    CHECK(p.a->evs().find(victim)->state == EvState::Backup);
}

TEST_CASE("local port down parks the plane after the remap spread; recovery rebalances back") {
    MrcConfig cfg;
    cfg.remap_latency = 5 * kMillisecond;
    MrcPair p(8, 4, 0, 5, cfg);
    for (int i = 0; i < 200; ++i) p.a->post_write(32768, false);
    p.run_for(20 * kMillisecond);
    FailureEvent down;
    down.kind = FailureEvent::Kind::LinkDown;
    down.link = p.rig->topo->nic_t0_link(0, 2);
    p.rig->fabric->inject(down);
    p.run_for(50 * kMillisecond);
    CHECK(p.a->evs().plane_parked(2));
    // sends continue on the remaining planes
    CHECK(p.a->evs().usable_plane_count() == 3);
    FailureEvent up = down;
    up.kind = FailureEvent::Kind::LinkUp;
    p.rig->fabric->inject(up);
    p.run_for(200 * kMillisecond);
    CHECK_FALSE(p.a->evs().plane_parked(2));
    CHECK(p.a->evs().active_count(2) > 0);
    CHECK(p.a->stats().completed_msgs == 200);
    CHECK(p.b->placement_contiguous(200 * 32768ull));
}

TEST_CASE("port bitmap in SACKs makes the remote peer avoid the dead plane within an RTT") {
    MrcPair p(8, 4, 0, 5);
    // a->b traffic so b's SACKs flow back; then kill one of B's ports
    for (int i = 0; i < 500; ++i) p.a->post_write(32768, false);
    p.run_for(20 * kMillisecond);
    FailureEvent down;
    down.kind = FailureEvent::Kind::LinkDown;
    down.link = p.rig->topo->nic_t0_link(5, 1);
    p.rig->fabric->inject(down);
    SimTime budget = 2 * p.a->base_rtt() + 10 * kMicrosecond + 2 * kMillisecond;
    p.run_for(budget);
    CHECK(p.a->evs().plane_parked(1)); // remote park, learned from the bitmap
    p.run_for(300 * kMillisecond);
    // everything still completes over the remaining planes
    CHECK(p.a->stats().completed_msgs == 500);
}

TEST_CASE("all planes down stalls the QP; recovery resumes without QP error") {
    MrcConfig cfg;
    cfg.remap_latency = kMillisecond;
    MrcPair p(8, 2, 0, 5, cfg);
    for (int i = 0; i < 50; ++i) p.a->post_write(32768, false);
    p.run_for(2 * kMillisecond);
    for (uint32_t pl = 0; pl < 2; ++pl) {
        FailureEvent down;
        down.kind = FailureEvent::Kind::LinkDown;
        down.link = p.rig->topo->nic_t0_link(0, pl);
        p.rig->fabric->inject(down);
    }
    p.run_for(100 * kMillisecond);
    CHECK_FALSE(p.a->qp_error());
    uint64_t stalled_at = p.a->stats().completed_msgs;
    CHECK(stalled_at < 50);
    for (uint32_t pl = 0; pl < 2; ++pl) {
        FailureEvent up;
        up.kind = FailureEvent::Kind::LinkUp;
        up.link = p.rig->topo->nic_t0_link(0, pl);
        p.rig->fabric->inject(up);
    }
    p.run_for(500 * kMillisecond);
    CHECK(p.a->stats().completed_msgs == 50);
    CHECK_FALSE(p.a->qp_error());
}

TEST_CASE("reverse EV probes: one per RTT when inbound-only, none when bidirectional") {
    MrcPair uni(8, 2, 0, 5);
    for (int i = 0; i < 400; ++i) uni.a->post_write(32768, false);
    uni.run_for(60 * kMillisecond);
    // b is inbound-active with no outbound data: roughly one probe per RTT
    double rtts = 60.0 * kMillisecond / static_cast<double>(uni.b->base_rtt());
    CHECK(uni.b->stats().reverse_probes_sent > 0);
    CHECK(static_cast<double>(uni.b->stats().reverse_probes_sent) <= rtts + 2);

    // Bidirectional traffic suppresses probes while both directions flow; a
    // couple may fire at the tail when one side drains first.
    MrcPair bidir(8, 2, 0, 5);
    for (int i = 0; i < 200; ++i) {
        bidir.a->post_write(32768, false);
        bidir.b->post_write(32768, false);
    }
    bidir.run_for(60 * kMillisecond);
    CHECK(bidir.b->stats().reverse_probes_sent <= 3);
    CHECK(bidir.a->stats().reverse_probes_sent <= 3);
}

TEST_CASE("duplicate delivery is idempotent") {
    MrcConfig cfg;
    cfg.rto_rtts = 1.0; // aggressive timer provokes spurious retransmits
    MrcPair p(8, 2, 0, 5, cfg);
    for (int i = 0; i < 50; ++i) p.a->post_write(32768, false);
    p.run_for(kSecond);
    CHECK(p.b->stats().dup_pkts > 0);
    CHECK(p.b->placement_contiguous(50 * 32768ull));
    CHECK(p.b->stats().delivered_bytes == 50 * 32768ull); // counted once
}

TEST_CASE("plane equality holds through a loss-free run") {
    MrcPair p(16, 4, 0, 9);
    for (int i = 0; i < 100; ++i) p.a->post_write(32768, false);
    p.run_for(500 * kMillisecond);
    uint32_t expect = p.a->evs().active_count(0);
    for (uint32_t pl = 1; pl < 4; ++pl) CHECK(p.a->evs().active_count(pl) == expect);
    CHECK(p.sink.count("deactivated") == 0);
}

TEST_CASE("EV usage is uniform within 5% over a loss-free run") {
    MrcConfig cfg;
    cfg.size_target = 16;
    cfg.trace = true;
    MrcPair p(16, 4, 0, 9, cfg);
    for (int i = 0; i < 200; ++i) p.a->post_write(65536, false);
    p.run_for(2 * kSecond);
    std::map<uint32_t, uint64_t> use;
    uint64_t total = 0;
    for (const auto& tx : p.sink.traces) {
        if (tx.event == "tx" && tx.flow == 1) {
            // count only the a-side sender
        }
    }
    for (const auto& tx : p.sink.traces) {
        if (tx.event != "tx") continue;
        ++use[tx.ev];
        ++total;
    }
    // a and b EV spaces are disjoint; check uniformity within each sender
    std::map<uint32_t, uint64_t> a_use;
    uint64_t a_total = 0;
    std::set<uint32_t> a_evs;
    for (const EvRecord& r : p.a->evs().records()) a_evs.insert(r.value);
    for (const auto& [ev, n] : use) {
        if (a_evs.count(ev)) {
            a_use[ev] = n;
            a_total += n;
        }
    }
    REQUIRE(a_use.size() == 16);
    double mean = static_cast<double>(a_total) / 16.0;
    for (const auto& [ev, n] : a_use) {
        CHECK(static_cast<double>(n) >= 0.95 * mean);
        CHECK(static_cast<double>(n) <= 1.05 * mean);
    }
}

TEST_CASE("rkey mismatch is a fatal QP error, counted") {
    MrcPair p(8, 2, 0, 5);
    Packet bogus;
    bogus.kind = PktKind::MrcData;
    bogus.flow = 1;
    bogus.inner_src = 0;
    bogus.inner_dst = 5;
    bogus.rkey = 0xdeadbeef;
    bogus.len = 64;
    bogus.psn = 0;
    SimTime now = p.rig->loop.now();
    p.b->on_packet(std::move(bogus), now);
    CHECK(p.b->stats().rkey_errors == 1);
    CHECK(p.b->qp_error());
}
