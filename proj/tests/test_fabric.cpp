#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "planesim/event_loop.hpp"
#include "test_util.hpp"

using namespace planesim;
using namespace planesim::testutil;

namespace {

Packet data_packet(const Rig& rig, uint32_t src, uint32_t dst, const PathId& path, uint32_t len,
                   uint32_t flow = 1) {
    Packet pkt;
    pkt.kind = PktKind::MrcData;
    pkt.flow = flow;
    pkt.inner_src = src;
    pkt.inner_dst = dst;
    pkt.outer = rig.alloc->build_template(dst).specialize(path);
    pkt.len = len;
    pkt.wire_bytes = len + kHeaderBytes;
    return pkt;
}

} // namespace

TEST_CASE("event loop: equal-time events run in insertion order; clock is monotone") {
    EventLoop loop;
    struct Recorder : EventHandler {
        std::vector<uint64_t> order;
        void on_event(uint64_t tag, SimTime) override { order.push_back(tag); }
    } rec;
    loop.schedule(100, &rec, 1);
    loop.schedule(50, &rec, 2);
    loop.schedule(100, &rec, 3);
    loop.schedule(75, &rec, 4);
    loop.run_until(200);
    CHECK(rec.order == std::vector<uint64_t>{2, 4, 1, 3});
    CHECK(loop.now() == 200);
}

TEST_CASE("event loop: livelock watchdog aborts with a diagnostic") {
    EventLoop loop;
    loop.set_same_time_limit(1000);
    struct Spinner : EventHandler {
        EventLoop* l;
        void on_event(uint64_t, SimTime now) override { l->schedule(now, this, 0); }
    } sp;
    sp.l = &loop;
    loop.schedule(10, &sp, 0);
    CHECK_THROWS_WITH_AS(loop.run_until(20), doctest::Contains("livelock"), std::runtime_error);
}

TEST_CASE("enqueue: below the ECN floor packets queue unmarked") {
    auto rig = make_rig(4, 1);
    Channel& ch = rig->fabric->channel_for(rig->topo->nic_t0_link(2, 0), false); // T0->NIC: last hop
    CHECK_FALSE(ch.ecn_mark); // MRC disables ECN on the last hop
    auto out = rig->fabric->enqueue(ch, data_packet(*rig, 0, 2, PathId{0, 0, 0, true}, 1024), nullptr);
    CHECK(out == EnqueueOutcome::Queued);
    CHECK(ch.q.size() == 1);
    CHECK_FALSE(ch.q.front().ecn);
}

TEST_CASE("enqueue: RED marking engages between min and max on fabric hops") {
    auto rig = make_rig(4, 1);
    Channel& ch = rig->fabric->channel_for(rig->topo->t0_t1_link(0, 0, 0), true);
    CHECK(ch.ecn_mark);
    uint32_t marked = 0, total = 0;
    while (ch.q_bytes + 1088 <= ch.capacity) {
        auto out = rig->fabric->enqueue(ch, data_packet(*rig, 0, 2, PathId{0, 0, 0, false}, 1024), nullptr);
        REQUIRE((out == EnqueueOutcome::Queued || out == EnqueueOutcome::QueuedMarked));
        if (ch.q_bytes > ch.ecn_max) {
            // past the max threshold marking is certain
            CHECK(out == EnqueueOutcome::QueuedMarked);
        }
        if (out == EnqueueOutcome::QueuedMarked) ++marked;
        ++total;
    }
    CHECK(marked > 0);
    CHECK(marked < total); // below the floor nothing was marked
}

TEST_CASE("enqueue: overflow trims data payloads into the priority queue") {
    auto rig = make_rig(4, 1);
    Channel& ch = rig->fabric->channel_for(rig->topo->t0_t1_link(0, 0, 0), true);
    while (ch.q_bytes + 4096 + kHeaderBytes <= ch.capacity)
        rig->fabric->enqueue(ch, data_packet(*rig, 0, 2, PathId{0, 0, 0, false}, 4096), nullptr);
    auto out = rig->fabric->enqueue(ch, data_packet(*rig, 0, 2, PathId{0, 0, 0, false}, 4096), nullptr);
    CHECK(out == EnqueueOutcome::Trimmed);
    REQUIRE(ch.trimq.size() == 1);
    CHECK(ch.trimq.front().trimmed);
    CHECK(ch.trimq.front().wire_bytes == kHeaderBytes);
    CHECK(rig->fabric->counters().trims == 1);

    SUBCASE("with both queues full, fresh data is a congestion drop") {
        FabricConfig cfg = rig->fabric->config();
        for (uint32_t i = 0; i < cfg.trim_queue_packets + 4; ++i)
            rig->fabric->enqueue(ch, data_packet(*rig, 0, 2, PathId{0, 0, 0, false}, 4096), nullptr);
        CHECK(rig->fabric->counters().drops_queue_full > 0);
    }
    SUBCASE("already-trimmed headers hitting a full trim queue are counted separately") {
        FabricConfig cfg = rig->fabric->config();
        for (uint32_t i = 0; i < cfg.trim_queue_packets + 4; ++i) {
            Packet hdr = data_packet(*rig, 0, 2, PathId{0, 0, 0, false}, 0);
            hdr.trimmed = true;
            hdr.wire_bytes = kHeaderBytes;
            rig->fabric->enqueue(ch, std::move(hdr), nullptr);
        }
        CHECK(rig->fabric->counters().drops_trim_overflow > 0);
    }
}

TEST_CASE("enqueue: with trimming off a full queue drops") {
    FabricConfig fc;
    fc.trim_enabled = false;
    auto rig = make_rig(4, 1, fc);
    Channel& ch = rig->fabric->channel_for(rig->topo->t0_t1_link(0, 0, 0), true);
    while (ch.q_bytes + 4096 + kHeaderBytes <= ch.capacity)
        rig->fabric->enqueue(ch, data_packet(*rig, 0, 2, PathId{0, 0, 0, false}, 4096), nullptr);
    auto out = rig->fabric->enqueue(ch, data_packet(*rig, 0, 2, PathId{0, 0, 0, false}, 4096), nullptr);
    CHECK(out == EnqueueOutcome::Dropped);
    CHECK(rig->fabric->counters().drops_queue_full == 1);
}

TEST_CASE("already-trimmed headers keep priority at later hops") {
    auto rig = make_rig(4, 1);
    Channel& ch = rig->fabric->channel_for(rig->topo->t0_t1_link(0, 0, 0), true);
    Packet pkt = data_packet(*rig, 0, 2, PathId{0, 0, 0, false}, 0);
    pkt.trimmed = true;
    pkt.wire_bytes = kHeaderBytes;
    auto out = rig->fabric->enqueue(ch, std::move(pkt), nullptr);
    CHECK(out == EnqueueOutcome::Queued);
    CHECK(ch.trimq.size() == 1);
}

TEST_CASE("end-to-end delivery preserves the inner packet; EV survives the shifting") {
    auto rig = make_rig(8, 2);
    CaptureEndpoint cap;
    rig->fabric->register_flow(6, 42, &cap);
    Packet pkt = data_packet(*rig, 0, 6, PathId{1, 2, rig->topo->downlink_of(6), false}, 2048, 42);
    pkt.ev = 0xabcd1234;
    pkt.psn = 77;
    pkt.va = 0x1000;
    pkt.rkey = 99;
    REQUIRE(rig->fabric->nic_send(0, 1, std::move(pkt)));
    rig->loop.run_until(kSecond);
    REQUIRE(cap.packets.size() == 1);
    const Packet& got = cap.packets[0];
    CHECK(got.ev == 0xabcd1234);
    CHECK(got.psn == 77);
    CHECK(got.va == 0x1000);
    CHECK(got.len == 2048);
    CHECK(got.rkey == 99);
    CHECK(rig->fabric->counters().delivered == 1);
    CHECK(rig->fabric->counters().emitted == 1);
}

TEST_CASE("wrong inner destination increments MISDELIVERY, no crash") {
    auto rig = make_rig(8, 1);
    CaptureEndpoint cap;
    rig->fabric->register_flow(6, 42, &cap);
    // address steers to NIC 6 but the inner header names NIC 7
    Packet pkt = data_packet(*rig, 0, 6, PathId{0, 1, rig->topo->downlink_of(6), false}, 512, 42);
    pkt.inner_dst = 7;
    rig->fabric->nic_send(0, 0, std::move(pkt));
    rig->loop.run_until(kSecond);
    CHECK(cap.packets.empty());
    CHECK(rig->fabric->counters().drops_misdelivery == 1);
}

TEST_CASE("unknown flows are counted, not fatal") {
    auto rig = make_rig(8, 1);
    Packet pkt = data_packet(*rig, 0, 6, PathId{0, 1, rig->topo->downlink_of(6), false}, 512, 777);
    rig->fabric->nic_send(0, 0, std::move(pkt));
    rig->loop.run_until(kSecond);
    CHECK(rig->fabric->counters().drops_unknown_flow == 1);
}

TEST_CASE("link down loses exactly the frames on the wire; queued frames wait for recovery") {
    auto rig = make_rig(4, 1);
    CaptureEndpoint cap;
    rig->fabric->register_flow(2, 42, &cap);
    // Queue several packets on NIC0's uplink, then drop the link while the
    // first is mid-flight.
    for (int i = 0; i < 6; ++i) {
        Packet pkt = data_packet(*rig, 0, 2, PathId{0, 0, 0, false}, 4096, 42);
        pkt.psn = static_cast<uint64_t>(i);
        rig->fabric->nic_send(0, 0, std::move(pkt));
    }
    // serialization of pkt0 takes 4160B*8/1G = 33.28us; cut at 10us
    FailureEvent down;
    down.kind = FailureEvent::Kind::LinkDown;
    down.time = 10 * kMicrosecond;
    down.link = rig->topo->nic_t0_link(0, 0);
    rig->fabric->schedule_failure(down);
    FailureEvent up = down;
    up.kind = FailureEvent::Kind::LinkUp;
    up.time = 100 * kMicrosecond;
    rig->fabric->schedule_failure(up);
    rig->loop.run_until(kSecond);
    CHECK(rig->fabric->counters().drops_link_down == 1); // only the serializing frame
    CHECK(cap.packets.size() == 5);                      // the rest flowed after recovery
    CHECK(rig->fabric->counters().emitted ==
          rig->fabric->counters().delivered + rig->fabric->counters().total_dropped());
}

TEST_CASE("blackholed switch silently eats packets while its links stay up") {
    auto rig = make_rig(8, 1);
    CaptureEndpoint cap;
    rig->fabric->register_flow(6, 42, &cap);
    FailureEvent bh;
    bh.kind = FailureEvent::Kind::SwitchBlackhole;
    bh.is_t1 = true;
    bh.plane = 0;
    bh.index = 1;
    rig->fabric->inject(bh);
    Packet pkt = data_packet(*rig, 0, 6, PathId{0, 1, rig->topo->downlink_of(6), false}, 512, 42);
    rig->fabric->nic_send(0, 0, std::move(pkt));
    rig->loop.run_until(kSecond);
    CHECK(cap.packets.empty());
    CHECK(rig->fabric->counters().drops_blackhole == 1);
    CHECK(rig->topo->link(rig->topo->t0_t1_link(0, 0, 1)).up); // links report up
    CHECK(rig->fabric->t1_counters(0, 1).blackholed == 1);

    SUBCASE("restore clears the blackhole") {
        FailureEvent rs = bh;
        rs.kind = FailureEvent::Kind::SwitchRestore;
        rig->fabric->inject(rs);
        Packet again = data_packet(*rig, 0, 6, PathId{0, 1, rig->topo->downlink_of(6), false}, 512, 42);
        rig->fabric->nic_send(0, 0, std::move(again));
        rig->loop.run_until(2 * kSecond);
        CHECK(cap.packets.size() == 1);
    }
}

TEST_CASE("random drop rules hit only their scope") {
    FabricConfig fc;
    auto rig = make_rig(4, 2, fc);
    CaptureEndpoint cap2, cap3;
    rig->fabric->register_flow(2, 42, &cap2);
    rig->fabric->register_flow(3, 43, &cap3);
    FailureEvent drop;
    drop.kind = FailureEvent::Kind::RandomDrop;
    drop.rate = 1.0;
    drop.nic_scope = 2;
    drop.plane_scope = 1;
    rig->fabric->inject(drop);
    for (uint32_t plane = 0; plane < 2; ++plane) {
        Packet pkt = data_packet(*rig, 0, 2, PathId{plane, 0, 0, false}, 512, 42);
        rig->fabric->nic_send(0, plane, std::move(pkt));
        Packet other = data_packet(*rig, 0, 3, PathId{plane, 0, 1, false}, 512, 43);
        rig->fabric->nic_send(0, plane, std::move(other));
    }
    rig->loop.run_until(kSecond);
    CHECK(cap2.packets.size() == 1); // plane-1 arrival dropped
    CHECK(cap3.packets.size() == 2); // other NIC untouched
    CHECK(rig->fabric->counters().drops_injected == 1);
}

TEST_CASE("port watchers hear both edges of a flap") {
    auto rig = make_rig(4, 2);
    struct Watcher : PortWatcher {
        std::vector<std::pair<uint32_t, bool>> events;
        void on_port_state(uint32_t plane, bool up, SimTime) override { events.emplace_back(plane, up); }
    } w;
    rig->fabric->register_port_watcher(1, &w);
    FailureEvent down;
    down.kind = FailureEvent::Kind::LinkDown;
    down.time = kMillisecond;
    down.link = rig->topo->nic_t0_link(1, 1);
    rig->fabric->schedule_failure(down);
    FailureEvent up = down;
    up.kind = FailureEvent::Kind::LinkUp;
    up.time = 2 * kMillisecond;
    rig->fabric->schedule_failure(up);
    rig->loop.run_until(3 * kMillisecond);
    REQUIRE(w.events.size() == 2);
    CHECK(w.events[0] == std::pair<uint32_t, bool>{1, false});
    CHECK(w.events[1] == std::pair<uint32_t, bool>{1, true});
}
