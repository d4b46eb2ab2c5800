#pragma once

#include <memory>
#include <vector>

#include "planesim/fabric.hpp"
#include "planesim/metrics.hpp"

namespace planesim::testutil {

struct Rig {
    TopologySpec spec;
    std::unique_ptr<Topology> topo;
    std::unique_ptr<Srv6Allocation> alloc;
    EventLoop loop;
    std::unique_ptr<Fabric> fabric;
};

inline std::unique_ptr<Rig> make_rig(uint32_t radix, uint32_t planes, FabricConfig fc = FabricConfig{},
                                     uint64_t link_gbps = 1) {
    auto rig = std::make_unique<Rig>();
    rig->spec.switch_radix = radix;
    rig->spec.planes = planes;
    rig->spec.t0_downlinks = radix / 2;
    rig->spec.t0_uplinks = radix - radix / 2;
    rig->spec.link_speed_bps = link_gbps * 1'000'000'000ull;
    rig->spec.propagation_delay = kMicrosecond;
    rig->topo = std::make_unique<Topology>(rig->spec);
    rig->alloc = std::make_unique<Srv6Allocation>(*rig->topo, 0xfbf00000u);
    rig->fabric = std::make_unique<Fabric>(*rig->topo, *rig->alloc, fc, rig->loop);
    return rig;
}

// Captures packets delivered to one NIC flow.
struct CaptureEndpoint : FlowEndpoint {
    std::vector<Packet> packets;
    void on_packet(Packet&& pkt, SimTime) override { packets.push_back(pkt); }
};

// Collects EV transitions and trace events for assertions.
struct TestSink : MetricsSink {
    struct Row {
        SimTime t;
        uint32_t flow, nic, ev, plane;
        std::string event;
    };
    std::vector<Row> ev_rows;
    struct Tx {
        SimTime t;
        uint32_t flow;
        std::string event;
        uint64_t psn;
        uint32_t ev, plane;
    };
    std::vector<Tx> traces;

    void ev_transition(SimTime t, uint32_t flow, uint32_t nic, uint32_t ev, uint32_t plane,
                       const char* event) override {
        ev_rows.push_back(Row{t, flow, nic, ev, plane, event});
    }
    void trace(SimTime t, uint32_t flow, const char* event, uint64_t psn, uint32_t ev,
               uint32_t plane) override {
        traces.push_back(Tx{t, flow, event, psn, ev, plane});
    }
    void latency_sample(uint32_t, SimTime) override {}

    size_t count(const std::string& event) const {
        size_t n = 0;
        for (const auto& r : ev_rows)
            if (r.event == event) ++n;
        return n;
    }
};

} // namespace planesim::testutil
