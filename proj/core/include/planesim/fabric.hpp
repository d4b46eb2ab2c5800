#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <unordered_map>
#include <vector>

#include "planesim/event_loop.hpp"
#include "planesim/packet.hpp"
#include "planesim/rng.hpp"
#include "planesim/srv6.hpp"
#include "planesim/topology.hpp"

namespace planesim {

struct FabricConfig {
    uint32_t mtu = 4096;
    uint32_t header_bytes = kHeaderBytes;
    uint64_t queue_capacity_bytes = 0; // 0 = auto: max(1MB * speed/100G, 8 MTU)
    double ecn_min_frac = 0.2;
    double ecn_max_frac = 0.8;
    bool ecn_enabled = true;
    bool ecn_on_last_hop = false; // DCQCN marks everywhere; MRC never on last hop
    bool trim_enabled = true;
    uint32_t trim_queue_packets = 64;
    bool pfc_enabled = false;
    uint64_t pfc_xoff_bytes = 0; // 0 = auto (capacity/2)
    uint64_t pfc_xon_bytes = 0;  // 0 = auto (capacity/4)
    uint64_t seed = 1;
};

enum class EnqueueOutcome : uint8_t { Queued, QueuedMarked, Trimmed, Dropped };

struct FailureEvent {
    enum class Kind : uint8_t {
        LinkDown,
        LinkUp,
        SwitchBlackhole,
        SwitchRestore,
        SwitchReboot,
        EvDropRate,
        EvDropClear,
        RandomDrop,
        RandomDropClear,
    };
    Kind kind = Kind::LinkDown;
    SimTime time = 0;
    LinkId link = kNoLink;
    bool is_t1 = false;
    uint32_t plane = 0;
    uint32_t index = 0;
    SimTime duration = 0; // SwitchReboot restore delay
    uint32_t ev = 0;      // EvDropRate
    double rate = 0;      // drop probability
    int64_t nic_scope = -1;   // RandomDrop: -1 = all NIC ingress
    int64_t plane_scope = -1; // restrict to packets arriving on one plane
};

// Per-flow packet-conservation ledger. Every emitted packet instance ends in
// exactly one of: delivered, delivered_trimmed, dropped, or still in flight
// when the run stops.
struct FlowLedger {
    uint64_t emitted = 0;
    uint64_t delivered = 0;
    uint64_t delivered_trimmed = 0;
    uint64_t dropped = 0;
};

struct FabricCounters {
    uint64_t emitted = 0;
    uint64_t delivered = 0;
    uint64_t delivered_trimmed = 0;
    uint64_t drops_queue_full = 0;
    uint64_t drops_trim_overflow = 0;
    uint64_t drops_link_down = 0;
    uint64_t drops_tx_down = 0;
    uint64_t drops_blackhole = 0;
    uint64_t drops_fib_miss = 0;
    uint64_t drops_not_for_me = 0;
    uint64_t drops_misdelivery = 0;
    uint64_t drops_injected = 0;
    uint64_t drops_unknown_flow = 0;
    uint64_t trims = 0;
    uint64_t ecn_marks = 0;
    uint64_t pfc_pauses = 0;
    uint64_t pfc_resumes = 0;

    uint64_t total_dropped() const {
        return drops_queue_full + drops_trim_overflow + drops_link_down + drops_tx_down + drops_blackhole +
               drops_fib_miss + drops_not_for_me + drops_misdelivery + drops_injected + drops_unknown_flow;
    }
};

struct SwitchCounters {
    uint64_t forwarded = 0;
    uint64_t drops = 0;
    uint64_t trims = 0;
    uint64_t ecn_marks = 0;
    uint64_t pauses = 0;
    uint64_t blackholed = 0;
};

class FlowEndpoint {
  public:
    virtual ~FlowEndpoint() = default;
    virtual void on_packet(Packet&& pkt, SimTime now) = 0;
};

class PortWatcher {
  public:
    virtual ~PortWatcher() = default;
    virtual void on_port_state(uint32_t plane, bool up, SimTime now) = 0;
};

// One direction of a cable: an egress queue at the sending node, a serializer,
// and a propagation pipe. Strict-priority trim queue rides in front.
struct Channel {
    uint32_t id = 0;
    LinkId link = kNoLink;
    bool forward = true; // a->b
    uint64_t bps = 0;
    SimTime prop = 0;

    bool up = true;
    bool paused = false;
    bool busy = false;
    bool serving_trim = false; // which queue the in-progress frame came from
    uint64_t epoch = 0;        // bumps on link-down; stale serializer events are ignored

    std::deque<Packet> q;
    uint64_t q_bytes = 0;
    std::deque<Packet> trimq;
    uint64_t capacity = 0;
    uint64_t ecn_min = 0;
    uint64_t ecn_max = 0;
    bool ecn_mark = false;
    bool trim = false;

    std::deque<std::pair<SimTime, Packet>> flight;
    bool arrival_scheduled = false;

    uint64_t occupancy() const { return q_bytes; }
};

class Fabric : public EventHandler {
  public:
    Fabric(Topology& topo, const Srv6Allocation& alloc, const FabricConfig& cfg, EventLoop& loop);

    EventLoop& loop() { return loop_; }
    Topology& topology() { return topo_; }
    const Srv6Allocation& allocation() const { return alloc_; }
    const FabricConfig& config() const { return cfg_; }

    // --- NIC-side interface used by transports and the prober ---
    bool nic_send(uint32_t nic, uint32_t plane, Packet&& pkt);
    bool nic_port_up(uint32_t nic, uint32_t plane) const;
    void register_flow(uint32_t nic, uint32_t flow, FlowEndpoint* ep);
    void register_probe_sink(uint32_t nic, FlowEndpoint* ep);
    void register_port_watcher(uint32_t nic, PortWatcher* w);

    // --- failure injection ---
    void schedule_failure(const FailureEvent& ev);
    void inject(const FailureEvent& ev); // immediate

    // Dataplane enqueue onto a directed channel's egress queue: RED-style ECN
    // marking, payload trimming into the priority queue on overflow, or drop.
    EnqueueOutcome enqueue(Channel& ch, Packet&& pkt, SwitchCounters* stats);
    Channel& channel_for(LinkId link, bool forward) { return channels_[link * 2 + (forward ? 0 : 1)]; }

    // --- events ---
    void on_event(uint64_t tag, SimTime now) override;

    // --- introspection ---
    const FabricCounters& counters() const { return counters_; }
    const SwitchCounters& t0_counters(uint32_t plane, uint32_t idx) const {
        return t0_stats_[topo_.t0_flat_index(plane, idx)];
    }
    const SwitchCounters& t1_counters(uint32_t plane, uint32_t idx) const {
        return t1_stats_[topo_.t1_flat_index(plane, idx)];
    }
    const std::vector<Channel>& channels() const { return channels_; }
    const FlowLedger& flow_ledger(uint32_t flow);
    const std::unordered_map<uint32_t, FlowLedger>& flow_ledgers() const { return flow_ledgers_; }
    uint64_t inflight_packets() const; // packets sitting in queues or on wires
    uint64_t trace_hash() const { return trace_hash_; }
    uint64_t max_queue_bytes() const;
    bool switch_blackholed(bool is_t1, uint32_t plane, uint32_t idx) const;

  private:
    enum Tag : uint64_t { kSerDone = 1, kArrive, kPauseOn, kPauseOff, kInject };
    static uint64_t make_tag(Tag t, uint64_t a) { return (static_cast<uint64_t>(t) << 56) | a; }

    void kick(Channel& ch);
    void serialize_done(Channel& ch, SimTime now);
    void arrival(Channel& ch, SimTime now);
    void deliver_to_switch(bool is_t1, uint32_t plane, uint32_t index, Packet&& pkt, uint16_t ingress_port,
                           SimTime now);
    void deliver_to_nic(uint32_t nic, uint32_t ingress_plane, Packet&& pkt, SimTime now);
    void drop(Packet&& pkt, uint64_t FabricCounters::*cause);
    void pfc_on_buffered(uint32_t sw_flat, bool is_t1, uint32_t plane, uint32_t index, uint32_t ingress_port,
                         uint64_t bytes);
    void pfc_on_drained(uint32_t sw_flat, bool is_t1, uint32_t plane, uint32_t index, const Packet& pkt);
    uint32_t upstream_channel_id(bool is_t1, uint32_t plane, uint32_t index, uint32_t port) const;
    void apply_link_state(LinkId link, bool up, SimTime now);
    void note_event(uint64_t a, uint64_t b) { trace_hash_ = Rng::mix(trace_hash_ ^ Rng::mix(a) ^ b); }

    Topology& topo_;
    const Srv6Allocation& alloc_;
    FabricConfig cfg_;
    EventLoop& loop_;
    Rng rng_;

    std::vector<Channel> channels_;
    std::vector<uint8_t> t0_blackholed_, t1_blackholed_;
    std::vector<SwitchCounters> t0_stats_, t1_stats_;

    // PFC: per-switch per-ingress-port byte accounting.
    struct PfcPort {
        uint64_t bytes = 0;
        bool pause_sent = false;
    };
    std::vector<std::vector<PfcPort>> t0_pfc_, t1_pfc_;
    uint64_t pfc_xoff_ = 0, pfc_xon_ = 0;

    struct NicState {
        std::unordered_map<uint32_t, FlowEndpoint*> flows;
        FlowEndpoint* probe_sink = nullptr;
        std::vector<PortWatcher*> watchers;
    };
    std::vector<NicState> nics_;

    struct DropRule {
        bool ev_match = false;
        uint32_t ev = 0;
        double rate = 0;
        int64_t nic_scope = -1;
        int64_t plane_scope = -1;
    };
    std::vector<DropRule> drop_rules_;

    std::vector<FailureEvent> pending_failures_;
    FabricCounters counters_;
    std::unordered_map<uint32_t, FlowLedger> flow_ledgers_;
    uint64_t trace_hash_ = 0x9e3779b97f4a7c15ull;
};

} // namespace planesim
