#pragma once

#include <deque>
#include <functional>
#include <map>
#include <optional>

#include "planesim/ev_manager.hpp"
#include "planesim/fabric.hpp"
#include "planesim/metrics.hpp"
#include "planesim/transport.hpp"

namespace planesim {

struct MrcConfig {
    uint32_t size_target = 128;
    uint32_t backup_target = 128;
    uint64_t window_bytes = 0;    // 0 = auto: 2 x (NIC aggregate x base RTT)
    double penalty_rtts = 4.0;    // ECN/trim penalty duration
    uint32_t reorder_window = 64; // SACKed PSNs beyond a hole before it is declared lost
    double rto_rtts = 8.0;
    SimTime sack_interval = 2 * kMicrosecond;
    uint32_t sack_burst = 16;
    uint32_t sack_window = 256;
    SimTime probe_interval = 10 * kMillisecond;
    uint32_t resurrect_threshold = 3;
    SimTime remap_latency = 100 * kMillisecond; // spread of local EV remap after port-down
    uint32_t retx_inflate_packets = 8;          // retransmits that may bypass the window cap
    bool record_latency = false;
    bool trace = false;
};

struct MrcStats {
    // sender side
    uint64_t posted_msgs = 0;
    uint64_t posted_bytes = 0;
    uint64_t completed_msgs = 0;
    uint64_t data_pkts_sent = 0;
    uint64_t retransmits = 0;
    uint64_t trim_nacks = 0;
    uint64_t stale_trim_nacks = 0;
    uint64_t losses_declared = 0;
    uint64_t sacks_received = 0;
    uint64_t stale_sacks = 0;
    uint64_t probes_sent = 0;
    uint64_t probe_acks = 0;
    uint64_t reverse_probes_sent = 0;
    uint64_t send_stalls = 0;
    // receiver side
    uint64_t delivered_pkts = 0;
    uint64_t delivered_bytes = 0; // goodput (first placement only)
    uint64_t dup_pkts = 0;
    uint64_t out_of_window = 0;
    uint64_t rkey_errors = 0;
    uint64_t trims_seen = 0;
    uint64_t sacks_sent = 0;
    uint64_t recv_completions = 0;
};

// One endpoint of an MRC connection. Supports only WRITE and
// WRITE_WITH_IMMEDIATE. Both endpoints carry a sender and a receiver half;
// the flow id is shared and the fabric demultiplexes by destination NIC.
class MrcQp : public Endpoint, public FlowEndpoint, public PortWatcher, public EventHandler {
  public:
    MrcQp(Fabric& fabric, uint32_t flow, uint32_t local_nic, uint32_t remote_nic, const MrcConfig& cfg,
          const Denylist& denylist, uint64_t seed, MetricsSink* sink);

    void start(); // registers with the fabric and populates the EV sets

    uint64_t post_write(uint64_t len, bool with_imm) override;
    void set_send_completion(SendCompletion cb) override { on_send_complete_ = std::move(cb); }
    void set_recv_completion(RecvCompletion cb) override { on_recv_complete_ = std::move(cb); }

    void on_packet(Packet&& pkt, SimTime now) override;
    void on_port_state(uint32_t plane, bool up, SimTime now) override;
    void on_event(uint64_t tag, SimTime now) override;

    const MrcStats& stats() const { return stats_; }
    EvManager& evs() { return evs_; }
    uint32_t flow() const override { return flow_; }
    uint32_t local_nic() const override { return local_nic_; }
    uint32_t remote_nic() const override { return remote_nic_; }
    bool t0_local() const { return t0_local_; }
    SimTime base_rtt() const { return base_rtt_; }
    uint64_t window_bytes() const { return window_bytes_; }
    bool send_idle() const override { return pending_msgs_.empty() && inflight_.empty() && retx_q_.empty(); }
    bool qp_error() const { return qp_error_; }

    uint64_t rx_goodput_bytes() const override { return stats_.delivered_bytes; }
    uint64_t tx_retransmits() const override { return stats_.retransmits; }
    uint64_t losses() const override { return stats_.losses_declared; }
    uint64_t trims_seen() const override { return stats_.trims_seen; }

    // receiver-side placement audit
    uint64_t placed_bytes() const { return stats_.delivered_bytes; }
    const std::map<uint64_t, uint64_t>& placed_intervals() const { return placed_; }
    bool placement_contiguous(uint64_t expected_bytes) const {
        if (expected_bytes == 0) return placed_.empty();
        return placed_.size() == 1 && placed_.begin()->first == 0 && placed_.begin()->second == expected_bytes;
    }

  private:
    enum Tag : uint64_t { kSackTimer = 1, kRtoTick, kProbeTick, kReverseTick, kParkAt, kTrySend };
    static uint64_t make_tag(Tag t, uint64_t arg = 0) { return (static_cast<uint64_t>(t) << 32) | arg; }

    struct PendingMsg {
        uint64_t msg_id;
        uint64_t va_base;
        uint64_t len;
        uint64_t next_off;
        bool imm;
    };
    struct MsgProgress {
        uint64_t unacked_bytes; // wire bytes awaiting ack
        uint64_t pending_pkts;  // packets not yet transmitted
        uint64_t total_len;
        SimTime post_time;
    };
    struct InFlight {
        uint32_t ev;
        uint64_t va;
        uint32_t len;
        uint64_t msg_id;
        SimTime first_tx;
        SimTime last_tx;
        uint64_t tx_mark; // highest acked PSN at last transmit (reorder guard)
        uint16_t retx_count = 0;
        bool imm = false;
        bool retx_live = false;   // last transmission was a retransmit
        bool retx_queued = false; // waiting in retx_q_
    };
    struct PendingProbe {
        uint32_t ev;
        bool reverse;
        SimTime sent;
    };

    // sender half
    void try_send(SimTime now);
    bool transmit(uint64_t psn, InFlight& rec, SimTime now, uint32_t exclude_ev, bool is_retx);
    void handle_sack(const Packet& pkt, SimTime now);
    void handle_trim_nack(const Packet& pkt, SimTime now);
    void ack_psn(uint64_t psn, SimTime now);
    void declare_lost(uint64_t psn, SimTime now);
    void queue_retx(uint64_t psn);
    void arm_rto(SimTime now);
    void arm_probe(SimTime now);

    // receiver half
    void handle_data(Packet&& pkt, SimTime now);
    void handle_ev_probe(const Packet& pkt, SimTime now);
    void handle_probe_ack(const Packet& pkt, SimTime now);
    void schedule_sack(SimTime now, bool immediate);
    void send_sack(SimTime now);
    void place_bytes(uint64_t va, uint32_t len);
    uint32_t local_port_bitmap() const;

    // shared
    bool send_control(Packet&& pkt, SimTime now);
    std::optional<uint32_t> pick_control_ev(SimTime now);
    Srv6Address address_for(uint32_t ev) const;
    void note_acked_ev(uint32_t ev, SimTime now);
    void rtt_sample(SimTime sample);
    SimTime loss_floor() const { return srtt_ + 4 * rttvar_; }
    SimTime rto_now() const;

    Fabric& fabric_;
    uint32_t flow_;
    uint32_t local_nic_;
    uint32_t remote_nic_;
    MrcConfig cfg_;
    Denylist denylist_;
    Rng rng_;
    MetricsSink* sink_;

    bool t0_local_ = false;
    Srv6Template to_peer_;
    uint32_t mtu_ = 4096;
    SimTime base_rtt_ = 0;
    SimTime penalty_ = 0;
    SimTime rto_ = 0;
    uint64_t window_bytes_ = 0;
    uint32_t rkey_ = 0;
    EvManager evs_;

    // sender state
    std::deque<PendingMsg> pending_msgs_;
    std::map<uint64_t, MsgProgress> msg_progress_;
    std::map<uint64_t, InFlight> inflight_;
    std::deque<uint64_t> retx_q_;
    uint64_t next_psn_ = 0;
    uint64_t next_msg_id_ = 0;
    uint64_t va_cursor_ = 0;
    uint64_t inflight_bytes_ = 0;
    uint64_t highest_acked_ = 0; // highest PSN seen acked (for reorder gap math)
    SimTime srtt_ = 0;           // EWMA of measured ack times (init: base RTT)
    SimTime rttvar_ = 0;
    uint32_t retx_live_ = 0;
    uint32_t remote_up_mask_ = 0;
    bool rto_armed_ = false;
    bool probe_armed_ = false;
    std::map<uint64_t, PendingProbe> pending_probes_;
    uint64_t next_probe_id_ = 1;
    bool qp_error_ = false;

    // receiver state
    uint64_t rcv_cum_ = 0;
    std::map<uint64_t, uint32_t> rcv_ooo_; // psn -> wire len (beyond cum)
    std::map<uint64_t, uint64_t> placed_;  // va interval set: start -> end
    struct RecvMsg {
        uint64_t expected = 0;
        uint64_t placed = 0;
        bool imm = false;
    };
    std::map<uint64_t, RecvMsg> recv_msgs_;
    uint32_t pkts_since_sack_ = 0;
    bool sack_timer_armed_ = false;
    std::vector<SackEcho> pending_echoes_;
    struct ReverseEv {
        uint32_t value = 0;
        SimTime confirmed = 0;
        bool valid = false;
    };
    std::vector<ReverseEv> reverse_ev_; // per plane, refreshed by acks/probes
    SimTime reverse_ttl_ = 0;
    uint32_t reverse_cursor_ = 0;
    bool inbound_since_tick_ = false;
    bool outbound_since_tick_ = false;
    bool reverse_tick_armed_ = false;

    SendCompletion on_send_complete_;
    RecvCompletion on_recv_complete_;
    MrcStats stats_;
};

} // namespace planesim
