#pragma once

#include <algorithm>
#include <deque>
#include <map>

#include "planesim/entropy.hpp"
#include "planesim/fabric.hpp"
#include "planesim/metrics.hpp"
#include "planesim/transport.hpp"

namespace planesim {

struct FlowFields {
    uint32_t src_ip = 0;
    uint32_t dst_ip = 0;
    uint16_t src_port = 0;
    uint16_t dst_port = 4791; // RoCEv2
    uint8_t proto = 17;
};

// Deterministic ECMP hash: uniform over [0, set_size) for random flow fields.
inline uint32_t ecmp_select(const FlowFields& f, uint32_t set_size, uint64_t seed) {
    uint64_t h = stable_hash64((static_cast<uint64_t>(f.src_ip) << 32) | f.dst_ip,
                               (static_cast<uint64_t>(f.src_port) << 16) | f.dst_port, f.proto, seed);
    return set_size ? static_cast<uint32_t>(h % set_size) : 0;
}

struct DcqcnParams {
    double alpha_g = 1.0 / 16;
    double rate_decrease_factor = 0.5; // rate *= (1 - alpha * factor)
    double additive_increase_frac = 0.01;
    double hyper_increase_frac = 0.05;
    SimTime alpha_timer = 55 * kMicrosecond;
    SimTime rate_timer = 300 * kMicrosecond;
    uint64_t byte_counter = 512 * 1024;
    uint32_t fast_recovery_stages = 5;
    SimTime cnp_interval = 50 * kMicrosecond;
    double min_rate_frac = 0.01;

    // default / aggressive / most_aggressive: each step halves the increase
    // thresholds and doubles the gain, cutting rate harder and sooner.
    static DcqcnParams profile(const std::string& name);
};

// The DCQCN update laws, kept pure so they can be checked against hand
// evaluation. Rates in bits/s.
struct DcqcnState {
    double current = 0;
    double target = 0;
    double alpha = 1.0;
    uint32_t timer_stage = 0;
    uint32_t byte_stage = 0;
};

inline void dcqcn_on_cnp(DcqcnState& s, const DcqcnParams& p, double line_rate) {
    s.alpha = (1 - p.alpha_g) * s.alpha + p.alpha_g;
    s.target = s.current;
    s.current = std::max(s.current * (1 - s.alpha * p.rate_decrease_factor), line_rate * p.min_rate_frac);
    s.timer_stage = 0;
    s.byte_stage = 0;
}

inline void dcqcn_alpha_decay(DcqcnState& s, const DcqcnParams& p) { s.alpha = (1 - p.alpha_g) * s.alpha; }

inline void dcqcn_increase(DcqcnState& s, const DcqcnParams& p, double line_rate) {
    bool timer_past = s.timer_stage >= p.fast_recovery_stages;
    bool bytes_past = s.byte_stage >= p.fast_recovery_stages;
    if (timer_past && bytes_past) {
        s.target = std::min(line_rate, s.target + p.hyper_increase_frac * line_rate);
    } else if (timer_past || bytes_past) {
        s.target = std::min(line_rate, s.target + p.additive_increase_frac * line_rate);
    } // else fast recovery: halve back toward the pre-cut target
    s.current = std::min(line_rate, (s.current + s.target) / 2);
}

struct RoceConfig {
    bool dcqcn = true;
    uint64_t window_bytes = 0; // 0 = auto: 2 x BDP
    double rto_rtts = 16.0;    // hardware-style conservative retransmission timer
    uint32_t ack_every = 8;
    SimTime ack_interval = 4 * kMicrosecond;
    DcqcnParams dcqcn_params;
    bool record_latency = false;
};

struct RoceStats {
    uint64_t posted_msgs = 0;
    uint64_t posted_bytes = 0;
    uint64_t completed_msgs = 0;
    uint64_t data_pkts_sent = 0;
    uint64_t retransmits = 0;
    uint64_t go_back_events = 0;
    uint64_t rto_events = 0;
    uint64_t cnps_received = 0;
    uint64_t delivered_pkts = 0;
    uint64_t delivered_bytes = 0;
    uint64_t ooo_discarded = 0;
    uint64_t dup_pkts = 0;
    uint64_t naks_sent = 0;
    uint64_t acks_sent = 0;
    uint64_t cnps_sent = 0;
    uint64_t recv_completions = 0;
};

// RoCEv2-style single-path reliable connection: ECMP-pinned path, go-back-N
// recovery, optional DCQCN rate control. Multi-QP scaling is done by the
// workload striping messages over several RoceQp pairs.
class RoceQp : public Endpoint, public FlowEndpoint, public EventHandler {
  public:
    RoceQp(Fabric& fabric, uint32_t flow, uint32_t local_nic, uint32_t remote_nic, const RoceConfig& cfg,
           uint64_t seed, MetricsSink* sink);

    void start();

    uint64_t post_write(uint64_t len, bool with_imm) override;
    void set_send_completion(SendCompletion cb) override { on_send_complete_ = std::move(cb); }
    void set_recv_completion(RecvCompletion cb) override { on_recv_complete_ = std::move(cb); }

    void on_packet(Packet&& pkt, SimTime now) override;
    void on_event(uint64_t tag, SimTime now) override;

    uint32_t flow() const override { return flow_; }
    uint32_t local_nic() const override { return local_nic_; }
    uint32_t remote_nic() const override { return remote_nic_; }
    bool send_idle() const override { return pending_msgs_.empty() && snd_una_ == snd_nxt_; }

    uint64_t rx_goodput_bytes() const override { return stats_.delivered_bytes; }
    uint64_t tx_retransmits() const override { return stats_.retransmits; }
    uint64_t losses() const override { return stats_.go_back_events + stats_.rto_events; }
    uint64_t trims_seen() const override { return 0; }

    const RoceStats& stats() const { return stats_; }
    double current_rate_bps() const { return dcqcn_.current; }
    uint32_t data_ev() const { return ev_fwd_; }
    SimTime base_rtt() const { return base_rtt_; }

  private:
    enum Tag : uint64_t { kPaceTick = 1, kRtoTick, kAckTimer, kAlphaTimer, kRateTimer };
    static uint64_t make_tag(Tag t) { return static_cast<uint64_t>(t) << 32; }

    struct PendingMsg {
        uint64_t msg_id;
        uint64_t va_base;
        uint64_t len;
        uint64_t next_off;
        bool imm;
    };
    struct SentPkt { // retransmission buffer entry
        uint64_t va;
        uint32_t len;
        uint64_t msg_id;
        uint32_t msg_len;
        bool imm;
    };
    struct MsgProgress {
        uint64_t acked_bytes;
        uint64_t total_wire;
        bool fully_sent;
        SimTime post_time;
    };

    void try_send(SimTime now);
    void emit_data(uint64_t psn, const SentPkt& s, SimTime now, bool is_retx);
    void handle_ack(const Packet& pkt, SimTime now);
    void handle_nak(const Packet& pkt, SimTime now);
    void handle_cnp(SimTime now);
    void handle_data(Packet&& pkt, SimTime now);
    void send_ack(SimTime now, bool nak, uint64_t nak_psn);
    void arm_rto(SimTime now);
    void arm_pace(SimTime now, SimTime when);

    Fabric& fabric_;
    uint32_t flow_;
    uint32_t local_nic_;
    uint32_t remote_nic_;
    RoceConfig cfg_;
    Rng rng_;
    MetricsSink* sink_;

    bool t0_local_ = false;
    Srv6Template to_peer_;
    uint32_t mtu_ = 4096;
    SimTime base_rtt_ = 0;
    SimTime rto_ = 0;
    uint64_t window_bytes_ = 0;
    uint32_t rkey_ = 0;
    uint32_t ev_fwd_ = 0;
    uint32_t ev_rev_ = 0;

    // sender
    std::deque<PendingMsg> pending_msgs_;
    std::map<uint64_t, MsgProgress> msg_progress_;
    std::map<uint64_t, SentPkt> sent_buf_; // psn -> payload, [snd_una_, snd_nxt_)
    uint64_t snd_una_ = 0;
    uint64_t snd_nxt_ = 0;
    uint64_t resend_cursor_ = 0; // == snd_nxt_ when not rewinding
    uint64_t inflight_bytes_ = 0;
    SimTime next_send_time_ = 0;
    bool pace_armed_ = false;
    bool rto_armed_ = false;
    SimTime last_progress_ = 0;
    uint32_t rto_backoff_ = 1;

    // DCQCN
    double line_rate_ = 0;
    DcqcnState dcqcn_;
    uint64_t bytes_since_stage_ = 0;
    SimTime last_cnp_ = 0;

    // receiver
    uint64_t rcv_expected_ = 0;
    uint64_t nak_psn_sent_ = UINT64_MAX;
    uint32_t pkts_since_ack_ = 0;
    bool ack_timer_armed_ = false;
    SimTime last_cnp_sent_ = 0;
    struct RecvMsg {
        uint64_t expected = 0;
        uint64_t placed = 0;
        bool imm = false;
    };
    std::map<uint64_t, RecvMsg> recv_msgs_;

    uint64_t next_msg_id_ = 0;
    uint64_t va_cursor_ = 0;

    SendCompletion on_send_complete_;
    RecvCompletion on_recv_complete_;
    RoceStats stats_;
};

} // namespace planesim
