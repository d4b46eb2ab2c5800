#include "planesim/roce.hpp"

#include <algorithm>

namespace planesim {

namespace {
constexpr uint32_t kAckBytes = 64;
}

DcqcnParams DcqcnParams::profile(const std::string& name) {
    DcqcnParams p;
    if (name == "aggressive") {
        p.alpha_g = 1.0 / 8;
        p.alpha_timer /= 2;
        p.rate_timer /= 2;
        p.byte_counter /= 2;
        p.rate_decrease_factor = 0.6;
    } else if (name == "most_aggressive") {
        p.alpha_g = 1.0 / 4;
        p.alpha_timer /= 4;
        p.rate_timer /= 4;
        p.byte_counter /= 4;
        p.rate_decrease_factor = 0.7;
        p.additive_increase_frac = 0.005;
    }
    return p;
}

RoceQp::RoceQp(Fabric& fabric, uint32_t flow, uint32_t local_nic, uint32_t remote_nic, const RoceConfig& cfg,
               uint64_t seed, MetricsSink* sink)
    : fabric_(fabric),
      flow_(flow),
      local_nic_(local_nic),
      remote_nic_(remote_nic),
      cfg_(cfg),
      rng_(seed, stable_hash64(flow, local_nic, 0x40ce)),
      sink_(sink) {
    Topology& topo = fabric_.topology();
    const TopologySpec& spec = topo.spec();
    t0_local_ = topo.classify_pair(local_nic_, remote_nic_) == PairClass::T0Local;
    to_peer_ = fabric_.allocation().build_template(remote_nic_);
    mtu_ = fabric_.config().mtu;
    rkey_ = 0x524b0000u | (flow_ & 0xffff);

    uint32_t hop_links = t0_local_ ? 2 : 4;
    SimTime fwd = hop_links * (spec.propagation_delay +
                               serialization_time(mtu_ + fabric_.config().header_bytes, spec.link_speed_bps));
    SimTime back = hop_links * (spec.propagation_delay + serialization_time(kAckBytes, spec.link_speed_bps));
    base_rtt_ = fwd + back;
    rto_ = static_cast<SimTime>(cfg_.rto_rtts * static_cast<double>(base_rtt_));
    window_bytes_ = cfg_.window_bytes;
    if (window_bytes_ == 0) {
        double bdp = static_cast<double>(spec.nic_aggregate_bps()) / 8.0 * to_sec(base_rtt_);
        window_bytes_ = std::max<uint64_t>(static_cast<uint64_t>(2.0 * bdp), 2ull * mtu_);
    }

    // The ECMP hash of the QP's five-tuple pins every packet to one path.
    FlowFields f;
    f.src_ip = local_nic_;
    f.dst_ip = remote_nic_;
    f.src_port = static_cast<uint16_t>(0xc000 | (rng_.next_u32() & 0x3fff));
    uint32_t plane = ecmp_select(f, spec.planes, fabric_.config().seed ^ 0x9a7e);
    uint32_t uplink = ecmp_select(f, spec.t0_uplinks, fabric_.config().seed);
    ev_fwd_ = encode_ev(EvFields{plane, t0_local_ ? 0u : uplink, 0}, f.src_port);
    FlowFields r = f;
    std::swap(r.src_ip, r.dst_ip);
    r.src_port = static_cast<uint16_t>(0xc000 | (rng_.next_u32() & 0x3fff));
    uint32_t rplane = ecmp_select(r, spec.planes, fabric_.config().seed ^ 0x9a7e);
    uint32_t ruplink = ecmp_select(r, spec.t0_uplinks, fabric_.config().seed);
    ev_rev_ = encode_ev(EvFields{rplane, t0_local_ ? 0u : ruplink, 0}, r.src_port);

    line_rate_ = static_cast<double>(spec.nic_aggregate_bps());
    dcqcn_.current = line_rate_;
    dcqcn_.target = line_rate_;
}

void RoceQp::start() {
    fabric_.register_flow(local_nic_, flow_, this);
    if (cfg_.dcqcn) {
        fabric_.loop().schedule(fabric_.loop().now() + cfg_.dcqcn_params.alpha_timer, this, make_tag(kAlphaTimer));
        fabric_.loop().schedule(fabric_.loop().now() + cfg_.dcqcn_params.rate_timer, this, make_tag(kRateTimer));
    }
}

uint64_t RoceQp::post_write(uint64_t len, bool with_imm) {
    uint64_t id = next_msg_id_++;
    PendingMsg m{id, va_cursor_, len, 0, with_imm};
    va_cursor_ += len;
    uint64_t pkts = len == 0 ? 1 : (len + mtu_ - 1) / mtu_;
    uint64_t wire = len + pkts * fabric_.config().header_bytes;
    msg_progress_[id] = MsgProgress{0, wire, false, fabric_.loop().now()};
    pending_msgs_.push_back(m);
    ++stats_.posted_msgs;
    stats_.posted_bytes += len;
    try_send(fabric_.loop().now());
    return id;
}

void RoceQp::try_send(SimTime now) {
    while (true) {
        bool rewinding = resend_cursor_ < snd_nxt_;
        if (!rewinding && pending_msgs_.empty()) break;
        if (cfg_.dcqcn && now < next_send_time_) {
            arm_pace(now, next_send_time_);
            break;
        }
        if (!rewinding) {
            if (inflight_bytes_ >= window_bytes_) break;
            PendingMsg& m = pending_msgs_.front();
            uint32_t len =
                m.len == 0 ? 0 : static_cast<uint32_t>(std::min<uint64_t>(mtu_, m.len - m.next_off));
            SentPkt s;
            s.va = m.va_base + m.next_off;
            s.len = len;
            s.msg_id = m.msg_id;
            s.msg_len = static_cast<uint32_t>(m.len);
            s.imm = m.imm && (m.next_off + len >= m.len);
            uint64_t psn = snd_nxt_++;
            resend_cursor_ = snd_nxt_;
            sent_buf_[psn] = s;
            inflight_bytes_ += len + fabric_.config().header_bytes;
            m.next_off += len;
            if (m.next_off >= m.len) {
                msg_progress_[m.msg_id].fully_sent = true;
                pending_msgs_.pop_front();
            }
            emit_data(psn, sent_buf_[psn], now, false);
        } else {
            auto it = sent_buf_.find(resend_cursor_);
            if (it == sent_buf_.end()) {
                resend_cursor_ = snd_nxt_;
                continue;
            }
            emit_data(it->first, it->second, now, true);
            ++resend_cursor_;
        }
    }
}

void RoceQp::emit_data(uint64_t psn, const SentPkt& s, SimTime now, bool is_retx) {
    Packet pkt;
    pkt.kind = PktKind::RoceData;
    pkt.flow = flow_;
    pkt.inner_src = local_nic_;
    pkt.inner_dst = remote_nic_;
    pkt.ev = ev_fwd_;
    pkt.outer = ev_to_address(to_peer_, ev_fwd_, t0_local_, fabric_.topology().spec().planes,
                              fabric_.topology().spec().t0_uplinks);
    pkt.psn = psn;
    pkt.va = s.va;
    pkt.len = s.len;
    pkt.rkey = rkey_;
    pkt.msg_id = s.msg_id;
    pkt.msg_len = s.msg_len;
    pkt.imm = s.imm;
    pkt.wire_bytes = s.len + fabric_.config().header_bytes;
    ++stats_.data_pkts_sent;
    if (is_retx) ++stats_.retransmits;
    if (cfg_.dcqcn && dcqcn_.current > 0) {
        SimTime gap = static_cast<SimTime>(static_cast<double>(pkt.wire_bytes) * 8.0 * kSecond /
                                           dcqcn_.current);
        next_send_time_ = std::max(next_send_time_, now) + gap;
        bytes_since_stage_ += pkt.wire_bytes;
        if (bytes_since_stage_ >= cfg_.dcqcn_params.byte_counter) {
            bytes_since_stage_ = 0;
            ++dcqcn_.byte_stage;
            dcqcn_increase(dcqcn_, cfg_.dcqcn_params, line_rate_);
        }
    }
    fabric_.nic_send(local_nic_, decode_ev(ev_fwd_).plane, std::move(pkt));
    arm_rto(now);
}

void RoceQp::handle_ack(const Packet& pkt, SimTime now) {
    uint64_t cum = pkt.cum_psn;
    if (cum <= snd_una_) return;
    if (cum > snd_nxt_) return;
    last_progress_ = now;
    rto_backoff_ = 1;
    while (!sent_buf_.empty() && sent_buf_.begin()->first < cum) {
        auto it = sent_buf_.begin();
        inflight_bytes_ -= it->second.len + fabric_.config().header_bytes;
        auto mp = msg_progress_.find(it->second.msg_id);
        if (mp != msg_progress_.end()) {
            mp->second.acked_bytes += it->second.len + fabric_.config().header_bytes;
            if (mp->second.fully_sent && mp->second.acked_bytes >= mp->second.total_wire) {
                ++stats_.completed_msgs;
                if (cfg_.record_latency && sink_)
                    sink_->latency_sample(flow_, (now - mp->second.post_time) / 2);
                if (on_send_complete_) on_send_complete_(now, it->second.msg_id);
                msg_progress_.erase(mp);
            }
        }
        sent_buf_.erase(it);
    }
    snd_una_ = cum;
    if (resend_cursor_ < snd_una_) resend_cursor_ = snd_una_;
    try_send(now);
}

void RoceQp::handle_nak(const Packet& pkt, SimTime now) {
    uint64_t seq = pkt.psn;
    if (seq < snd_una_ || seq >= snd_nxt_) return;
    // Go-back-N: resume transmission from the first missing PSN.
    if (seq < resend_cursor_) {
        ++stats_.go_back_events;
        resend_cursor_ = seq;
    }
    handle_ack(pkt, now); // NAK carries cumulative state too
    try_send(now);
}

void RoceQp::handle_cnp(SimTime now) {
    ++stats_.cnps_received;
    if (!cfg_.dcqcn) return;
    dcqcn_on_cnp(dcqcn_, cfg_.dcqcn_params, line_rate_);
    bytes_since_stage_ = 0;
    last_cnp_ = now;
}

void RoceQp::handle_data(Packet&& pkt, SimTime now) {
    if (pkt.rkey != rkey_) return;
    if (pkt.ecn && cfg_.dcqcn && now - last_cnp_sent_ >= cfg_.dcqcn_params.cnp_interval) {
        last_cnp_sent_ = now;
        Packet cnp;
        cnp.kind = PktKind::RoceCnp;
        cnp.flow = flow_;
        cnp.inner_src = local_nic_;
        cnp.inner_dst = remote_nic_;
        cnp.ev = ev_rev_;
        cnp.outer = ev_to_address(to_peer_, ev_rev_, t0_local_, fabric_.topology().spec().planes,
                                  fabric_.topology().spec().t0_uplinks);
        cnp.wire_bytes = kAckBytes;
        ++stats_.cnps_sent;
        fabric_.nic_send(local_nic_, decode_ev(ev_rev_).plane, std::move(cnp));
    }
    if (pkt.trimmed) return; // trimming is not part of the RoCE profile
    if (pkt.psn < rcv_expected_) {
        ++stats_.dup_pkts;
        ++pkts_since_ack_;
        send_ack(now, false, 0);
        return;
    }
    if (pkt.psn > rcv_expected_) {
        // In-order receiver: discard and NAK the first missing PSN once.
        ++stats_.ooo_discarded;
        if (nak_psn_sent_ != rcv_expected_) {
            nak_psn_sent_ = rcv_expected_;
            ++stats_.naks_sent;
            send_ack(now, true, rcv_expected_);
        }
        return;
    }
    rcv_expected_ = pkt.psn + 1;
    nak_psn_sent_ = UINT64_MAX;
    ++stats_.delivered_pkts;
    stats_.delivered_bytes += pkt.len;
    RecvMsg& rm = recv_msgs_[pkt.msg_id];
    rm.placed += pkt.len;
    rm.expected = pkt.msg_len;
    rm.imm |= pkt.imm;
    if (rm.placed >= rm.expected) {
        if (rm.imm) {
            ++stats_.recv_completions;
            if (on_recv_complete_) on_recv_complete_(now, pkt.msg_id, rm.placed);
        }
        recv_msgs_.erase(pkt.msg_id);
    }
    if (++pkts_since_ack_ >= cfg_.ack_every) {
        send_ack(now, false, 0);
    } else if (!ack_timer_armed_) {
        ack_timer_armed_ = true;
        fabric_.loop().schedule(now + cfg_.ack_interval, this, make_tag(kAckTimer));
    }
}

void RoceQp::send_ack(SimTime now, bool nak, uint64_t nak_psn) {
    (void)now;
    Packet pkt;
    pkt.kind = nak ? PktKind::RoceNak : PktKind::RoceAck;
    pkt.flow = flow_;
    pkt.inner_src = local_nic_;
    pkt.inner_dst = remote_nic_;
    pkt.ev = ev_rev_;
    pkt.outer = ev_to_address(to_peer_, ev_rev_, t0_local_, fabric_.topology().spec().planes,
                              fabric_.topology().spec().t0_uplinks);
    pkt.cum_psn = rcv_expected_;
    pkt.psn = nak_psn;
    pkt.wire_bytes = kAckBytes;
    if (!nak) ++stats_.acks_sent;
    pkts_since_ack_ = 0;
    fabric_.nic_send(local_nic_, decode_ev(ev_rev_).plane, std::move(pkt));
}

void RoceQp::arm_rto(SimTime now) {
    if (rto_armed_) return;
    rto_armed_ = true;
    fabric_.loop().schedule(now + rto_, this, make_tag(kRtoTick));
}

void RoceQp::arm_pace(SimTime now, SimTime when) {
    if (pace_armed_) return;
    pace_armed_ = true;
    fabric_.loop().schedule(std::max(now, when), this, make_tag(kPaceTick));
}

void RoceQp::on_packet(Packet&& pkt, SimTime now) {
    switch (pkt.kind) {
    case PktKind::RoceData:
        handle_data(std::move(pkt), now);
        break;
    case PktKind::RoceAck:
        handle_ack(pkt, now);
        break;
    case PktKind::RoceNak:
        handle_nak(pkt, now);
        break;
    case PktKind::RoceCnp:
        handle_cnp(now);
        break;
    default:
        break;
    }
}

void RoceQp::on_event(uint64_t tag, SimTime now) {
    switch (static_cast<Tag>(tag >> 32)) {
    case kPaceTick:
        pace_armed_ = false;
        try_send(now);
        break;
    case kRtoTick: {
        rto_armed_ = false;
        if (snd_una_ < snd_nxt_) {
            if (now - last_progress_ >= rto_ * rto_backoff_) {
                ++stats_.rto_events;
                resend_cursor_ = snd_una_;
                rto_backoff_ = std::min(rto_backoff_ * 2, 8u);
                last_progress_ = now;
                try_send(now);
            }
            arm_rto(now);
        }
        break;
    }
    case kAckTimer:
        ack_timer_armed_ = false;
        if (pkts_since_ack_ > 0) send_ack(now, false, 0);
        break;
    case kAlphaTimer:
        if (cfg_.dcqcn) {
            if (now - last_cnp_ >= cfg_.dcqcn_params.alpha_timer) dcqcn_alpha_decay(dcqcn_, cfg_.dcqcn_params);
            fabric_.loop().schedule(now + cfg_.dcqcn_params.alpha_timer, this, make_tag(kAlphaTimer));
        }
        break;
    case kRateTimer:
        if (cfg_.dcqcn) {
            ++dcqcn_.timer_stage;
            dcqcn_increase(dcqcn_, cfg_.dcqcn_params, line_rate_);
            fabric_.loop().schedule(now + cfg_.dcqcn_params.rate_timer, this, make_tag(kRateTimer));
        }
        break;
    }
}

} // namespace planesim
