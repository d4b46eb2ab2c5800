#include "planesim/mrc.hpp"

#include <algorithm>

namespace planesim {

namespace {
constexpr uint32_t kSackBytes = 96;
constexpr uint32_t kCtrlBytes = kHeaderBytes;
} // namespace

MrcQp::MrcQp(Fabric& fabric, uint32_t flow, uint32_t local_nic, uint32_t remote_nic, const MrcConfig& cfg,
             const Denylist& denylist, uint64_t seed, MetricsSink* sink)
    : fabric_(fabric),
      flow_(flow),
      local_nic_(local_nic),
      remote_nic_(remote_nic),
      cfg_(cfg),
      denylist_(denylist),
      rng_(seed, stable_hash64(flow, local_nic, 0x9b)),
      sink_(sink),
      evs_(EvManager::Params{}, Rng(seed, stable_hash64(flow, local_nic, 0xe5))) {
    Topology& topo = fabric_.topology();
    const TopologySpec& spec = topo.spec();
    t0_local_ = topo.classify_pair(local_nic_, remote_nic_) == PairClass::T0Local;
    to_peer_ = fabric_.allocation().build_template(remote_nic_);
    rkey_ = 0x524b0000u | (flow_ & 0xffff);
    mtu_ = fabric_.config().mtu;

    uint32_t hop_links = t0_local_ ? 2 : 4;
    SimTime fwd = hop_links * (spec.propagation_delay +
                               serialization_time(mtu_ + fabric_.config().header_bytes, spec.link_speed_bps));
    SimTime back = hop_links * (spec.propagation_delay + serialization_time(kSackBytes, spec.link_speed_bps));
    base_rtt_ = fwd + back;
    penalty_ = static_cast<SimTime>(cfg_.penalty_rtts * static_cast<double>(base_rtt_));
    rto_ = static_cast<SimTime>(cfg_.rto_rtts * static_cast<double>(base_rtt_));
    window_bytes_ = cfg_.window_bytes;
    if (window_bytes_ == 0) {
        double bdp = static_cast<double>(spec.nic_aggregate_bps()) / 8.0 * to_sec(base_rtt_);
        window_bytes_ = std::max<uint64_t>(static_cast<uint64_t>(2.0 * bdp), 2ull * mtu_);
    }
    // The receiver's selective window bounds how many packets may be unacked.
    uint64_t psn_cap = static_cast<uint64_t>(cfg_.sack_window - 8) * mtu_;
    window_bytes_ = std::min(window_bytes_, psn_cap);

    EvManager::Params ep;
    ep.planes = spec.planes;
    ep.t0_uplinks = spec.t0_uplinks;
    ep.t0_local = t0_local_;
    ep.size_target = cfg_.size_target;
    ep.backup_target = cfg_.backup_target;
    evs_ = EvManager(ep, Rng(seed, stable_hash64(flow, local_nic, 0xe5)));

    srtt_ = base_rtt_;
    rttvar_ = base_rtt_ / 4;
    reverse_ev_.resize(spec.planes);
    reverse_ttl_ = 8 * base_rtt_;
    remote_up_mask_ = (spec.planes >= 32) ? 0xffffffffu : ((1u << spec.planes) - 1);
}

void MrcQp::start() {
    fabric_.register_flow(local_nic_, flow_, this);
    fabric_.register_port_watcher(local_nic_, this);
    if (sink_) {
        uint32_t flow = flow_;
        uint32_t nic = local_nic_;
        MetricsSink* sink = sink_;
        evs_.set_logger([flow, nic, sink](SimTime t, uint32_t ev, uint32_t plane, const char* event) {
            sink->ev_transition(t, flow, nic, ev, plane, event);
        });
    }
    Topology& topo = fabric_.topology();
    evs_.populate(local_nic_, remote_nic_, topo.group_of(local_nic_), topo.group_of(remote_nic_), denylist_,
                  fabric_.loop().now());
}

uint64_t MrcQp::post_write(uint64_t len, bool with_imm) {
    uint64_t id = next_msg_id_++;
    PendingMsg m;
    m.msg_id = id;
    m.va_base = va_cursor_;
    m.len = len;
    m.next_off = 0;
    m.imm = with_imm;
    va_cursor_ += len;
    uint64_t pkts = len == 0 ? 1 : (len + mtu_ - 1) / mtu_;
    msg_progress_[id] = MsgProgress{0, pkts, len, fabric_.loop().now()};
    pending_msgs_.push_back(m);
    ++stats_.posted_msgs;
    stats_.posted_bytes += len;
    try_send(fabric_.loop().now());
    return id;
}

void MrcQp::try_send(SimTime now) {
    if (qp_error_) return;
    // Retransmits first. A bounded number may bypass the window so an isolated
    // trim or loss recovers immediately; the rest are clocked by deliveries,
    // which is what lets incast converge to the receiver's drain rate.
    while (!retx_q_.empty()) {
        if (retx_live_ >= cfg_.retx_inflate_packets && inflight_bytes_ >= window_bytes_) break;
        uint64_t psn = retx_q_.front();
        auto it = inflight_.find(psn);
        if (it == inflight_.end() || !it->second.retx_queued) {
            retx_q_.pop_front(); // acked while queued
            continue;
        }
        InFlight& rec = it->second;
        if (!transmit(psn, rec, now, rec.ev, true)) return; // no usable EV: stalled
        rec.retx_queued = false;
        retx_q_.pop_front();
    }
    while (!pending_msgs_.empty()) {
        if (inflight_bytes_ >= window_bytes_) break;
        uint64_t una = inflight_.empty() ? next_psn_ : inflight_.begin()->first;
        if (next_psn_ - una >= cfg_.sack_window - 8) break;
        PendingMsg& m = pending_msgs_.front();
        uint32_t len = m.len == 0 ? 0 : static_cast<uint32_t>(std::min<uint64_t>(mtu_, m.len - m.next_off));
        InFlight rec;
        rec.va = m.va_base + m.next_off;
        rec.len = len;
        rec.msg_id = m.msg_id;
        rec.imm = m.imm && (m.next_off + len >= m.len);
        if (!transmit(next_psn_, rec, now, 0, false)) return;
        uint64_t psn = next_psn_++;
        inflight_bytes_ += len + fabric_.config().header_bytes;
        auto mp = msg_progress_.find(m.msg_id);
        mp->second.unacked_bytes += len + fabric_.config().header_bytes;
        mp->second.pending_pkts--;
        inflight_.emplace(psn, rec);
        m.next_off += len;
        if (m.next_off >= m.len) pending_msgs_.pop_front();
    }
}

bool MrcQp::transmit(uint64_t psn, InFlight& rec, SimTime now, uint32_t exclude_ev, bool is_retx) {
    const EvRecord* ev = evs_.select(now, exclude_ev);
    if (!ev) {
        ++stats_.send_stalls;
        return false;
    }
    rec.ev = ev->value;
    rec.last_tx = now;
    if (!is_retx) rec.first_tx = now;
    rec.tx_mark = highest_acked_;
    if (is_retx) {
        ++rec.retx_count;
        if (!rec.retx_live) {
            rec.retx_live = true;
            ++retx_live_;
        }
        ++stats_.retransmits;
    }

    Packet pkt;
    pkt.kind = PktKind::MrcData;
    pkt.flow = flow_;
    pkt.inner_src = local_nic_;
    pkt.inner_dst = remote_nic_;
    pkt.ev = rec.ev;
    pkt.outer = address_for(rec.ev);
    pkt.psn = psn;
    pkt.va = rec.va;
    pkt.len = rec.len;
    pkt.rkey = rkey_;
    pkt.msg_id = rec.msg_id;
    auto mp = msg_progress_.find(rec.msg_id);
    pkt.msg_len = mp != msg_progress_.end() ? static_cast<uint32_t>(mp->second.total_len) : 0;
    pkt.imm = rec.imm;
    pkt.wire_bytes = rec.len + fabric_.config().header_bytes;
    if (sink_ && cfg_.trace)
        sink_->trace(now, flow_, is_retx ? "retx" : "tx", psn, rec.ev, decode_ev(rec.ev).plane);
    ++stats_.data_pkts_sent;
    outbound_since_tick_ = true;
    fabric_.nic_send(local_nic_, decode_ev(rec.ev).plane, std::move(pkt));
    arm_rto(now);
    return true;
}

void MrcQp::handle_sack(const Packet& pkt, SimTime now) {
    ++stats_.sacks_received;
    if (pkt.cum_psn > next_psn_) {
        ++stats_.stale_sacks;
        return;
    }
    // Remote port-state bitmap: stop loading planes whose far port is down.
    uint32_t planes = evs_.planes();
    for (uint32_t p = 0; p < planes; ++p) {
        bool was_up = remote_up_mask_ & (1u << p);
        bool is_up = pkt.port_bitmap & (1u << p);
        if (was_up && !is_up) evs_.park_plane(p, true, now);
        else if (!was_up && is_up) evs_.unpark_plane(p, true, now);
    }
    remote_up_mask_ = pkt.port_bitmap;

    if (pkt.cum_psn > 0) {
        highest_acked_ = std::max(highest_acked_, pkt.cum_psn - 1);
        while (!inflight_.empty() && inflight_.begin()->first < pkt.cum_psn)
            ack_psn(inflight_.begin()->first, now);
    }
    for (size_t w = 0; w < pkt.sack_bitmap.size(); ++w) {
        uint64_t word = pkt.sack_bitmap[w];
        while (word) {
            int bit = __builtin_ctzll(word);
            word &= word - 1;
            uint64_t psn = pkt.cum_psn + w * 64 + static_cast<uint64_t>(bit);
            highest_acked_ = std::max(highest_acked_, psn);
            ack_psn(psn, now);
        }
    }
    for (uint8_t i = 0; i < pkt.echo_count; ++i) {
        if (pkt.echoes[i].ecn) evs_.penalize(pkt.echoes[i].ev, now + penalty_, now);
    }
    // Holes past the reorder tolerance are losses: retire the EV, go again on
    // another path. A hole younger than one RTT plus the sender's own backlog
    // cannot be a loss yet; at line rate the PSN gap alone can outrun a
    // retransmission's ack while it drains the local port queue.
    if (highest_acked_ >= cfg_.reorder_window && !inflight_.empty()) {
        uint64_t bound = highest_acked_ - cfg_.reorder_window;
        SimTime floor = loss_floor();
        for (auto it = inflight_.begin(); it != inflight_.end() && it->first <= bound; ++it) {
            if (it->second.retx_queued) continue;
            if (now - it->second.last_tx < floor) continue;
            if (std::max(it->first, it->second.tx_mark) <= bound) declare_lost(it->first, now);
        }
    }
    try_send(now);
}

void MrcQp::ack_psn(uint64_t psn, SimTime now) {
    auto it = inflight_.find(psn);
    if (it == inflight_.end()) return;
    InFlight& rec = it->second;
    if (rec.retx_live) --retx_live_;
    inflight_bytes_ -= rec.len + fabric_.config().header_bytes;
    if (rec.retx_count == 0 && now > rec.last_tx) rtt_sample(now - rec.last_tx);
    note_acked_ev(rec.ev, now);
    auto mp = msg_progress_.find(rec.msg_id);
    if (mp != msg_progress_.end()) {
        mp->second.unacked_bytes -= rec.len + fabric_.config().header_bytes;
        if (mp->second.unacked_bytes == 0 && mp->second.pending_pkts == 0) {
            ++stats_.completed_msgs;
            if (cfg_.record_latency && sink_) sink_->latency_sample(flow_, (now - mp->second.post_time) / 2);
            if (on_send_complete_) on_send_complete_(now, rec.msg_id);
            msg_progress_.erase(mp);
        }
    }
    inflight_.erase(it);
}

void MrcQp::declare_lost(uint64_t psn, SimTime now) {
    auto it = inflight_.find(psn);
    if (it == inflight_.end()) return;
    InFlight& rec = it->second;
    ++stats_.losses_declared;
    if (rec.retx_live) {
        rec.retx_live = false;
        --retx_live_;
    }
    if (sink_ && cfg_.trace) sink_->trace(now, flow_, "loss", psn, rec.ev, decode_ev(rec.ev).plane);
    evs_.retire(rec.ev, now);
    arm_probe(now);
    queue_retx(psn);
}

void MrcQp::queue_retx(uint64_t psn) {
    auto it = inflight_.find(psn);
    if (it == inflight_.end() || it->second.retx_queued) return;
    it->second.retx_queued = true;
    retx_q_.push_back(psn);
}

void MrcQp::handle_trim_nack(const Packet& pkt, SimTime now) {
    auto it = inflight_.find(pkt.psn);
    if (it == inflight_.end()) {
        ++stats_.stale_trim_nacks;
        return;
    }
    InFlight& rec = it->second;
    ++stats_.trim_nacks;
    // Congestion signal, not path failure: penalize, never retire.
    evs_.penalize(rec.ev, now + penalty_, now);
    if (rec.retx_live) {
        rec.retx_live = false;
        --retx_live_;
    }
    if (!rec.retx_queued) {
        rec.retx_queued = true;
        retx_q_.push_front(pkt.psn);
    }
    try_send(now);
}

void MrcQp::arm_rto(SimTime now) {
    if (rto_armed_) return;
    rto_armed_ = true;
    fabric_.loop().schedule(now + rto_ / 2, this, make_tag(kRtoTick));
}

void MrcQp::arm_probe(SimTime now) {
    if (probe_armed_) return;
    probe_armed_ = true;
    fabric_.loop().schedule(now + cfg_.probe_interval, this, make_tag(kProbeTick));
}

// ---------------- receiver half ----------------

void MrcQp::handle_data(Packet&& pkt, SimTime now) {
    if (pkt.rkey != rkey_) {
        ++stats_.rkey_errors;
        qp_error_ = true;
        return;
    }
    inbound_since_tick_ = true;
    if (!reverse_tick_armed_) {
        reverse_tick_armed_ = true;
        fabric_.loop().schedule(now + base_rtt_, this, make_tag(kReverseTick));
    }
    if (pkt.trimmed) {
        ++stats_.trims_seen;
        Packet nack;
        nack.kind = PktKind::MrcTrimNack;
        nack.flow = flow_;
        nack.inner_src = local_nic_;
        nack.inner_dst = remote_nic_;
        nack.psn = pkt.psn;
        nack.add_echo(pkt.ev, false);
        nack.wire_bytes = kCtrlBytes;
        send_control(std::move(nack), now);
        return;
    }
    pending_echoes_.push_back(SackEcho{pkt.ev, pkt.ecn});
    if (pkt.psn < rcv_cum_ || rcv_ooo_.count(pkt.psn)) {
        ++stats_.dup_pkts; // placement is idempotent; just re-ack
        schedule_sack(now, false);
        return;
    }
    if (pkt.psn >= rcv_cum_ + cfg_.sack_window) {
        ++stats_.out_of_window;
        return;
    }
    bool gap = pkt.psn != rcv_cum_;
    rcv_ooo_[pkt.psn] = pkt.wire_bytes;
    while (!rcv_ooo_.empty() && rcv_ooo_.begin()->first == rcv_cum_) {
        rcv_ooo_.erase(rcv_ooo_.begin());
        ++rcv_cum_;
    }
    ++stats_.delivered_pkts;
    if (pkt.len > 0) place_bytes(pkt.va, pkt.len);
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
    ++pkts_since_sack_;
    if (pending_echoes_.size() > 64) pending_echoes_.resize(64);
    schedule_sack(now, gap);
}

void MrcQp::place_bytes(uint64_t va, uint32_t len) {
    uint64_t start = va, end = va + len;
    auto next = placed_.lower_bound(start);
    if (next != placed_.begin()) {
        auto prev = std::prev(next);
        if (prev->second >= start) {
            start = prev->first;
            end = std::max(end, prev->second);
            next = placed_.erase(prev);
        }
    }
    while (next != placed_.end() && next->first <= end) {
        end = std::max(end, next->second);
        next = placed_.erase(next);
    }
    placed_[start] = end;
}

void MrcQp::schedule_sack(SimTime now, bool immediate) {
    if (immediate || pkts_since_sack_ >= cfg_.sack_burst) {
        send_sack(now);
        return;
    }
    if (!sack_timer_armed_) {
        sack_timer_armed_ = true;
        fabric_.loop().schedule(now + cfg_.sack_interval, this, make_tag(kSackTimer));
    }
}

void MrcQp::send_sack(SimTime now) {
    Packet pkt;
    pkt.kind = PktKind::MrcSack;
    pkt.flow = flow_;
    pkt.inner_src = local_nic_;
    pkt.inner_dst = remote_nic_;
    pkt.cum_psn = rcv_cum_;
    for (const auto& [psn, wire] : rcv_ooo_) {
        if (psn < rcv_cum_) continue;
        uint64_t off = psn - rcv_cum_;
        if (off >= kSackBitmapWords * 64) break;
        pkt.sack_bitmap[off / 64] |= 1ull << (off % 64);
    }
    for (const SackEcho& e : pending_echoes_) pkt.add_echo(e.ev, e.ecn);
    pending_echoes_.clear();
    pkt.port_bitmap = local_port_bitmap();
    pkt.wire_bytes = kSackBytes;
    pkts_since_sack_ = 0;
    ++stats_.sacks_sent;
    send_control(std::move(pkt), now);
}

uint32_t MrcQp::local_port_bitmap() const {
    uint32_t mask = 0;
    for (uint32_t p = 0; p < evs_.planes(); ++p)
        if (fabric_.nic_port_up(local_nic_, p)) mask |= 1u << p;
    return mask;
}

void MrcQp::handle_ev_probe(const Packet& pkt, SimTime now) {
    Packet ack;
    ack.kind = PktKind::MrcEvProbeAck;
    ack.flow = flow_;
    ack.inner_src = local_nic_;
    ack.inner_dst = remote_nic_;
    ack.probe_id = pkt.probe_id;
    ack.wire_bytes = kCtrlBytes;
    send_control(std::move(ack), now);
}

void MrcQp::handle_probe_ack(const Packet& pkt, SimTime now) {
    auto it = pending_probes_.find(pkt.probe_id);
    if (it == pending_probes_.end()) return;
    PendingProbe pp = it->second;
    pending_probes_.erase(it);
    ++stats_.probe_acks;
    if (pp.reverse) {
        note_acked_ev(pp.ev, now);
    } else {
        evs_.probe_success(pp.ev, cfg_.resurrect_threshold, now);
        try_send(now);
    }
}

// ---------------- shared plumbing ----------------

bool MrcQp::send_control(Packet&& pkt, SimTime now) {
    auto ev = pick_control_ev(now);
    if (!ev) return false; // all planes down; peer will time out
    pkt.ev = *ev;
    pkt.outer = address_for(*ev);
    fabric_.nic_send(local_nic_, decode_ev(*ev).plane, std::move(pkt));
    return true;
}

void MrcQp::rtt_sample(SimTime sample) {
    // TCP-style estimator; gains 1/8 and 1/4
    SimTime diff = sample > srtt_ ? sample - srtt_ : srtt_ - sample;
    rttvar_ = (3 * rttvar_ + diff) / 4;
    srtt_ = (7 * srtt_ + sample) / 8;
}

SimTime MrcQp::rto_now() const {
    SimTime est = static_cast<SimTime>(cfg_.rto_rtts * static_cast<double>(srtt_)) + 4 * rttvar_;
    return std::max(est, rto_);
}

std::optional<uint32_t> MrcQp::pick_control_ev(SimTime now) {
    // Reverse EVs must be known-good: entries not reconfirmed within the TTL
    // (by data acks or probe acks) stop being used, so control traffic leaves
    // a dead plane within one probe cycle.
    uint32_t planes = evs_.planes();
    for (uint32_t i = 0; i < planes; ++i) {
        reverse_cursor_ = (reverse_cursor_ + 1) % planes;
        const ReverseEv& rev = reverse_ev_[reverse_cursor_];
        if (!rev.valid || now - rev.confirmed > reverse_ttl_) continue;
        if (!evs_.plane_usable(reverse_cursor_)) continue;
        if (!fabric_.nic_port_up(local_nic_, reverse_cursor_)) continue;
        return rev.value;
    }
    const EvRecord* r = evs_.select(now);
    if (r) return r->value;
    return std::nullopt;
}

Srv6Address MrcQp::address_for(uint32_t ev) const {
    const TopologySpec& spec = fabric_.topology().spec();
    return ev_to_address(to_peer_, ev, t0_local_, spec.planes, spec.t0_uplinks);
}

void MrcQp::note_acked_ev(uint32_t ev, SimTime now) {
    ReverseEv& rev = reverse_ev_[decode_ev(ev).plane];
    rev.value = ev;
    rev.confirmed = now;
    rev.valid = true;
}

void MrcQp::on_packet(Packet&& pkt, SimTime now) {
    switch (pkt.kind) {
    case PktKind::MrcData:
        handle_data(std::move(pkt), now);
        break;
    case PktKind::MrcSack:
        handle_sack(pkt, now);
        break;
    case PktKind::MrcTrimNack:
        handle_trim_nack(pkt, now);
        break;
    case PktKind::MrcEvProbe:
        handle_ev_probe(pkt, now);
        break;
    case PktKind::MrcEvProbeAck:
        handle_probe_ack(pkt, now);
        break;
    default:
        break;
    }
}

void MrcQp::on_port_state(uint32_t plane, bool up, SimTime now) {
    if (up) {
        evs_.unpark_plane(plane, false, now);
        try_send(now);
        return;
    }
    // Remapping the EV sets off the plane is not instantaneous; spread it so
    // the port-down glitch shows up in throughput.
    SimTime delay = cfg_.remap_latency ? rng_.next_below(cfg_.remap_latency) : 0;
    fabric_.loop().schedule(now + delay, this, make_tag(kParkAt, plane));
}

void MrcQp::on_event(uint64_t tag, SimTime now) {
    switch (static_cast<Tag>(tag >> 32)) {
    case kSackTimer:
        sack_timer_armed_ = false;
        if (pkts_since_sack_ > 0 || !pending_echoes_.empty()) send_sack(now);
        break;
    case kRtoTick: {
        rto_armed_ = false;
        if (!inflight_.empty()) {
            SimTime timeout = rto_now();
            for (auto& [psn, rec] : inflight_) {
                if (rec.retx_queued) continue;
                if (now >= rec.last_tx && now - rec.last_tx >= timeout) declare_lost(psn, now);
            }
            try_send(now);
            arm_rto(now);
        }
        break;
    }
    case kProbeTick: {
        probe_armed_ = false;
        for (auto it = pending_probes_.begin(); it != pending_probes_.end();) {
            if (now - it->second.sent >= cfg_.probe_interval) {
                if (!it->second.reverse) evs_.probe_failure(it->second.ev);
                it = pending_probes_.erase(it);
            } else {
                ++it;
            }
        }
        for (uint32_t v : evs_.retired_values()) {
            EvRecord* r = evs_.find(v);
            if (!r || r->probe_outstanding || !evs_.plane_usable(r->plane)) continue;
            if (!fabric_.nic_port_up(local_nic_, r->plane)) continue;
            r->probe_outstanding = true;
            uint64_t id = next_probe_id_++;
            pending_probes_[id] = PendingProbe{v, false, now};
            Packet pkt;
            pkt.kind = PktKind::MrcEvProbe;
            pkt.flow = flow_;
            pkt.inner_src = local_nic_;
            pkt.inner_dst = remote_nic_;
            pkt.ev = v;
            pkt.outer = address_for(v);
            pkt.probe_id = id;
            pkt.wire_bytes = kCtrlBytes;
            ++stats_.probes_sent;
            fabric_.nic_send(local_nic_, decode_ev(v).plane, std::move(pkt));
        }
        if (!evs_.retired_values().empty() || !pending_probes_.empty()) arm_probe(now);
        break;
    }
    case kReverseTick: {
        reverse_tick_armed_ = false;
        if (inbound_since_tick_ && !outbound_since_tick_) {
            const EvRecord* cand = evs_.random_active();
            if (cand) {
                uint64_t id = next_probe_id_++;
                pending_probes_[id] = PendingProbe{cand->value, true, now};
                Packet pkt;
                pkt.kind = PktKind::MrcEvProbe;
                pkt.flow = flow_;
                pkt.inner_src = local_nic_;
                pkt.inner_dst = remote_nic_;
                pkt.ev = cand->value;
                pkt.outer = address_for(cand->value);
                pkt.probe_id = id;
                pkt.wire_bytes = kCtrlBytes;
                ++stats_.reverse_probes_sent;
                fabric_.nic_send(local_nic_, decode_ev(cand->value).plane, std::move(pkt));
            }
        }
        bool active = inbound_since_tick_;
        inbound_since_tick_ = false;
        outbound_since_tick_ = false;
        if (active) {
            reverse_tick_armed_ = true;
            fabric_.loop().schedule(now + base_rtt_, this, make_tag(kReverseTick));
        }
        break;
    }
    case kParkAt: {
        uint32_t plane = tag & 0xffffffffu;
        if (!fabric_.nic_port_up(local_nic_, plane)) evs_.park_plane(plane, false, now);
        break;
    }
    case kTrySend:
        try_send(now);
        break;
    }
}

} // namespace planesim
