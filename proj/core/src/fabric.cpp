#include "planesim/fabric.hpp"

#include <algorithm>

namespace planesim {

namespace {
constexpr uint64_t kUnboundedQueue = 1ull << 62;

uint64_t auto_capacity(uint64_t bps, uint32_t mtu) {
    // 1 MB per 100 Gb/s of port speed, floored at 8 MTUs so slow desk-scale
    // links still hold a useful burst.
    uint64_t scaled = static_cast<uint64_t>(1024 * 1024) * bps / 100'000'000'000ull;
    return std::max<uint64_t>(scaled, 8ull * mtu);
}
} // namespace

Fabric::Fabric(Topology& topo, const Srv6Allocation& alloc, const FabricConfig& cfg, EventLoop& loop)
    : topo_(topo), alloc_(alloc), cfg_(cfg), loop_(loop), rng_(cfg.seed, 0xfab51c) {
    const auto& spec = topo_.spec();
    channels_.resize(topo_.links().size() * 2);
    for (const Link& l : topo_.links()) {
        for (int dir = 0; dir < 2; ++dir) {
            Channel& ch = channels_[l.id * 2 + dir];
            ch.id = l.id * 2 + dir;
            ch.link = l.id;
            ch.forward = (dir == 0);
            ch.bps = l.speed_bps;
            ch.prop = spec.propagation_delay;
            uint64_t nominal = cfg_.queue_capacity_bytes ? cfg_.queue_capacity_bytes
                                                         : auto_capacity(l.speed_bps, cfg_.mtu);
            bool nic_egress = (l.kind == LinkKind::NicT0 && ch.forward);
            bool last_hop = (l.kind == LinkKind::NicT0 && !ch.forward);
            ch.capacity = (nic_egress || cfg_.pfc_enabled) ? kUnboundedQueue : nominal;
            ch.ecn_min = static_cast<uint64_t>(cfg_.ecn_min_frac * static_cast<double>(nominal));
            ch.ecn_max = static_cast<uint64_t>(cfg_.ecn_max_frac * static_cast<double>(nominal));
            ch.ecn_mark = !nic_egress && cfg_.ecn_enabled && (!last_hop || cfg_.ecn_on_last_hop);
            ch.trim = !nic_egress && cfg_.trim_enabled;
        }
    }
    t0_blackholed_.assign(static_cast<size_t>(spec.planes) * topo_.t0_per_plane(), 0);
    t1_blackholed_.assign(static_cast<size_t>(spec.planes) * topo_.t1_per_plane(), 0);
    t0_stats_.resize(t0_blackholed_.size());
    t1_stats_.resize(t1_blackholed_.size());
    nics_.resize(topo_.nic_count());
    if (cfg_.pfc_enabled) {
        uint64_t nominal = cfg_.queue_capacity_bytes ? cfg_.queue_capacity_bytes
                                                     : auto_capacity(spec.link_speed_bps, cfg_.mtu);
        pfc_xoff_ = cfg_.pfc_xoff_bytes ? cfg_.pfc_xoff_bytes : nominal / 2;
        pfc_xon_ = cfg_.pfc_xon_bytes ? cfg_.pfc_xon_bytes : nominal / 4;
        t0_pfc_.assign(t0_stats_.size(), std::vector<PfcPort>(spec.switch_radix));
        t1_pfc_.assign(t1_stats_.size(), std::vector<PfcPort>(topo_.t0_per_plane()));
    }
}

bool Fabric::nic_port_up(uint32_t nic, uint32_t plane) const {
    return topo_.link(nic * topo_.planes() + plane).up;
}

void Fabric::register_flow(uint32_t nic, uint32_t flow, FlowEndpoint* ep) { nics_[nic].flows[flow] = ep; }
void Fabric::register_probe_sink(uint32_t nic, FlowEndpoint* ep) { nics_[nic].probe_sink = ep; }
void Fabric::register_port_watcher(uint32_t nic, PortWatcher* w) { nics_[nic].watchers.push_back(w); }

const FlowLedger& Fabric::flow_ledger(uint32_t flow) { return flow_ledgers_[flow]; }

bool Fabric::nic_send(uint32_t nic, uint32_t plane, Packet&& pkt) {
    Channel& ch = channel_for(topo_.nic_t0_link(nic, plane), true);
    auto& ledger = flow_ledgers_[pkt.flow];
    ++counters_.emitted;
    ++ledger.emitted;
    if (!ch.up) {
        ++counters_.drops_tx_down;
        ++ledger.dropped;
        return false;
    }
    enqueue(ch, std::move(pkt), nullptr);
    return true;
}

EnqueueOutcome Fabric::enqueue(Channel& ch, Packet&& pkt, SwitchCounters* stats) {
    EnqueueOutcome out;
    if (!ch.up) {
        ++counters_.drops_tx_down;
        ++flow_ledgers_[pkt.flow].dropped;
        if (stats) ++stats->drops;
        return EnqueueOutcome::Dropped;
    }
    if (pkt.trimmed) {
        // Already-trimmed headers stay in the priority queue at every hop.
        if (ch.trimq.size() < cfg_.trim_queue_packets) {
            ch.trimq.push_back(std::move(pkt));
            out = EnqueueOutcome::Queued;
        } else {
            ++counters_.drops_trim_overflow;
            ++flow_ledgers_[pkt.flow].dropped;
            if (stats) ++stats->drops;
            return EnqueueOutcome::Dropped;
        }
    } else if (ch.q_bytes + pkt.wire_bytes <= ch.capacity) {
        if (ch.ecn_mark && !pkt.ecn && ch.q_bytes > ch.ecn_min) {
            double p = ch.q_bytes >= ch.ecn_max
                           ? 1.0
                           : static_cast<double>(ch.q_bytes - ch.ecn_min) /
                                 static_cast<double>(ch.ecn_max - ch.ecn_min);
            if (rng_.chance(p)) {
                pkt.ecn = true;
                ++counters_.ecn_marks;
                if (stats) ++stats->ecn_marks;
            }
        }
        ch.q_bytes += pkt.wire_bytes;
        bool marked = pkt.ecn;
        ch.q.push_back(std::move(pkt));
        out = marked ? EnqueueOutcome::QueuedMarked : EnqueueOutcome::Queued;
    } else if (ch.trim && ch.trimq.size() < cfg_.trim_queue_packets) {
        if (is_data_kind(pkt.kind) && pkt.wire_bytes > cfg_.header_bytes) {
            pkt.trimmed = true;
            pkt.wire_bytes = cfg_.header_bytes;
            ++counters_.trims;
            if (stats) ++stats->trims;
            ch.trimq.push_back(std::move(pkt));
            out = EnqueueOutcome::Trimmed;
        } else {
            ch.trimq.push_back(std::move(pkt)); // header-only packets ride the priority queue whole
            out = EnqueueOutcome::Queued;
        }
    } else {
        ++counters_.drops_queue_full;
        ++flow_ledgers_[pkt.flow].dropped;
        if (stats) ++stats->drops;
        return EnqueueOutcome::Dropped;
    }
    kick(ch);
    return out;
}

void Fabric::kick(Channel& ch) {
    if (ch.busy || !ch.up || ch.paused) return;
    if (ch.trimq.empty() && ch.q.empty()) return;
    ch.busy = true;
    ch.serving_trim = !ch.trimq.empty();
    const Packet& head = ch.serving_trim ? ch.trimq.front() : ch.q.front();
    loop_.schedule(loop_.now() + serialization_time(head.wire_bytes, ch.bps), this,
                   make_tag(kSerDone, (ch.epoch & 0xFFFFull) << 32 | ch.id));
}

void Fabric::serialize_done(Channel& ch, SimTime now) {
    Packet pkt;
    if (ch.serving_trim) {
        pkt = std::move(ch.trimq.front());
        ch.trimq.pop_front();
    } else {
        pkt = std::move(ch.q.front());
        ch.q.pop_front();
        ch.q_bytes -= pkt.wire_bytes;
    }
    const Link& l = topo_.link(ch.link);
    if (cfg_.pfc_enabled && !(l.kind == LinkKind::NicT0 && ch.forward)) {
        // Leaving a switch buffer: credit the ingress that brought it in.
        if (l.kind == LinkKind::NicT0)
            pfc_on_drained(topo_.t0_flat_index(l.plane, l.b_index), false, l.plane, l.b_index, pkt);
        else if (ch.forward)
            pfc_on_drained(topo_.t0_flat_index(l.plane, l.a_index), false, l.plane, l.a_index, pkt);
        else
            pfc_on_drained(topo_.t1_flat_index(l.plane, l.b_index), true, l.plane, l.b_index, pkt);
    }
    ch.flight.emplace_back(now + ch.prop, std::move(pkt));
    if (ch.flight.size() == 1)
        loop_.schedule(ch.flight.front().first, this, make_tag(kArrive, ch.id));
    ch.busy = false;
    kick(ch);
}

void Fabric::arrival(Channel& ch, SimTime now) {
    Packet pkt = std::move(ch.flight.front().second);
    ch.flight.pop_front();
    if (!ch.flight.empty()) loop_.schedule(ch.flight.front().first, this, make_tag(kArrive, ch.id));

    const Link& l = topo_.link(ch.link);
    if (l.kind == LinkKind::NicT0) {
        if (ch.forward)
            deliver_to_switch(false, l.plane, l.b_index, std::move(pkt), static_cast<uint16_t>(l.b_port), now);
        else
            deliver_to_nic(l.a_index, l.plane, std::move(pkt), now);
    } else {
        if (ch.forward)
            deliver_to_switch(true, l.plane, l.b_index, std::move(pkt), static_cast<uint16_t>(l.b_port), now);
        else
            deliver_to_switch(false, l.plane, l.a_index, std::move(pkt), static_cast<uint16_t>(l.a_port), now);
    }
}

void Fabric::deliver_to_switch(bool is_t1, uint32_t plane, uint32_t index, Packet&& pkt, uint16_t ingress_port,
                               SimTime now) {
    uint32_t flat = is_t1 ? topo_.t1_flat_index(plane, index) : topo_.t0_flat_index(plane, index);
    SwitchCounters& stats = is_t1 ? t1_stats_[flat] : t0_stats_[flat];
    if ((is_t1 ? t1_blackholed_ : t0_blackholed_)[flat]) {
        ++stats.blackholed;
        ++counters_.drops_blackhole;
        ++flow_ledgers_[pkt.flow].dropped;
        return;
    }
    if (++pkt.hops > 8) { // malformed/looping address
        ++stats.drops;
        ++counters_.drops_fib_miss;
        ++flow_ledgers_[pkt.flow].dropped;
        return;
    }
    const SwitchSrv6Config& cfg = is_t1 ? alloc_.t1_config(plane, index) : alloc_.t0_config(plane, index);
    ForwardResult res = switch_process(cfg, pkt.outer);
    if (res.outcome == ForwardOutcome::NotForMe) {
        ++stats.drops;
        ++counters_.drops_not_for_me;
        ++flow_ledgers_[pkt.flow].dropped;
        return;
    }
    if (res.outcome == ForwardOutcome::FibMiss) {
        ++stats.drops;
        ++counters_.drops_fib_miss;
        ++flow_ledgers_[pkt.flow].dropped;
        return;
    }
    ++stats.forwarded;
    pkt.outer = res.next;
    pkt.ingress_port = ingress_port;

    const auto& spec = topo_.spec();
    Channel* out;
    if (!is_t1) {
        if (res.egress_port < spec.t0_downlinks) {
            uint32_t nic = index * spec.t0_downlinks + res.egress_port;
            out = &channel_for(topo_.nic_t0_link(nic, plane), false);
        } else {
            out = &channel_for(topo_.t0_t1_link(plane, index, res.egress_port - spec.t0_downlinks), true);
        }
    } else {
        out = &channel_for(topo_.t0_t1_link(plane, res.egress_port, index), false);
    }
    uint64_t wire_before = pkt.wire_bytes;
    EnqueueOutcome eo = enqueue(*out, std::move(pkt), &stats);
    if (cfg_.pfc_enabled && eo != EnqueueOutcome::Dropped) {
        uint64_t buffered = (eo == EnqueueOutcome::Trimmed) ? cfg_.header_bytes : wire_before;
        pfc_on_buffered(flat, is_t1, plane, index, ingress_port, buffered);
    }
    (void)now;
}

void Fabric::deliver_to_nic(uint32_t nic, uint32_t ingress_plane, Packet&& pkt, SimTime now) {
    for (const DropRule& rule : drop_rules_) {
        if (rule.nic_scope >= 0 && static_cast<uint32_t>(rule.nic_scope) != nic) continue;
        if (rule.plane_scope >= 0 && static_cast<uint32_t>(rule.plane_scope) != ingress_plane) continue;
        if (rule.ev_match && pkt.ev != rule.ev) continue;
        if (rng_.chance(rule.rate)) {
            ++counters_.drops_injected;
            ++flow_ledgers_[pkt.flow].dropped;
            return;
        }
    }
    NicState& st = nics_[nic];
    if (pkt.kind == PktKind::CmProbe) {
        auto& ledger = flow_ledgers_[pkt.flow];
        ++counters_.delivered;
        ++ledger.delivered;
        if (st.probe_sink) st.probe_sink->on_packet(std::move(pkt), now);
        return;
    }
    if (pkt.inner_dst != nic) {
        ++counters_.drops_misdelivery;
        ++flow_ledgers_[pkt.flow].dropped;
        return;
    }
    auto it = st.flows.find(pkt.flow);
    if (it == st.flows.end()) {
        ++counters_.drops_unknown_flow;
        ++flow_ledgers_[pkt.flow].dropped;
        return;
    }
    auto& ledger = flow_ledgers_[pkt.flow];
    if (pkt.trimmed) {
        ++counters_.delivered_trimmed;
        ++ledger.delivered_trimmed;
    } else {
        ++counters_.delivered;
        ++ledger.delivered;
    }
    it->second->on_packet(std::move(pkt), now);
}

void Fabric::pfc_on_buffered(uint32_t sw_flat, bool is_t1, uint32_t plane, uint32_t index, uint32_t ingress_port,
                             uint64_t bytes) {
    if (ingress_port == UINT16_MAX) return;
    auto& ports = (is_t1 ? t1_pfc_ : t0_pfc_)[sw_flat];
    PfcPort& p = ports[ingress_port];
    p.bytes += bytes;
    if (!p.pause_sent && p.bytes > pfc_xoff_) {
        p.pause_sent = true;
        ++counters_.pfc_pauses;
        (is_t1 ? t1_stats_ : t0_stats_)[sw_flat].pauses++;
        uint32_t up_ch = upstream_channel_id(is_t1, plane, index, ingress_port);
        loop_.schedule(loop_.now() + channels_[up_ch].prop, this, make_tag(kPauseOn, up_ch));
    }
}

void Fabric::pfc_on_drained(uint32_t sw_flat, bool is_t1, uint32_t plane, uint32_t index, const Packet& pkt) {
    if (pkt.ingress_port == UINT16_MAX) return;
    auto& ports = (is_t1 ? t1_pfc_ : t0_pfc_)[sw_flat];
    PfcPort& p = ports[pkt.ingress_port];
    p.bytes -= std::min<uint64_t>(p.bytes, pkt.wire_bytes);
    if (p.pause_sent && p.bytes < pfc_xon_) {
        p.pause_sent = false;
        ++counters_.pfc_resumes;
        uint32_t up_ch = upstream_channel_id(is_t1, plane, index, pkt.ingress_port);
        loop_.schedule(loop_.now() + channels_[up_ch].prop, this, make_tag(kPauseOff, up_ch));
    }
}

uint32_t Fabric::upstream_channel_id(bool is_t1, uint32_t plane, uint32_t index, uint32_t port) const {
    const auto& spec = topo_.spec();
    if (!is_t1) {
        if (port < spec.t0_downlinks)
            return topo_.nic_t0_link(index * spec.t0_downlinks + port, plane) * 2; // NIC egress
        return topo_.t0_t1_link(plane, index, port - spec.t0_downlinks) * 2 + 1;   // T1 -> T0
    }
    return topo_.t0_t1_link(plane, port, index) * 2; // T0 -> T1
}

void Fabric::schedule_failure(const FailureEvent& ev) {
    pending_failures_.push_back(ev);
    loop_.schedule(ev.time, this, make_tag(kInject, pending_failures_.size() - 1));
}

void Fabric::apply_link_state(LinkId link, bool up, SimTime now) {
    Link& l = topo_.mutable_link(link);
    if (l.up == up) return;
    l.up = up;
    for (int dir = 0; dir < 2; ++dir) {
        Channel& ch = channels_[link * 2 + dir];
        ch.up = up;
        if (!up) {
            ++ch.epoch; // invalidates the scheduled serializer event
            if (ch.busy) {
                // The frame on the wire is lost with the link.
                Packet pkt;
                if (ch.serving_trim) {
                    pkt = std::move(ch.trimq.front());
                    ch.trimq.pop_front();
                } else {
                    pkt = std::move(ch.q.front());
                    ch.q.pop_front();
                    ch.q_bytes -= pkt.wire_bytes;
                }
                ++counters_.drops_link_down;
                ++flow_ledgers_[pkt.flow].dropped;
                if (cfg_.pfc_enabled && !(l.kind == LinkKind::NicT0 && ch.forward)) {
                    if (l.kind == LinkKind::NicT0)
                        pfc_on_drained(topo_.t0_flat_index(l.plane, l.b_index), false, l.plane, l.b_index, pkt);
                    else if (ch.forward)
                        pfc_on_drained(topo_.t0_flat_index(l.plane, l.a_index), false, l.plane, l.a_index, pkt);
                    else
                        pfc_on_drained(topo_.t1_flat_index(l.plane, l.b_index), true, l.plane, l.b_index, pkt);
                }
                ch.busy = false;
            }
            for (auto& [t, pkt] : ch.flight) {
                ++counters_.drops_link_down;
                ++flow_ledgers_[pkt.flow].dropped;
            }
            ch.flight.clear();
        } else {
            kick(ch);
        }
    }
    if (l.kind == LinkKind::NicT0) {
        for (PortWatcher* w : nics_[l.a_index].watchers) w->on_port_state(l.plane, up, now);
    }
}

void Fabric::inject(const FailureEvent& ev) {
    SimTime now = loop_.now();
    switch (ev.kind) {
    case FailureEvent::Kind::LinkDown:
        apply_link_state(ev.link, false, now);
        break;
    case FailureEvent::Kind::LinkUp:
        apply_link_state(ev.link, true, now);
        break;
    case FailureEvent::Kind::SwitchBlackhole:
        (ev.is_t1 ? t1_blackholed_ : t0_blackholed_)[ev.is_t1 ? topo_.t1_flat_index(ev.plane, ev.index)
                                                              : topo_.t0_flat_index(ev.plane, ev.index)] = 1;
        break;
    case FailureEvent::Kind::SwitchRestore:
        (ev.is_t1 ? t1_blackholed_ : t0_blackholed_)[ev.is_t1 ? topo_.t1_flat_index(ev.plane, ev.index)
                                                              : topo_.t0_flat_index(ev.plane, ev.index)] = 0;
        break;
    case FailureEvent::Kind::SwitchReboot: {
        FailureEvent black = ev;
        black.kind = FailureEvent::Kind::SwitchBlackhole;
        inject(black);
        FailureEvent restore = ev;
        restore.kind = FailureEvent::Kind::SwitchRestore;
        restore.time = now + ev.duration;
        schedule_failure(restore);
        break;
    }
    case FailureEvent::Kind::EvDropRate:
        drop_rules_.push_back(DropRule{true, ev.ev, ev.rate, ev.nic_scope, ev.plane_scope});
        break;
    case FailureEvent::Kind::EvDropClear:
        std::erase_if(drop_rules_, [&](const DropRule& r) { return r.ev_match && r.ev == ev.ev; });
        break;
    case FailureEvent::Kind::RandomDrop:
        drop_rules_.push_back(DropRule{false, 0, ev.rate, ev.nic_scope, ev.plane_scope});
        break;
    case FailureEvent::Kind::RandomDropClear:
        std::erase_if(drop_rules_, [&](const DropRule& r) { return !r.ev_match; });
        break;
    }
}

void Fabric::on_event(uint64_t tag, SimTime now) {
    uint64_t kind = tag >> 56;
    note_event(tag, now);
    switch (kind) {
    case kSerDone: {
        uint32_t id = tag & 0xFFFFFFFFu;
        uint64_t epoch = (tag >> 32) & 0xFFFF;
        Channel& ch = channels_[id];
        if ((ch.epoch & 0xFFFF) != epoch || !ch.busy) return; // stale
        serialize_done(ch, now);
        break;
    }
    case kArrive: {
        uint32_t id = tag & 0xFFFFFFFFu;
        Channel& ch = channels_[id];
        if (ch.flight.empty() || ch.flight.front().first > now) return; // stale
        arrival(ch, now);
        break;
    }
    case kPauseOn:
        channels_[tag & 0xFFFFFFFFu].paused = true;
        break;
    case kPauseOff: {
        Channel& ch = channels_[tag & 0xFFFFFFFFu];
        ch.paused = false;
        kick(ch);
        break;
    }
    case kInject:
        inject(pending_failures_[tag & 0xFFFFFFFFu]);
        break;
    default:
        break;
    }
}

uint64_t Fabric::inflight_packets() const {
    uint64_t n = 0;
    for (const Channel& ch : channels_) n += ch.q.size() + ch.trimq.size() + ch.flight.size();
    return n;
}

uint64_t Fabric::max_queue_bytes() const {
    uint64_t m = 0;
    for (const Channel& ch : channels_) m = std::max(m, ch.q_bytes);
    return m;
}

bool Fabric::switch_blackholed(bool is_t1, uint32_t plane, uint32_t idx) const {
    return (is_t1 ? t1_blackholed_ : t0_blackholed_)[is_t1 ? topo_.t1_flat_index(plane, idx)
                                                           : topo_.t0_flat_index(plane, idx)];
}

} // namespace planesim
