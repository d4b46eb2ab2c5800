#include "planesim/harness.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace planesim {

Sim::Sim(const Scenario& sc) : sc_(sc), rng_(sc.seed, 0x51317) {
    sc_.validate();
    topo_ = std::make_unique<Topology>(sc_.topo);
    alloc_ = std::make_unique<Srv6Allocation>(*topo_, sc_.locator);

    FabricConfig fc = sc_.fabric;
    fc.seed = sc_.seed;
    if (sc_.transport == TransportKind::Roce) {
        fc.trim_enabled = false; // trimming is MRC's tool
        fc.pfc_enabled = sc_.roce_pfc;
        fc.ecn_enabled = sc_.roce.dcqcn;
        fc.ecn_on_last_hop = sc_.roce.dcqcn;
    } else {
        fc.pfc_enabled = false;
        fc.ecn_on_last_hop = false;
    }
    fabric_ = std::make_unique<Fabric>(*topo_, *alloc_, fc, loop_);

    log_.sample_interval = sc_.sample_interval;
    log_.duration = sc_.duration;
    log_.seed = sc_.seed;
    log_.trace_enabled = sc_.trace;
    log_.resolved_config_json = sc_.resolved_json();

    build_workload();
    build_failures();
    if (sc_.cm_enabled) {
        cm_ = std::make_unique<Clustermapper>(*fabric_, sc_.cm);
        cm_->start();
    }
    stream_prev_.resize(streams_.size());
}

Sim::~Sim() = default;

Endpoint* Sim::make_connection(uint32_t src, uint32_t dst, bool record_latency, uint32_t stripe_of,
                               uint32_t stripe_idx) {
    (void)stripe_of;
    (void)stripe_idx;
    uint32_t flow = next_flow_++;
    Denylist dl(sc_.denylist);
    if (sc_.transport == TransportKind::Mrc) {
        MrcConfig mc = sc_.mrc;
        mc.record_latency = record_latency;
        mc.trace = sc_.trace;
        auto a = std::make_unique<MrcQp>(*fabric_, flow, src, dst, mc, dl, sc_.seed, &log_);
        auto b = std::make_unique<MrcQp>(*fabric_, flow, dst, src, mc, dl, sc_.seed, &log_);
        a->start();
        b->start();
        endpoints_.push_back(a.get());
        endpoints_.push_back(b.get());
        Endpoint* out = a.get();
        mrc_.push_back(std::move(a));
        mrc_.push_back(std::move(b));
        return out;
    }
    RoceConfig rc = sc_.roce;
    rc.record_latency = record_latency;
    auto a = std::make_unique<RoceQp>(*fabric_, flow, src, dst, rc, sc_.seed, &log_);
    auto b = std::make_unique<RoceQp>(*fabric_, flow, dst, src, rc, sc_.seed, &log_);
    a->start();
    b->start();
    endpoints_.push_back(a.get());
    endpoints_.push_back(b.get());
    Endpoint* out = a.get();
    roce_.push_back(std::move(a));
    roce_.push_back(std::move(b));
    return out;
}

static Endpoint* peer_of(Endpoint* ep, const std::vector<Endpoint*>& all) {
    for (Endpoint* e : all)
        if (e != ep && e->flow() == ep->flow()) return e;
    return nullptr;
}

void Sim::build_workload() {
    const WorkloadSpec& w = sc_.workload;
    uint32_t nics = topo_->nic_count();
    uint32_t down = sc_.topo.t0_downlinks;

    auto add_stream = [&](uint32_t src, uint32_t dst, uint64_t msg, uint32_t depth, uint64_t total,
                          bool imm, bool lat, const std::string& label) {
        Stream st;
        st.label = label;
        st.msg_size = msg;
        st.queue_depth = depth;
        st.total_msgs = total;
        st.use_imm = imm;
        for (uint32_t q = 0; q < w.qps; ++q) {
            Endpoint* ep = make_connection(src, dst, lat, w.qps, q);
            st.srcs.push_back(ep);
            st.dsts.push_back(peer_of(ep, endpoints_));
        }
        size_t idx = streams_.size();
        for (Endpoint* ep : st.srcs)
            ep->set_send_completion([this, idx](SimTime now, uint64_t) {
                streams_[idx].completed++;
                stream_pump(idx, now);
            });
        streams_.push_back(std::move(st));
    };

    auto auto_pair = [&]() -> std::pair<uint32_t, uint32_t> {
        if (!w.pairs.empty()) return w.pairs.front();
        if (w.cross_t1 && nics > down) return {0u, down}; // first NIC of group 1
        return {0u, 1u};
    };

    switch (w.kind) {
    case WorkloadSpec::Kind::WriteBw: {
        std::vector<std::pair<uint32_t, uint32_t>> pairs = w.pairs;
        if (pairs.empty()) pairs.push_back(auto_pair());
        for (size_t i = 0; i < pairs.size(); ++i) {
            auto [a, b] = pairs[i];
            add_stream(a, b, w.msg_size, w.queue_depth, 0, false,
                       false, "s" + std::to_string(streams_.size()));
            if (w.bidir)
                add_stream(b, a, w.msg_size, w.queue_depth, 0, false, false,
                           "s" + std::to_string(streams_.size()));
        }
        break;
    }
    case WorkloadSpec::Kind::WriteLat: {
        auto [a, b] = auto_pair();
        add_stream(a, b, w.msg_size, 1, w.iters, true, true, "s0");
        break;
    }
    case WorkloadSpec::Kind::RingAllreduce: {
        collective_nodes_ = w.nodes;
        if (collective_nodes_.empty()) {
            uint32_t n = w.node_count ? w.node_count : std::min<uint32_t>(nics, 16);
            for (uint32_t i = 0; i < n; ++i) collective_nodes_.push_back(i);
        }
        size_t n = collective_nodes_.size();
        ring_.resize(n);
        for (size_t i = 0; i < n; ++i) {
            uint32_t src = collective_nodes_[i];
            uint32_t dst = collective_nodes_[(i + 1) % n];
            RingNode& rn = ring_[i];
            rn.out = make_connection(src, dst, false);
            rn.steps_total = static_cast<uint32_t>(2 * (n - 1));
            rn.chunk = std::max<uint64_t>(1, w.msg_size / n);
            rn.out->set_send_completion([this, i](SimTime now, uint64_t) {
                ring_[i].sends_done++;
                ring_pump(i, now);
            });
            Endpoint* in = peer_of(rn.out, endpoints_);
            // recv completion fires at node (i+1): it gates that node's sends
            size_t next = (i + 1) % n;
            in->set_recv_completion([this, next](SimTime now, uint64_t, uint64_t) {
                ring_[next].recvs_done++;
                ring_pump(next, now);
            });
        }
        break;
    }
    case WorkloadSpec::Kind::AllToAll: {
        collective_nodes_ = w.nodes;
        if (collective_nodes_.empty()) {
            uint32_t n = w.node_count ? w.node_count : std::min<uint32_t>(nics, 16);
            for (uint32_t i = 0; i < n; ++i) collective_nodes_.push_back(i);
        }
        size_t n = collective_nodes_.size();
        a2a_.resize(n);
        for (size_t i = 0; i < n; ++i) {
            A2ANode& an = a2a_[i];
            an.per_peer = std::max<uint64_t>(1, w.msg_size);
            for (size_t k = 0; k < n; ++k) {
                if (k == i) continue;
                Endpoint* ep = make_connection(collective_nodes_[i], collective_nodes_[k], false);
                an.out.push_back(ep);
                ep->set_send_completion([this, i](SimTime now, uint64_t) {
                    a2a_[i].send_done++;
                    a2a_pump(i, now);
                });
                Endpoint* in = peer_of(ep, endpoints_);
                in->set_recv_completion([this, k](SimTime now, uint64_t, uint64_t) {
                    a2a_[k].recv_done++;
                    a2a_pump(k, now);
                });
            }
        }
        break;
    }
    case WorkloadSpec::Kind::Incast: {
        // Cross-spine fan-in onto NIC 0 of group 0, one sender per other group.
        uint32_t target = 0;
        for (uint32_t i = 0; i < w.fan_in; ++i) {
            uint32_t src = (1 + i) * down; // first NIC of group 1+i
            add_stream(src, target, w.msg_size, w.queue_depth, 0, false, false,
                       "s" + std::to_string(streams_.size()));
        }
        if (w.victim && down >= 2) {
            uint32_t vdst = 1;                 // same rack as the incast target
            uint32_t vsrc = w.fan_in * down + 1; // second NIC of the last sender group
            add_stream(vsrc, vdst, w.msg_size, w.queue_depth, 0, false, false, "victim");
        }
        break;
    }
    case WorkloadSpec::Kind::Permutation: {
        std::vector<uint32_t> srcs, dsts;
        for (uint32_t r : w.src_racks)
            for (uint32_t d = 0; d < down; ++d) srcs.push_back(r * down + d);
        for (uint32_t r : w.dst_racks)
            for (uint32_t d = 0; d < down; ++d) dsts.push_back(r * down + d);
        rng_.shuffle(dsts);
        size_t n = std::min(srcs.size(), dsts.size());
        for (size_t i = 0; i < n; ++i)
            add_stream(srcs[i], dsts[i], w.msg_size, w.queue_depth, 0, false, false,
                       "s" + std::to_string(streams_.size()));
        break;
    }
    }
}

void Sim::build_failures() {
    for (const FailureSpec& f : sc_.failures) {
        auto link_id = [&]() -> LinkId {
            if (f.link_type == FailureSpec::LinkType::NicT0) return topo_->nic_t0_link(f.nic, f.plane);
            return topo_->t0_t1_link(f.plane, f.t0, f.uplink);
        };
        switch (f.kind) {
        case FailureSpec::Kind::LinkDown: {
            FailureEvent ev;
            ev.kind = FailureEvent::Kind::LinkDown;
            ev.time = f.time;
            ev.link = link_id();
            fabric_->schedule_failure(ev);
            break;
        }
        case FailureSpec::Kind::LinkUp: {
            FailureEvent ev;
            ev.kind = FailureEvent::Kind::LinkUp;
            ev.time = f.time;
            ev.link = link_id();
            fabric_->schedule_failure(ev);
            break;
        }
        case FailureSpec::Kind::LinkFlap: {
            FailureEvent down;
            down.kind = FailureEvent::Kind::LinkDown;
            down.time = f.time;
            down.link = link_id();
            fabric_->schedule_failure(down);
            FailureEvent up = down;
            up.kind = FailureEvent::Kind::LinkUp;
            up.time = f.time + f.duration;
            fabric_->schedule_failure(up);
            break;
        }
        case FailureSpec::Kind::TransceiverFlap: {
            // One transceiver carries four plane ports of the NIC.
            uint32_t first = f.transceiver_group * 4;
            uint32_t last = std::min(first + 4, sc_.topo.planes);
            for (uint32_t p = first; p < last; ++p) {
                FailureEvent down;
                down.kind = FailureEvent::Kind::LinkDown;
                down.time = f.time;
                down.link = topo_->nic_t0_link(f.nic, p);
                fabric_->schedule_failure(down);
                FailureEvent up = down;
                up.kind = FailureEvent::Kind::LinkUp;
                up.time = f.time + f.duration;
                fabric_->schedule_failure(up);
            }
            break;
        }
        case FailureSpec::Kind::SwitchBlackhole: {
            FailureEvent ev;
            ev.kind = FailureEvent::Kind::SwitchBlackhole;
            ev.time = f.time;
            ev.is_t1 = f.is_t1;
            ev.plane = f.plane;
            ev.index = f.index;
            fabric_->schedule_failure(ev);
            if (f.duration > 0) {
                FailureEvent rs = ev;
                rs.kind = FailureEvent::Kind::SwitchRestore;
                rs.time = f.time + f.duration;
                fabric_->schedule_failure(rs);
            }
            break;
        }
        case FailureSpec::Kind::SwitchReboot: {
            FailureEvent ev;
            ev.kind = FailureEvent::Kind::SwitchReboot;
            ev.time = f.time;
            ev.is_t1 = f.is_t1;
            ev.plane = f.plane;
            ev.index = f.index;
            ev.duration = f.duration;
            fabric_->schedule_failure(ev);
            break;
        }
        case FailureSpec::Kind::EvDropRate: {
            FailureEvent ev;
            ev.kind = FailureEvent::Kind::EvDropRate;
            ev.time = f.time;
            ev.ev = resolve_ev_target(f);
            ev.rate = f.rate;
            ev.nic_scope = f.scope_nic;
            ev.plane_scope = f.scope_plane;
            fabric_->schedule_failure(ev);
            if (f.duration > 0) {
                FailureEvent clear = ev;
                clear.kind = FailureEvent::Kind::EvDropClear;
                clear.time = f.time + f.duration;
                fabric_->schedule_failure(clear);
            }
            break;
        }
        case FailureSpec::Kind::RandomDrop: {
            FailureEvent ev;
            ev.kind = FailureEvent::Kind::RandomDrop;
            ev.time = f.time;
            ev.rate = f.rate;
            ev.nic_scope = f.scope_nic;
            ev.plane_scope = f.scope_plane;
            fabric_->schedule_failure(ev);
            if (f.duration > 0) {
                FailureEvent clear = ev;
                clear.kind = FailureEvent::Kind::RandomDropClear;
                clear.time = f.time + f.duration;
                fabric_->schedule_failure(clear);
            }
            break;
        }
        }
    }
}

uint32_t Sim::resolve_ev_target(const FailureSpec& f) const {
    if (f.ev_explicit) return f.ev;
    // k-th active EV of the flow's forward direction, in populate order.
    for (const auto& qp : mrc_) {
        if (qp->flow() != f.flow) continue;
        uint32_t k = 0;
        for (const EvRecord& r : qp->evs().records()) {
            if (r.state != EvState::Active) continue;
            if (k++ == f.active_index) return r.value;
        }
        break;
    }
    throw ConfigError("ev_drop_rate: cannot resolve flow " + std::to_string(f.flow) + " active_index " +
                      std::to_string(f.active_index));
}

void Sim::stream_pump(size_t idx, SimTime now) {
    (void)now;
    Stream& st = streams_[idx];
    if (st.stopped) return;
    while (st.posted - st.completed < st.queue_depth) {
        if (st.total_msgs && st.posted >= st.total_msgs) return;
        Endpoint* ep = st.srcs[st.next_ep];
        st.next_ep = (st.next_ep + 1) % st.srcs.size();
        ++st.posted;
        ep->post_write(st.msg_size, st.use_imm);
    }
}

void Sim::ring_pump(size_t node, SimTime now) {
    RingNode& rn = ring_[node];
    while (rn.posted < rn.steps_total && rn.sends_done >= rn.posted && rn.recvs_done >= rn.posted) {
        ++rn.posted;
        rn.out->post_write(rn.chunk, true);
    }
    if (!collective_done_) {
        for (const RingNode& r : ring_)
            if (r.sends_done < r.steps_total || r.recvs_done < r.steps_total) return;
        collective_done_ = true;
        collective_done_at_ = now;
    }
}

void Sim::a2a_pump(size_t node, SimTime now) {
    A2ANode& an = a2a_[node];
    uint32_t peers = static_cast<uint32_t>(an.out.size());
    while (an.round < sc_.workload.rounds && an.send_done >= an.round * peers &&
           an.recv_done >= an.round * peers) {
        ++an.round;
        for (Endpoint* ep : an.out) ep->post_write(an.per_peer, true);
    }
    if (!collective_done_) {
        uint32_t rounds = sc_.workload.rounds;
        for (const A2ANode& a : a2a_) {
            uint32_t p = static_cast<uint32_t>(a.out.size());
            if (a.send_done < rounds * p || a.recv_done < rounds * p) return;
        }
        collective_done_ = true;
        collective_done_at_ = now;
    }
}

void Sim::run() {
    SimTime t = loop_.now();
    // initial posting
    for (size_t i = 0; i < streams_.size(); ++i) stream_pump(i, t);
    for (size_t i = 0; i < ring_.size(); ++i) ring_pump(i, t);
    for (size_t i = 0; i < a2a_.size(); ++i) a2a_pump(i, t);

    for (SimTime ts = sc_.sample_interval; ts <= sc_.duration; ts += sc_.sample_interval)
        loop_.schedule(ts, this, kSample);
    workload_stop_at_ = sc_.duration;
    loop_.schedule(sc_.duration, this, kStopWorkload);
    loop_.run_until(sc_.duration + sc_.drain);
    if (cm_) cm_->stop();
    summarize(loop_.now());
}

void Sim::on_event(uint64_t tag, SimTime now) {
    switch (tag) {
    case kSample:
        sampler_tick(now);
        break;
    case kStopWorkload:
        for (Stream& st : streams_) st.stopped = true;
        break;
    default:
        break;
    }
}

void Sim::sampler_tick(SimTime now) {
    log_.sample_times.push_back(now);
    double dt = to_sec(sc_.sample_interval);
    for (size_t i = 0; i < streams_.size(); ++i) {
        Stream& st = streams_[i];
        PrevCounters& prev = stream_prev_[i];
        uint64_t rx = 0, retx = 0, loss = 0, trims = 0;
        for (Endpoint* ep : st.dsts) rx += ep->rx_goodput_bytes();
        for (Endpoint* ep : st.srcs) {
            retx += ep->tx_retransmits();
            loss += ep->losses();
        }
        for (Endpoint* ep : st.dsts) trims += ep->trims_seen();
        log_.series_ref(st.label + ".gbps").push_back(static_cast<double>(rx - prev.rx) * 8.0 / dt / 1e9);
        log_.series_ref(st.label + ".retx").push_back(static_cast<double>(retx - prev.retx));
        log_.series_ref(st.label + ".loss").push_back(static_cast<double>(loss - prev.loss));
        log_.series_ref(st.label + ".trims").push_back(static_cast<double>(trims - prev.trims));
        prev = PrevCounters{rx, retx, loss, trims};
        if (sc_.transport == TransportKind::Roce && sc_.roce.dcqcn) {
            double rate = 0;
            for (Endpoint* ep : st.srcs) rate += static_cast<const RoceQp*>(ep)->current_rate_bps();
            log_.series_ref(st.label + ".rate_gbps").push_back(rate / 1e9);
        }
    }
    const FabricCounters& fc = fabric_->counters();
    log_.series_ref("fabric.drops").push_back(static_cast<double>(fc.total_dropped() - prev_drops_));
    prev_drops_ = fc.total_dropped();
    log_.series_ref("fabric.trims").push_back(static_cast<double>(fc.trims - prev_trims_));
    prev_trims_ = fc.trims;
    log_.series_ref("fabric.marks").push_back(static_cast<double>(fc.ecn_marks - prev_marks_));
    prev_marks_ = fc.ecn_marks;
    log_.series_ref("fabric.pauses").push_back(static_cast<double>(fc.pfc_pauses - prev_pauses_));
    prev_pauses_ = fc.pfc_pauses;
    log_.series_ref("fabric.max_queue_bytes").push_back(static_cast<double>(fabric_->max_queue_bytes()));

    // plane-equality watch: 1 when every QP has equal active counts on all
    // usable planes (criterion-3 soak samples this)
    if (!mrc_.empty()) {
        bool equal = true;
        for (const auto& qp : mrc_) {
            uint32_t expect = UINT32_MAX;
            for (uint32_t p = 0; p < qp->evs().planes(); ++p) {
                if (!qp->evs().plane_usable(p)) continue;
                uint32_t c = qp->evs().active_count(p);
                if (expect == UINT32_MAX) expect = c;
                else if (c != expect) equal = false;
            }
        }
        log_.series_ref("mrc.plane_equality").push_back(equal ? 1.0 : 0.0);
    }
}

void Sim::summarize(SimTime now) {
    double dur = to_sec(sc_.duration);
    for (size_t i = 0; i < streams_.size(); ++i) {
        Stream& st = streams_[i];
        uint64_t rx = 0, retx = 0, loss = 0, trims = 0;
        for (Endpoint* ep : st.dsts) rx += ep->rx_goodput_bytes();
        for (Endpoint* ep : st.srcs) {
            retx += ep->tx_retransmits();
            loss += ep->losses();
        }
        for (Endpoint* ep : st.dsts) trims += ep->trims_seen();
        log_.summary_values[st.label + ".mean_gbps"] = static_cast<double>(rx) * 8.0 / dur / 1e9;
        log_.summary_values[st.label + ".delivered_bytes"] = static_cast<double>(rx);
        log_.summary_values[st.label + ".retx"] = static_cast<double>(retx);
        log_.summary_values[st.label + ".loss"] = static_cast<double>(loss);
        log_.summary_values[st.label + ".trims"] = static_cast<double>(trims);
        std::string eps;
        for (Endpoint* ep : st.srcs)
            eps += (eps.empty() ? "" : " ") + std::to_string(ep->local_nic()) + "->" +
                   std::to_string(ep->remote_nic());
        log_.summary_info[st.label + ".endpoints"] = eps;
    }
    if (!ring_.empty() || !a2a_.empty()) {
        log_.summary_values["collective.complete"] = collective_done_ ? 1.0 : 0.0;
        if (collective_done_) {
            double secs = to_sec(collective_done_at_);
            log_.summary_values["collective.time_s"] = secs;
            // ring all-reduce moves 2(N-1)/N x msg bytes per node
            size_t n = collective_nodes_.size();
            double bytes = !ring_.empty() ? 2.0 * static_cast<double>(n - 1) / static_cast<double>(n) *
                                                static_cast<double>(sc_.workload.msg_size)
                                          : static_cast<double>(sc_.workload.msg_size) *
                                                static_cast<double>(n - 1) * sc_.workload.rounds;
            log_.summary_values["collective.algbw_gbps"] = bytes * 8.0 / secs / 1e9;
        }
    }
    const FabricCounters& fc = fabric_->counters();
    log_.summary_values["fabric.emitted"] = static_cast<double>(fc.emitted);
    log_.summary_values["fabric.delivered"] = static_cast<double>(fc.delivered);
    log_.summary_values["fabric.delivered_trimmed"] = static_cast<double>(fc.delivered_trimmed);
    log_.summary_values["fabric.dropped"] = static_cast<double>(fc.total_dropped());
    log_.summary_values["fabric.trims"] = static_cast<double>(fc.trims);
    log_.summary_values["fabric.ecn_marks"] = static_cast<double>(fc.ecn_marks);
    log_.summary_values["fabric.pfc_pauses"] = static_cast<double>(fc.pfc_pauses);
    log_.summary_values["fabric.inflight_end"] = static_cast<double>(fabric_->inflight_packets());
    log_.summary_values["workload.complete"] = workload_complete() ? 1.0 : 0.0;
    if (cm_) {
        log_.summary_values["cm.probes_sent"] = static_cast<double>(cm_->probes_sent());
        log_.summary_values["cm.probes_lost"] = static_cast<double>(cm_->probes_lost());
    }
    std::ostringstream hash;
    hash << std::hex << fabric_->trace_hash();
    log_.summary_info["fabric.trace_hash"] = hash.str();
    log_.duration = now;

    // per-switch counters with any drops/trims (kept small)
    std::ostringstream sw;
    const auto& spec = sc_.topo;
    for (uint32_t p = 0; p < spec.planes; ++p) {
        for (uint32_t i = 0; i < topo_->t0_per_plane(); ++i) {
            const SwitchCounters& c = fabric_->t0_counters(p, i);
            if (c.drops + c.trims + c.blackholed + c.pauses)
                sw << "t0[" << p << "][" << i << "] drops=" << c.drops << " trims=" << c.trims
                   << " blackholed=" << c.blackholed << " pauses=" << c.pauses << "; ";
        }
        for (uint32_t i = 0; i < topo_->t1_per_plane(); ++i) {
            const SwitchCounters& c = fabric_->t1_counters(p, i);
            if (c.drops + c.trims + c.blackholed + c.pauses)
                sw << "t1[" << p << "][" << i << "] drops=" << c.drops << " trims=" << c.trims
                   << " blackholed=" << c.blackholed << " pauses=" << c.pauses << "; ";
        }
    }
    log_.summary_info["switch_counters"] = sw.str();
}

bool Sim::workload_complete() const {
    if (!ring_.empty() || !a2a_.empty()) return collective_done_;
    for (const Stream& st : streams_) {
        if (st.total_msgs && st.completed < st.total_msgs) return false;
        if (st.completed < st.posted) return false;
        for (Endpoint* ep : st.srcs)
            if (!ep->send_idle()) return false;
    }
    return true;
}

bool Sim::conservation_ok(std::string* detail) const {
    const FabricCounters& fc = fabric_->counters();
    uint64_t accounted = fc.delivered + fc.delivered_trimmed + fc.total_dropped() + fabric_->inflight_packets();
    if (fc.emitted != accounted) {
        if (detail) {
            std::ostringstream os;
            os << "global ledger: emitted=" << fc.emitted << " delivered=" << fc.delivered
               << " trimmed=" << fc.delivered_trimmed << " dropped=" << fc.total_dropped()
               << " inflight=" << fabric_->inflight_packets();
            *detail = os.str();
        }
        return false;
    }
    return true;
}

std::vector<std::string> Sim::failed_asserts() const {
    std::vector<std::string> failures;
    for (const ScenarioAssert& a : sc_.asserts) {
        auto it = log_.summary_values.find(a.metric);
        if (it == log_.summary_values.end()) {
            failures.push_back(a.metric + ": no such metric");
            continue;
        }
        double v = it->second;
        bool ok = true;
        if (a.op == ">=") ok = v >= a.value;
        else if (a.op == "<=") ok = v <= a.value;
        else if (a.op == ">") ok = v > a.value;
        else if (a.op == "<") ok = v < a.value;
        else if (a.op == "==") ok = std::abs(v - a.value) <= a.tolerance;
        if (!ok) {
            std::ostringstream os;
            os << a.metric << " = " << v << " violates " << a.op << " " << a.value;
            failures.push_back(os.str());
        }
    }
    return failures;
}

RunOutcome run_scenario(const Scenario& sc, MetricsLog* out_log, const std::string& out_dir) {
    Sim sim(sc);
    sim.run();
    RunOutcome out;
    out.workload_complete = sim.workload_complete();
    std::string detail;
    out.conservation_ok = sim.conservation_ok(&detail);
    if (!out.conservation_ok) sim.log().summary_info["conservation_violation"] = detail;
    out.failed_asserts = sim.failed_asserts();
    out.trace_hash = sim.fabric().trace_hash();
    if (!out_dir.empty()) {
        sim.log().write_all(out_dir);
        std::ofstream raw(out_dir + "/metrics_raw.json", std::ios::binary);
        raw << sim.log().to_raw_json();
    }
    if (out_log) *out_log = std::move(sim.log());
    return out;
}

} // namespace planesim
