#include "planesim/clustermapper.hpp"

#include <sstream>

#include "json.hpp"

namespace planesim {

Clustermapper::Clustermapper(Fabric& fabric, const ClustermapperConfig& cfg) : fabric_(fabric), cfg_(cfg) {}

void Clustermapper::start() {
    running_ = true;
    for (uint32_t n = 0; n < fabric_.topology().nic_count(); ++n) fabric_.register_probe_sink(n, this);
    fabric_.loop().schedule(fabric_.loop().now() + cfg_.period, this, 1);
}

void Clustermapper::on_event(uint64_t, SimTime now) {
    if (!running_) return;
    tick(now);
    fabric_.loop().schedule(now + cfg_.period, this, 1);
}

void Clustermapper::tick(SimTime now) {
    // Unanswered probes from earlier periods are losses.
    for (auto it = pending_.begin(); it != pending_.end();) {
        if (now - it->second.sent >= cfg_.period) {
            record(it->second.key, now, false, 0);
            ++probes_lost_;
            it = pending_.erase(it);
        } else {
            ++it;
        }
    }
    const Topology& topo = fabric_.topology();
    const TopologySpec& spec = topo.spec();
    for (uint32_t nic = 0; nic < topo.nic_count(); ++nic) {
        uint32_t within_group = nic % spec.t0_downlinks;
        for (uint32_t p = 0; p < spec.planes; ++p) {
            // A down port is itself a finding; no probes can leave on it.
            if (!fabric_.nic_port_up(nic, p)) {
                record(key_of(nic, p, -1), now, false, 0);
                continue;
            }
            send_probe(nic, p, -1, now);
            // Round-robin share of the T1s, so agents of one T0 group jointly
            // cover every T0-T1 link each period.
            for (uint32_t u = within_group; u < spec.t0_uplinks; u += spec.t0_downlinks)
                send_probe(nic, p, static_cast<int32_t>(u), now);
        }
    }
}

void Clustermapper::send_probe(uint32_t nic, uint32_t plane, int32_t uplink, SimTime now) {
    const Topology& topo = fabric_.topology();
    Srv6Template tmpl = fabric_.allocation().build_template(nic); // out-and-back to self
    PathId path;
    path.plane = plane;
    path.dst_downlink = topo.downlink_of(nic);
    if (uplink < 0) {
        path.local = true;
    } else {
        path.local = false;
        path.t0_uplink = static_cast<uint32_t>(uplink);
    }
    Packet pkt;
    pkt.kind = PktKind::CmProbe;
    pkt.flow = kCmFlow;
    pkt.inner_src = nic;
    pkt.inner_dst = nic;
    pkt.outer = tmpl.specialize(path);
    pkt.probe_id = next_probe_id_++;
    pkt.wire_bytes = kHeaderBytes;
    pending_[pkt.probe_id] = PendingProbe{key_of(nic, plane, uplink), now};
    ++probes_sent_;
    fabric_.nic_send(nic, plane, std::move(pkt));
}

void Clustermapper::on_packet(Packet&& pkt, SimTime now) {
    auto it = pending_.find(pkt.probe_id);
    if (it == pending_.end()) return;
    record(it->second.key, now, true, now - it->second.sent);
    pending_.erase(it);
}

void Clustermapper::record(uint64_t key, SimTime now, bool ok, SimTime rtt) {
    TargetHealth& h = health_[key];
    h.window.emplace_back(now, ok);
    ++h.sent;
    if (ok) {
        h.consecutive_losses = 0;
        h.last_rtt_us = to_us(rtt);
    } else {
        ++h.lost;
        ++h.consecutive_losses;
    }
    while (!h.window.empty() && now - h.window.front().first > cfg_.window) h.window.pop_front();
}

const Clustermapper::TargetHealth* Clustermapper::target(uint32_t nic, uint32_t plane, int32_t uplink) const {
    auto it = health_.find(key_of(nic, plane, uplink));
    return it == health_.end() ? nullptr : &it->second;
}

double Clustermapper::loss_fraction(uint32_t nic, uint32_t plane, int32_t uplink, SimTime now) const {
    const TargetHealth* h = target(nic, plane, uplink);
    if (!h || h->window.empty()) return 0;
    uint64_t lost = 0, total = 0;
    for (const auto& [t, ok] : h->window) {
        if (now - t > cfg_.window) continue;
        ++total;
        if (!ok) ++lost;
    }
    return total ? static_cast<double>(lost) / static_cast<double>(total) : 0;
}

LinkHealth Clustermapper::health(uint32_t nic, uint32_t plane, int32_t uplink, SimTime now) const {
    const TargetHealth* h = target(nic, plane, uplink);
    if (!h || h->window.empty()) return LinkHealth::NoData;
    if (h->consecutive_losses >= cfg_.down_consecutive) return LinkHealth::Down;
    if (loss_fraction(nic, plane, uplink, now) > cfg_.lossy_threshold) return LinkHealth::Lossy;
    return LinkHealth::Healthy;
}

std::vector<Fault> Clustermapper::localize(SimTime now) const {
    std::vector<Fault> faults;
    const Topology& topo = fabric_.topology();
    const TopologySpec& spec = topo.spec();
    uint32_t groups = static_cast<uint32_t>(spec.t0_groups());

    // T0-level differencing: every agent under the T0 failing implicates the
    // switch; a single agent failing implicates its NIC-T0 link.
    std::vector<std::vector<bool>> t0_shadowed(spec.planes, std::vector<bool>(groups, false));
    std::vector<std::vector<bool>> agent_shadowed(spec.planes, std::vector<bool>(topo.nic_count(), false));
    for (uint32_t p = 0; p < spec.planes; ++p) {
        for (uint32_t g = 0; g < groups; ++g) {
            uint32_t down = 0, observed = 0;
            for (uint32_t d = 0; d < spec.t0_downlinks; ++d) {
                uint32_t nic = g * spec.t0_downlinks + d;
                LinkHealth h = health(nic, p, -1, now);
                if (h == LinkHealth::NoData) continue;
                ++observed;
                if (h == LinkHealth::Down) ++down;
            }
            if (observed == 0) continue;
            if (down == observed && down >= 2) {
                faults.push_back(Fault{Fault::Kind::T0Switch, p, 0, g, 0});
                t0_shadowed[p][g] = true;
                for (uint32_t d = 0; d < spec.t0_downlinks; ++d)
                    agent_shadowed[p][g * spec.t0_downlinks + d] = true;
            } else if (down > 0) {
                for (uint32_t d = 0; d < spec.t0_downlinks; ++d) {
                    uint32_t nic = g * spec.t0_downlinks + d;
                    if (health(nic, p, -1, now) == LinkHealth::Down) {
                        faults.push_back(Fault{Fault::Kind::NicT0Link, p, nic, g, 0});
                        agent_shadowed[p][nic] = true;
                    }
                }
            }
        }
    }
    // T1-level differencing: T0 probes clean but T1 probes failing means the
    // T0-T1 link; every group failing through one T1 means the switch.
    for (uint32_t p = 0; p < spec.planes; ++p) {
        for (uint32_t u = 0; u < spec.t0_uplinks; ++u) {
            std::vector<uint32_t> failing_groups;
            uint32_t observed = 0;
            for (uint32_t g = 0; g < groups; ++g) {
                if (t0_shadowed[p][g]) continue;
                bool any = false, fail = false;
                for (uint32_t d = 0; d < spec.t0_downlinks; ++d) {
                    uint32_t nic = g * spec.t0_downlinks + d;
                    if (agent_shadowed[p][nic]) continue;
                    LinkHealth h = health(nic, p, static_cast<int32_t>(u), now);
                    if (h == LinkHealth::NoData) continue;
                    any = true;
                    if (h == LinkHealth::Down) fail = true;
                }
                if (!any) continue;
                ++observed;
                if (fail) failing_groups.push_back(g);
            }
            if (observed == 0) continue;
            if (failing_groups.size() == observed && observed >= 2) {
                faults.push_back(Fault{Fault::Kind::T1Switch, p, 0, 0, u});
            } else {
                for (uint32_t g : failing_groups)
                    faults.push_back(Fault{Fault::Kind::T0T1Link, p, 0, g, u});
            }
        }
    }
    return faults;
}

std::vector<std::string> Clustermapper::coverage_gaps(SimTime now) const {
    std::vector<std::string> gaps;
    const Topology& topo = fabric_.topology();
    const TopologySpec& spec = topo.spec();
    for (uint32_t nic = 0; nic < topo.nic_count(); ++nic) {
        for (uint32_t p = 0; p < spec.planes; ++p) {
            if (health(nic, p, -1, now) == LinkHealth::NoData)
                gaps.push_back("no data: nic " + std::to_string(nic) + " plane " + std::to_string(p));
        }
    }
    return gaps;
}

Denylist Clustermapper::derive_denylist(SimTime now) const {
    Denylist dl;
    const Topology& topo = fabric_.topology();
    const TopologySpec& spec = topo.spec();
    for (uint32_t nic = 0; nic < topo.nic_count(); ++nic) {
        for (uint32_t p = 0; p < spec.planes; ++p) {
            if (health(nic, p, -1, now) == LinkHealth::Lossy) {
                DenylistEntry e;
                e.nic = nic;
                e.plane = p;
                dl.add(e);
            }
        }
    }
    if (cfg_.denylist_down_t0t1) {
        uint32_t groups = static_cast<uint32_t>(spec.t0_groups());
        for (const Fault& f : localize(now)) {
            if (f.kind != Fault::Kind::T0T1Link) continue;
            (void)groups;
            DenylistEntry e;
            e.plane = f.plane;
            e.t0 = f.t0;
            e.uplink = f.uplink;
            dl.add(e);
        }
    }
    return dl;
}

std::string Clustermapper::health_json(SimTime now) const {
    nlohmann::ordered_json j;
    const Topology& topo = fabric_.topology();
    const TopologySpec& spec = topo.spec();
    auto state_name = [](LinkHealth h) {
        switch (h) {
        case LinkHealth::Healthy: return "healthy";
        case LinkHealth::Lossy: return "lossy";
        case LinkHealth::Down: return "down";
        default: return "no_data";
        }
    };
    nlohmann::ordered_json nic_links = nlohmann::ordered_json::object();
    for (uint32_t nic = 0; nic < topo.nic_count(); ++nic) {
        for (uint32_t p = 0; p < spec.planes; ++p) {
            std::ostringstream key;
            key << "nic" << nic << "_p" << p;
            nic_links[key.str()] = {
                {"probe_state", state_name(health(nic, p, -1, now))},
                {"loss_fraction", loss_fraction(nic, p, -1, now)},
                {"link_admin_up", topo.link(topo.nic_t0_link(nic, p)).up},
            };
        }
    }
    j["nic_t0"] = std::move(nic_links);
    nlohmann::ordered_json t1_links = nlohmann::ordered_json::object();
    uint32_t groups = static_cast<uint32_t>(spec.t0_groups());
    for (uint32_t p = 0; p < spec.planes; ++p) {
        for (uint32_t g = 0; g < groups; ++g) {
            for (uint32_t u = 0; u < spec.t0_uplinks; ++u) {
                uint32_t agent = g * spec.t0_downlinks + (u % spec.t0_downlinks);
                std::ostringstream key;
                key << "t0_" << g << "_u" << u << "_p" << p;
                t1_links[key.str()] = {
                    {"probe_state", state_name(health(agent, p, static_cast<int32_t>(u), now))},
                    {"loss_fraction", loss_fraction(agent, p, static_cast<int32_t>(u), now)},
                    {"link_admin_up", topo.link(topo.t0_t1_link(p, g, u)).up},
                };
            }
        }
    }
    j["t0_t1"] = std::move(t1_links);
    return j.dump(2);
}

} // namespace planesim
