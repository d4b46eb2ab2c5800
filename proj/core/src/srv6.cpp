#include "planesim/srv6.hpp"

#include <cstdio>
#include <sstream>

#include "json.hpp"

namespace planesim {

uint16_t make_usid(UsidKind kind, uint32_t plane, uint32_t index) {
    if (plane >= kUsidMaxPlanes)
        throw Srv6Error("uSID overflow: plane " + std::to_string(plane) + " exceeds the 3-bit plane field");
    if (index >= kUsidMaxIndex)
        throw Srv6Error("uSID overflow: index " + std::to_string(index) + " exceeds the 11-bit index field");
    return static_cast<uint16_t>((static_cast<uint16_t>(kind) << 14) | (plane << 11) | index);
}

std::string Srv6Address::to_ipv6() const {
    std::array<uint16_t, 8> g{static_cast<uint16_t>(locator >> 16), static_cast<uint16_t>(locator & 0xffff),
                              usid[0], usid[1], usid[2], usid[3], usid[4], usid[5]};
    // Longest run of zero groups gets the :: compression, per RFC 5952.
    int best_start = -1, best_len = 0;
    for (int i = 0; i < 8;) {
        if (g[i] != 0) { ++i; continue; }
        int j = i;
        while (j < 8 && g[j] == 0) ++j;
        if (j - i > best_len) { best_len = j - i; best_start = i; }
        i = j;
    }
    if (best_len < 2) best_start = -1;
    std::string out;
    char buf[8];
    for (int i = 0; i < 8;) {
        if (i == best_start) {
            out += "::";
            i += best_len;
            continue;
        }
        if (!out.empty() && out.back() != ':') out += ':';
        snprintf(buf, sizeof buf, "%x", g[i]);
        out += buf;
        ++i;
    }
    if (out.empty()) out = "::";
    return out;
}

std::optional<Srv6Address> Srv6Address::parse_ipv6(const std::string& text) {
    std::array<uint16_t, 8> g{};
    std::vector<uint16_t> head, tail;
    size_t dc = text.find("::");
    auto parse_groups = [](const std::string& s, std::vector<uint16_t>& out) -> bool {
        if (s.empty()) return true;
        std::stringstream ss(s);
        std::string tok;
        while (std::getline(ss, tok, ':')) {
            if (tok.empty() || tok.size() > 4) return false;
            uint32_t v = 0;
            for (char c : tok) {
                int d;
                if (c >= '0' && c <= '9') d = c - '0';
                else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
                else if (c >= 'A' && c <= 'F') d = c - 'A' + 10;
                else return false;
                v = v * 16 + static_cast<uint32_t>(d);
            }
            out.push_back(static_cast<uint16_t>(v));
        }
        return true;
    };
    if (dc == std::string::npos) {
        if (!parse_groups(text, head) || head.size() != 8) return std::nullopt;
    } else {
        if (!parse_groups(text.substr(0, dc), head)) return std::nullopt;
        if (!parse_groups(text.substr(dc + 2), tail)) return std::nullopt;
        if (head.size() + tail.size() > 7) return std::nullopt;
    }
    for (size_t i = 0; i < head.size(); ++i) g[i] = head[i];
    for (size_t i = 0; i < tail.size(); ++i) g[8 - tail.size() + i] = tail[i];
    Srv6Address a;
    a.locator = (static_cast<uint32_t>(g[0]) << 16) | g[1];
    for (size_t i = 0; i < 6; ++i) a.usid[i] = g[2 + i];
    return a;
}

Srv6Address Srv6Template::specialize(const PathId& path) const {
    Srv6Address a;
    a.locator = locator;
    size_t at = 0;
    if (!path.local) {
        a.usid[at++] = make_usid(UsidKind::T1, path.plane, path.t0_uplink);
        a.usid[at++] = make_usid(UsidKind::T0, path.plane, dst_group);
    }
    a.usid[at++] = make_usid(UsidKind::Dst, path.plane, dst_downlink);
    a.usid[at] = kUsidEnd;
    return a;
}

ForwardResult forward_step(const SwitchSrv6Config& cfg, const Srv6Address& addr) {
    ForwardResult r;
    if (addr.locator != cfg.locator || addr.usid[0] != cfg.my_usid) {
        r.outcome = ForwardOutcome::NotForMe;
        return r;
    }
    r.next = addr.shifted();
    auto it = cfg.static_fib.find(r.next.first48());
    if (it == cfg.static_fib.end()) {
        r.outcome = ForwardOutcome::FibMiss;
        return r;
    }
    r.egress_port = it->second;
    r.outcome = (r.next.usid[1] == kUsidEnd) ? ForwardOutcome::Deliver : ForwardOutcome::Forward;
    return r;
}

ForwardResult switch_process(const SwitchSrv6Config& cfg, const Srv6Address& addr) {
    if (addr.locator != cfg.locator) {
        ForwardResult r;
        r.outcome = ForwardOutcome::NotForMe;
        return r;
    }
    if (addr.usid[0] == cfg.my_usid) return forward_step(cfg, addr);
    // Transit: plain static lookup of the first 48 bits, no shift.
    ForwardResult r;
    auto it = cfg.static_fib.find(addr.first48());
    if (it == cfg.static_fib.end()) {
        r.outcome = ForwardOutcome::FibMiss;
        return r;
    }
    r.next = addr;
    r.egress_port = it->second;
    r.outcome = (addr.usid[1] == kUsidEnd) ? ForwardOutcome::Deliver : ForwardOutcome::Forward;
    return r;
}

Srv6Allocation::Srv6Allocation(const Topology& topo, uint32_t locator) : topo_(topo), locator_(locator) {
    const auto& spec = topo.spec();
    if (spec.planes > kUsidMaxPlanes)
        throw Srv6Error("uSID overflow: " + std::to_string(spec.planes) + " planes exceed the 3-bit plane field");

    auto key = [&](uint16_t usid) { return (static_cast<uint64_t>(locator_) << 16) | usid; };

    // T0 ports: 0..down-1 downlinks, down..down+up-1 uplinks. T1 port i is the
    // downlink to T0 i. Written once; never touched afterwards.
    t0_configs_.resize(static_cast<size_t>(spec.planes) * topo.t0_per_plane());
    for (uint32_t p = 0; p < spec.planes; ++p) {
        for (uint32_t i = 0; i < topo.t0_per_plane(); ++i) {
            SwitchSrv6Config& c = t0_configs_[topo.t0_flat_index(p, i)];
            c.locator = locator_;
            c.my_usid = t0_usid(p, i);
            for (uint32_t u = 0; u < spec.t0_uplinks; ++u)
                c.static_fib[key(t1_usid(p, u))] = spec.t0_downlinks + u;
            for (uint32_t d = 0; d < spec.t0_downlinks; ++d)
                c.static_fib[key(dst_usid(p, d))] = d;
        }
    }
    t1_configs_.resize(static_cast<size_t>(spec.planes) * topo.t1_per_plane());
    for (uint32_t p = 0; p < spec.planes; ++p) {
        for (uint32_t u = 0; u < topo.t1_per_plane(); ++u) {
            SwitchSrv6Config& c = t1_configs_[topo.t1_flat_index(p, u)];
            c.locator = locator_;
            c.my_usid = t1_usid(p, u);
            for (uint32_t i = 0; i < topo.t0_per_plane(); ++i)
                c.static_fib[key(t0_usid(p, i))] = i;
        }
    }
}

const SwitchSrv6Config& Srv6Allocation::t0_config(uint32_t plane, uint32_t index) const {
    return t0_configs_[topo_.t0_flat_index(plane, index)];
}

const SwitchSrv6Config& Srv6Allocation::t1_config(uint32_t plane, uint32_t index) const {
    return t1_configs_[topo_.t1_flat_index(plane, index)];
}

Srv6Template Srv6Allocation::build_template(uint32_t dst_nic) const {
    if (dst_nic >= topo_.nic_count())
        throw Srv6Error("build_template: unknown destination NIC " + std::to_string(dst_nic));
    Srv6Template t;
    t.locator = locator_;
    t.dst_group = topo_.group_of(dst_nic);
    t.dst_downlink = topo_.downlink_of(dst_nic);
    return t;
}

std::string Srv6Allocation::fib_json() const {
    nlohmann::ordered_json j;
    char keybuf[16];
    auto dump = [&](const SwitchSrv6Config& c, const std::string& name) {
        nlohmann::ordered_json sw;
        sw["locator"] = c.locator;
        sw["usid"] = c.my_usid;
        nlohmann::ordered_json fib;
        std::vector<uint64_t> keys;
        keys.reserve(c.static_fib.size());
        for (const auto& [k, v] : c.static_fib) keys.push_back(k);
        std::sort(keys.begin(), keys.end());
        for (uint64_t k : keys) {
            snprintf(keybuf, sizeof keybuf, "%012llx", static_cast<unsigned long long>(k));
            fib[keybuf] = c.static_fib.at(k);
        }
        sw["fib"] = std::move(fib);
        j[name] = std::move(sw);
    };
    const auto& spec = topo_.spec();
    for (uint32_t p = 0; p < spec.planes; ++p)
        for (uint32_t i = 0; i < topo_.t0_per_plane(); ++i)
            dump(t0_config(p, i), "t0_p" + std::to_string(p) + "_" + std::to_string(i));
    for (uint32_t p = 0; p < spec.planes; ++p)
        for (uint32_t u = 0; u < topo_.t1_per_plane(); ++u)
            dump(t1_config(p, u), "t1_p" + std::to_string(p) + "_" + std::to_string(u));
    return j.dump(2);
}

Srv6Allocation allocate_usids(const Topology& topo, uint32_t locator) { return Srv6Allocation(topo, locator); }

RouteTrace trace_route(const Topology& topo, const Srv6Allocation& alloc, uint32_t src_nic,
                       const Srv6Address& addr) {
    RouteTrace tr;
    uint32_t plane = usid_plane(addr.usid[0]);
    bool at_t1 = false;
    uint32_t sw_index = topo.group_of(src_nic);
    Srv6Address cur = addr;
    for (int hop = 0; hop < 8; ++hop) {
        const SwitchSrv6Config& cfg = at_t1 ? alloc.t1_config(plane, sw_index) : alloc.t0_config(plane, sw_index);
        ForwardResult res = switch_process(cfg, cur);
        tr.final_outcome = res.outcome;
        if (res.outcome == ForwardOutcome::NotForMe || res.outcome == ForwardOutcome::FibMiss) return tr;
        tr.hops.push_back(TraceHop{at_t1, plane, sw_index, res.egress_port});
        if (res.outcome == ForwardOutcome::Deliver) {
            if (at_t1) return tr; // a T1 cannot deliver; malformed address
            tr.delivered = true;
            tr.delivered_nic = sw_index * topo.spec().t0_downlinks + res.egress_port;
            return tr;
        }
        cur = res.next;
        if (!at_t1) {
            // Leaving a T0 on an uplink lands on T1[uplink]; its downlink back
            // into the plane is indexed by our own T0 number.
            uint32_t uplink = res.egress_port - topo.spec().t0_downlinks;
            at_t1 = true;
            sw_index = uplink;
        } else {
            uint32_t t0 = res.egress_port;
            at_t1 = false;
            sw_index = t0;
        }
    }
    return tr;
}

} // namespace planesim
