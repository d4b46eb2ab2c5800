#include "planesim/topology.hpp"

#include <sstream>

#include "json.hpp"

namespace planesim {

void TopologySpec::validate() const {
    auto fail = [](const std::string& eq) { throw TopologyError("topology spec violates: " + eq); };
    if (planes < 1) fail("planes >= 1 (planes=" + std::to_string(planes) + ")");
    if (tiers != 2) fail("tiers == 2 (tiers=" + std::to_string(tiers) + "; only two-tier fabrics are constructed)");
    if (nic_ports_per_plane != 1)
        fail("nic_ports_per_plane == 1 (got " + std::to_string(nic_ports_per_plane) + ")");
    if (t0_downlinks == 0 || t0_uplinks == 0) fail("t0_downlinks > 0 and t0_uplinks > 0");
    if (t0_downlinks + t0_uplinks != switch_radix) {
        std::ostringstream os;
        os << "t0_downlinks + t0_uplinks == switch_radix (" << t0_downlinks << " + " << t0_uplinks
           << " != " << switch_radix << ")";
        fail(os.str());
    }
    if (link_speed_bps == 0) fail("link_speed_bps > 0");
}

Topology::Topology(const TopologySpec& spec) : spec_(spec) {
    spec_.validate();
    t0_per_plane_ = static_cast<uint32_t>(spec_.t0_per_plane());
    t1_per_plane_ = static_cast<uint32_t>(spec_.t1_per_plane());
    nic_count_ = static_cast<uint32_t>(spec_.nic_count());

    const uint32_t P = spec_.planes;
    links_.reserve(static_cast<size_t>(nic_count_) * P +
                   static_cast<size_t>(P) * t0_per_plane_ * spec_.t0_uplinks);

    // NIC-T0 links: nic-major, plane-minor.
    for (uint32_t n = 0; n < nic_count_; ++n) {
        uint32_t group = n / spec_.t0_downlinks;
        uint32_t down = n % spec_.t0_downlinks;
        for (uint32_t p = 0; p < P; ++p) {
            Link l;
            l.id = static_cast<LinkId>(links_.size());
            l.kind = LinkKind::NicT0;
            l.plane = p;
            l.a_index = n;
            l.a_port = p; // NIC port number == plane
            l.b_index = group;
            l.b_port = down;
            l.speed_bps = spec_.link_speed_bps;
            links_.push_back(l);
        }
    }
    t0t1_base_ = static_cast<uint32_t>(links_.size());

    // T0-T1: full bipartite mesh per plane; T0 i's uplink u lands on T1 u's downlink i.
    for (uint32_t p = 0; p < P; ++p) {
        for (uint32_t i = 0; i < t0_per_plane_; ++i) {
            for (uint32_t u = 0; u < spec_.t0_uplinks; ++u) {
                Link l;
                l.id = static_cast<LinkId>(links_.size());
                l.kind = LinkKind::T0T1;
                l.plane = p;
                l.a_index = i;
                l.a_port = u;
                l.b_index = u;
                l.b_port = i;
                l.speed_bps = spec_.link_speed_bps;
                links_.push_back(l);
            }
        }
    }
}

void Topology::check_nic(uint32_t nic, const char* who) const {
    if (nic >= nic_count_)
        throw TopologyError(std::string(who) + ": unknown NIC id " + std::to_string(nic) + " (nic_count=" +
                            std::to_string(nic_count_) + ")");
}

uint32_t Topology::group_of(uint32_t nic) const {
    check_nic(nic, "group_of");
    return nic / spec_.t0_downlinks;
}

PairClass Topology::classify_pair(uint32_t src_nic, uint32_t dst_nic) const {
    check_nic(src_nic, "classify_pair");
    check_nic(dst_nic, "classify_pair");
    if (src_nic == dst_nic)
        throw TopologyError("classify_pair: self-pair rejected (nic " + std::to_string(src_nic) + ")");
    return group_of(src_nic) == group_of(dst_nic) ? PairClass::T0Local : PairClass::CrossT1;
}

std::vector<PathId> Topology::enumerate_paths(uint32_t src_nic, uint32_t dst_nic) const {
    PairClass cls = classify_pair(src_nic, dst_nic);
    uint32_t dst_down = downlink_of(dst_nic);
    std::vector<PathId> out;
    if (cls == PairClass::T0Local) {
        out.reserve(spec_.planes);
        for (uint32_t p = 0; p < spec_.planes; ++p)
            out.push_back(PathId{p, 0, dst_down, true});
    } else {
        out.reserve(static_cast<size_t>(spec_.planes) * spec_.t0_uplinks);
        for (uint32_t p = 0; p < spec_.planes; ++p)
            for (uint32_t u = 0; u < spec_.t0_uplinks; ++u)
                out.push_back(PathId{p, u, dst_down, false});
    }
    return out;
}

std::vector<LinkId> Topology::path_links(uint32_t src_nic, uint32_t dst_nic, const PathId& path) const {
    check_nic(src_nic, "path_links");
    check_nic(dst_nic, "path_links");
    uint32_t sg = group_of(src_nic), dg = group_of(dst_nic);
    std::vector<LinkId> out;
    out.push_back(nic_t0_link(src_nic, path.plane));
    if (!path.local) {
        out.push_back(t0_t1_link(path.plane, sg, path.t0_uplink));
        out.push_back(t0_t1_link(path.plane, dg, path.t0_uplink));
    }
    out.push_back(nic_t0_link(dst_nic, path.plane));
    return out;
}

LinkId Topology::nic_t0_link(uint32_t nic, uint32_t plane) const {
    check_nic(nic, "nic_t0_link");
    if (plane >= spec_.planes) throw TopologyError("nic_t0_link: plane out of range");
    return nic * spec_.planes + plane;
}

LinkId Topology::t0_t1_link(uint32_t plane, uint32_t t0_index, uint32_t uplink) const {
    if (plane >= spec_.planes || t0_index >= t0_per_plane_ || uplink >= spec_.t0_uplinks)
        throw TopologyError("t0_t1_link: index out of range");
    return t0t1_base_ + (plane * t0_per_plane_ + t0_index) * spec_.t0_uplinks + uplink;
}

CapacityReport capacity_report(const TopologySpec& spec) {
    spec.validate();
    CapacityReport r;
    const uint64_t N = spec.nic_count();
    const uint64_t P = spec.planes;
    const uint64_t agg = spec.nic_aggregate_bps();

    r.nic_count = N;
    r.switch_count = P * (spec.t0_per_plane() + spec.t1_per_plane());
    uint64_t nic_links = N * P * spec.nic_ports_per_plane;
    uint64_t fabric_links = P * spec.t0_per_plane() * spec.t0_uplinks;
    r.link_count = nic_links + fabric_links;
    r.fiber_end_count = 2 * r.link_count;
    r.optics_count = 2.0 * static_cast<double>(r.link_count) * static_cast<double>(spec.link_speed_bps) /
                     static_cast<double>(agg);

    // Same silicon at NIC aggregate port speed: radix*link_speed bits split
    // into agg-sized ports. Full-bisection 3-tier: T0s and T1s each N/(k/2),
    // T2s N/k, and every NIC crosses three link stages at full speed.
    uint64_t chip_bits = static_cast<uint64_t>(spec.switch_radix) * spec.link_speed_bps;
    uint32_t k = static_cast<uint32_t>(chip_bits / agg);
    r.baseline_port_count = k;
    if (k >= 2) {
        r.baseline_switch_count =
            static_cast<uint64_t>(2.0 * N / (k / 2.0) + static_cast<double>(N) / k + 0.5);
        r.baseline_link_count = 3 * N;
        r.baseline_fiber_end_count = 6 * N;
        r.baseline_optics_count = 6.0 * static_cast<double>(N);
        r.ratio_vs_3tier_switches =
            static_cast<double>(r.switch_count) / static_cast<double>(r.baseline_switch_count);
        r.ratio_vs_3tier_optics = r.optics_count / r.baseline_optics_count;
    }

    r.per_link_loss_fraction = 1.0 / static_cast<double>(spec.t0_uplinks);
    r.nic_link_loss_fraction = 1.0 / static_cast<double>(P * spec.nic_ports_per_plane);
    r.full_bisection = spec.full_bisection();
    return r;
}

std::string CapacityReport::to_json() const {
    nlohmann::ordered_json j;
    j["nic_count"] = nic_count;
    j["switch_count"] = switch_count;
    j["link_count"] = link_count;
    j["fiber_end_count"] = fiber_end_count;
    j["optics_count"] = optics_count;
    j["baseline_3tier"] = {
        {"port_count", baseline_port_count},
        {"switch_count", baseline_switch_count},
        {"link_count", baseline_link_count},
        {"fiber_end_count", baseline_fiber_end_count},
        {"optics_count", baseline_optics_count},
    };
    j["ratio_vs_3tier_switches"] = ratio_vs_3tier_switches;
    j["ratio_vs_3tier_optics"] = ratio_vs_3tier_optics;
    j["per_link_loss_fraction"] = per_link_loss_fraction;
    j["nic_link_loss_fraction"] = nic_link_loss_fraction;
    j["full_bisection"] = full_bisection;
    return j.dump(2);
}

} // namespace planesim
