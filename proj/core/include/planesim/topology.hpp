#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "planesim/sim_time.hpp"

namespace planesim {

class TopologyError : public std::runtime_error {
  public:
    explicit TopologyError(const std::string& msg) : std::runtime_error(msg) {}
};

// Sizing parameters for a two-tier multi-plane Clos fabric. One plane is a
// complete T0<->T1 bipartite graph; a NIC has one port per plane, attached to
// the same-index T0 of each plane (its "T0 group").
struct TopologySpec {
    uint32_t switch_radix = 8;
    uint32_t planes = 1;
    uint32_t nic_ports_per_plane = 1;
    uint64_t link_speed_bps = 100'000'000'000ull;
    uint32_t t0_downlinks = 4;
    uint32_t t0_uplinks = 4;
    SimTime propagation_delay = kMicrosecond;
    uint32_t tiers = 2;

    void validate() const; // throws TopologyError naming the violated equation

    bool full_bisection() const { return t0_downlinks == t0_uplinks; }

    // Every T1 uses its full radix as downlinks, one per T0 in the plane.
    uint64_t t0_per_plane() const { return switch_radix; }
    uint64_t t1_per_plane() const { return t0_uplinks; }
    uint64_t t0_groups() const { return t0_per_plane(); }
    uint64_t nic_count() const { return static_cast<uint64_t>(t0_downlinks) * t0_per_plane() / nic_ports_per_plane; }
    uint64_t nic_aggregate_bps() const { return static_cast<uint64_t>(planes) * nic_ports_per_plane * link_speed_bps; }
};

enum class LinkKind : uint8_t { NicT0, T0T1 };

using LinkId = uint32_t;
constexpr LinkId kNoLink = UINT32_MAX;

struct Link {
    LinkId id = kNoLink;
    LinkKind kind = LinkKind::NicT0;
    uint32_t plane = 0;
    // NicT0: a = NIC id, b = T0 index (== group), b_port = downlink index.
    // T0T1:  a = T0 index, b = T1 index (== a's uplink number), a_port = uplink, b_port = a (T1 downlink).
    uint32_t a_index = 0;
    uint32_t b_index = 0;
    uint32_t a_port = 0;
    uint32_t b_port = 0;
    uint64_t speed_bps = 0;
    bool up = true; // mutable state, flipped only by the failure injector
};

enum class PairClass : uint8_t { T0Local, CrossT1 };

// Identifies one forwarding path to a destination. For cross-T1 paths the
// pair (plane, t0_uplink) picks the T1; dst_downlink picks the egress port at
// the destination's T0. T0-local paths never reach a T1.
struct PathId {
    uint32_t plane = 0;
    uint32_t t0_uplink = 0;
    uint32_t dst_downlink = 0;
    bool local = false;

    bool operator==(const PathId&) const = default;
};

class Topology {
  public:
    explicit Topology(const TopologySpec& spec);

    const TopologySpec& spec() const { return spec_; }

    uint32_t nic_count() const { return nic_count_; }
    uint32_t t0_per_plane() const { return t0_per_plane_; }
    uint32_t t1_per_plane() const { return t1_per_plane_; }
    uint32_t planes() const { return spec_.planes; }

    uint32_t group_of(uint32_t nic) const;
    uint32_t downlink_of(uint32_t nic) const { return nic % spec_.t0_downlinks; }

    PairClass classify_pair(uint32_t src_nic, uint32_t dst_nic) const;
    std::vector<PathId> enumerate_paths(uint32_t src_nic, uint32_t dst_nic) const;

    // Links a path crosses, in forward order (NIC->T0 [, T0->T1, T1->T0], T0->NIC).
    std::vector<LinkId> path_links(uint32_t src_nic, uint32_t dst_nic, const PathId& path) const;

    LinkId nic_t0_link(uint32_t nic, uint32_t plane) const;
    LinkId t0_t1_link(uint32_t plane, uint32_t t0_index, uint32_t uplink) const;

    const Link& link(LinkId id) const { return links_[id]; }
    Link& mutable_link(LinkId id) { return links_[id]; }
    const std::vector<Link>& links() const { return links_; }

    uint32_t t0_flat_index(uint32_t plane, uint32_t idx) const { return plane * t0_per_plane_ + idx; }
    uint32_t t1_flat_index(uint32_t plane, uint32_t idx) const { return plane * t1_per_plane_ + idx; }

  private:
    void check_nic(uint32_t nic, const char* who) const;

    TopologySpec spec_;
    uint32_t nic_count_ = 0;
    uint32_t t0_per_plane_ = 0;
    uint32_t t1_per_plane_ = 0;
    std::vector<Link> links_; // NIC-T0 links first (nic-major, plane-minor), then T0-T1
    uint32_t t0t1_base_ = 0;
};

// Cost/capacity arithmetic for a spec, compared against the equal-NIC-count,
// equal-bandwidth three-tier single-plane design built from the same switch
// silicon. "Optics" are counted two ways (the unit is ambiguous in practice):
// raw fiber ends, and transceiver ends normalized to NIC aggregate speed.
struct CapacityReport {
    uint64_t nic_count = 0;
    uint64_t switch_count = 0;
    uint64_t link_count = 0;
    uint64_t fiber_end_count = 0;
    double optics_count = 0; // NIC-speed-equivalent transceiver ends

    uint32_t baseline_port_count = 0; // ports/switch of the 3-tier design
    uint64_t baseline_switch_count = 0;
    uint64_t baseline_link_count = 0;
    uint64_t baseline_fiber_end_count = 0;
    double baseline_optics_count = 0;

    double ratio_vs_3tier_switches = 0;
    double ratio_vs_3tier_optics = 0;

    double per_link_loss_fraction = 0;     // T0-T1 link loss, fraction of a plane's node capacity
    double nic_link_loss_fraction = 0;     // NIC-T0 link loss, fraction of node capacity
    bool full_bisection = true;            // asymmetric specs are permitted but flagged

    std::string to_json() const;
};

CapacityReport capacity_report(const TopologySpec& spec);

} // namespace planesim
