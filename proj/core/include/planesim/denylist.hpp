#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "planesim/topology.hpp"

namespace planesim {

// Path matchers excluded from EV-set generation at QP start. A plane entry
// scoped to a NIC excludes that plane for QPs touching the NIC; a (t0, uplink)
// entry excludes paths crossing that T0-T1 link.
struct DenylistEntry {
    std::optional<uint32_t> nic;
    std::optional<uint32_t> plane;
    std::optional<uint32_t> t0;
    std::optional<uint32_t> uplink;
};

class Denylist {
  public:
    Denylist() = default;
    explicit Denylist(std::vector<DenylistEntry> entries) : entries_(std::move(entries)) {}

    void add(DenylistEntry e) { entries_.push_back(e); }
    bool empty() const { return entries_.empty(); }
    const std::vector<DenylistEntry>& entries() const { return entries_; }

    // A cross-T1 path src->T1[u]->T0[dst_group] crosses the T0-T1 links
    // (src_group, u) and (dst_group, u) on its plane.
    bool denies(uint32_t src_nic, uint32_t dst_nic, uint32_t src_group, uint32_t dst_group,
                const PathId& path) const {
        for (const auto& e : entries_) {
            if (e.nic && *e.nic != src_nic && *e.nic != dst_nic) continue;
            if (e.plane && *e.plane != path.plane) continue;
            if (e.t0 || e.uplink) {
                if (path.local) continue;
                if (e.uplink && *e.uplink != path.t0_uplink) continue;
                if (e.t0 && *e.t0 != src_group && *e.t0 != dst_group) continue;
            }
            return true;
        }
        return false;
    }

  private:
    std::vector<DenylistEntry> entries_;
};

} // namespace planesim
