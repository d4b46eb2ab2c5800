#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "planesim/topology.hpp"

namespace planesim {

class Srv6Error : public std::runtime_error {
  public:
    explicit Srv6Error(const std::string& msg) : std::runtime_error(msg) {}
};

// 128-bit uN address: 32-bit locator in bits 127..96, then up to six 16-bit
// uSIDs, usid[0] in bits 95..80. uSID 0x0000 is the END marker.
struct Srv6Address {
    uint32_t locator = 0;
    std::array<uint16_t, 6> usid{};

    uint64_t first48() const { return (static_cast<uint64_t>(locator) << 16) | usid[0]; }

    Srv6Address shifted() const {
        Srv6Address n;
        n.locator = locator;
        for (size_t i = 0; i + 1 < usid.size(); ++i) n.usid[i] = usid[i + 1];
        n.usid.back() = 0;
        return n;
    }

    std::string to_ipv6() const;
    static std::optional<Srv6Address> parse_ipv6(const std::string& text);

    bool operator==(const Srv6Address&) const = default;
    auto operator<=>(const Srv6Address&) const = default;
};

constexpr uint16_t kUsidEnd = 0x0000;

// Within a uSID: bits 15..14 tag the tier, 13..11 carry the plane (up to 8
// planes), 10..0 the switch or port index.
enum class UsidKind : uint8_t { End = 0, T0 = 1, T1 = 2, Dst = 3 };

constexpr uint32_t kUsidMaxPlanes = 8;
constexpr uint32_t kUsidMaxIndex = 2048;

uint16_t make_usid(UsidKind kind, uint32_t plane, uint32_t index);
inline UsidKind usid_kind(uint16_t u) { return static_cast<UsidKind>(u >> 14); }
inline uint32_t usid_plane(uint16_t u) { return (u >> 11) & 0x7; }
inline uint32_t usid_index(uint16_t u) { return u & 0x7ff; }

// Generic per-destination address template: the dst uSID is pinned to the
// destination's last-hop downlink; plane and T0-uplink are filled per packet.
struct Srv6Template {
    uint32_t locator = 0;
    uint32_t dst_group = 0;
    uint32_t dst_downlink = 0;

    Srv6Address specialize(const PathId& path) const;
};

struct SwitchSrv6Config {
    uint32_t locator = 0;
    uint16_t my_usid = 0;
    std::unordered_map<uint64_t, uint32_t> static_fib; // 48-bit key -> egress port

    uint64_t my_key() const { return (static_cast<uint64_t>(locator) << 16) | my_usid; }
};

enum class ForwardOutcome : uint8_t {
    Forward,  // egress toward the next named switch
    Deliver,  // egress is the last-hop downlink; hand to the NIC
    NotForMe, // locator/uSID mismatch; drop with counter
    FibMiss,  // no route for the next uSID; models a mis-programmed switch
};

struct ForwardResult {
    ForwardOutcome outcome = ForwardOutcome::NotForMe;
    Srv6Address next;
    uint32_t egress_port = 0;
};

// The uN step at a switch the address names: shift the uSID chain left 16
// bits, then look the new first-48 up in the static FIB.
ForwardResult forward_step(const SwitchSrv6Config& cfg, const Srv6Address& addr);

// Full dataplane behavior: named switches shift first; everything else
// transit-forwards on the unmodified first 48 bits.
ForwardResult switch_process(const SwitchSrv6Config& cfg, const Srv6Address& addr);

// Fabric-wide uSID plan: one config per switch, uSIDs structurally encoding
// (tier, plane, index) so EV->address needs no per-destination tables.
class Srv6Allocation {
  public:
    Srv6Allocation(const Topology& topo, uint32_t locator);

    uint32_t locator() const { return locator_; }

    const SwitchSrv6Config& t0_config(uint32_t plane, uint32_t index) const;
    const SwitchSrv6Config& t1_config(uint32_t plane, uint32_t index) const;

    uint16_t t0_usid(uint32_t plane, uint32_t index) const { return make_usid(UsidKind::T0, plane, index); }
    uint16_t t1_usid(uint32_t plane, uint32_t index) const { return make_usid(UsidKind::T1, plane, index); }
    uint16_t dst_usid(uint32_t plane, uint32_t downlink) const { return make_usid(UsidKind::Dst, plane, downlink); }

    Srv6Template build_template(uint32_t dst_nic) const;

    std::string fib_json() const;

  private:
    const Topology& topo_;
    uint32_t locator_;
    std::vector<SwitchSrv6Config> t0_configs_; // plane-major
    std::vector<SwitchSrv6Config> t1_configs_;
};

Srv6Allocation allocate_usids(const Topology& topo, uint32_t locator);

// Static walk of an address through the topology, starting at src's T0 on the
// plane the first uSID encodes. Ignores link/queue state; used to check that
// addresses traverse exactly the switches their PathId names.
struct TraceHop {
    bool is_t1 = false;
    uint32_t plane = 0;
    uint32_t index = 0;
    uint32_t egress_port = 0;
};

struct RouteTrace {
    std::vector<TraceHop> hops;
    bool delivered = false;
    uint32_t delivered_nic = 0;
    ForwardOutcome final_outcome = ForwardOutcome::NotForMe;
};

RouteTrace trace_route(const Topology& topo, const Srv6Allocation& alloc, uint32_t src_nic,
                       const Srv6Address& addr);

} // namespace planesim
