#pragma once

#include <cstdint>

#include "planesim/srv6.hpp"

namespace planesim {

// A 32-bit entropy value striped across the simulated UDP source port (low 16
// bits, free-rolling entropy) and the IPv6 flow label half (high 16 bits,
// which carry the path fields): plane in flow-label bits 0..2, T0 uplink in
// 3..10, NIC port in 11..13.
struct EvFields {
    uint32_t plane = 0;
    uint32_t t0_uplink = 0;
    uint32_t nic_port = 0;

    bool operator==(const EvFields&) const = default;
};

constexpr uint32_t kEvMaxPlanes = 8;
constexpr uint32_t kEvMaxUplinks = 256;
constexpr uint32_t kEvMaxNicPorts = 8;

inline uint32_t encode_ev(const EvFields& f, uint16_t entropy) {
    uint32_t label = (f.plane & 0x7u) | ((f.t0_uplink & 0xffu) << 3) | ((f.nic_port & 0x7u) << 11);
    return (label << 16) | entropy;
}

inline EvFields decode_ev(uint32_t ev) {
    uint32_t label = ev >> 16;
    return EvFields{label & 0x7u, (label >> 3) & 0xffu, (label >> 11) & 0x7u};
}

inline PathId ev_to_path(uint32_t ev, const Srv6Template& tmpl, bool t0_local) {
    EvFields f = decode_ev(ev);
    return PathId{f.plane, t0_local ? 0 : f.t0_uplink, tmpl.dst_downlink, t0_local};
}

// Deterministic, stateless EV -> SRv6 address mapping. Throws on EV fields
// outside the fabric's bounds.
inline Srv6Address ev_to_address(const Srv6Template& tmpl, uint32_t ev, bool t0_local, uint32_t planes,
                                 uint32_t t0_uplinks) {
    EvFields f = decode_ev(ev);
    if (f.plane >= planes)
        throw Srv6Error("ev_to_address: plane " + std::to_string(f.plane) + " out of range");
    if (!t0_local && f.t0_uplink >= t0_uplinks)
        throw Srv6Error("ev_to_address: uplink " + std::to_string(f.t0_uplink) + " out of range");
    return tmpl.specialize(ev_to_path(ev, tmpl, t0_local));
}

} // namespace planesim
