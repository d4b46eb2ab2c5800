#pragma once

#include <array>
#include <cstdint>

#include "planesim/srv6.hpp"

namespace planesim {

enum class PktKind : uint8_t {
    MrcData,
    MrcSack,
    MrcTrimNack,
    MrcEvProbe,
    MrcEvProbeAck,
    RoceData,
    RoceAck,
    RoceNak,
    RoceCnp,
    CmProbe,
};

inline bool is_data_kind(PktKind k) { return k == PktKind::MrcData || k == PktKind::RoceData; }

constexpr uint32_t kHeaderBytes = 64;
constexpr uint32_t kCmFlow = 0xffffffffu;

struct SackEcho {
    uint32_t ev = 0;
    bool ecn = false;
};

constexpr size_t kMaxSackEchoes = 8;
constexpr size_t kSackBitmapWords = 4; // 256-PSN selective window

// One simulated frame. IPv6-in-IPv6: `outer` is the SRv6 path and is consumed
// by shifting; everything else rides in inner headers and survives to the NIC.
struct Packet {
    Srv6Address outer;
    uint32_t inner_src = 0;
    uint32_t inner_dst = 0;
    uint32_t ev = 0;
    uint32_t flow = kCmFlow;
    PktKind kind = PktKind::MrcData;
    bool ecn = false;
    bool trimmed = false;
    bool imm = false;
    uint32_t wire_bytes = kHeaderBytes;

    // RDMA placement info (data packets).
    uint64_t psn = 0;
    uint64_t va = 0;
    uint32_t len = 0;
    uint32_t rkey = 0;
    uint64_t msg_id = 0;
    uint32_t msg_len = 0; // total message bytes, for write-with-imm completion

    // SACK / ACK / NAK payload.
    uint64_t cum_psn = 0;
    std::array<uint64_t, kSackBitmapWords> sack_bitmap{};
    uint32_t port_bitmap = 0;
    uint8_t echo_count = 0;
    std::array<SackEcho, kMaxSackEchoes> echoes{};

    // Probe bookkeeping (MRC EV probes and Clustermapper probes).
    uint64_t probe_id = 0;

    uint16_t ingress_port = UINT16_MAX; // transient, per-switch PFC accounting
    uint8_t hops = 0;                   // forwarding loop guard

    void add_echo(uint32_t ev_value, bool ecn_seen) {
        for (uint8_t i = 0; i < echo_count; ++i) {
            if (echoes[i].ev == ev_value) {
                echoes[i].ecn |= ecn_seen;
                return;
            }
        }
        if (echo_count < kMaxSackEchoes) echoes[echo_count++] = SackEcho{ev_value, ecn_seen};
    }
};

} // namespace planesim
