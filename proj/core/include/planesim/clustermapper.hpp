#pragma once

#include <deque>
#include <map>
#include <vector>

#include "planesim/denylist.hpp"
#include "planesim/fabric.hpp"

namespace planesim {

struct ClustermapperConfig {
    SimTime period = kMillisecond;     // per-link probe period
    SimTime window = kSecond;          // rolling health window
    double lossy_threshold = 0.005;    // loss fraction that marks a link lossy
    uint32_t down_consecutive = 10;    // consecutive losses that mark it down
    bool denylist_down_t0t1 = false;   // path entries for dead T0-T1 links (off: MRC handles them)
};

enum class LinkHealth : uint8_t { Healthy, Lossy, Down, NoData };

struct Fault {
    enum class Kind : uint8_t { NicT0Link, T0Switch, T0T1Link, T1Switch, Unknown };
    Kind kind = Kind::Unknown;
    uint32_t plane = 0;
    uint32_t nic = 0;    // NicT0Link
    uint32_t t0 = 0;     // T0Switch / T0T1Link
    uint32_t uplink = 0; // T0T1Link / T1Switch (T1 index == uplink)

    bool operator==(const Fault&) const = default;
};

// Source-routed out-and-back prober: every agent (one per NIC) probes each
// directly attached T0 once per period, plus a round-robin-assigned share of
// the T1s, so every NIC-T0 and T0-T1 link is covered each period. Probes ride
// the dataplane exactly like data packets.
class Clustermapper : public FlowEndpoint, public EventHandler {
  public:
    Clustermapper(Fabric& fabric, const ClustermapperConfig& cfg);

    void start();
    void stop() { running_ = false; }

    void on_packet(Packet&& pkt, SimTime now) override;
    void on_event(uint64_t tag, SimTime now) override;

    // target identity: uplink == -1 means the T0 out-and-back probe
    struct TargetHealth {
        std::deque<std::pair<SimTime, bool>> window;
        uint32_t consecutive_losses = 0;
        uint64_t sent = 0;
        uint64_t lost = 0;
        double last_rtt_us = 0;
    };

    LinkHealth health(uint32_t nic, uint32_t plane, int32_t uplink, SimTime now) const;
    double loss_fraction(uint32_t nic, uint32_t plane, int32_t uplink, SimTime now) const;

    std::vector<Fault> localize(SimTime now) const;
    std::vector<std::string> coverage_gaps(SimTime now) const;
    Denylist derive_denylist(SimTime now) const;
    std::string health_json(SimTime now) const;

    uint64_t probes_sent() const { return probes_sent_; }
    uint64_t probes_lost() const { return probes_lost_; }

  private:
    static uint64_t key_of(uint32_t nic, uint32_t plane, int32_t uplink) {
        return (static_cast<uint64_t>(nic) << 24) | (static_cast<uint64_t>(plane) << 16) |
               static_cast<uint16_t>(uplink + 1);
    }
    void tick(SimTime now);
    void send_probe(uint32_t nic, uint32_t plane, int32_t uplink, SimTime now);
    void record(uint64_t key, SimTime now, bool ok, SimTime rtt);
    const TargetHealth* target(uint32_t nic, uint32_t plane, int32_t uplink) const;

    Fabric& fabric_;
    ClustermapperConfig cfg_;
    bool running_ = false;

    std::map<uint64_t, TargetHealth> health_;
    struct PendingProbe {
        uint64_t key;
        SimTime sent;
    };
    std::map<uint64_t, PendingProbe> pending_;
    uint64_t next_probe_id_ = 1;
    uint64_t probes_sent_ = 0;
    uint64_t probes_lost_ = 0;
};

} // namespace planesim
