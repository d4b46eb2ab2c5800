#pragma once

#include <string>
#include <vector>

#include "planesim/clustermapper.hpp"
#include "planesim/denylist.hpp"
#include "planesim/fabric.hpp"
#include "planesim/mrc.hpp"
#include "planesim/roce.hpp"

namespace planesim {

class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct WorkloadSpec {
    enum class Kind : uint8_t { WriteBw, WriteLat, RingAllreduce, AllToAll, Incast, Permutation };
    Kind kind = Kind::WriteBw;
    uint64_t msg_size = 32768;
    bool bidir = false;
    std::vector<std::pair<uint32_t, uint32_t>> pairs; // explicit endpoints (write_bw / write_lat)
    bool cross_t1 = true;                             // pair auto-selection when pairs is empty
    uint32_t queue_depth = 4;                         // outstanding messages per stream
    uint32_t qps = 1;                                 // stripe factor (QP scaling)
    std::vector<uint32_t> nodes;                      // collectives; empty = first node_count NICs
    uint32_t node_count = 0;
    uint32_t rounds = 1;   // all_to_all
    uint32_t iters = 1000; // write_lat
    uint32_t fan_in = 7;   // incast
    bool victim = true;
    std::vector<uint32_t> src_racks{0, 1}; // permutation
    std::vector<uint32_t> dst_racks{2, 3};
};

// Scenario-level failure description; expanded into primitive fabric events
// once the topology exists.
struct FailureSpec {
    enum class Kind : uint8_t {
        LinkDown,
        LinkUp,
        LinkFlap,
        TransceiverFlap,
        SwitchBlackhole,
        SwitchReboot,
        EvDropRate,
        RandomDrop,
    };
    Kind kind = Kind::LinkDown;
    SimTime time = 0;
    SimTime duration = 0; // flap down-time / reboot time / drop window (0 = rest of run)

    // link reference
    enum class LinkType : uint8_t { NicT0, T0T1, None } link_type = LinkType::None;
    uint32_t nic = 0;
    uint32_t plane = 0;
    uint32_t t0 = 0;
    uint32_t uplink = 0;
    uint32_t transceiver_group = 0; // TransceiverFlap: which 4-port bundle

    // switch reference
    bool is_t1 = false;
    uint32_t index = 0;

    // drop injection
    double rate = 0;
    int64_t scope_nic = -1;
    int64_t scope_plane = -1;
    bool ev_explicit = false;
    uint32_t ev = 0;          // explicit EV value
    uint32_t flow = 0;        // or: k-th active EV of a flow, resolved at injection
    uint32_t active_index = 0;
};

struct ScenarioAssert {
    std::string metric;
    std::string op; // ">=", "<=", "==", ">", "<"
    double value = 0;
    double tolerance = 0; // for "=="
};

enum class TransportKind : uint8_t { Mrc, Roce };

struct Scenario {
    uint32_t schema_version = 1;
    std::string name = "scenario";
    uint64_t seed = 0;
    bool seed_explicit = false;
    SimTime duration = 2 * kSecond;
    SimTime sample_interval = 200 * kMillisecond;
    SimTime drain = 2 * kSecond; // extra run time to let in-flight work finish
    uint32_t locator = 0xfbf00000u;

    TopologySpec topo;
    FabricConfig fabric;
    TransportKind transport = TransportKind::Mrc;
    MrcConfig mrc;
    RoceConfig roce;
    bool roce_pfc = true;
    std::string dcqcn_profile = "default";
    WorkloadSpec workload;
    std::vector<FailureSpec> failures;
    bool cm_enabled = false;
    ClustermapperConfig cm;
    std::vector<DenylistEntry> denylist;
    std::vector<ScenarioAssert> asserts;
    bool trace = false;

    static Scenario from_json_text(const std::string& text, const std::string& source = "scenario");
    static Scenario from_file(const std::string& path);

    // Topology-aware validation (endpoint existence, failure targets, times).
    void validate() const;

    // All defaults resolved, echoed for the log header.
    std::string resolved_json() const;
};

} // namespace planesim
