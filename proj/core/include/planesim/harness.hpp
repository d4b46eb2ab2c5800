#pragma once

#include <memory>

#include "planesim/clustermapper.hpp"
#include "planesim/metrics.hpp"
#include "planesim/mrc.hpp"
#include "planesim/roce.hpp"
#include "planesim/scenario.hpp"

namespace planesim {

// Builds everything a scenario describes, drives the workload, samples
// metrics, and summarizes. One Sim = one deterministic run.
class Sim : public EventHandler {
  public:
    explicit Sim(const Scenario& sc);
    ~Sim() override;

    void run(); // duration + drain, then summary

    MetricsLog& log() { return log_; }
    const MetricsLog& log() const { return log_; }
    Fabric& fabric() { return *fabric_; }
    Topology& topology() { return *topo_; }
    EventLoop& loop() { return loop_; }
    Clustermapper* clustermapper() { return cm_.get(); }

    const std::vector<std::unique_ptr<MrcQp>>& mrc_qps() const { return mrc_; }
    const std::vector<std::unique_ptr<RoceQp>>& roce_qps() const { return roce_; }

    struct Stream {
        std::string label;
        std::vector<Endpoint*> srcs; // stripe members (QP scaling)
        std::vector<Endpoint*> dsts; // their peers, where goodput lands
        uint64_t msg_size = 0;
        uint32_t queue_depth = 1;
        uint64_t total_msgs = 0; // 0 = stream until the workload stops
        uint64_t posted = 0;
        uint64_t completed = 0;
        size_t next_ep = 0;
        bool stopped = false;
        bool use_imm = false;
    };
    const std::vector<Stream>& streams() const { return streams_; }

    bool workload_complete() const;
    bool conservation_ok(std::string* detail) const;
    std::vector<std::string> failed_asserts() const;

    void on_event(uint64_t tag, SimTime now) override;

  private:
    enum Tag : uint64_t { kSample = 1, kStopWorkload };

    struct RingNode {
        Endpoint* out = nullptr;
        uint32_t sends_done = 0;
        uint32_t recvs_done = 0;
        uint32_t posted = 0;
        uint32_t steps_total = 0;
        uint64_t chunk = 0;
    };
    struct A2ANode {
        std::vector<Endpoint*> out;
        uint32_t send_done = 0;
        uint32_t recv_done = 0;
        uint32_t round = 0;
        uint64_t per_peer = 0;
    };

    Endpoint* make_connection(uint32_t src, uint32_t dst, bool record_latency, uint32_t stripe_of = 1,
                              uint32_t stripe_idx = 0);
    void build_workload();
    void build_failures();
    void stream_pump(size_t idx, SimTime now);
    void ring_pump(size_t node, SimTime now);
    void a2a_pump(size_t node, SimTime now);
    void sampler_tick(SimTime now);
    void summarize(SimTime now);
    uint32_t resolve_ev_target(const FailureSpec& f) const;

    Scenario sc_;
    std::unique_ptr<Topology> topo_;
    std::unique_ptr<Srv6Allocation> alloc_;
    EventLoop loop_;
    std::unique_ptr<Fabric> fabric_;
    MetricsLog log_;
    Rng rng_;

    std::vector<std::unique_ptr<MrcQp>> mrc_;
    std::vector<std::unique_ptr<RoceQp>> roce_;
    std::vector<Endpoint*> endpoints_;
    std::unique_ptr<Clustermapper> cm_;
    uint32_t next_flow_ = 0;

    std::vector<Stream> streams_;
    std::vector<RingNode> ring_;
    std::vector<A2ANode> a2a_;
    std::vector<uint32_t> collective_nodes_;
    bool collective_done_ = false;
    SimTime collective_done_at_ = 0;
    SimTime workload_stop_at_ = 0;

    // sampler state
    struct PrevCounters {
        uint64_t rx = 0;
        uint64_t retx = 0;
        uint64_t loss = 0;
        uint64_t trims = 0;
    };
    std::vector<PrevCounters> stream_prev_;
    uint64_t prev_drops_ = 0, prev_trims_ = 0, prev_marks_ = 0, prev_pauses_ = 0;
};

// Convenience: parse, run, export, one call. Returns the failed asserts.
struct RunOutcome {
    bool workload_complete = false;
    bool conservation_ok = true;
    std::vector<std::string> failed_asserts;
    uint64_t trace_hash = 0;
};

RunOutcome run_scenario(const Scenario& sc, MetricsLog* out_log, const std::string& out_dir = "");

} // namespace planesim
