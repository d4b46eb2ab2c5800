#pragma once

#include <functional>
#include <unordered_map>
#include <vector>

#include "planesim/denylist.hpp"
#include "planesim/entropy.hpp"
#include "planesim/rng.hpp"
#include "planesim/sim_time.hpp"

namespace planesim {

enum class EvState : uint8_t { Active, Backup, Retired };

struct EvRecord {
    uint32_t value = 0;
    uint32_t plane = 0;
    EvState state = EvState::Backup;
    SimTime penalty_until = 0;
    SimTime last_penalty = 0;
    SimTime retired_since = 0;
    uint32_t probe_successes = 0;
    bool probe_outstanding = false;
};

// Per-QP entropy-value set: per-plane active/backup lists with health state,
// loss-driven retirement that promotes a same-plane backup, probe-driven
// resurrection, and ECN penalties that skip (never remove) an EV. A plane can
// be parked when the local or the remote NIC port on it is down; while parked
// its EVs are neither selected nor retired (the losses are explained by the
// known-down port, not by path failure).
class EvManager {
  public:
    // event names: initial, activated, deactivated, resurrected, reactivated
    using TransitionLogger = std::function<void(SimTime, uint32_t ev, uint32_t plane, const char* event)>;

    struct Params {
        uint32_t planes = 1;
        uint32_t t0_uplinks = 1;
        bool t0_local = false;
        uint32_t size_target = 128;
        uint32_t backup_target = 128;
    };

    EvManager(const Params& p, Rng rng) : params_(p), rng_(rng), plane_(p.planes), plane_cursor_(0) {}

    void set_logger(TransitionLogger fn) { log_ = std::move(fn); }

    // Chooses active/backup paths per plane, uniformly at random without
    // replacement, excluding denylisted paths. A plane with no usable path is
    // excluded entirely.
    void populate(uint32_t src_nic, uint32_t dst_nic, uint32_t src_group, uint32_t dst_group,
                  const Denylist& denylist, SimTime now);

    // Round-robin across planes and within each plane, skipping penalized EVs;
    // if everything is penalized, the least-recently-penalized EV is used.
    // Returns nullptr when no plane is usable. `exclude` (if nonzero) is
    // avoided when an alternative exists.
    const EvRecord* select(SimTime now, uint32_t exclude = 0);

    bool penalize(uint32_t value, SimTime until, SimTime now);

    // Loss-driven retirement; promotes a same-plane backup. Returns false if
    // ignored (unknown EV, already retired, or plane parked).
    bool retire(uint32_t value, SimTime now);

    void probe_success(uint32_t value, uint32_t resurrect_threshold, SimTime now);
    void probe_failure(uint32_t value);
    std::vector<uint32_t> retired_values() const;

    void park_plane(uint32_t plane, bool remote, SimTime now);
    void unpark_plane(uint32_t plane, bool remote, SimTime now);
    bool plane_parked(uint32_t p) const { return plane_[p].parked_local || plane_[p].parked_remote; }
    bool plane_enabled(uint32_t p) const { return plane_[p].enabled; }
    bool plane_usable(uint32_t p) const { return plane_[p].enabled && !plane_parked(p); }

    uint32_t active_count(uint32_t plane) const { return static_cast<uint32_t>(plane_[plane].active.size()); }
    uint32_t usable_plane_count() const;
    bool any_selectable() const;
    bool equality_warning() const { return equality_warning_; }
    uint32_t planes() const { return params_.planes; }

    EvRecord* find(uint32_t value);
    const std::vector<EvRecord>& records() const { return pool_; }

    // Uniform pick over active EVs on usable planes (reverse-probe candidates).
    const EvRecord* random_active();

  private:
    struct PlaneSet {
        std::vector<uint32_t> active; // indices into pool_
        std::vector<uint32_t> backup;
        uint32_t cursor = 0;
        uint32_t nominal = 0;
        bool enabled = true;
        bool parked_local = false;
        bool parked_remote = false;
    };

    void emit(SimTime t, const EvRecord& r, const char* ev) {
        if (log_) log_(t, r.value, r.plane, ev);
    }
    void promote_backup(uint32_t plane, SimTime now);
    static void erase_value(std::vector<uint32_t>& v, uint32_t idx);

    Params params_;
    Rng rng_;
    std::vector<EvRecord> pool_;
    std::unordered_map<uint32_t, uint32_t> by_value_;
    std::vector<PlaneSet> plane_;
    uint32_t plane_cursor_ = 0;
    bool equality_warning_ = false;
    TransitionLogger log_;
};

} // namespace planesim
