#pragma once

#include <cstdint>
#include <queue>
#include <stdexcept>
#include <vector>

#include "planesim/sim_time.hpp"

namespace planesim {

class EventHandler {
  public:
    virtual ~EventHandler() = default;
    virtual void on_event(uint64_t tag, SimTime now) = 0;
};

// Deterministic discrete-event queue: ties in time break by insertion order.
class EventLoop {
  public:
    SimTime now() const { return now_; }

    void schedule(SimTime t, EventHandler* h, uint64_t tag) {
        if (t < now_) t = now_;
        q_.push(Ev{t, next_seq_++, h, tag});
    }

    bool empty() const { return q_.empty(); }
    uint64_t events_processed() const { return processed_; }

    // Processes all events with time <= t_end, then advances the clock to t_end.
    void run_until(SimTime t_end) {
        while (!q_.empty() && q_.top().t <= t_end) {
            step();
        }
        if (t_end > now_) now_ = t_end;
    }

    void run_all(SimTime hard_cap) { run_until(hard_cap); }

    void set_same_time_limit(uint64_t limit) { same_time_limit_ = limit; }

  private:
    struct Ev {
        SimTime t;
        uint64_t seq;
        EventHandler* h;
        uint64_t tag;
    };
    struct Later {
        bool operator()(const Ev& a, const Ev& b) const {
            return a.t != b.t ? a.t > b.t : a.seq > b.seq;
        }
    };

    void step() {
        Ev ev = q_.top();
        q_.pop();
        if (ev.t == now_) {
            if (++same_time_count_ > same_time_limit_)
                throw std::runtime_error("event loop livelock: more than " + std::to_string(same_time_limit_) +
                                         " events at t=" + std::to_string(now_) + " ps");
        } else {
            now_ = ev.t;
            same_time_count_ = 0;
        }
        ++processed_;
        ev.h->on_event(ev.tag, now_);
    }

    std::priority_queue<Ev, std::vector<Ev>, Later> q_;
    SimTime now_ = 0;
    uint64_t next_seq_ = 0;
    uint64_t processed_ = 0;
    uint64_t same_time_count_ = 0;
    uint64_t same_time_limit_ = 50'000'000;
};

} // namespace planesim
