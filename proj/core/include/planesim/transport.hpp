#pragma once

#include <cstdint>
#include <functional>

#include "planesim/sim_time.hpp"

namespace planesim {

// Minimal surface the workload generators drive; implemented by MRC and RoCE
// queue pairs.
class Endpoint {
  public:
    using SendCompletion = std::function<void(SimTime, uint64_t msg_id)>;
    using RecvCompletion = std::function<void(SimTime, uint64_t msg_id, uint64_t bytes)>;

    virtual ~Endpoint() = default;

    virtual uint64_t post_write(uint64_t len, bool with_imm) = 0;
    virtual void set_send_completion(SendCompletion cb) = 0;
    virtual void set_recv_completion(RecvCompletion cb) = 0;

    virtual uint32_t flow() const = 0;
    virtual uint32_t local_nic() const = 0;
    virtual uint32_t remote_nic() const = 0;
    virtual bool send_idle() const = 0;

    // sampler hooks
    virtual uint64_t rx_goodput_bytes() const = 0;
    virtual uint64_t tx_retransmits() const = 0;
    virtual uint64_t losses() const = 0;
    virtual uint64_t trims_seen() const = 0;
};

} // namespace planesim
