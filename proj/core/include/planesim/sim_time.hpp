#pragma once

#include <cstdint>

namespace planesim {

// Simulated time in integer picoseconds. 64 bits covers ~213 days, far more
// than any scenario needs, and integer math keeps event ordering exact.
using SimTime = uint64_t;

constexpr SimTime kPicosecond = 1;
constexpr SimTime kNanosecond = 1000;
constexpr SimTime kMicrosecond = 1000 * kNanosecond;
constexpr SimTime kMillisecond = 1000 * kMicrosecond;
constexpr SimTime kSecond = 1000 * kMillisecond;

constexpr SimTime from_us(double us) { return static_cast<SimTime>(us * static_cast<double>(kMicrosecond)); }
constexpr SimTime from_ms(double ms) { return static_cast<SimTime>(ms * static_cast<double>(kMillisecond)); }
constexpr SimTime from_sec(double s) { return static_cast<SimTime>(s * static_cast<double>(kSecond)); }

constexpr double to_us(SimTime t) { return static_cast<double>(t) / static_cast<double>(kMicrosecond); }
constexpr double to_sec(SimTime t) { return static_cast<double>(t) / static_cast<double>(kSecond); }

// Time to clock `bytes` onto a link running at `bps` bits per second.
constexpr SimTime serialization_time(uint64_t bytes, uint64_t bps) {
    // bytes*8*1e12 fits in 64 bits for any frame size we model (< 2 MB).
    return bytes * 8 * kSecond / bps;
}

} // namespace planesim
