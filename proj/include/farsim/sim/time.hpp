#pragma once

#include <cmath>
#include <cstdint>

namespace farsim {

// Simulation time in integer nanoseconds.
using SimTime = std::uint64_t;

inline constexpr SimTime kNoLimit = ~0ull;

// Cycle counts are carried as doubles so calibrated fractional costs
// (e.g. 27.4 cycles per pipe line) average out exactly; conversion to the
// integer time base rounds up.
inline SimTime ns_from_cycles(double cycles, double freq_hz) {
    if (cycles <= 0) return 0;
    return static_cast<SimTime>(std::ceil(cycles * 1e9 / freq_hz));
}

inline double cycles_from_ns(SimTime ns, double freq_hz) {
    return static_cast<double>(ns) * freq_hz * 1e-9;
}

}  // namespace farsim
