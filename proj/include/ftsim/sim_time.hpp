#pragma once

#include <cmath>
#include <cstdint>

namespace ftsim {

/// Simulated time measured in integer ticks so that replayed runs never
/// accumulate floating-point drift. One abstract time unit = 2^20 ticks.
using SimTime = std::int64_t;

inline constexpr SimTime kTicksPerUnit = SimTime{1} << 20;

inline SimTime ticks_from_units(double units) {
  return static_cast<SimTime>(std::llround(units * static_cast<double>(kTicksPerUnit)));
}

inline double units_from_ticks(SimTime t) {
  return static_cast<double>(t) / static_cast<double>(kTicksPerUnit);
}

}  // namespace ftsim
