#pragma once

#include <cmath>
#include <cstdint>

namespace ftsim {

/// splitmix64 step; the workhorse behind every seeded stream.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Mixes a seed with stream tags into an independent starting state.
inline std::uint64_t mix_key(std::uint64_t seed, std::uint64_t tag, std::uint64_t lane = 0) {
  std::uint64_t s = seed;
  std::uint64_t a = splitmix64(s);
  s ^= tag * 0x9e3779b97f4a7c15ULL;
  std::uint64_t b = splitmix64(s);
  s ^= lane * 0xd1b54a32d192ed03ULL;
  std::uint64_t c = splitmix64(s);
  return a ^ (b << 1) ^ (c >> 1);
}

/// Deterministic random stream. All distributions are implemented by hand
/// (inverse transform / Box-Muller) so draws are identical across standard
/// libraries and platforms.
class RngStream {
 public:
  RngStream() : state_(0x853c49e6748fea9bULL) {}
  RngStream(std::uint64_t seed, std::uint64_t tag, std::uint64_t lane = 0)
      : state_(mix_key(seed, tag, lane)) {}

  std::uint64_t next_u64() { return splitmix64(state_); }

  /// Uniform in [0, 1) with 53 random bits.
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  /// Standard normal via Box-Muller; consumes two uniforms per call.
  double normal() {
    double u1 = next_unit();
    double u2 = next_unit();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  double lognormal(double mu, double sigma) { return std::exp(mu + sigma * normal()); }

  /// Exponential inter-arrival time for the given rate (> 0).
  double exponential(double rate) {
    double u = next_unit();
    if (u >= 1.0) u = 1.0 - 0x1.0p-53;
    return -std::log(1.0 - u) / rate;
  }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

 private:
  std::uint64_t state_;
};

}  // namespace ftsim
