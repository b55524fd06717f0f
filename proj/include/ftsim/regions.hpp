#pragma once

#include <bit>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ftsim/errors.hpp"

namespace ftsim {

enum class RegionKind : std::uint8_t { Reliable, Unreliable };

inline const char* region_kind_name(RegionKind k) {
  return k == RegionKind::Reliable ? "reliable" : "unreliable";
}

/// Flips one bit of the IEEE-754 binary64 representation. Involutive and
/// payload-preserving, including NaNs.
inline double flip_bit(double value, int bit_index) {
  if (bit_index < 0 || bit_index > 63)
    throw UsageError("flip_bit: bit_index must be in [0,63]");
  std::uint64_t bits = std::bit_cast<std::uint64_t>(value);
  bits ^= (std::uint64_t{1} << bit_index);
  return std::bit_cast<double>(bits);
}

using RegionId = std::uint32_t;
inline constexpr RegionId kInvalidRegion = static_cast<RegionId>(-1);

/// A contiguous block of doubles owned by one simulated rank. Only
/// Unreliable regions may be targeted by bit-flip injection.
struct Region {
  int rank = -1;
  std::string label;
  RegionKind kind = RegionKind::Unreliable;
  std::vector<double> data;
  std::uint64_t flip_count = 0;  // injected flips landed here

  std::span<double> span() { return {data.data(), data.size()}; }
  std::span<const double> span() const { return {data.data(), data.size()}; }
};

/// Registry of every allocated region, keyed by (rank, label). The fault
/// scheduler resolves targets against this table.
class RegionTable {
 public:
  RegionId alloc(int rank, RegionKind kind, std::string label, std::size_t length);

  /// Returns the existing region when (rank, label, kind, length) all match
  /// (contents zeroed); allocates otherwise. Kind or length mismatch on an
  /// existing label is a usage error.
  RegionId alloc_or_reuse(int rank, RegionKind kind, const std::string& label,
                          std::size_t length);

  Region& at(RegionId id);
  const Region& at(RegionId id) const;

  Region* find(int rank, const std::string& label);
  const Region* find(int rank, const std::string& label) const;

  /// Drops the data of every region owned by `rank` (fail-stop volatile loss).
  void clear_rank(int rank);

  std::uint64_t total_flips() const;
  std::uint64_t total_flips(RegionKind kind) const;

  const std::vector<Region>& regions() const { return regions_; }
  std::vector<Region>& regions() { return regions_; }

 private:
  std::vector<Region> regions_;
};

/// Copies an unreliable source into reliable storage, bit for bit. Later
/// corruption of the source leaves the destination untouched.
void promote(const Region& src, Region& dst);

}  // namespace ftsim
