#include "ftsim/regions.hpp"

#include <cstring>

namespace ftsim {

RegionId RegionTable::alloc(int rank, RegionKind kind, std::string label, std::size_t length) {
  if (find(rank, label) != nullptr)
    throw UsageError("region '" + label + "' already allocated on rank " +
                     std::to_string(rank));
  Region r;
  r.rank = rank;
  r.kind = kind;
  r.label = std::move(label);
  r.data.assign(length, 0.0);
  regions_.push_back(std::move(r));
  return static_cast<RegionId>(regions_.size() - 1);
}

RegionId RegionTable::alloc_or_reuse(int rank, RegionKind kind, const std::string& label,
                                     std::size_t length) {
  for (std::size_t i = 0; i < regions_.size(); ++i) {
    Region& r = regions_[i];
    if (r.rank == rank && r.label == label) {
      if (r.kind != kind || r.data.size() != length)
        throw UsageError("region '" + label + "' on rank " + std::to_string(rank) +
                         " exists with a different kind or length");
      std::fill(r.data.begin(), r.data.end(), 0.0);
      return static_cast<RegionId>(i);
    }
  }
  return alloc(rank, kind, label, length);
}

Region& RegionTable::at(RegionId id) {
  if (id >= regions_.size()) throw UsageError("invalid region id");
  return regions_[id];
}

const Region& RegionTable::at(RegionId id) const {
  if (id >= regions_.size()) throw UsageError("invalid region id");
  return regions_[id];
}

Region* RegionTable::find(int rank, const std::string& label) {
  for (auto& r : regions_)
    if (r.rank == rank && r.label == label) return &r;
  return nullptr;
}

const Region* RegionTable::find(int rank, const std::string& label) const {
  for (const auto& r : regions_)
    if (r.rank == rank && r.label == label) return &r;
  return nullptr;
}

void RegionTable::clear_rank(int rank) {
  for (auto& r : regions_)
    if (r.rank == rank) std::fill(r.data.begin(), r.data.end(), 0.0);
}

std::uint64_t RegionTable::total_flips() const {
  std::uint64_t n = 0;
  for (const auto& r : regions_) n += r.flip_count;
  return n;
}

std::uint64_t RegionTable::total_flips(RegionKind kind) const {
  std::uint64_t n = 0;
  for (const auto& r : regions_)
    if (r.kind == kind) n += r.flip_count;
  return n;
}

void promote(const Region& src, Region& dst) {
  if (src.kind != RegionKind::Unreliable || dst.kind != RegionKind::Reliable)
    throw UsageError("promote expects an unreliable source and a reliable destination");
  if (src.data.size() != dst.data.size())
    throw UsageError("promote: length mismatch");
  // bitwise copy; assignment of doubles preserves NaN payloads
  std::memcpy(dst.data.data(), src.data.data(), src.data.size() * sizeof(double));
}

}  // namespace ftsim
