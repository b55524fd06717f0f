#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ftsim/sim_cluster.hpp"

namespace ftsim {

/// Balanced contiguous row-block partition: block sizes differ by at most
/// one and depend only on (n_ranks, global_n).
struct Partition {
  int n_ranks = 1;
  std::int64_t global_n = 0;

  std::int64_t begin(int rank) const;
  std::int64_t end(int rank) const;
  std::int64_t local_n(int rank) const { return end(rank) - begin(rank); }
  int owner(std::int64_t global_index) const;
  bool operator==(const Partition&) const = default;
};

/// A global vector stored as one region block per rank. The storage kind
/// decides whether fault injection may touch it.
class DistVector {
 public:
  DistVector() = default;
  DistVector(SimCluster& cluster, std::int64_t global_n, RegionKind kind,
             const std::string& label);

  const Partition& part() const { return part_; }
  std::int64_t size() const { return part_.global_n; }
  RegionKind kind() const { return kind_; }
  const std::string& label() const { return label_; }

  std::span<double> block(int rank);
  std::span<const double> block(int rank) const;
  Region& region(int rank);
  const Region& region(int rank) const;

  double get(std::int64_t global_index) const;
  void set(std::int64_t global_index, double value);

  std::vector<double> gather() const;
  void scatter(std::span<const double> values);
  void fill(double value);

  SimCluster* cluster() const { return cluster_; }

 private:
  SimCluster* cluster_ = nullptr;
  Partition part_{};
  RegionKind kind_ = RegionKind::Unreliable;
  std::string label_;
  std::vector<RegionId> blocks_;
};

// Element-wise kernels; accumulation order is fixed so results are
// bit-identical for every rank count.
void copy(const DistVector& x, DistVector& y);
void scale(DistVector& x, double alpha);
void axpy(double alpha, const DistVector& x, DistVector& y);  // y += alpha x

/// Globally ordered dot product via one sum-allreduce; bit-exact equal to the
/// serial left-to-right sum of element products.
double dot(const DistVector& x, const DistVector& y);
CollectiveHandle idot(const DistVector& x, const DistVector& y);
double norm2(const DistVector& x);

/// Harness-side recomputation of the same ordered sum without advancing
/// simulated time; used by validation checks and oracles.
double dot_local(const DistVector& x, const DistVector& y);
double norm2_sq_local(const DistVector& x);

/// Check helpers.
bool all_finite(const DistVector& x);

void require_same_distribution(const DistVector& x, const DistVector& y);

/// Bitwise copy of an unreliable vector into a reliable one of equal
/// distribution.
void promote(const DistVector& src, DistVector& dst);

}  // namespace ftsim
