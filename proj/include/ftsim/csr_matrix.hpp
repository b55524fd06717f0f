#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ftsim/dist_vector.hpp"

namespace ftsim {

struct Triplet {
  std::int64_t row = 0;
  std::int64_t col = 0;
  double value = 0.0;
};

/// Square sparse matrix in CSR, split into per-rank row blocks. Column
/// indices stay global; within a row they are sorted, so the accumulation
/// order of y_i is independent of the rank count.
class CsrMatrix {
 public:
  struct RowBlock {
    std::int64_t row_begin = 0;
    std::int64_t row_end = 0;
    std::vector<std::int64_t> offsets;  // local, size local_rows+1
    std::vector<std::int64_t> cols;     // global indices
    std::vector<double> vals;
  };

  CsrMatrix() = default;

  static CsrMatrix from_triplets(std::int64_t n, std::vector<Triplet> triplets,
                                 int n_ranks);

  static CsrMatrix identity(std::int64_t n, int n_ranks);
  static CsrMatrix diagonal(const std::vector<double>& values, int n_ranks);
  /// 1D Laplacian stencil (-1, 2, -1) with Dirichlet elimination.
  static CsrMatrix laplace1d(std::int64_t n, int n_ranks);
  /// 5-point 2D Laplacian on an nx-by-ny grid, row-major numbering.
  static CsrMatrix laplace2d(std::int64_t nx, std::int64_t ny, int n_ranks);

  /// Matrix Market coordinate reader (real general/symmetric).
  static CsrMatrix load_matrix_market(const std::string& path, int n_ranks);
  void save_matrix_market(const std::string& path) const;

  std::int64_t n() const { return n_; }
  int n_ranks() const { return static_cast<int>(blocks_.size()); }
  const Partition& part() const { return part_; }
  const RowBlock& block(int rank) const { return blocks_[rank]; }
  std::int64_t nnz() const;

  double inf_norm() const;  // max absolute row sum

  /// Re-splits the same matrix for a different rank count.
  CsrMatrix repartition(int n_ranks) const;

 private:
  std::int64_t n_ = 0;
  Partition part_{};
  std::vector<RowBlock> blocks_;
};

/// y = A x with halo exchange over the cluster's point-to-point channels.
/// Bit-exact against serial row-order accumulation for any rank count.
void spmv(SimCluster& cluster, const CsrMatrix& A, const DistVector& x, DistVector& y);

/// Harness-side serial reference used by oracles; no simulated time.
std::vector<double> spmv_serial(const CsrMatrix& A, std::span<const double> x);

}  // namespace ftsim
