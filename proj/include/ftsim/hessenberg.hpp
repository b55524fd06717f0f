#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ftsim/sim_cluster.hpp"

namespace ftsim {

struct LsqResult {
  std::vector<double> y;
  double residual_estimate = 0.0;
  bool lucky_breakdown = false;
};

/// (m+1) x m upper-Hessenberg least-squares state for GMRES, kept in
/// reliable storage together with the Givens rotation history and the
/// rotated right-hand side. Entries below the first subdiagonal are exactly
/// zero by construction.
class Hessenberg {
 public:
  /// Backing regions are allocated (or reused) on rank 0 under
  /// `label`, `label`+"/givens" and `label`+"/rhs".
  Hessenberg(SimCluster& cluster, int m, const std::string& label);

  int max_columns() const { return m_; }
  int columns() const { return j_; }

  /// Resets to an empty factorization with rotated rhs = beta * e_1.
  void reset(double beta);

  /// Appends column j (entries h_0..h_{j+1}), applies the accumulated
  /// rotations plus one new one, and returns |last rhs entry| — the GMRES
  /// residual estimate. Marks a lucky breakdown when the subdiagonal is
  /// exactly zero.
  double append_column(std::span<const double> h_col);

  bool lucky_breakdown() const { return lucky_; }
  double residual_estimate() const { return estimate_; }

  /// Minimizer of ||beta e_1 - H y|| over the first `cols` columns via
  /// back-substitution of the rotated triangle.
  std::vector<double> solve(int cols) const;

  /// False when the rotated triangle has an exact zero pivot (possible only
  /// with corrupted columns).
  bool solvable(int cols) const;

  double entry(int i, int j) const;    // raw H entry as appended
  double r_entry(int i, int j) const;  // rotated (triangular) entry

 private:
  double& rref(int i, int j);
  double rref(int i, int j) const;

  SimCluster* cluster_ = nullptr;
  int m_ = 0;
  int j_ = 0;  // completed columns
  RegionId h_raw_ = kInvalidRegion;
  RegionId r_tri_ = kInvalidRegion;
  RegionId givens_ = kInvalidRegion;  // c then s, m entries each
  RegionId rhs_ = kInvalidRegion;     // rotated rhs, m+1 entries
  bool lucky_ = false;
  double estimate_ = 0.0;
};

/// Standalone small least-squares used by tests: solves
/// min ||beta e_1 - H y|| for a dense (j+1) x j Hessenberg given by columns.
LsqResult hessenberg_lsq(const std::vector<std::vector<double>>& columns, double beta);

}  // namespace ftsim
