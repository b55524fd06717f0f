#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ftsim/csr_matrix.hpp"
#include "ftsim/dist_vector.hpp"
#include "ftsim/hessenberg.hpp"
#include "ftsim/sim_cluster.hpp"

namespace ftsim {

enum class SkepticalPolicy : std::uint8_t { Off, DetectOnly, RejectAndRestart, Continue };

const char* policy_name(SkepticalPolicy p);
SkepticalPolicy policy_from_name(const std::string& name);

struct CheckTolerances {
  /// Governs the cheap norm-consistency checks (and the optional full
  /// orthogonality audit when enabled).
  double orth_tol = 1e-6;
  double norm_growth_factor = 4.0;
  double residual_increase_tol = 1e-8;
};

struct SolverConfig {
  int restart = 30;
  double tol = 1e-8;
  int maxit = 300;
  int pipeline_depth = 0;  // 0 = synchronous, 1 = single-step overlap
  SkepticalPolicy policy = SkepticalPolicy::Off;
  CheckTolerances checks{};
  bool orthogonality_audit = false;  // expensive full-basis Gram audit
  int max_reject_retries = 5;
  double iteration_cost = 1.0;  // simulated compute units per Arnoldi step
  bool record_true_residuals = false;
};

struct Detection {
  int iteration = 0;  // global Arnoldi step index (counting discarded steps)
  std::string check;  // "C1", "C2", "C3", "orth", "certificate"
  double observed = 0.0;
  double threshold = 0.0;
  std::string detail;
  double time_units = 0.0;
};

enum class SolveOutcome : std::uint8_t {
  Converged,
  MaxIterations,
  Diverged,
  PersistentCorruption,
};

const char* outcome_name(SolveOutcome o);

struct SolverReport {
  bool converged = false;
  SolveOutcome outcome = SolveOutcome::MaxIterations;
  int iterations = 0;
  std::vector<double> residual_history;       // relative estimates, length iterations+1
  std::vector<double> true_residual_history;  // filled when record_true_residuals
  std::vector<double> clock_history;          // sim clock at each history point
  double simulated_elapsed = 0.0;
  std::vector<Detection> detections;
  int inner_rejections = 0;  // outer-inner solves only
  int rejected_cycles = 0;
  double final_true_residual = 0.0;
  int fallback_norm_recomputes = 0;  // pipelined only
  int candidate_refreshes = 0;       // pipelined only
};

/// Test/diagnostic observer into the Arnoldi loop.
struct ArnoldiObserver {
  virtual ~ArnoldiObserver() = default;
  /// Consumed basis column right after the start-of-iteration poll point.
  virtual void on_basis_consumed(int iteration, std::span<const double> v) {}
  /// Candidate w and column V_j right before the mid-iteration poll point.
  virtual void on_update_window(int iteration, std::span<const double> vj,
                                std::span<const double> w) {}
};

/// Restarted GMRES with modified Gram-Schmidt. Workspace vectors live in
/// unreliable regions (labels "V0".."Vm", "w", "r"); the Hessenberg,
/// rotations and scalars are reliable. Convergence is only declared after
/// the explicitly recomputed residual passes the tolerance.
SolverReport gmres(SimCluster& cluster, const CsrMatrix& A, const DistVector& b,
                   DistVector& x, const SolverConfig& config,
                   ArnoldiObserver* observer = nullptr);

/// GMRES with per-step validation of Arnoldi invariants:
///   C1  finiteness of the consumed column, the candidate and the H column;
///   C2  bound and consistency suite: |h_ij| growth bound, pre/post norm
///       (Pythagoras) consistency, consumed-column unit norm, and a
///       bit-exact read-back of the diagonal Gram-Schmidt coefficient;
///   C3  residual-estimate monotonicity (within a slack factor).
/// Policy decides whether violations are recorded, tolerated, or roll the
/// cycle back to the last verified iterate.
SolverReport skeptical_gmres(SimCluster& cluster, const CsrMatrix& A, const DistVector& b,
                             DistVector& x, const SolverConfig& config,
                             ArnoldiObserver* observer = nullptr);

/// Flexible outer iteration in reliable storage around an unreliable inner
/// GMRES. Each inner result is promoted, validated (finite and reducing the
/// true inner residual), and otherwise replaced by the unpreconditioned
/// direction; outer convergence comes from the explicit residual only.
SolverReport ft_gmres(SimCluster& cluster, const CsrMatrix& A, const DistVector& b,
                      DistVector& x, const SolverConfig& outer_config,
                      const SolverConfig& inner_config);

/// Depth-1 pipelined GMRES: one fused nonblocking reduction per iteration,
/// overlapped with the next (speculative) sparse matrix-vector product.
/// Matches the synchronous iteration in exact arithmetic.
SolverReport pipelined_gmres(SimCluster& cluster, const CsrMatrix& A, const DistVector& b,
                             DistVector& x, const SolverConfig& config);

/// ||b - A x|| / ||b|| recomputed out-of-band (no simulated time).
double true_relative_residual(const CsrMatrix& A, const DistVector& b, const DistVector& x);

}  // namespace ftsim
