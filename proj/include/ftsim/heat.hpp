#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ftsim/fault_plan.hpp"
#include "ftsim/lflr.hpp"
#include "ftsim/sim_cluster.hpp"

namespace ftsim {

/// Forward-Euler 3-point stencil for u_t = alpha u_xx on interior points
/// x_i = (i+1) dx, with Dirichlet values held at both ends. The stability
/// bound dt <= dx^2 / (2 alpha) is enforced at construction.
struct HeatConfig {
  std::int64_t n_global = 32;  // interior grid points
  double alpha = 1.0;
  double dx = 1.0;
  double dt = 0.25;
  std::int64_t n_steps = 100;
  double left_value = 0.0;
  double right_value = 0.0;
  std::int64_t persist_interval = 20;  // steps between persists
  double step_cost = 1.0;              // simulated compute units per step

  void validate() const;  // throws ConfigError on CFL violation etc.
  double r() const { return alpha * dt / (dx * dx); }
};

struct HeatRunResult {
  std::vector<double> final_field;  // gathered interior values
  std::int64_t steps = 0;
  std::vector<RecoveryReport> recoveries;
  double simulated_elapsed = 0.0;
};

/// Time-steps the field without any persistence machinery. Deterministic
/// and bit-identical for every rank count.
HeatRunResult run_plain(SimCluster& cluster, const HeatConfig& config,
                        std::span<const double> initial);

/// Full run with periodic persists, sender-side halo history retention, and
/// local recovery on rank failure: a respawned rank restores its last
/// persisted block and replays the missed steps from the neighbors'
/// retained outgoing halo values. Recoverable failures leave the final
/// field bit-identical to the fault-free run.
HeatRunResult run_with_lflr(SimCluster& cluster, const HeatConfig& config,
                            std::span<const double> initial,
                            const FaultPlan& plan,
                            PersistOptions persist_opts = {});

/// Max |u_i - linear steady profile| after running `config.n_steps` steps
/// from a zero field; the oracle for the diffusion physics.
double steady_state_check(const HeatConfig& config, int n_ranks, std::uint64_t seed = 0);

}  // namespace ftsim
