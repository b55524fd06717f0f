#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ftsim/fault_plan.hpp"
#include "ftsim/heat.hpp"
#include "ftsim/sim_cluster.hpp"
#include "ftsim/solvers.hpp"

namespace ftsim {

enum class Experiment : std::uint8_t {
  Gmres,
  SkepticalGmres,
  FtGmres,
  PipelinedVsSync,
  HeatLflr,
};

const char* experiment_name(Experiment e);

struct ProblemSpec {
  enum class Kind : std::uint8_t { Laplace1d, Laplace2d, Diag, MatrixMarket, Heat };
  Kind kind = Kind::Laplace2d;
  std::int64_t n = 0;        // laplace1d / diag(1..n)
  std::int64_t nx = 16, ny = 16;
  std::vector<double> diag_values;  // explicit diag entries, optional
  std::string path;                 // matrix market file
  HeatConfig heat{};
};

struct FaultSpec {
  enum class Kind : std::uint8_t { None, Explicit, Random };
  Kind kind = Kind::None;
  std::vector<FaultEvent> events;  // explicit
  RandomCampaignSpec random{};     // targets filled in from the experiment schema
  std::vector<std::string> target_labels;  // optional label filter for random plans
};

struct CampaignConfig {
  Experiment experiment = Experiment::Gmres;
  std::vector<std::uint64_t> seeds;
  ClusterConfig cluster{};
  ProblemSpec problem{};
  SolverConfig solver{};
  SolverConfig inner_solver{};  // ft_gmres only
  FaultSpec faults{};
  std::string rhs_kind = "ones";  // "ones" | "e1" | "random"
  std::string output_dir = "out";

  static CampaignConfig from_json_text(const std::string& text);
  static CampaignConfig from_file(const std::string& path);
};

struct RunRecord {
  std::string run_id;
  std::string arm;
  std::uint64_t seed = 0;
  SolverReport solver_report;
  HeatRunResult heat_result;
  bool is_heat = false;
  std::string error;  // nonempty when the run aborted
  std::uint64_t fault_digest = 0;
  std::uint64_t ledger_digest = 0;
  std::uint64_t injected_faults = 0;
  std::uint64_t skipped_faults = 0;
  std::uint64_t field_digest = 0;  // heat arms
};

struct CampaignSummary {
  int exit_code = 0;
  std::vector<RunRecord> runs;
  std::string summary_json;  // serialized summary (with timestamp field)
};

/// Runs every (seed, arm) pair, writing runs.jsonl, residuals.csv and
/// summary.json under `out_dir`. Arms of comparative experiments share the
/// fault plan seed-for-seed. Returns exit code 0 on success, 2 on config
/// errors, 3 when any run hit an unrecoverable failure or persistent
/// corruption.
CampaignSummary run_campaign(const CampaignConfig& config, const std::string& out_dir,
                             const std::optional<std::vector<std::uint64_t>>& seed_override = {},
                             const std::optional<std::string>& arm_filter = {});

struct Diagnostic {
  std::string field;
  std::string message;
};

/// Schema plus semantic validation without running anything.
std::vector<Diagnostic> validate_config_text(const std::string& text);
std::vector<Diagnostic> validate_config_file(const std::string& path);

/// Arms an experiment runs, in order.
std::vector<std::string> experiment_arms(Experiment e);

/// The per-rank unreliable region labels a solver experiment exposes to
/// fault plans, with their block lengths; used to build random campaigns
/// and to pre-register regions before plan validation.
std::vector<TargetRegion> solver_target_regions(const SolverConfig& solver, std::int64_t n,
                                                int n_ranks);

/// Builds the matrix for a (non-heat) problem spec.
CsrMatrix build_matrix(const ProblemSpec& problem, int n_ranks);

/// Deterministic right-hand side for a problem.
std::vector<double> build_rhs(const std::string& rhs_kind, std::int64_t n, std::uint64_t seed);

}  // namespace ftsim
