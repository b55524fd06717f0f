#include "ftsim/campaign.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace ftsim {

using njson = nlohmann::ordered_json;

const char* experiment_name(Experiment e) {
  switch (e) {
    case Experiment::Gmres: return "gmres";
    case Experiment::SkepticalGmres: return "skeptical_gmres";
    case Experiment::FtGmres: return "ft_gmres";
    case Experiment::PipelinedVsSync: return "pipelined_vs_sync";
    case Experiment::HeatLflr: return "heat_lflr";
  }
  return "?";
}

namespace {

Experiment experiment_from_name(const std::string& s) {
  if (s == "gmres") return Experiment::Gmres;
  if (s == "skeptical_gmres") return Experiment::SkepticalGmres;
  if (s == "ft_gmres") return Experiment::FtGmres;
  if (s == "pipelined_vs_sync") return Experiment::PipelinedVsSync;
  if (s == "heat_lflr") return Experiment::HeatLflr;
  throw ConfigError("unknown experiment: " + s);
}

std::vector<std::uint64_t> parse_seed_range(const std::string& text) {
  const auto pos = text.find("..");
  if (pos == std::string::npos) throw ConfigError("seed range must look like a..b");
  const std::uint64_t lo = std::stoull(text.substr(0, pos));
  const std::uint64_t hi = std::stoull(text.substr(pos + 2));
  if (hi < lo) throw ConfigError("seed range is empty");
  std::vector<std::uint64_t> out;
  for (std::uint64_t s = lo; s <= hi; ++s) out.push_back(s);
  return out;
}

JitterModel parse_jitter(const njson& j) {
  if (j.is_null()) return JitterModel::none();
  const std::string kind = j.value("kind", "none");
  if (kind == "none") return JitterModel::none();
  if (kind == "uniform")
    return JitterModel::uniform(j.value("lo", 0.0), j.value("hi", 1.0));
  if (kind == "lognormal")
    return JitterModel::lognormal(j.value("mu", 0.0), j.value("sigma", 0.25));
  throw ConfigError("unknown jitter kind: " + kind);
}

SolverConfig parse_solver(const njson& j, const SolverConfig& defaults) {
  SolverConfig s = defaults;
  if (j.is_null()) return s;
  s.restart = j.value("restart", s.restart);
  s.tol = j.value("tol", s.tol);
  s.maxit = j.value("maxit", s.maxit);
  s.pipeline_depth = j.value("pipeline_depth", s.pipeline_depth);
  if (j.contains("policy")) s.policy = policy_from_name(j.at("policy").get<std::string>());
  s.orthogonality_audit = j.value("orthogonality_audit", s.orthogonality_audit);
  s.max_reject_retries = j.value("max_reject_retries", s.max_reject_retries);
  s.iteration_cost = j.value("iteration_cost", s.iteration_cost);
  if (j.contains("checks")) {
    const auto& c = j.at("checks");
    s.checks.orth_tol = c.value("orth_tol", s.checks.orth_tol);
    s.checks.norm_growth_factor = c.value("norm_growth_factor", s.checks.norm_growth_factor);
    s.checks.residual_increase_tol =
        c.value("residual_increase_tol", s.checks.residual_increase_tol);
  }
  return s;
}

FaultEvent parse_event(const njson& j) {
  FaultEvent ev;
  ev.time = ticks_from_units(j.at("time").get<double>());
  const std::string type = j.at("type").get<std::string>();
  if (type == "bit_flip") {
    BitFlipFault f;
    f.rank = j.at("rank").get<int>();
    f.region = j.at("region").get<std::string>();
    f.element = j.value("element", 0);
    f.bit = j.at("bit").get<int>();
    ev.kind = f;
  } else if (type == "rank_kill") {
    RankKillFault k;
    k.rank = j.at("rank").get<int>();
    ev.kind = k;
  } else {
    throw ConfigError("unknown fault event type: " + type);
  }
  return ev;
}

CampaignConfig parse_config(const njson& j) {
  CampaignConfig c;
  c.experiment = experiment_from_name(j.at("experiment").get<std::string>());

  if (!j.contains("seeds")) throw ConfigError("config needs a seeds list");
  const auto& seeds = j.at("seeds");
  if (seeds.is_string()) {
    c.seeds = parse_seed_range(seeds.get<std::string>());
  } else if (seeds.is_array()) {
    for (const auto& s : seeds) c.seeds.push_back(s.get<std::uint64_t>());
  } else {
    throw ConfigError("seeds must be a list or a range string");
  }
  if (c.seeds.empty()) throw ConfigError("seeds list is empty");

  if (j.contains("cluster")) {
    const auto& cl = j.at("cluster");
    c.cluster.n_ranks = cl.value("n_ranks", 1);
    c.cluster.base_latency = cl.value("base_latency", 0.0);
    c.cluster.p2p_latency = cl.value("p2p_latency", 0.0);
    if (cl.contains("jitter")) c.cluster.jitter = parse_jitter(cl.at("jitter"));
  }

  if (j.contains("problem")) {
    const auto& p = j.at("problem");
    const std::string kind = p.value("kind", "laplace2d");
    if (kind == "laplace1d") {
      c.problem.kind = ProblemSpec::Kind::Laplace1d;
      c.problem.n = p.at("n").get<std::int64_t>();
    } else if (kind == "laplace2d") {
      c.problem.kind = ProblemSpec::Kind::Laplace2d;
      c.problem.nx = p.value("nx", 16);
      c.problem.ny = p.value("ny", 16);
    } else if (kind == "diag") {
      c.problem.kind = ProblemSpec::Kind::Diag;
      if (p.contains("values"))
        c.problem.diag_values = p.at("values").get<std::vector<double>>();
      else
        c.problem.n = p.at("n").get<std::int64_t>();
    } else if (kind == "matrix_market") {
      c.problem.kind = ProblemSpec::Kind::MatrixMarket;
      c.problem.path = p.at("path").get<std::string>();
    } else if (kind == "heat") {
      c.problem.kind = ProblemSpec::Kind::Heat;
      auto& h = c.problem.heat;
      h.n_global = p.value("n_global", h.n_global);
      h.alpha = p.value("alpha", h.alpha);
      h.dx = p.value("dx", h.dx);
      h.dt = p.value("dt", h.dt);
      h.n_steps = p.value("n_steps", h.n_steps);
      h.left_value = p.value("left", h.left_value);
      h.right_value = p.value("right", h.right_value);
      h.persist_interval = p.value("persist_interval", h.persist_interval);
      h.step_cost = p.value("step_cost", h.step_cost);
    } else {
      throw ConfigError("unknown problem kind: " + kind);
    }
  }

  if (j.contains("solver")) c.solver = parse_solver(j.at("solver"), c.solver);
  {
    SolverConfig inner_defaults;
    inner_defaults.restart = 25;
    inner_defaults.maxit = 25;
    inner_defaults.tol = 1e-14;
    c.inner_solver = inner_defaults;
    if (j.contains("solver") && j.at("solver").contains("inner"))
      c.inner_solver = parse_solver(j.at("solver").at("inner"), inner_defaults);
  }

  if (j.contains("faults")) {
    const auto& f = j.at("faults");
    const std::string kind = f.value("kind", "none");
    if (kind == "none") {
      c.faults.kind = FaultSpec::Kind::None;
    } else if (kind == "explicit") {
      c.faults.kind = FaultSpec::Kind::Explicit;
      for (const auto& e : f.at("events")) c.faults.events.push_back(parse_event(e));
    } else if (kind == "random") {
      c.faults.kind = FaultSpec::Kind::Random;
      c.faults.random.rate = f.value("rate", 0.0);
      c.faults.random.horizon = f.value("horizon", 0.0);
      c.faults.random.bit_flip_weight = f.value("bit_flip_weight", 1.0);
      c.faults.random.rank_kill_weight = f.value("rank_kill_weight", 0.0);
      c.faults.random.bit_lo = f.value("bit_lo", 52);
      c.faults.random.bit_hi = f.value("bit_hi", 62);
      if (f.contains("targets"))
        c.faults.target_labels = f.at("targets").get<std::vector<std::string>>();
    } else {
      throw ConfigError("unknown faults kind: " + kind);
    }
  }

  if (j.contains("rhs")) {
    const auto& rhs = j.at("rhs");
    c.rhs_kind = rhs.is_string() ? rhs.get<std::string>() : rhs.value("kind", "ones");
  }
  if (j.contains("output")) c.output_dir = j.at("output").value("dir", c.output_dir);
  return c;
}

}  // namespace

CampaignConfig CampaignConfig::from_json_text(const std::string& text) {
  njson j;
  try {
    j = njson::parse(text);
  } catch (const njson::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  try {
    return parse_config(j);
  } catch (const njson::exception& e) {
    throw ConfigError(std::string("bad config field: ") + e.what());
  }
}

CampaignConfig CampaignConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

std::vector<std::string> experiment_arms(Experiment e) {
  switch (e) {
    case Experiment::Gmres: return {"gmres"};
    case Experiment::SkepticalGmres: return {"gmres", "skeptical"};
    case Experiment::FtGmres: return {"gmres", "ft_gmres"};
    case Experiment::PipelinedVsSync: return {"sync", "pipelined"};
    case Experiment::HeatLflr: return {"fault_free", "lflr"};
  }
  return {};
}

CsrMatrix build_matrix(const ProblemSpec& problem, int n_ranks) {
  switch (problem.kind) {
    case ProblemSpec::Kind::Laplace1d:
      return CsrMatrix::laplace1d(problem.n, n_ranks);
    case ProblemSpec::Kind::Laplace2d:
      return CsrMatrix::laplace2d(problem.nx, problem.ny, n_ranks);
    case ProblemSpec::Kind::Diag: {
      if (!problem.diag_values.empty())
        return CsrMatrix::diagonal(problem.diag_values, n_ranks);
      std::vector<double> vals;
      for (std::int64_t i = 1; i <= problem.n; ++i)
        vals.push_back(static_cast<double>(i));
      return CsrMatrix::diagonal(vals, n_ranks);
    }
    case ProblemSpec::Kind::MatrixMarket:
      return CsrMatrix::load_matrix_market(problem.path, n_ranks);
    case ProblemSpec::Kind::Heat:
      throw UsageError("heat problems carry no matrix");
  }
  throw UsageError("unreachable");
}

std::vector<double> build_rhs(const std::string& rhs_kind, std::int64_t n,
                              std::uint64_t seed) {
  std::vector<double> b(static_cast<std::size_t>(n), 0.0);
  if (rhs_kind == "ones") {
    std::fill(b.begin(), b.end(), 1.0);
  } else if (rhs_kind == "e1") {
    if (!b.empty()) b[0] = 1.0;
  } else if (rhs_kind == "random") {
    RngStream rng(seed, 0xb0b5ULL);
    for (auto& v : b) v = rng.uniform(-1.0, 1.0);
  } else {
    throw ConfigError("unknown rhs kind: " + rhs_kind);
  }
  return b;
}

std::vector<TargetRegion> solver_target_regions(const SolverConfig& solver, std::int64_t n,
                                                int n_ranks) {
  const Partition part{n_ranks, n};
  std::int64_t min_len = n;
  for (int r = 0; r < n_ranks; ++r) min_len = std::min(min_len, part.local_n(r));
  std::vector<TargetRegion> out;
  for (int i = 0; i <= solver.restart; ++i)
    out.push_back({"V" + std::to_string(i), min_len});
  out.push_back({"w", min_len});
  out.push_back({"r", min_len});
  return out;
}

namespace {

njson detections_json(const std::vector<Detection>& ds) {
  njson arr = njson::array();
  for (const auto& d : ds) {
    njson e;
    e["iteration"] = d.iteration;
    e["check"] = d.check;
    e["observed"] = d.observed;
    e["threshold"] = d.threshold;
    e["detail"] = d.detail;
    e["clock"] = d.time_units;
    arr.push_back(std::move(e));
  }
  return arr;
}

njson solver_report_json(const SolverReport& r) {
  njson j;
  j["converged"] = r.converged;
  j["outcome"] = outcome_name(r.outcome);
  j["iterations"] = r.iterations;
  j["final_true_residual"] = r.final_true_residual;
  j["simulated_elapsed"] = r.simulated_elapsed;
  j["inner_rejections"] = r.inner_rejections;
  j["rejected_cycles"] = r.rejected_cycles;
  j["fallback_norm_recomputes"] = r.fallback_norm_recomputes;
  j["detections"] = detections_json(r.detections);
  j["residual_history"] = r.residual_history;
  return j;
}

njson recovery_json(const RecoveryReport& r) {
  njson j;
  j["rank"] = r.rank;
  j["failed_at"] = r.failed_at;
  j["recovered_at"] = r.recovered_at;
  j["duration"] = r.duration;
  j["bytes_transferred"] = r.bytes_transferred;
  j["ranks_involved"] = r.ranks_involved;
  j["keys_restored"] = r.keys_restored;
  j["degraded_redundancy"] = r.degraded_redundancy;
  return j;
}

std::uint64_t field_digest(const std::vector<double>& field) {
  std::string bytes(reinterpret_cast<const char*>(field.data()),
                    field.size() * sizeof(double));
  return fnv1a64(bytes);
}

struct ArmOutcome {
  RunRecord record;
  bool unrecoverable = false;
};

FaultPlan plan_for_seed(const CampaignConfig& cfg, std::uint64_t seed, std::int64_t n) {
  switch (cfg.faults.kind) {
    case FaultSpec::Kind::None:
      return FaultPlan{};
    case FaultSpec::Kind::Explicit: {
      ExplicitSpec ex;
      ex.events = cfg.faults.events;
      return build_plan(ex, seed);
    }
    case FaultSpec::Kind::Random: {
      RandomCampaignSpec rc = cfg.faults.random;
      rc.n_ranks = cfg.cluster.n_ranks;
      if (cfg.problem.kind == ProblemSpec::Kind::Heat) {
        const Partition part{cfg.cluster.n_ranks, cfg.problem.heat.n_global};
        std::int64_t min_len = cfg.problem.heat.n_global;
        for (int r = 0; r < cfg.cluster.n_ranks; ++r)
          min_len = std::min(min_len, part.local_n(r));
        rc.targets = {{"u", min_len}};
      } else {
        rc.targets = solver_target_regions(cfg.solver, n, cfg.cluster.n_ranks);
      }
      if (!cfg.faults.target_labels.empty()) {
        std::vector<TargetRegion> filtered;
        for (const auto& t : rc.targets)
          if (std::find(cfg.faults.target_labels.begin(), cfg.faults.target_labels.end(),
                        t.label) != cfg.faults.target_labels.end())
            filtered.push_back(t);
        rc.targets = std::move(filtered);
      }
      return build_plan(rc, seed);
    }
  }
  return FaultPlan{};
}

ArmOutcome run_solver_arm(const CampaignConfig& cfg, const std::string& arm,
                          std::uint64_t seed, const CsrMatrix& A_proto,
                          const FaultPlan& plan) {
  ArmOutcome out;
  out.record.arm = arm;
  out.record.seed = seed;
  out.record.fault_digest = plan.digest();

  ClusterConfig cc = cfg.cluster;
  cc.seed = seed;
  SimCluster cluster(cc);
  const CsrMatrix A = A_proto;  // same partition for every arm
  const std::int64_t n = A.n();

  const RegionKind x_kind =
      arm == "ft_gmres" ? RegionKind::Reliable : RegionKind::Unreliable;
  DistVector x(cluster, n, x_kind, "x");
  DistVector b(cluster, n, RegionKind::Reliable, "b");
  b.scatter(build_rhs(cfg.rhs_kind, n, seed));

  // Pre-register the shared fault-target labels so the plan can be
  // validated before the solver starts.
  const int max_restart = std::max(cfg.solver.restart, cfg.inner_solver.restart);
  SolverConfig reg = cfg.solver;
  reg.restart = max_restart;
  for (const auto& t : solver_target_regions(reg, n, cluster.n_ranks())) {
    const Partition part{cluster.n_ranks(), n};
    for (int r = 0; r < cluster.n_ranks(); ++r)
      cluster.region_or_alloc(r, RegionKind::Unreliable, t.label,
                              static_cast<std::size_t>(part.local_n(r)));
  }
  cluster.attach_fault_plan(plan);

  SolverConfig scfg = cfg.solver;
  scfg.record_true_residuals = true;
  try {
    if (arm == "gmres") {
      out.record.solver_report = gmres(cluster, A, b, x, scfg);
    } else if (arm == "skeptical") {
      if (scfg.policy == SkepticalPolicy::Off) scfg.policy = SkepticalPolicy::DetectOnly;
      out.record.solver_report = skeptical_gmres(cluster, A, b, x, scfg);
    } else if (arm == "ft_gmres") {
      out.record.solver_report = ft_gmres(cluster, A, b, x, scfg, cfg.inner_solver);
    } else if (arm == "sync") {
      scfg.pipeline_depth = 0;
      out.record.solver_report = gmres(cluster, A, b, x, scfg);
    } else if (arm == "pipelined") {
      scfg.pipeline_depth = 1;
      out.record.solver_report = pipelined_gmres(cluster, A, b, x, scfg);
    } else {
      throw ConfigError("unknown arm: " + arm);
    }
  } catch (const PersistentCorruptionError& e) {
    out.record.error = e.what();
    out.unrecoverable = true;
  } catch (const RankFailureError& e) {
    out.record.error = e.what();
  }
  if (out.record.solver_report.outcome == SolveOutcome::PersistentCorruption)
    out.unrecoverable = true;

  out.record.ledger_digest = cluster.ledger().digest();
  out.record.injected_faults = cluster.ledger().count(LedgerKind::FaultInjected);
  out.record.skipped_faults = cluster.ledger().count(LedgerKind::FaultSkipped);
  return out;
}

ArmOutcome run_heat_arm(const CampaignConfig& cfg, const std::string& arm,
                        std::uint64_t seed, const FaultPlan& plan) {
  ArmOutcome out;
  out.record.arm = arm;
  out.record.seed = seed;
  out.record.is_heat = true;
  out.record.fault_digest = plan.digest();

  ClusterConfig cc = cfg.cluster;
  cc.seed = seed;
  SimCluster cluster(cc);
  const auto& h = cfg.problem.heat;
  // deterministic bump-shaped initial field
  std::vector<double> initial(static_cast<std::size_t>(h.n_global));
  for (std::size_t i = 0; i < initial.size(); ++i) {
    const double xi = static_cast<double>(i + 1) / (static_cast<double>(h.n_global) + 1.0);
    initial[i] = std::sin(3.14159265358979323846 * xi);
  }
  try {
    const FaultPlan empty{};
    out.record.heat_result =
        run_with_lflr(cluster, h, initial, arm == "lflr" ? plan : empty);
    out.record.field_digest = field_digest(out.record.heat_result.final_field);
  } catch (const UnrecoverableFailureError& e) {
    out.record.error = e.what();
    out.unrecoverable = true;
  } catch (const RankFailureError& e) {
    out.record.error = e.what();
  }
  out.record.ledger_digest = cluster.ledger().digest();
  out.record.injected_faults = cluster.ledger().count(LedgerKind::FaultInjected);
  out.record.skipped_faults = cluster.ledger().count(LedgerKind::FaultSkipped);
  return out;
}

}  // namespace

CampaignSummary run_campaign(const CampaignConfig& config, const std::string& out_dir,
                             const std::optional<std::vector<std::uint64_t>>& seed_override,
                             const std::optional<std::string>& arm_filter) {
  CampaignSummary summary;
  const std::vector<std::uint64_t> seeds = seed_override.value_or(config.seeds);
  if (seeds.empty()) throw ConfigError("no seeds to run");

  std::vector<std::string> arms = experiment_arms(config.experiment);
  if (arm_filter.has_value()) {
    if (std::find(arms.begin(), arms.end(), *arm_filter) == arms.end())
      throw ConfigError("experiment has no arm named '" + *arm_filter + "'");
    arms = {*arm_filter};
  }

  const bool is_heat = config.experiment == Experiment::HeatLflr;
  if (is_heat && config.problem.kind != ProblemSpec::Kind::Heat)
    throw ConfigError("heat_lflr needs a heat problem");
  if (!is_heat && config.problem.kind == ProblemSpec::Kind::Heat)
    throw ConfigError("solver experiments need a matrix problem");
  if (config.solver.pipeline_depth != 0 && config.solver.pipeline_depth != 1)
    throw ConfigError("pipeline_depth must be 0 or 1");

  CsrMatrix A;
  std::int64_t n = 0;
  if (!is_heat) {
    A = build_matrix(config.problem, config.cluster.n_ranks);
    n = A.n();
  } else {
    config.problem.heat.validate();
  }

  std::filesystem::create_directories(out_dir);
  std::ofstream runs_out(out_dir + "/runs.jsonl");
  std::ofstream csv_out(out_dir + "/residuals.csv");
  if (!runs_out || !csv_out) throw ConfigError("cannot write outputs under " + out_dir);
  csv_out << "run_id,arm,seed,iteration,residual_estimate,true_residual,clock\n";

  bool any_unrecoverable = false;
  int run_index = 0;
  for (std::uint64_t seed : seeds) {
    const FaultPlan plan = plan_for_seed(config, seed, n);
    for (const auto& arm : arms) {
      ArmOutcome outcome = is_heat ? run_heat_arm(config, arm, seed, plan)
                                   : run_solver_arm(config, arm, seed, A, plan);
      outcome.record.run_id =
          std::string(experiment_name(config.experiment)) + "-" + std::to_string(run_index++);
      any_unrecoverable = any_unrecoverable || outcome.unrecoverable;

      njson j;
      j["run_id"] = outcome.record.run_id;
      j["experiment"] = experiment_name(config.experiment);
      j["arm"] = outcome.record.arm;
      j["seed"] = outcome.record.seed;
      j["error"] = outcome.record.error;
      j["fault_plan_digest"] = outcome.record.fault_digest;
      j["ledger_digest"] = outcome.record.ledger_digest;
      j["faults_injected"] = outcome.record.injected_faults;
      j["faults_skipped"] = outcome.record.skipped_faults;
      if (outcome.record.is_heat) {
        njson hj;
        hj["steps"] = outcome.record.heat_result.steps;
        hj["field_digest"] = outcome.record.field_digest;
        hj["simulated_elapsed"] = outcome.record.heat_result.simulated_elapsed;
        njson recs = njson::array();
        for (const auto& rr : outcome.record.heat_result.recoveries)
          recs.push_back(recovery_json(rr));
        hj["recoveries"] = recs;
        j["heat"] = hj;
      } else {
        j["report"] = solver_report_json(outcome.record.solver_report);
      }
      runs_out << j.dump() << "\n";

      if (!outcome.record.is_heat) {
        const auto& rep = outcome.record.solver_report;
        char line[256];
        for (std::size_t i = 0; i < rep.residual_history.size(); ++i) {
          const double tr = i < rep.true_residual_history.size()
                                ? rep.true_residual_history[i]
                                : std::nan("");
          const double clk = i < rep.clock_history.size() ? rep.clock_history[i] : 0.0;
          std::snprintf(line, sizeof(line), "%s,%s,%llu,%zu,%.17g,%.17g,%.17g\n",
                        outcome.record.run_id.c_str(), outcome.record.arm.c_str(),
                        static_cast<unsigned long long>(outcome.record.seed), i,
                        rep.residual_history[i], tr, clk);
          csv_out << line;
        }
      }
      summary.runs.push_back(std::move(outcome.record));
    }
  }

  // summary aggregation
  njson per_arm = njson::object();
  for (const auto& arm : arms) {
    int count = 0, converged = 0, errors = 0;
    double iter_sum = 0.0, elapsed_sum = 0.0;
    std::int64_t detections = 0, rejections = 0, recoveries = 0;
    for (const auto& rec : summary.runs) {
      if (rec.arm != arm) continue;
      ++count;
      if (!rec.error.empty()) ++errors;
      if (rec.is_heat) {
        recoveries += static_cast<std::int64_t>(rec.heat_result.recoveries.size());
        elapsed_sum += rec.heat_result.simulated_elapsed;
      } else {
        const auto& rep = rec.solver_report;
        if (rep.converged) ++converged;
        iter_sum += rep.iterations;
        elapsed_sum += rep.simulated_elapsed;
        detections += static_cast<std::int64_t>(rep.detections.size());
        rejections += rep.inner_rejections;
      }
    }
    njson a;
    a["runs"] = count;
    a["converged"] = converged;
    a["errors"] = errors;
    a["mean_iterations"] = count > 0 ? iter_sum / count : 0.0;
    a["mean_simulated_elapsed"] = count > 0 ? elapsed_sum / count : 0.0;
    a["detections"] = detections;
    a["inner_rejections"] = rejections;
    a["recoveries"] = recoveries;
    per_arm[arm] = a;
  }

  summary.exit_code = any_unrecoverable ? 3 : 0;

  njson top;
  top["experiment"] = experiment_name(config.experiment);
  top["seeds"] = seeds;
  top["arms"] = per_arm;
  top["exit_code"] = summary.exit_code;
  top["timestamp"] = "";  // excluded from reproducibility comparisons
  {
    std::time_t now = std::time(nullptr);
    char buf[64];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    top["timestamp"] = buf;
  }
  summary.summary_json = top.dump(2);
  std::ofstream sum_out(out_dir + "/summary.json");
  sum_out << summary.summary_json << "\n";
  return summary;
}

std::vector<Diagnostic> validate_config_text(const std::string& text) {
  std::vector<Diagnostic> out;
  CampaignConfig cfg;
  try {
    cfg = CampaignConfig::from_json_text(text);
  } catch (const ConfigError& e) {
    out.push_back({"config", e.what()});
    return out;
  }

  if (cfg.solver.tol <= 0.0) out.push_back({"solver.tol", "tolerance must be > 0"});
  if (cfg.solver.restart < 1) out.push_back({"solver.restart", "restart must be >= 1"});
  if (cfg.solver.pipeline_depth != 0 && cfg.solver.pipeline_depth != 1)
    out.push_back({"solver.pipeline_depth", "pipeline depth must be 0 or 1"});
  if (cfg.faults.kind == FaultSpec::Kind::Random && cfg.faults.random.rate < 0.0)
    out.push_back({"faults.rate", "rate must be >= 0"});

  if (cfg.problem.kind == ProblemSpec::Kind::Heat) {
    try {
      cfg.problem.heat.validate();
    } catch (const ConfigError& e) {
      out.push_back({"problem.heat", e.what()});
    }
  } else if (cfg.problem.kind == ProblemSpec::Kind::MatrixMarket) {
    std::ifstream probe(cfg.problem.path);
    if (!probe)
      out.push_back({"problem.path", "cannot read matrix file: " + cfg.problem.path});
  }

  // bit flips may only target unreliable labels
  std::vector<std::string> unreliable;
  if (cfg.problem.kind == ProblemSpec::Kind::Heat) {
    unreliable = {"u"};
  } else {
    const int max_restart = std::max(cfg.solver.restart, cfg.inner_solver.restart);
    for (int i = 0; i <= max_restart; ++i) unreliable.push_back("V" + std::to_string(i));
    for (int i = 0; i <= max_restart; ++i) unreliable.push_back("W" + std::to_string(i));
    unreliable.insert(unreliable.end(), {"w", "r", "x", "b_in", "z_in"});
  }
  if (cfg.faults.kind == FaultSpec::Kind::Explicit) {
    for (const auto& ev : cfg.faults.events) {
      if (const auto* f = std::get_if<BitFlipFault>(&ev.kind)) {
        if (f->bit < 0 || f->bit > 63)
          out.push_back({"faults.events", "bit index outside [0,63]: " + ev.describe()});
        if (std::find(unreliable.begin(), unreliable.end(), f->region) == unreliable.end())
          out.push_back({"faults.events",
                         "bit flip targets a reliable or unknown region: " + ev.describe()});
        if (f->rank < 0 || f->rank >= cfg.cluster.n_ranks)
          out.push_back({"faults.events", "rank out of range: " + ev.describe()});
      }
    }
  }
  if (cfg.faults.kind == FaultSpec::Kind::Random && !cfg.faults.target_labels.empty()) {
    for (const auto& lbl : cfg.faults.target_labels)
      if (std::find(unreliable.begin(), unreliable.end(), lbl) == unreliable.end())
        out.push_back({"faults.targets", "target is not an unreliable region: " + lbl});
  }
  return out;
}

std::vector<Diagnostic> validate_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) return {{"config", "cannot open config file: " + path}};
  std::stringstream ss;
  ss << in.rdbuf();
  return validate_config_text(ss.str());
}

}  // namespace ftsim
