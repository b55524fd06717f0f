#include <cmath>

#include "doctest.h"
#include "ftsim/csr_matrix.hpp"
#include "ftsim/fault_plan.hpp"
#include "ftsim/solvers.hpp"

using namespace ftsim;

namespace {

struct Setup {
  SimCluster cluster;
  CsrMatrix A;
  DistVector b;
  DistVector x;

  Setup(CsrMatrix matrix, int n_ranks, std::uint64_t seed = 0, double base_latency = 0.0,
        JitterModel jitter = JitterModel::none())
      : cluster({.n_ranks = n_ranks,
                 .seed = seed,
                 .jitter = jitter,
                 .base_latency = base_latency}),
        A(std::move(matrix)),
        b(cluster, A.n(), RegionKind::Reliable, "b"),
        x(cluster, A.n(), RegionKind::Unreliable, "x") {
    b.fill(1.0);
  }
};

CsrMatrix diag1to10(int p) {
  std::vector<double> v;
  for (int i = 1; i <= 10; ++i) v.push_back(i);
  return CsrMatrix::diagonal(v, p);
}

FaultEvent flip_at(double t, int rank, const std::string& region, std::int64_t elem, int bit) {
  FaultEvent ev;
  ev.time = ticks_from_units(t);
  ev.kind = BitFlipFault{rank, region, elem, bit};
  return ev;
}

FaultPlan explicit_plan(std::vector<FaultEvent> events) {
  ExplicitSpec spec;
  spec.events = std::move(events);
  return build_plan(spec, 0);
}

}  // namespace

TEST_CASE("gmres: scaled identity solves in one iteration") {
  Setup s(CsrMatrix::diagonal({2.0, 2.0}, 1), 1);
  s.b.scatter(std::vector<double>{2.0, 2.0});
  SolverConfig cfg;
  const auto rep = gmres(s.cluster, s.A, s.b, s.x, cfg);
  CHECK(rep.converged);
  CHECK(rep.iterations == 1);
  CHECK(s.x.gather()[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(s.x.gather()[1] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("gmres: diag(1,2) takes two iterations to the direct solution") {
  Setup s(CsrMatrix::diagonal({1.0, 2.0}, 1), 1);
  SolverConfig cfg;
  cfg.tol = 1e-12;
  const auto rep = gmres(s.cluster, s.A, s.b, s.x, cfg);
  CHECK(rep.converged);
  CHECK(rep.iterations == 2);
  const auto xs = s.x.gather();
  CHECK(std::abs(xs[0] - 1.0) < 1e-12);
  CHECK(std::abs(xs[1] - 0.5) < 1e-12);
  CHECK(rep.residual_history.size() == static_cast<std::size_t>(rep.iterations) + 1);
}

TEST_CASE("gmres: maxit exceeded reports failure with history") {
  Setup s(CsrMatrix::laplace2d(8, 8, 2), 2);
  SolverConfig cfg;
  cfg.restart = 5;
  cfg.maxit = 7;
  cfg.tol = 1e-14;
  const auto rep = gmres(s.cluster, s.A, s.b, s.x, cfg);
  CHECK_FALSE(rep.converged);
  CHECK(rep.outcome == SolveOutcome::MaxIterations);
  CHECK(rep.iterations == 7);
  CHECK(rep.residual_history.size() == 8);
}

TEST_CASE("fault-free skeptical run is bit-identical to plain gmres") {
  SolverConfig cfg;
  cfg.restart = 15;
  cfg.maxit = 200;
  cfg.tol = 1e-9;

  for (int variant = 0; variant < 2; ++variant) {
    CsrMatrix A = variant == 0 ? CsrMatrix::laplace2d(8, 8, 2) : diag1to10(2);
    Setup plain(A, 2);
    const auto ref = gmres(plain.cluster, plain.A, plain.b, plain.x, cfg);

    Setup skept(A, 2);
    SolverConfig scfg = cfg;
    scfg.policy = SkepticalPolicy::DetectOnly;
    const auto chk = skeptical_gmres(skept.cluster, skept.A, skept.b, skept.x, scfg);

    REQUIRE(ref.converged);
    REQUIRE(chk.converged);
    CHECK(chk.detections.empty());
    CHECK(ref.iterations == chk.iterations);
    CHECK(ref.residual_history == chk.residual_history);  // bit-exact
    CHECK(plain.x.gather() == skept.x.gather());          // bit-exact
  }
}

TEST_CASE("fault-free runs raise no detections even with the audit on") {
  SolverConfig cfg;
  cfg.restart = 12;
  cfg.tol = 1e-9;
  cfg.maxit = 150;
  cfg.policy = SkepticalPolicy::DetectOnly;
  cfg.orthogonality_audit = true;
  for (int variant = 0; variant < 2; ++variant) {
    Setup s(variant == 0 ? CsrMatrix::laplace2d(8, 8, 2) : diag1to10(2), 2);
    const auto rep = skeptical_gmres(s.cluster, s.A, s.b, s.x, cfg);
    CHECK(rep.converged);
    CHECK(rep.detections.empty());
  }
}

TEST_CASE("an exponent-bit flip into the consumed basis column is caught that iteration") {
  // bit 62 flip lands at the start-of-iteration poll of iteration 3 and must
  // be flagged by C1 or C2 at iteration 3
  Setup s(diag1to10(2), 2);
  s.cluster.attach_fault_plan(explicit_plan({flip_at(2.25, 0, "V2", 0, 62)}));
  SolverConfig cfg;
  cfg.restart = 10;
  cfg.policy = SkepticalPolicy::DetectOnly;
  const auto rep = skeptical_gmres(s.cluster, s.A, s.b, s.x, cfg);
  REQUIRE_FALSE(rep.detections.empty());
  const auto& d = rep.detections.front();
  CHECK(d.iteration == 3);
  CHECK((d.check == "C1" || d.check == "C2"));
}

TEST_CASE("a low-mantissa flip goes undetected but the answer still certifies") {
  Setup s(diag1to10(1), 1);
  s.cluster.attach_fault_plan(explicit_plan({flip_at(1.25, 0, "V1", 2, 0)}));
  SolverConfig cfg;
  cfg.restart = 10;
  cfg.maxit = 60;
  cfg.tol = 1e-8;
  cfg.policy = SkepticalPolicy::Continue;
  const auto rep = skeptical_gmres(s.cluster, s.A, s.b, s.x, cfg);
  CHECK(rep.detections.empty());  // below every threshold
  CHECK(rep.converged);
  CHECK(rep.final_true_residual <= cfg.tol);
}

TEST_CASE("reject-and-restart rolls back the corrupted cycle and still converges") {
  Setup s(diag1to10(2), 2);
  s.cluster.attach_fault_plan(explicit_plan({flip_at(3.25, 0, "V3", 0, 62)}));
  SolverConfig cfg;
  cfg.restart = 10;
  cfg.maxit = 80;
  cfg.policy = SkepticalPolicy::RejectAndRestart;
  const auto rep = skeptical_gmres(s.cluster, s.A, s.b, s.x, cfg);
  CHECK(rep.rejected_cycles >= 1);
  CHECK(rep.converged);
  CHECK(rep.final_true_residual <= cfg.tol);
}

TEST_CASE("corruption on every retry ends in a persistent-corruption verdict") {
  Setup s(diag1to10(2), 2);
  std::vector<FaultEvent> events;
  for (int k = 0; k < 40; ++k)
    events.push_back(flip_at(0.3 + static_cast<double>(k), 0, "V0", 0, 62));
  s.cluster.attach_fault_plan(explicit_plan(std::move(events)));
  SolverConfig cfg;
  cfg.restart = 10;
  cfg.maxit = 200;
  cfg.policy = SkepticalPolicy::RejectAndRestart;
  cfg.max_reject_retries = 3;
  const auto rep = skeptical_gmres(s.cluster, s.A, s.b, s.x, cfg);
  CHECK_FALSE(rep.converged);
  CHECK(rep.outcome == SolveOutcome::PersistentCorruption);
  CHECK(rep.rejected_cycles == 4);  // initial attempt plus three retries
}

TEST_CASE("continue policy records the hit and pushes through") {
  // bit 55 scales the element by 256: detectable, but mild enough that the
  // following restarts shed it
  Setup s(diag1to10(2), 2);
  s.cluster.attach_fault_plan(explicit_plan({flip_at(2.25, 0, "V2", 1, 55)}));
  SolverConfig cfg;
  cfg.restart = 10;
  cfg.maxit = 120;
  cfg.policy = SkepticalPolicy::Continue;
  const auto rep = skeptical_gmres(s.cluster, s.A, s.b, s.x, cfg);
  CHECK_FALSE(rep.detections.empty());
  CHECK(rep.converged);  // restarts shed the poisoned subspace
  CHECK(rep.final_true_residual <= cfg.tol);
}

TEST_CASE("ft_gmres without faults takes the identical code path every time") {
  SolverConfig outer;
  outer.restart = 20;
  outer.maxit = 20;
  outer.tol = 1e-9;
  SolverConfig inner;
  inner.restart = 8;
  inner.maxit = 8;
  inner.tol = 1e-14;

  auto run_once = [&](std::uint64_t seed) {
    Setup s(CsrMatrix::laplace2d(8, 8, 2), 2, seed);
    DistVector xr(s.cluster, s.A.n(), RegionKind::Reliable, "x_outer");
    const auto rep = ft_gmres(s.cluster, s.A, s.b, xr, outer, inner);
    return std::make_pair(rep, xr.gather());
  };
  const auto [rep1, x1] = run_once(3);
  const auto [rep2, x2] = run_once(3);
  CHECK(rep1.converged);
  CHECK(rep1.inner_rejections == 0);
  CHECK(rep1.residual_history == rep2.residual_history);
  CHECK(x1 == x2);
  CHECK(rep1.final_true_residual <= outer.tol);
}

TEST_CASE("a non-finite inner result is discarded for the residual direction") {
  SolverConfig outer;
  outer.restart = 20;
  outer.maxit = 20;
  outer.tol = 1e-9;
  SolverConfig inner;
  inner.restart = 8;
  inner.maxit = 8;
  inner.tol = 1e-14;

  Setup s(CsrMatrix::laplace2d(8, 8, 2), 2);
  DistVector xr(s.cluster, s.A.n(), RegionKind::Reliable, "x_outer");
  // lands inside the first inner solve and blows an inner basis column up
  s.cluster.attach_fault_plan(explicit_plan({flip_at(1.6, 0, "V0", 3, 62)}));
  const auto rep = ft_gmres(s.cluster, s.A, s.b, xr, outer, inner);
  CHECK(rep.inner_rejections >= 1);
  CHECK(rep.converged);
  CHECK(rep.final_true_residual <= outer.tol);
}

TEST_CASE("pipelined matches synchronous residuals without jitter") {
  SolverConfig cfg;
  cfg.restart = 30;
  cfg.maxit = 120;
  cfg.tol = 1e-9;

  for (int variant = 0; variant < 2; ++variant) {
    CsrMatrix A = variant == 0 ? CsrMatrix::laplace2d(8, 8, 2) : diag1to10(2);
    Setup sync_run(A, 2);
    const auto ref = gmres(sync_run.cluster, sync_run.A, sync_run.b, sync_run.x, cfg);

    Setup pipe_run(A, 2);
    SolverConfig pcfg = cfg;
    pcfg.pipeline_depth = 1;
    const auto pip =
        pipelined_gmres(pipe_run.cluster, pipe_run.A, pipe_run.b, pipe_run.x, pcfg);

    REQUIRE(ref.converged);
    REQUIRE(pip.converged);
    const std::size_t len = std::min(ref.residual_history.size(), pip.residual_history.size());
    for (std::size_t i = 0; i < len; ++i)
      CHECK(std::abs(ref.residual_history[i] - pip.residual_history[i]) <= 1e-10);
    CHECK(pip.final_true_residual <= cfg.tol);
  }
}

TEST_CASE("overlap makes the pipelined iteration cheaper when latency bites") {
  SolverConfig cfg;
  cfg.restart = 10;
  cfg.maxit = 10;
  cfg.tol = 1e-13;
  cfg.iteration_cost = 10.0;

  Setup sync_run(diag1to10(4), 4, 1, /*base_latency=*/10.0);
  const auto ref = gmres(sync_run.cluster, sync_run.A, sync_run.b, sync_run.x, cfg);

  Setup pipe_run(diag1to10(4), 4, 1, /*base_latency=*/10.0);
  SolverConfig pcfg = cfg;
  pcfg.pipeline_depth = 1;
  const auto pip = pipelined_gmres(pipe_run.cluster, pipe_run.A, pipe_run.b, pipe_run.x, pcfg);

  CHECK(pip.simulated_elapsed < ref.simulated_elapsed);
}

TEST_CASE("solver rejects bad configuration") {
  Setup s(diag1to10(1), 1);
  SolverConfig cfg;
  cfg.tol = 0.0;
  CHECK_THROWS_AS((void)gmres(s.cluster, s.A, s.b, s.x, cfg), ConfigError);
  cfg.tol = 1e-8;
  CHECK_THROWS_AS((void)skeptical_gmres(s.cluster, s.A, s.b, s.x, cfg), UsageError);
  cfg.pipeline_depth = 0;
  CHECK_THROWS_AS((void)pipelined_gmres(s.cluster, s.A, s.b, s.x, cfg), ConfigError);
}

TEST_CASE("detections carry observations beyond their thresholds") {
  Setup s(diag1to10(2), 2);
  s.cluster.attach_fault_plan(explicit_plan(
      {flip_at(1.25, 0, "V1", 0, 62), flip_at(4.75, 1, "V4", 0, 63)}));
  SolverConfig cfg;
  cfg.restart = 10;
  cfg.maxit = 80;
  cfg.policy = SkepticalPolicy::DetectOnly;
  const auto rep = skeptical_gmres(s.cluster, s.A, s.b, s.x, cfg);
  REQUIRE_FALSE(rep.detections.empty());
  for (const auto& d : rep.detections) CHECK(d.observed > d.threshold);
}
