#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "ftsim/heat.hpp"
#include "ftsim/rng.hpp"

using namespace ftsim;

namespace {

HeatConfig quarter(std::int64_t n, std::int64_t steps, std::int64_t persist = 20) {
  HeatConfig h;
  h.n_global = n;
  h.alpha = 1.0;
  h.dx = 1.0;
  h.dt = 0.25;  // r = 0.25
  h.n_steps = steps;
  h.persist_interval = persist;
  return h;
}

FaultPlan kill_plan(std::initializer_list<std::pair<double, int>> kills) {
  ExplicitSpec spec;
  for (const auto& [t, rank] : kills) {
    FaultEvent ev;
    ev.time = ticks_from_units(t);
    ev.kind = RankKillFault{rank};
    spec.events.push_back(ev);
  }
  return build_plan(spec, 0);
}

std::vector<double> random_field(std::int64_t n, std::uint64_t seed) {
  RngStream rng(seed, 0x6ea7);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (auto& v : out) v = rng.uniform(0.0, 1.0);
  return out;
}

}  // namespace

TEST_CASE("single step examples") {
  SUBCASE("constant field with matching boundaries is a fixed point") {
    HeatConfig h = quarter(5, 1);
    h.left_value = h.right_value = 0.7;
    SimCluster c({.n_ranks = 1, .seed = 0});
    std::vector<double> init(5, 0.7);
    const auto run = run_plain(c, h, init);
    CHECK(run.final_field == init);
  }
  SUBCASE("a unit spike halves with r = 1/4") {
    HeatConfig h = quarter(3, 1);
    SimCluster c({.n_ranks = 1, .seed = 0});
    const auto run = run_plain(c, h, std::vector<double>{0.0, 1.0, 0.0});
    CHECK(run.final_field[1] == 0.5);  // 1 + 0.25*(0 - 2 + 0)
  }
  SUBCASE("the linear profile is stationary") {
    HeatConfig h = quarter(6, 25);
    h.left_value = 0.0;
    h.right_value = 1.0;
    std::vector<double> init(6);
    for (int i = 0; i < 6; ++i) init[static_cast<std::size_t>(i)] = (i + 1) / 7.0;
    SimCluster c({.n_ranks = 2, .seed = 0});
    const auto run = run_plain(c, h, init);
    for (int i = 0; i < 6; ++i)
      CHECK(run.final_field[static_cast<std::size_t>(i)] ==
            doctest::Approx((i + 1) / 7.0).epsilon(1e-14));
  }
}

TEST_CASE("CFL violation is rejected at construction") {
  HeatConfig h = quarter(8, 1);
  h.dt = 0.51;  // dx^2/(2 alpha) = 0.5
  CHECK_THROWS_AS(h.validate(), ConfigError);
}

TEST_CASE("plain runs are bit-identical across rank counts") {
  HeatConfig h = quarter(37, 200);
  h.left_value = 0.2;
  h.right_value = 0.9;
  const auto init = random_field(37, 5);
  SimCluster c1({.n_ranks = 1, .seed = 0});
  SimCluster c4({.n_ranks = 4, .seed = 0});
  CHECK(run_plain(c1, h, init).final_field == run_plain(c4, h, init).final_field);
}

TEST_CASE("no faults: recovery-enabled run equals the plain run with zero recoveries") {
  HeatConfig h = quarter(24, 80, 10);
  const auto init = random_field(24, 6);
  SimCluster plain({.n_ranks = 4, .seed = 0});
  SimCluster lflr({.n_ranks = 4, .seed = 0});
  const auto a = run_plain(plain, h, init);
  const auto b = run_with_lflr(lflr, h, init, FaultPlan{});
  CHECK(a.final_field == b.final_field);
  CHECK(b.recoveries.empty());
}

TEST_CASE("a killed rank recovers to a bit-identical field") {
  HeatConfig h = quarter(32, 100, 20);
  h.left_value = 0.0;
  h.right_value = 1.0;
  const auto init = random_field(32, 7);

  SimCluster oracle({.n_ranks = 4, .seed = 0});
  const auto want = run_with_lflr(oracle, h, init, FaultPlan{});

  SimCluster faulty({.n_ranks = 4, .seed = 0});
  const auto got = run_with_lflr(faulty, h, init, kill_plan({{49.5, 1}}));

  REQUIRE(got.recoveries.size() == 1);
  CHECK(got.recoveries[0].rank == 1);
  CHECK(got.final_field == want.final_field);  // bit-exact
  CHECK(got.recoveries[0].bytes_transferred > 0);
}

TEST_CASE("recovery only talks to grid neighbors") {
  HeatConfig h = quarter(32, 60, 10);
  const auto init = random_field(32, 8);
  SimCluster c({.n_ranks = 4, .seed = 0});
  const auto got = run_with_lflr(c, h, init, kill_plan({{25.5, 1}}));
  REQUIRE(got.recoveries.size() == 1);
  for (const auto& e : c.ledger().entries()) {
    if ((e.kind == LedgerKind::MessageSend || e.kind == LedgerKind::MessageRecv) &&
        e.tag.rfind("recovery:", 0) == 0) {
      CHECK(e.a >= 0);
      CHECK(e.a <= 2);
      CHECK(e.b >= 0);
      CHECK(e.b <= 2);
    }
  }
}

TEST_CASE("two non-adjacent kills at different times both recover exactly") {
  HeatConfig h = quarter(40, 120, 20);
  h.right_value = 1.0;
  const auto init = random_field(40, 9);

  SimCluster oracle({.n_ranks = 4, .seed = 0});
  const auto want = run_with_lflr(oracle, h, init, FaultPlan{});

  SimCluster faulty({.n_ranks = 4, .seed = 0});
  const auto got = run_with_lflr(faulty, h, init, kill_plan({{33.5, 0}, {77.5, 2}}));
  REQUIRE(got.recoveries.size() == 2);
  CHECK(got.final_field == want.final_field);
}

TEST_CASE("adjacent simultaneous kills mid-interval lose the halo history") {
  HeatConfig h = quarter(32, 100, 20);
  const auto init = random_field(32, 10);
  SimCluster c({.n_ranks = 4, .seed = 0});
  CHECK_THROWS_AS(
      (void)run_with_lflr(c, h, init, kill_plan({{45.5, 1}, {45.6, 2}})),
      UnrecoverableFailureError);
}

TEST_CASE("steady state approaches the linear profile") {
  HeatConfig h = quarter(32, 20000);
  h.left_value = 0.0;
  h.right_value = 1.0;
  const double err = steady_state_check(h, 1);
  CHECK(err < 1e-8);

  SUBCASE("zero boundaries decay to zero") {
    HeatConfig z = quarter(16, 5000);
    const double zerr = steady_state_check(z, 2);
    CHECK(zerr < 1e-8);
  }
  SUBCASE("rank counts do not change the answer") {
    CHECK(steady_state_check(h, 2) == err);
  }
}

TEST_CASE("maximum principle holds under the stability bound") {
  HeatConfig h = quarter(20, 300);
  h.left_value = 0.3;
  h.right_value = 0.8;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto init = random_field(20, seed);
    double lo = std::min({0.3, 0.8}), hi = std::max({0.3, 0.8});
    for (double v : init) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    SimCluster c({.n_ranks = 2, .seed = seed});
    const auto run = run_plain(c, h, init);
    for (double v : run.final_field) {
      CHECK(v >= lo - 1e-12);
      CHECK(v <= hi + 1e-12);
    }
  }
}
