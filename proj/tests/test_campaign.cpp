#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "ftsim/campaign.hpp"

using namespace ftsim;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// summary.json minus the timestamp line.
std::string strip_timestamp(std::string text) {
  const auto pos = text.find("\"timestamp\"");
  if (pos == std::string::npos) return text;
  const auto end = text.find('\n', pos);
  text.erase(pos, end - pos);
  return text;
}

std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  return dir;
}

const char* kIdentityCampaign = R"({
  "experiment": "gmres",
  "seeds": [1],
  "cluster": {"n_ranks": 2},
  "problem": {"kind": "diag", "values": [1.0, 1.0, 1.0]},
  "solver": {"restart": 5, "tol": 1e-10, "maxit": 20}
})";

}  // namespace

TEST_CASE("a one-seed identity campaign converges in one iteration") {
  const auto cfg = CampaignConfig::from_json_text(kIdentityCampaign);
  const auto dir = fresh_dir("ftsim_c1");
  const auto sum = run_campaign(cfg, dir.string());
  CHECK(sum.exit_code == 0);
  REQUIRE(sum.runs.size() == 1);
  CHECK(sum.runs[0].solver_report.converged);
  CHECK(sum.runs[0].solver_report.iterations == 1);
  CHECK(std::filesystem::exists(dir / "runs.jsonl"));
  CHECK(std::filesystem::exists(dir / "residuals.csv"));
  CHECK(std::filesystem::exists(dir / "summary.json"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("config errors: empty seeds, bad json, unknown fields") {
  CHECK_THROWS_AS(CampaignConfig::from_json_text(R"({"experiment":"gmres","seeds":[]})"),
                  ConfigError);
  CHECK_THROWS_AS(CampaignConfig::from_json_text("{not json"), ConfigError);
  CHECK_THROWS_AS(CampaignConfig::from_json_text(R"({"experiment":"nope","seeds":[1]})"),
                  ConfigError);
}

TEST_CASE("campaign outputs are byte-identical when re-run") {
  const char* text = R"({
    "experiment": "skeptical_gmres",
    "seeds": [3, 4],
    "cluster": {"n_ranks": 2, "base_latency": 0.5,
                "jitter": {"kind": "uniform", "lo": 0.0, "hi": 0.2}},
    "problem": {"kind": "diag", "n": 10},
    "solver": {"restart": 10, "tol": 1e-9, "maxit": 60, "policy": "detect_only"},
    "faults": {"kind": "random", "rate": 0.05, "horizon": 40.0}
  })";
  const auto cfg = CampaignConfig::from_json_text(text);
  const auto d1 = fresh_dir("ftsim_rep1");
  const auto d2 = fresh_dir("ftsim_rep2");
  (void)run_campaign(cfg, d1.string());
  (void)run_campaign(cfg, d2.string());
  CHECK(slurp(d1 / "runs.jsonl") == slurp(d2 / "runs.jsonl"));
  CHECK(slurp(d1 / "residuals.csv") == slurp(d2 / "residuals.csv"));
  CHECK(strip_timestamp(slurp(d1 / "summary.json")) ==
        strip_timestamp(slurp(d2 / "summary.json")));
  std::filesystem::remove_all(d1);
  std::filesystem::remove_all(d2);
}

TEST_CASE("comparative arms consume the identical fault plan per seed") {
  const char* text = R"({
    "experiment": "ft_gmres",
    "seeds": [11, 12],
    "cluster": {"n_ranks": 2},
    "problem": {"kind": "laplace2d", "nx": 6, "ny": 6},
    "solver": {"restart": 12, "tol": 1e-8, "maxit": 36,
               "inner": {"restart": 6, "maxit": 6, "tol": 1e-14}},
    "faults": {"kind": "random", "rate": 0.02, "horizon": 60.0}
  })";
  const auto cfg = CampaignConfig::from_json_text(text);
  const auto dir = fresh_dir("ftsim_arms");
  const auto sum = run_campaign(cfg, dir.string());
  REQUIRE(sum.runs.size() == 4);  // 2 seeds x 2 arms
  for (std::size_t i = 0; i + 1 < sum.runs.size(); i += 2) {
    CHECK(sum.runs[i].seed == sum.runs[i + 1].seed);
    CHECK(sum.runs[i].fault_digest == sum.runs[i + 1].fault_digest);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("seed override and arm filter narrow the campaign") {
  const auto cfg = CampaignConfig::from_json_text(R"({
    "experiment": "pipelined_vs_sync",
    "seeds": [1, 2, 3],
    "cluster": {"n_ranks": 2},
    "problem": {"kind": "diag", "n": 6},
    "solver": {"restart": 6, "tol": 1e-9, "maxit": 12}
  })");
  const auto dir = fresh_dir("ftsim_filter");
  const auto sum = run_campaign(cfg, dir.string(), std::vector<std::uint64_t>{9},
                                std::string("pipelined"));
  REQUIRE(sum.runs.size() == 1);
  CHECK(sum.runs[0].arm == "pipelined");
  CHECK(sum.runs[0].seed == 9);
  CHECK_THROWS_AS(
      (void)run_campaign(cfg, dir.string(), std::nullopt, std::string("bogus")),
      ConfigError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("validate: CFL, region targeting, and clean configs") {
  SUBCASE("unstable heat step is diagnosed with the bound") {
    const auto diags = validate_config_text(R"({
      "experiment": "heat_lflr",
      "seeds": [1],
      "cluster": {"n_ranks": 4},
      "problem": {"kind": "heat", "n_global": 32, "alpha": 1.0, "dx": 1.0,
                   "dt": 0.75, "n_steps": 10, "persist_interval": 5}
    })");
    REQUIRE_FALSE(diags.empty());
    bool mentions_bound = false;
    for (const auto& d : diags)
      if (d.message.find("dx^2/(2*alpha)") != std::string::npos) mentions_bound = true;
    CHECK(mentions_bound);
  }
  SUBCASE("bit flips into protected regions are diagnosed") {
    const auto diags = validate_config_text(R"({
      "experiment": "gmres",
      "seeds": [1],
      "cluster": {"n_ranks": 2},
      "problem": {"kind": "diag", "n": 4},
      "faults": {"kind": "explicit", "events": [
        {"time": 1.0, "type": "bit_flip", "rank": 0, "region": "H", "element": 0, "bit": 5}
      ]}
    })");
    REQUIRE_FALSE(diags.empty());
    CHECK(diags[0].field == "faults.events");
  }
  SUBCASE("a sound config passes") {
    CHECK(validate_config_text(kIdentityCampaign).empty());
  }
}

TEST_CASE("heat campaign arms produce matching fields under recoverable kills") {
  const char* text = R"({
    "experiment": "heat_lflr",
    "seeds": [5],
    "cluster": {"n_ranks": 4},
    "problem": {"kind": "heat", "n_global": 32, "alpha": 1.0, "dx": 1.0,
                 "dt": 0.25, "n_steps": 60, "persist_interval": 10},
    "faults": {"kind": "explicit", "events": [
      {"time": 25.5, "type": "rank_kill", "rank": 2}
    ]}
  })";
  const auto cfg = CampaignConfig::from_json_text(text);
  const auto dir = fresh_dir("ftsim_heat");
  const auto sum = run_campaign(cfg, dir.string());
  REQUIRE(sum.runs.size() == 2);
  CHECK(sum.runs[0].arm == "fault_free");
  CHECK(sum.runs[1].arm == "lflr");
  CHECK(sum.runs[1].heat_result.recoveries.size() == 1);
  CHECK(sum.runs[0].field_digest == sum.runs[1].field_digest);
  CHECK(sum.exit_code == 0);
  std::filesystem::remove_all(dir);
}
