#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "ftsim/campaign.hpp"

namespace {

std::optional<std::vector<std::uint64_t>> parse_seeds_arg(const std::string& arg) {
  if (arg.empty()) return std::nullopt;
  std::vector<std::uint64_t> seeds;
  const auto pos = arg.find("..");
  if (pos != std::string::npos) {
    const std::uint64_t lo = std::stoull(arg.substr(0, pos));
    const std::uint64_t hi = std::stoull(arg.substr(pos + 2));
    if (hi < lo) throw ftsim::ConfigError("--seeds range is empty");
    for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
  } else {
    std::size_t start = 0;
    while (start <= arg.size()) {
      const auto comma = arg.find(',', start);
      const std::string tok =
          arg.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      if (!tok.empty()) seeds.push_back(std::stoull(tok));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  if (seeds.empty()) return std::nullopt;
  return seeds;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"seeded fault-injection campaigns on a simulated cluster"};
  app.require_subcommand(1);

  std::string run_config, out_dir, seeds_arg, arm;
  auto* run = app.add_subcommand("run", "execute a campaign config");
  run->add_option("config", run_config, "campaign config (JSON)")->required();
  run->add_option("--out", out_dir, "output directory (overrides config)");
  run->add_option("--seeds", seeds_arg, "seed override: a..b or comma list");
  run->add_option("--arm", arm, "run a single experiment arm");

  std::string validate_config_path;
  auto* validate = app.add_subcommand("validate", "check a campaign config");
  validate->add_option("config", validate_config_path, "campaign config (JSON)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const auto cfg = ftsim::CampaignConfig::from_file(run_config);
      const std::string dir = out_dir.empty() ? cfg.output_dir : out_dir;
      const auto seeds = parse_seeds_arg(seeds_arg);
      const auto arm_filter =
          arm.empty() ? std::nullopt : std::optional<std::string>(arm);
      const auto summary = ftsim::run_campaign(cfg, dir, seeds, arm_filter);
      int converged = 0, errors = 0;
      for (const auto& r : summary.runs) {
        if (!r.error.empty()) ++errors;
        if (!r.is_heat && r.solver_report.converged) ++converged;
      }
      std::printf("campaign complete: %zu runs, %d converged, %d errors -> %s\n",
                  summary.runs.size(), converged, errors, dir.c_str());
      return summary.exit_code;
    }
    if (validate->parsed()) {
      const auto diags = ftsim::validate_config_file(validate_config_path);
      if (diags.empty()) {
        std::printf("ok\n");
        return 0;
      }
      for (const auto& d : diags)
        std::fprintf(stderr, "%s: %s\n", d.field.c_str(), d.message.c_str());
      return 2;
    }
  } catch (const ftsim::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
