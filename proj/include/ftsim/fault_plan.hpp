#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ftsim/regions.hpp"
#include "ftsim/sim_time.hpp"

namespace ftsim {

/// Silent single-bit upset of one double in an unreliable region.
struct BitFlipFault {
  int rank = 0;
  std::string region;  // region label on that rank
  std::int64_t element = 0;
  int bit = 63;
};

/// Fail-stop loss of a rank.
struct RankKillFault {
  int rank = 0;
};

struct FaultEvent {
  SimTime time = 0;
  std::variant<BitFlipFault, RankKillFault> kind;
  bool injected = false;  // set by the scheduler once applied
  std::string skip_reason;

  bool is_bit_flip() const { return std::holds_alternative<BitFlipFault>(kind); }
  std::string describe() const;
};

/// Region universe used when generating random campaigns: label plus length
/// of the per-rank block. Only unreliable labels belong here.
struct TargetRegion {
  std::string label;
  std::int64_t length = 0;
};

struct RandomCampaignSpec {
  double rate = 0.0;     // expected events per time unit, >= 0
  double horizon = 0.0;  // events drawn on [0, horizon)
  double bit_flip_weight = 1.0;
  double rank_kill_weight = 0.0;
  int bit_lo = 0;
  int bit_hi = 63;  // inclusive
  int n_ranks = 1;
  std::vector<TargetRegion> targets;
};

struct ExplicitSpec {
  std::vector<FaultEvent> events;
};

using GeneratorSpec = std::variant<ExplicitSpec, RandomCampaignSpec>;

/// Time-ordered, reproducible schedule of fault events.
struct FaultPlan {
  std::vector<FaultEvent> events;  // sorted by (time, index)
  std::uint64_t seed = 0;

  std::string to_text() const;
  std::uint64_t digest() const;
};

/// Deterministic plan construction; Explicit specs pass through verbatim
/// (sorted by time, stable).
FaultPlan build_plan(const GeneratorSpec& spec, std::uint64_t seed);

/// Plan-time validation: bit flips aimed at a reliable region are rejected.
/// Labels absent from the table are allowed (skipped at injection time).
void validate_plan(const FaultPlan& plan, const RegionTable& table);

}  // namespace ftsim
