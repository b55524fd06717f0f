#include "ftsim/fault_plan.hpp"

#include <algorithm>
#include <cstdio>

#include "ftsim/ledger.hpp"
#include "ftsim/rng.hpp"

namespace ftsim {

namespace {
constexpr std::uint64_t kPlanTag = 0xfa17ULL;
}

std::string FaultEvent::describe() const {
  char buf[160];
  if (const auto* f = std::get_if<BitFlipFault>(&kind)) {
    std::snprintf(buf, sizeof(buf), "bit_flip t=%lld rank=%d region=%s elem=%lld bit=%d",
                  static_cast<long long>(time), f->rank, f->region.c_str(),
                  static_cast<long long>(f->element), f->bit);
  } else {
    const auto& k = std::get<RankKillFault>(kind);
    std::snprintf(buf, sizeof(buf), "rank_kill t=%lld rank=%d",
                  static_cast<long long>(time), k.rank);
  }
  return buf;
}

std::string FaultPlan::to_text() const {
  std::string out;
  for (const auto& e : events) {
    out += e.describe();
    out += '\n';
  }
  return out;
}

std::uint64_t FaultPlan::digest() const { return fnv1a64(to_text()); }

FaultPlan build_plan(const GeneratorSpec& spec, std::uint64_t seed) {
  FaultPlan plan;
  plan.seed = seed;

  if (const auto* ex = std::get_if<ExplicitSpec>(&spec)) {
    plan.events = ex->events;
  } else {
    const auto& rc = std::get<RandomCampaignSpec>(spec);
    if (rc.rate < 0.0) throw ConfigError("fault rate must be >= 0");
    if (rc.bit_lo < 0 || rc.bit_hi > 63 || rc.bit_lo > rc.bit_hi)
      throw ConfigError("bit range must satisfy 0 <= lo <= hi <= 63");
    const double wsum = rc.bit_flip_weight + rc.rank_kill_weight;
    if (rc.bit_flip_weight < 0.0 || rc.rank_kill_weight < 0.0)
      throw ConfigError("fault kind weights must be >= 0");
    if (rc.rate > 0.0 && wsum <= 0.0)
      throw ConfigError("fault kind weights sum to zero");
    RngStream rng(seed, kPlanTag);
    double t = 0.0;
    while (rc.rate > 0.0) {
      t += rng.exponential(rc.rate);
      if (t >= rc.horizon) break;
      FaultEvent ev;
      ev.time = ticks_from_units(t);
      const bool flip = rng.next_unit() * wsum < rc.bit_flip_weight;
      if (flip && !rc.targets.empty()) {
        const auto& target = rc.targets[rng.below(rc.targets.size())];
        BitFlipFault f;
        f.rank = static_cast<int>(rng.below(static_cast<std::uint64_t>(rc.n_ranks)));
        f.region = target.label;
        f.element = target.length > 0
                        ? static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(target.length)))
                        : 0;
        f.bit = rc.bit_lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(rc.bit_hi - rc.bit_lo + 1)));
        ev.kind = f;
      } else if (!flip) {
        RankKillFault k;
        k.rank = static_cast<int>(rng.below(static_cast<std::uint64_t>(rc.n_ranks)));
        ev.kind = k;
      } else {
        continue;  // flips requested but no targets declared
      }
      plan.events.push_back(std::move(ev));
    }
  }

  std::stable_sort(plan.events.begin(), plan.events.end(),
                   [](const FaultEvent& a, const FaultEvent& b) { return a.time < b.time; });
  return plan;
}

void validate_plan(const FaultPlan& plan, const RegionTable& table) {
  for (const auto& ev : plan.events) {
    if (const auto* f = std::get_if<BitFlipFault>(&ev.kind)) {
      if (f->bit < 0 || f->bit > 63)
        throw ConfigError("bit flip outside [0,63]: " + ev.describe());
      const Region* r = table.find(f->rank, f->region);
      if (r != nullptr && r->kind == RegionKind::Reliable)
        throw ConfigError("bit flip targets a reliable region: " + ev.describe());
    }
  }
}

}  // namespace ftsim
