#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ftsim/errors.hpp"
#include "ftsim/fault_plan.hpp"
#include "ftsim/ledger.hpp"
#include "ftsim/regions.hpp"
#include "ftsim/rng.hpp"
#include "ftsim/sim_time.hpp"

namespace ftsim {

enum class RankStatus : std::uint8_t { Alive, Failed, Respawned };

struct JitterModel {
  enum class Kind : std::uint8_t { None, Uniform, Lognormal };
  Kind kind = Kind::None;
  double a = 0.0;  // lo (Uniform) or mu (Lognormal)
  double b = 0.0;  // hi (Uniform) or sigma (Lognormal)

  static JitterModel none() { return {}; }
  static JitterModel uniform(double lo, double hi) {
    return {Kind::Uniform, lo, hi};
  }
  static JitterModel lognormal(double mu, double sigma) {
    return {Kind::Lognormal, mu, sigma};
  }
};

struct ClusterConfig {
  int n_ranks = 1;
  std::uint64_t seed = 0;
  JitterModel jitter{};
  double base_latency = 0.0;  // per collective, time units
  double p2p_latency = 0.0;   // per point-to-point message
};

enum class CollOp : std::uint8_t { SumAllreduce, MaxAllreduce, Barrier };

/// Handle for a nonblocking collective. May be waited on exactly once;
/// testing a complete handle is idempotent.
struct CollectiveHandle {
  std::uint64_t id = 0;
  CollOp op = CollOp::SumAllreduce;
  bool completed = false;
  bool waited = false;
  SimTime issue_time = 0;
  SimTime completion_time = 0;
  std::vector<double> values;
  std::vector<int> participants;
};

/// One reduction component: for each rank, the addends it contributes.
/// The result is the sum of all addends in (rank, position) order, which
/// makes reductions bit-identical for every rank count that partitions the
/// same global sequence.
struct ReduceComponent {
  std::vector<std::vector<double>> addends_by_rank;
};

/// Deterministic lock-step simulator of a message-passing cluster: per-rank
/// logical clocks, FIFO point-to-point channels, blocking and nonblocking
/// collectives with seeded latency jitter, fail-stop rank kills, and a fault
/// scheduler that fires as simulated time advances. Single-threaded; one
/// program drives all ranks.
class SimCluster {
 public:
  explicit SimCluster(const ClusterConfig& config);

  int n_ranks() const { return config_.n_ranks; }
  const ClusterConfig& config() const { return config_; }

  RankStatus status(int rank) const;
  bool is_alive(int rank) const;  // Alive or Respawned
  std::vector<int> alive_ranks() const;

  SimTime local_time(int rank) const;
  SimTime now() const { return now_; }  // frontier: max local time reached
  double clock_units() const { return units_from_ticks(now_); }

  // -- compute -------------------------------------------------------------
  void advance_compute(double units);            // every alive rank
  void advance_compute(int rank, double units);  // one rank

  // -- collectives ----------------------------------------------------------
  double allreduce_sum(std::span<const double> per_rank);
  double allreduce_max(std::span<const double> per_rank);
  void barrier();
  CollectiveHandle iallreduce_sum(std::span<const double> per_rank);

  std::vector<double> allreduce_ordered(const std::vector<ReduceComponent>& components);
  CollectiveHandle iallreduce_ordered(const std::vector<ReduceComponent>& components);

  double wait_scalar(CollectiveHandle& h);
  std::vector<double> wait(CollectiveHandle& h);
  bool test(CollectiveHandle& h);  // idempotent once complete

  // -- point-to-point --------------------------------------------------------
  void send(int from, int to, std::vector<std::uint8_t> payload, std::string tag = {});
  std::vector<std::uint8_t> recv(int from, int to);

  // -- rank lifecycle ---------------------------------------------------------
  void kill_rank(int rank);     // immediate, at the current frontier time
  void respawn_rank(int rank);  // Failed -> Respawned with blank volatile state
  SimTime last_kill_time(int rank) const;

  // -- memory ------------------------------------------------------------------
  RegionTable& regions() { return regions_; }
  const RegionTable& regions() const { return regions_; }
  RegionId alloc_region(int rank, RegionKind kind, const std::string& label,
                        std::size_t length);
  RegionId region_or_alloc(int rank, RegionKind kind, const std::string& label,
                           std::size_t length);

  // -- fault schedule ------------------------------------------------------------
  /// Attaches a plan; validates bit flips against already-allocated regions.
  void attach_fault_plan(const FaultPlan& plan);
  /// Applies every event due at or before the frontier. Called internally by
  /// all time-advancing operations; exposed for explicit poll points.
  void poll_faults();
  const std::vector<FaultEvent>& fault_schedule() const { return schedule_; }
  std::size_t faults_applied() const { return schedule_next_; }

  // -- hooks (used by the recovery layer) -------------------------------------------
  using RankDeathHook = std::function<void(int rank)>;
  void set_rank_death_hook(RankDeathHook hook) { death_hook_ = std::move(hook); }

  Ledger& ledger() { return ledger_; }
  const Ledger& ledger() const { return ledger_; }

  RngStream rng_stream(std::uint64_t tag, std::uint64_t lane = 0) const {
    return RngStream(config_.seed, tag, lane);
  }

 private:
  struct Message {
    SimTime delivery = 0;
    std::vector<std::uint8_t> payload;
    std::uint64_t seq = 0;
    std::string tag;
  };

  double jitter_draw(int rank, std::uint64_t instance) const;
  SimTime collective_completion(const std::vector<int>& participants, SimTime start,
                                std::uint64_t instance);
  CollectiveHandle issue_collective(CollOp op, std::vector<double> values,
                                    std::string detail);
  void finish_collective(CollectiveHandle& h);
  void require_rank(int rank) const;
  void apply_fault(const FaultEvent& ev, std::size_t index);
  void bump_now(SimTime t);

  ClusterConfig config_;
  std::vector<RankStatus> status_;
  std::vector<SimTime> local_time_;
  std::vector<SimTime> kill_time_;
  SimTime now_ = 0;

  std::map<std::pair<int, int>, std::deque<Message>> channels_;
  std::uint64_t next_msg_seq_ = 0;
  std::uint64_t next_collective_id_ = 1;
  std::uint64_t collective_instances_ = 0;

  RegionTable regions_;
  Ledger ledger_;

  std::vector<FaultEvent> schedule_;
  std::size_t schedule_next_ = 0;
  RankDeathHook death_hook_;
};

}  // namespace ftsim
