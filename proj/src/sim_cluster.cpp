#include "ftsim/sim_cluster.hpp"

#include <algorithm>
#include <cmath>

namespace ftsim {

namespace {
constexpr std::uint64_t kJitterTag = 0x71f7ULL;
}

SimCluster::SimCluster(const ClusterConfig& config) : config_(config) {
  if (config_.n_ranks < 1) throw ConfigError("cluster needs at least one rank");
  if (config_.base_latency < 0.0 || config_.p2p_latency < 0.0)
    throw ConfigError("latencies must be >= 0");
  status_.assign(static_cast<std::size_t>(config_.n_ranks), RankStatus::Alive);
  local_time_.assign(static_cast<std::size_t>(config_.n_ranks), 0);
  kill_time_.assign(static_cast<std::size_t>(config_.n_ranks), -1);
  ledger_.append(0, LedgerKind::ClusterSpawn, -1, -1, config_.n_ranks,
                 static_cast<std::int64_t>(config_.seed));
}

RankStatus SimCluster::status(int rank) const {
  require_rank(rank);
  return status_[static_cast<std::size_t>(rank)];
}

bool SimCluster::is_alive(int rank) const {
  require_rank(rank);
  return status_[static_cast<std::size_t>(rank)] != RankStatus::Failed;
}

std::vector<int> SimCluster::alive_ranks() const {
  std::vector<int> out;
  for (int r = 0; r < config_.n_ranks; ++r)
    if (status_[static_cast<std::size_t>(r)] != RankStatus::Failed) out.push_back(r);
  return out;
}

SimTime SimCluster::local_time(int rank) const {
  require_rank(rank);
  return local_time_[static_cast<std::size_t>(rank)];
}

void SimCluster::require_rank(int rank) const {
  if (rank < 0 || rank >= config_.n_ranks)
    throw UsageError("rank " + std::to_string(rank) + " out of range");
}

void SimCluster::bump_now(SimTime t) {
  if (t > now_) now_ = t;
}

// ---------------------------------------------------------------------------
// fault scheduling

void SimCluster::attach_fault_plan(const FaultPlan& plan) {
  validate_plan(plan, regions_);
  schedule_ = plan.events;
  schedule_next_ = 0;
}

void SimCluster::poll_faults() {
  while (schedule_next_ < schedule_.size() && schedule_[schedule_next_].time <= now_) {
    apply_fault(schedule_[schedule_next_], schedule_next_);
    ++schedule_next_;
  }
}

void SimCluster::apply_fault(const FaultEvent& ev, std::size_t index) {
  FaultEvent& rec = schedule_[index];
  if (const auto* f = std::get_if<BitFlipFault>(&ev.kind)) {
    Region* region = (f->rank >= 0 && f->rank < config_.n_ranks)
                         ? regions_.find(f->rank, f->region)
                         : nullptr;
    std::string skip;
    if (f->rank < 0 || f->rank >= config_.n_ranks) {
      skip = "rank_out_of_range";
    } else if (!is_alive(f->rank)) {
      skip = "rank_failed";
    } else if (region == nullptr) {
      skip = "region_missing";
    } else if (region->kind == RegionKind::Reliable) {
      // validated at attach time; double-checked here
      skip = "region_reliable";
    } else if (f->element < 0 ||
               f->element >= static_cast<std::int64_t>(region->data.size())) {
      skip = "element_out_of_bounds";
    }
    if (!skip.empty()) {
      rec.injected = false;
      rec.skip_reason = skip;
      ledger_.append(ev.time, LedgerKind::FaultSkipped, f->rank, -1, f->element, f->bit,
                     static_cast<std::int64_t>(index), f->region + ":" + skip);
      return;
    }
    double& slot = region->data[static_cast<std::size_t>(f->element)];
    slot = flip_bit(slot, f->bit);  // silent: no signal raised to the program
    region->flip_count += 1;
    rec.injected = true;
    ledger_.append(ev.time, LedgerKind::FaultInjected, f->rank, -1, f->element, f->bit,
                   static_cast<std::int64_t>(index), f->region);
  } else {
    const auto& k = std::get<RankKillFault>(ev.kind);
    if (k.rank < 0 || k.rank >= config_.n_ranks || !is_alive(k.rank)) {
      rec.injected = false;
      rec.skip_reason = "rank_not_alive";
      ledger_.append(ev.time, LedgerKind::FaultSkipped, k.rank, -1, 0, 0,
                     static_cast<std::int64_t>(index), "rank_kill:rank_not_alive");
      return;
    }
    rec.injected = true;
    kill_rank(k.rank);
  }
}

// ---------------------------------------------------------------------------
// compute

void SimCluster::advance_compute(double units) {
  if (units < 0.0) throw UsageError("cannot advance compute by a negative amount");
  const SimTime dt = ticks_from_units(units);
  for (int r = 0; r < config_.n_ranks; ++r)
    if (is_alive(r)) local_time_[static_cast<std::size_t>(r)] += dt;
  for (int r = 0; r < config_.n_ranks; ++r)
    if (is_alive(r)) bump_now(local_time_[static_cast<std::size_t>(r)]);
  poll_faults();
}

void SimCluster::advance_compute(int rank, double units) {
  require_rank(rank);
  if (units < 0.0) throw UsageError("cannot advance compute by a negative amount");
  if (!is_alive(rank)) throw UsageError("cannot advance a failed rank");
  local_time_[static_cast<std::size_t>(rank)] += ticks_from_units(units);
  bump_now(local_time_[static_cast<std::size_t>(rank)]);
  poll_faults();
}

// ---------------------------------------------------------------------------
// collectives

double SimCluster::jitter_draw(int rank, std::uint64_t instance) const {
  switch (config_.jitter.kind) {
    case JitterModel::Kind::None:
      return 0.0;
    case JitterModel::Kind::Uniform: {
      RngStream s(config_.seed, kJitterTag, (static_cast<std::uint64_t>(rank) << 32) ^ instance);
      return s.uniform(config_.jitter.a, config_.jitter.b);
    }
    case JitterModel::Kind::Lognormal: {
      RngStream s(config_.seed, kJitterTag, (static_cast<std::uint64_t>(rank) << 32) ^ instance);
      return s.lognormal(config_.jitter.a, config_.jitter.b);
    }
  }
  return 0.0;
}

SimTime SimCluster::collective_completion(const std::vector<int>& participants, SimTime start,
                                          std::uint64_t instance) {
  double max_jitter = 0.0;
  for (int r : participants) max_jitter = std::max(max_jitter, jitter_draw(r, instance));
  return start + ticks_from_units(config_.base_latency) + ticks_from_units(max_jitter);
}

CollectiveHandle SimCluster::issue_collective(CollOp op, std::vector<double> values,
                                              std::string detail) {
  CollectiveHandle h;
  h.id = next_collective_id_++;
  h.op = op;
  // Collectives span the whole cluster; a Failed member aborts them for the
  // survivors at completion time.
  h.participants.resize(static_cast<std::size_t>(config_.n_ranks));
  for (int r = 0; r < config_.n_ranks; ++r) h.participants[static_cast<std::size_t>(r)] = r;
  if (alive_ranks().empty()) throw UsageError("collective with no alive ranks");
  SimTime start = 0;
  for (int r : h.participants)
    if (is_alive(r)) start = std::max(start, local_time_[static_cast<std::size_t>(r)]);
  h.issue_time = start;
  h.completion_time = collective_completion(alive_ranks(), start, collective_instances_++);
  h.values = std::move(values);
  ledger_.append(start, LedgerKind::CollectiveIssue, h.participants.front(), -1,
                 static_cast<std::int64_t>(h.id), static_cast<std::int64_t>(op),
                 static_cast<std::int64_t>(h.values.size()), std::move(detail));
  return h;
}

void SimCluster::finish_collective(CollectiveHandle& h) {
  // Survivors see the completion time, then learn about any participant that
  // died inside the window.
  for (int r : h.participants) {
    if (is_alive(r)) {
      auto& t = local_time_[static_cast<std::size_t>(r)];
      t = std::max(t, h.completion_time);
    }
  }
  bump_now(h.completion_time);
  poll_faults();
  std::vector<int> dead;
  for (int r : h.participants)
    if (!is_alive(r)) dead.push_back(r);
  h.completed = true;
  if (!dead.empty()) {
    ledger_.append(h.completion_time, LedgerKind::CollectiveAborted, dead.front(), -1,
                   static_cast<std::int64_t>(h.id));
    throw RankFailureError("collective aborted: participant rank failed", dead);
  }
  ledger_.append(h.completion_time, LedgerKind::CollectiveComplete, h.participants.front(), -1,
                 static_cast<std::int64_t>(h.id));
}

double SimCluster::allreduce_sum(std::span<const double> per_rank) {
  CollectiveHandle h = iallreduce_sum(per_rank);
  return wait_scalar(h);
}

double SimCluster::allreduce_max(std::span<const double> per_rank) {
  if (static_cast<int>(per_rank.size()) != config_.n_ranks)
    throw UsageError("allreduce contribution count must equal n_ranks");
  double m = -std::numeric_limits<double>::infinity();
  for (int r = 0; r < config_.n_ranks; ++r)
    if (is_alive(r)) m = std::max(m, per_rank[static_cast<std::size_t>(r)]);
  CollectiveHandle h = issue_collective(CollOp::MaxAllreduce, {m}, "max");
  finish_collective(h);
  h.waited = true;
  return h.values[0];
}

void SimCluster::barrier() {
  CollectiveHandle h = issue_collective(CollOp::Barrier, {}, "barrier");
  finish_collective(h);
  h.waited = true;
}

CollectiveHandle SimCluster::iallreduce_sum(std::span<const double> per_rank) {
  if (static_cast<int>(per_rank.size()) != config_.n_ranks)
    throw UsageError("allreduce contribution count must equal n_ranks");
  // Exact left-to-right sum by rank index.
  double sum = 0.0;
  for (int r = 0; r < config_.n_ranks; ++r)
    if (is_alive(r)) sum += per_rank[static_cast<std::size_t>(r)];
  return issue_collective(CollOp::SumAllreduce, {sum}, "sum");
}

std::vector<double> SimCluster::allreduce_ordered(const std::vector<ReduceComponent>& components) {
  CollectiveHandle h = iallreduce_ordered(components);
  return wait(h);
}

CollectiveHandle SimCluster::iallreduce_ordered(const std::vector<ReduceComponent>& components) {
  std::vector<double> results;
  results.reserve(components.size());
  for (const auto& comp : components) {
    if (static_cast<int>(comp.addends_by_rank.size()) != config_.n_ranks)
      throw UsageError("ordered reduction needs one addend list per rank");
    double sum = 0.0;
    for (int r = 0; r < config_.n_ranks; ++r) {
      if (!is_alive(r)) continue;
      for (double v : comp.addends_by_rank[static_cast<std::size_t>(r)]) sum += v;
    }
    results.push_back(sum);
  }
  return issue_collective(CollOp::SumAllreduce, std::move(results), "ordered_sum");
}

double SimCluster::wait_scalar(CollectiveHandle& h) {
  const auto& vals = wait(h);
  if (vals.empty()) throw UsageError("collective carries no value");
  return vals[0];
}

std::vector<double> SimCluster::wait(CollectiveHandle& h) {
  if (h.waited) throw UsageError("collective handle waited on twice");
  h.waited = true;
  finish_collective(h);
  return h.values;
}

bool SimCluster::test(CollectiveHandle& h) {
  if (h.completed) return true;
  SimTime t = 0;
  for (int r : h.participants)
    if (is_alive(r)) t = std::max(t, local_time_[static_cast<std::size_t>(r)]);
  return t >= h.completion_time;
}

// ---------------------------------------------------------------------------
// point-to-point

void SimCluster::send(int from, int to, std::vector<std::uint8_t> payload, std::string tag) {
  require_rank(from);
  require_rank(to);
  if (!is_alive(from)) throw UsageError("send from a failed rank");
  if (!is_alive(to)) throw RankFailureError("send to a failed rank", {to});
  Message m;
  m.delivery = local_time_[static_cast<std::size_t>(from)] + ticks_from_units(config_.p2p_latency);
  m.payload = std::move(payload);
  m.seq = next_msg_seq_++;
  m.tag = tag;
  ledger_.append(local_time_[static_cast<std::size_t>(from)], LedgerKind::MessageSend, from, to,
                 static_cast<std::int64_t>(m.payload.size()),
                 static_cast<std::int64_t>(m.seq), 0, std::move(tag));
  channels_[{from, to}].push_back(std::move(m));
  bump_now(local_time_[static_cast<std::size_t>(from)]);
  poll_faults();
}

std::vector<std::uint8_t> SimCluster::recv(int from, int to) {
  require_rank(from);
  require_rank(to);
  if (!is_alive(to)) throw UsageError("recv on a failed rank");
  auto it = channels_.find({from, to});
  if (it == channels_.end() || it->second.empty()) {
    if (!is_alive(from)) throw RankFailureError("recv from a failed rank", {from});
    throw UsageError("recv with no matching send would deadlock");
  }
  Message m = std::move(it->second.front());
  it->second.pop_front();
  auto& t = local_time_[static_cast<std::size_t>(to)];
  t = std::max(t, m.delivery);  // blocks in simulated time until arrival
  ledger_.append(t, LedgerKind::MessageRecv, to, from,
                 static_cast<std::int64_t>(m.payload.size()),
                 static_cast<std::int64_t>(m.seq), 0, std::move(m.tag));
  bump_now(t);
  poll_faults();
  return std::move(m.payload);
}

// ---------------------------------------------------------------------------
// rank lifecycle

void SimCluster::kill_rank(int rank) {
  require_rank(rank);
  if (!is_alive(rank)) throw UsageError("rank already failed");
  status_[static_cast<std::size_t>(rank)] = RankStatus::Failed;
  kill_time_[static_cast<std::size_t>(rank)] = now_;
  // Fail-stop: queued messages to and from the rank are dropped, volatile
  // state is lost.
  for (auto& [key, queue] : channels_) {
    if (key.first == rank || key.second == rank) {
      for (const auto& m : queue)
        ledger_.append(now_, LedgerKind::MessageDropped, key.first, key.second,
                       static_cast<std::int64_t>(m.payload.size()),
                       static_cast<std::int64_t>(m.seq));
      queue.clear();
    }
  }
  regions_.clear_rank(rank);
  ledger_.append(now_, LedgerKind::RankKill, rank);
  if (death_hook_) death_hook_(rank);
}

void SimCluster::respawn_rank(int rank) {
  require_rank(rank);
  if (status_[static_cast<std::size_t>(rank)] != RankStatus::Failed)
    throw UsageError("respawn requires a failed rank");
  status_[static_cast<std::size_t>(rank)] = RankStatus::Respawned;
  regions_.clear_rank(rank);  // blank volatile state at the same rank index
  local_time_[static_cast<std::size_t>(rank)] = now_;
  ledger_.append(now_, LedgerKind::RankRespawn, rank);
}

SimTime SimCluster::last_kill_time(int rank) const {
  require_rank(rank);
  return kill_time_[static_cast<std::size_t>(rank)];
}

RegionId SimCluster::alloc_region(int rank, RegionKind kind, const std::string& label,
                                  std::size_t length) {
  require_rank(rank);
  return regions_.alloc(rank, kind, label, length);
}

RegionId SimCluster::region_or_alloc(int rank, RegionKind kind, const std::string& label,
                                     std::size_t length) {
  require_rank(rank);
  return regions_.alloc_or_reuse(rank, kind, label, length);
}

}  // namespace ftsim
