#include "ftsim/lflr.hpp"

#include <algorithm>

namespace ftsim {

PersistentStore::PersistentStore(SimCluster& cluster, PersistOptions opts)
    : cluster_(cluster), opts_(opts) {
  if (opts_.replication_degree < 0) throw ConfigError("replication degree must be >= 0");
  const auto n = static_cast<std::size_t>(cluster_.n_ranks());
  store_.resize(n);
  versions_.resize(n);
  keys_ever_.resize(n);
  callbacks_.resize(n);
  cluster_.set_rank_death_hook([this](int rank) { on_rank_death(rank); });
}

void PersistentStore::on_rank_death(int rank) {
  // The rank's own copies and every replica it hosted die with it.
  store_[static_cast<std::size_t>(rank)].clear();
}

std::vector<int> PersistentStore::neighbors(int rank) const {
  const int n = cluster_.n_ranks();
  std::vector<int> out;
  for (int d = 1; d <= opts_.replication_degree; ++d) {
    for (int cand : {((rank - d) % n + n) % n, (rank + d) % n}) {
      if (cand == rank) continue;
      if (std::find(out.begin(), out.end(), cand) == out.end()) out.push_back(cand);
    }
  }
  return out;
}

std::optional<std::uint64_t> PersistentStore::persist(int rank, const std::string& key,
                                                      std::vector<std::uint8_t> blob) {
  if (!cluster_.is_alive(rank)) throw UsageError("persist on a failed rank");
  const SimTime t0 = cluster_.local_time(rank);

  // The persist window: if the owner dies inside it, nothing commits and the
  // previous version stays visible everywhere.
  cluster_.advance_compute(rank, opts_.persist_latency);
  if (!cluster_.is_alive(rank)) return std::nullopt;

  auto& vmap = versions_[static_cast<std::size_t>(rank)];
  const std::uint64_t version = ++vmap[key];
  if (version == 1) keys_ever_[static_cast<std::size_t>(rank)].push_back(key);

  PersistentEntry entry;
  entry.key = key;
  entry.blob = std::move(blob);
  entry.version = version;
  entry.owner_rank = rank;

  bool degraded = false;
  for (int nb : neighbors(rank)) {
    if (!cluster_.is_alive(nb)) {
      degraded = true;
      continue;
    }
    cluster_.send(rank, nb, entry.blob, "replica:" + key);
    (void)cluster_.recv(rank, nb);
    store_[static_cast<std::size_t>(nb)][rank][key] = entry;
    cluster_.ledger().append(cluster_.local_time(nb), LedgerKind::ReplicaWrite, nb, rank,
                             static_cast<std::int64_t>(entry.blob.size()),
                             static_cast<std::int64_t>(version), 0, key);
  }
  if (neighbors(rank).empty()) degraded = true;
  degraded_ = degraded_ || degraded;

  store_[static_cast<std::size_t>(rank)][rank][key] = std::move(entry);
  cluster_.ledger().append(cluster_.local_time(rank), LedgerKind::Persist, rank, -1,
                           static_cast<std::int64_t>(version),
                           static_cast<std::int64_t>(t0), degraded ? 1 : 0, key);
  return version;
}

void PersistentStore::register_recovery(int rank, RecoveryFn fn) {
  if (!fn) throw UsageError("recovery callback must be callable");
  auto& slot = callbacks_[static_cast<std::size_t>(rank)];
  if (slot) throw UsageError("recovery callback already registered for rank " +
                             std::to_string(rank));
  slot = std::move(fn);
}

bool PersistentStore::has_recovery(int rank) const {
  return static_cast<bool>(callbacks_[static_cast<std::size_t>(rank)]);
}

const PersistentEntry* PersistentStore::owner_entry(int rank, const std::string& key) const {
  const auto& owners = store_[static_cast<std::size_t>(rank)];
  auto it = owners.find(rank);
  if (it == owners.end()) return nullptr;
  auto kit = it->second.find(key);
  return kit == it->second.end() ? nullptr : &kit->second;
}

const PersistentEntry* PersistentStore::replica_entry(int holder, int owner,
                                                      const std::string& key) const {
  const auto& owners = store_[static_cast<std::size_t>(holder)];
  auto it = owners.find(owner);
  if (it == owners.end()) return nullptr;
  auto kit = it->second.find(key);
  return kit == it->second.end() ? nullptr : &kit->second;
}

std::optional<PersistentEntry> RecoveryContext::fetch_neighbor_entry(int neighbor,
                                                                     const std::string& key) {
  if (store == nullptr || cluster == nullptr)
    throw UsageError("recovery context is not attached to a store");
  if (!cluster->is_alive(neighbor)) return std::nullopt;
  const PersistentEntry* e = store->owner_entry(neighbor, key);
  if (e == nullptr) return std::nullopt;
  // Served through the cluster so the traffic shows up in the ledger.
  cluster->send(neighbor, rank, e->blob, "recovery:neighbor:" + key);
  auto blob = cluster->recv(neighbor, rank);
  fetched_bytes += blob.size();
  PersistentEntry out = *e;
  out.blob = std::move(blob);
  return out;
}

RecoveryReport PersistentStore::recover(int failed_rank) {
  if (cluster_.status(failed_rank) != RankStatus::Failed)
    throw UsageError("recover requires a failed rank");
  if (!callbacks_[static_cast<std::size_t>(failed_rank)])
    throw UnrecoverableFailureError("no recovery callback registered for rank " +
                                    std::to_string(failed_rank));

  RecoveryReport report;
  report.rank = failed_rank;
  const SimTime failed_at_ticks = cluster_.last_kill_time(failed_rank);
  report.failed_at = units_from_ticks(failed_at_ticks);
  const double recover_start = cluster_.clock_units();
  cluster_.ledger().append(cluster_.now(), LedgerKind::RecoveryBegin, failed_rank);

  cluster_.respawn_rank(failed_rank);

  RecoveryContext ctx;
  ctx.rank = failed_rank;
  ctx.failed_at = failed_at_ticks;
  ctx.cluster = &cluster_;
  ctx.store = this;

  // Pull every key this rank ever persisted from the nearest surviving
  // replica; ranks holding no needed replica stay out of the protocol.
  const auto nbs = neighbors(failed_rank);
  for (const auto& key : keys_ever_[static_cast<std::size_t>(failed_rank)]) {
    const PersistentEntry* found = nullptr;
    int holder = -1;
    for (int nb : nbs) {
      if (!cluster_.is_alive(nb)) continue;
      const PersistentEntry* e = replica_entry(nb, failed_rank, key);
      if (e != nullptr && (found == nullptr || e->version > found->version)) {
        found = e;
        holder = nb;
      }
    }
    if (found == nullptr)
      throw UnrecoverableFailureError("no surviving replica of key '" + key +
                                      "' for rank " + std::to_string(failed_rank));
    cluster_.send(holder, failed_rank, found->blob, "recovery:" + key);
    auto blob = cluster_.recv(holder, failed_rank);
    report.bytes_transferred += blob.size();
    if (std::find(report.ranks_involved.begin(), report.ranks_involved.end(), holder) ==
        report.ranks_involved.end())
      report.ranks_involved.push_back(holder);
    cluster_.ledger().append(cluster_.now(), LedgerKind::RecoveryFetch, failed_rank, holder,
                             static_cast<std::int64_t>(blob.size()),
                             static_cast<std::int64_t>(found->version), 0, key);
    PersistentEntry restored = *found;
    restored.blob = std::move(blob);
    // The owner copy is live again at the restored version.
    store_[static_cast<std::size_t>(failed_rank)][failed_rank][key] = restored;
    ctx.restored.emplace(key, std::move(restored));
  }
  report.keys_restored = ctx.restored.size();

  callbacks_[static_cast<std::size_t>(failed_rank)](ctx);

  report.bytes_transferred += ctx.fetched_bytes;
  report.recovered_at = cluster_.clock_units();
  report.duration = report.recovered_at - recover_start;
  report.degraded_redundancy = degraded_;
  cluster_.ledger().append(cluster_.now(), LedgerKind::RecoveryEnd, failed_rank, -1,
                           static_cast<std::int64_t>(report.bytes_transferred),
                           static_cast<std::int64_t>(report.keys_restored));
  return report;
}

}  // namespace ftsim
