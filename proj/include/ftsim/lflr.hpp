#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ftsim/sim_cluster.hpp"

namespace ftsim {

/// A key -> blob record persisted by one rank and replicated to its ring
/// neighbors. Versions are monotone; replicas always hold the last
/// completed persist.
struct PersistentEntry {
  std::string key;
  std::vector<std::uint8_t> blob;
  std::uint64_t version = 0;
  int owner_rank = -1;
};

class PersistentStore;

/// What a recovery callback gets to see: the failed rank's restored entries
/// plus read-only access to the neighbors' own persisted data.
struct RecoveryContext {
  int rank = -1;
  SimTime failed_at = 0;
  std::map<std::string, PersistentEntry> restored;
  SimCluster* cluster = nullptr;
  PersistentStore* store = nullptr;

  /// Fetches a neighbor's own entry over the wire (counted as recovery
  /// traffic). Returns nullopt when the neighbor has no such key.
  std::optional<PersistentEntry> fetch_neighbor_entry(int neighbor, const std::string& key);

  std::uint64_t fetched_bytes = 0;
};

using RecoveryFn = std::function<void(RecoveryContext&)>;

struct RecoveryReport {
  int rank = -1;
  double failed_at = 0.0;
  double recovered_at = 0.0;
  double duration = 0.0;
  std::uint64_t bytes_transferred = 0;
  std::vector<int> ranks_involved;  // replica holders that served data
  std::size_t keys_restored = 0;
  bool degraded_redundancy = false;
};

struct PersistOptions {
  int replication_degree = 1;      // ring neighbors on each side
  double persist_latency = 0.05;   // simulated cost of one persist call
};

/// Per-rank durable key-value store with ring replication and registered
/// recovery callbacks. Owner copies and hosted replicas die with their rank;
/// recovery pulls the last completed version from surviving holders.
class PersistentStore {
 public:
  PersistentStore(SimCluster& cluster, PersistOptions opts = {});

  /// Writes locally and replicates to the k ring neighbors each side before
  /// returning, in simulated time. Atomic per key: if the owner dies inside
  /// the persist window nothing becomes visible and nullopt is returned.
  /// A dead neighbor degrades redundancy but does not fail the persist.
  std::optional<std::uint64_t> persist(int rank, const std::string& key,
                                       std::vector<std::uint8_t> blob);

  /// At most one callback per rank; it runs on respawn before the rank
  /// rejoins the computation.
  void register_recovery(int rank, RecoveryFn fn);
  bool has_recovery(int rank) const;

  /// Respawns `failed_rank`, restores every key it ever persisted from the
  /// nearest surviving replica, and invokes the registered callback.
  /// Throws UnrecoverableFailureError when a key has no surviving copy or no
  /// callback was registered.
  RecoveryReport recover(int failed_rank);

  /// Ring neighbors (k per side), excluding self, deduplicated, in
  /// deterministic order.
  std::vector<int> neighbors(int rank) const;

  bool degraded() const { return degraded_; }
  const PersistentEntry* owner_entry(int rank, const std::string& key) const;
  const PersistentEntry* replica_entry(int holder, int owner, const std::string& key) const;

 private:
  friend struct RecoveryContext;

  void on_rank_death(int rank);

  SimCluster& cluster_;
  PersistOptions opts_;

  // store_[holder][owner][key]; holder == owner is the owner copy.
  std::vector<std::map<int, std::map<std::string, PersistentEntry>>> store_;
  std::vector<std::map<std::string, std::uint64_t>> versions_;  // authoritative next-version counters
  std::vector<std::vector<std::string>> keys_ever_;              // keys each rank ever persisted
  std::vector<RecoveryFn> callbacks_;
  bool degraded_ = false;
};

}  // namespace ftsim
