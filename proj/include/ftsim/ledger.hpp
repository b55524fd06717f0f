#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ftsim/sim_time.hpp"

namespace ftsim {

enum class LedgerKind : std::uint8_t {
  ClusterSpawn,
  CollectiveIssue,
  CollectiveComplete,
  CollectiveAborted,
  MessageSend,
  MessageRecv,
  MessageDropped,
  RankKill,
  RankRespawn,
  FaultInjected,
  FaultSkipped,
  Persist,
  ReplicaWrite,
  RecoveryBegin,
  RecoveryFetch,
  RecoveryEnd,
  Note,
};

const char* ledger_kind_name(LedgerKind k);

/// One totally-ordered event in the run history. `seq` breaks time ties so
/// replay order is unambiguous.
struct LedgerEntry {
  std::uint64_t seq = 0;
  SimTime time = 0;
  LedgerKind kind = LedgerKind::Note;
  int a = -1;  // primary rank
  int b = -1;  // peer rank, when any
  std::int64_t i0 = 0;
  std::int64_t i1 = 0;
  std::int64_t i2 = 0;
  std::string tag;

  std::string to_line() const;
};

/// Append-only event record. Two runs are replay-identical iff their ledgers
/// serialize to the same bytes.
class Ledger {
 public:
  std::uint64_t append(SimTime time, LedgerKind kind, int a = -1, int b = -1,
                       std::int64_t i0 = 0, std::int64_t i1 = 0, std::int64_t i2 = 0,
                       std::string tag = {});

  const std::vector<LedgerEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  std::string to_text() const;
  std::uint64_t digest() const;  // FNV-1a 64 over to_text()

  std::size_t count(LedgerKind kind) const;

 private:
  std::vector<LedgerEntry> entries_;
  std::uint64_t next_seq_ = 0;
};

std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace ftsim
