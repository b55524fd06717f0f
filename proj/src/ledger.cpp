#include "ftsim/ledger.hpp"

#include <cstdio>

namespace ftsim {

const char* ledger_kind_name(LedgerKind k) {
  switch (k) {
    case LedgerKind::ClusterSpawn: return "spawn";
    case LedgerKind::CollectiveIssue: return "coll_issue";
    case LedgerKind::CollectiveComplete: return "coll_done";
    case LedgerKind::CollectiveAborted: return "coll_abort";
    case LedgerKind::MessageSend: return "send";
    case LedgerKind::MessageRecv: return "recv";
    case LedgerKind::MessageDropped: return "msg_drop";
    case LedgerKind::RankKill: return "kill";
    case LedgerKind::RankRespawn: return "respawn";
    case LedgerKind::FaultInjected: return "fault_injected";
    case LedgerKind::FaultSkipped: return "fault_skipped";
    case LedgerKind::Persist: return "persist";
    case LedgerKind::ReplicaWrite: return "replica";
    case LedgerKind::RecoveryBegin: return "recovery_begin";
    case LedgerKind::RecoveryFetch: return "recovery_fetch";
    case LedgerKind::RecoveryEnd: return "recovery_end";
    case LedgerKind::Note: return "note";
  }
  return "?";
}

std::string LedgerEntry::to_line() const {
  char buf[192];
  std::snprintf(buf, sizeof(buf), "%llu|%lld|%s|%d|%d|%lld|%lld|%lld|",
                static_cast<unsigned long long>(seq), static_cast<long long>(time),
                ledger_kind_name(kind), a, b, static_cast<long long>(i0),
                static_cast<long long>(i1), static_cast<long long>(i2));
  return std::string(buf) + tag;
}

std::uint64_t Ledger::append(SimTime time, LedgerKind kind, int a, int b, std::int64_t i0,
                             std::int64_t i1, std::int64_t i2, std::string tag) {
  LedgerEntry e;
  e.seq = next_seq_++;
  e.time = time;
  e.kind = kind;
  e.a = a;
  e.b = b;
  e.i0 = i0;
  e.i1 = i1;
  e.i2 = i2;
  e.tag = std::move(tag);
  entries_.push_back(std::move(e));
  return entries_.back().seq;
}

std::string Ledger::to_text() const {
  std::string out;
  out.reserve(entries_.size() * 48);
  for (const auto& e : entries_) {
    out += e.to_line();
    out += '\n';
  }
  return out;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t Ledger::digest() const { return fnv1a64(to_text()); }

std::size_t Ledger::count(LedgerKind kind) const {
  std::size_t n = 0;
  for (const auto& e : entries_)
    if (e.kind == kind) ++n;
  return n;
}

}  // namespace ftsim
