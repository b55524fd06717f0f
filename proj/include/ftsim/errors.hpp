#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ftsim {

/// Invalid configuration supplied by the user (bad JSON, negative rates,
/// CFL violation, plans targeting protected regions, ...).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// API misuse: waiting twice on a handle, killing a dead rank, mismatched
/// vector distributions and the like.
class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised for survivors when an operation involves a failed rank.
class RankFailureError : public std::runtime_error {
 public:
  RankFailureError(const std::string& what, std::vector<int> ranks)
      : std::runtime_error(what), failed_ranks(std::move(ranks)) {}
  std::vector<int> failed_ranks;
};

/// Recovery cannot restore state (all replicas of a key lost, no recovery
/// callback registered, required halo history missing).
class UnrecoverableFailureError : public std::runtime_error {
 public:
  explicit UnrecoverableFailureError(const std::string& what) : std::runtime_error(what) {}
};

/// A solver kept rejecting corrupted cycles beyond its retry budget.
class PersistentCorruptionError : public std::runtime_error {
 public:
  explicit PersistentCorruptionError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ftsim
