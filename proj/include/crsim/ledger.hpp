#pragma once

#include <cstddef>
#include <map>
#include <vector>

#include "crsim/core.hpp"

namespace crsim {

using CrsMap = std::map<std::size_t, double>;

/// Per-agent credibility scores, keyed by agent index, plus one snapshot per
/// completed update.
class CredibilityLedger {
 public:
  CredibilityLedger() = default;
  explicit CredibilityLedger(CrsMap scores, std::size_t round = 0);

  static CredibilityLedger uniform(std::size_t agents, double initial);

  /// Throws Error(missing_crs) when the agent has no entry.
  double crs(std::size_t agent) const;
  bool contains(std::size_t agent) const { return scores_.count(agent) != 0; }

  const CrsMap& scores() const noexcept { return scores_; }
  std::size_t round() const noexcept { return round_; }
  const std::vector<CrsMap>& history() const noexcept { return history_; }

  /// Replace scores, advance the round counter and append a snapshot.
  void commit(CrsMap next);

  friend bool operator==(const CredibilityLedger&, const CredibilityLedger&) = default;

 private:
  CrsMap scores_;
  std::size_t round_ = 0;
  std::vector<CrsMap> history_;
};

}  // namespace crsim
