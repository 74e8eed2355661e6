#include "crsim/ledger.hpp"

#include <string>
#include <utility>

namespace crsim {

CredibilityLedger::CredibilityLedger(CrsMap scores, std::size_t round) : scores_(std::move(scores)), round_(round) {}

CredibilityLedger CredibilityLedger::uniform(std::size_t agents, double initial) {
  CrsMap scores;
  for (std::size_t i = 0; i < agents; ++i) scores.emplace(i, initial);
  return CredibilityLedger(std::move(scores));
}

double CredibilityLedger::crs(std::size_t agent) const {
  const auto it = scores_.find(agent);
  if (it == scores_.end()) throw Error(Errc::missing_crs, "agent " + std::to_string(agent), "no credibility entry");
  return it->second;
}

void CredibilityLedger::commit(CrsMap next) {
  scores_ = std::move(next);
  ++round_;
  history_.push_back(scores_);
}

}  // namespace crsim
