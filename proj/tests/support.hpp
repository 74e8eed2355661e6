// Shared fixtures for the unit tests.

#pragma once

#include <string>
#include <vector>

#include "crsim/core.hpp"
#include "crsim/ledger.hpp"
#include "crsim/rng.hpp"

namespace crsim::testing {

inline std::vector<AgentOutput> outputs_of(const std::vector<std::string>& answers) {
  std::vector<AgentOutput> out;
  for (std::size_t i = 0; i < answers.size(); ++i) out.emplace_back(AgentId{i, "a" + std::to_string(i)}, answers[i]);
  return out;
}

inline CredibilityLedger ledger_of(const std::vector<double>& crs) {
  CrsMap m;
  for (std::size_t i = 0; i < crs.size(); ++i) m[i] = crs[i];
  return CredibilityLedger(m);
}

inline Query mc_query(const std::string& gold, std::string id = "q") {
  Query q;
  q.id = std::move(id);
  q.prompt = "pick one";
  q.kind = TaskKind::multiple_choice;
  q.options = {"A", "B", "C", "D"};
  q.gold.canonical = gold;
  return q;
}

inline Query numeric_query(double gold, double tolerance, std::string id = "n") {
  Query q;
  q.id = std::move(id);
  q.prompt = "compute";
  q.kind = TaskKind::numeric;
  q.gold.canonical = format_number(gold);
  q.gold.numeric_value = gold;
  q.gold.numeric_tolerance = tolerance;
  q.rubric.kind = RubricKind::numeric;
  return q;
}

// Random answers over a small alphabet so coalitions and ties are common.
inline std::vector<std::string> random_answers(Rng& rng, std::size_t n, std::size_t alphabet) {
  static const char* letters[] = {"A", "B", "C", "D", "E", "F"};
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(letters[rng.below(alphabet)]);
  return out;
}

inline std::vector<double> random_crs(Rng& rng, std::size_t n) {
  std::vector<double> out;
  // Quantized so exact weight ties occur in random instances.
  for (std::size_t i = 0; i < n; ++i) out.push_back(static_cast<double>(rng.below(9)) / 8.0);
  return out;
}

}  // namespace crsim::testing
