#include "crsim/scoring.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <vector>

#include "crsim/parallel.hpp"

namespace crsim {

using nlohmann::json;

double ContributionVector::sum() const {
  double s = 0.0;
  for (const auto& [agent, v] : values) s += v;
  return s;
}

ContributionVector shapley_contributions(std::span<const AgentOutput> outputs, const SubsetAggregator& aggregator,
                                         const RewardFunction& reward, unsigned jobs) {
  const std::size_t n = outputs.size();
  if (n > kMaxShapleyTeam)
    throw Error(Errc::team_too_large, std::to_string(n), "exact Shapley supports at most 12 agents");
  ContributionVector result;
  result.mode = ContributionMode::shapley;
  if (n == 0) return result;

  const std::size_t coalitions = std::size_t{1} << n;
  std::vector<double> value(coalitions, 0.0);
  parallel_for(coalitions - 1, jobs, [&](std::size_t k) {
    const std::size_t mask = k + 1;
    std::vector<AgentOutput> subset;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (std::size_t{1} << i)) subset.push_back(outputs[i]);
    value[mask] = reward(aggregator(subset)).value();
  });

  // |S|! (N-|S|-1)! / N! for |S| = 0..N-1; all factorials up to 12! are exact doubles.
  std::vector<double> factorial(n + 1, 1.0);
  for (std::size_t k = 1; k <= n; ++k) factorial[k] = factorial[k - 1] * static_cast<double>(k);
  std::vector<double> weight(n);
  for (std::size_t s = 0; s < n; ++s) weight[s] = factorial[s] * factorial[n - s - 1] / factorial[n];

  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t bit = std::size_t{1} << i;
    double phi = 0.0;
    for (std::size_t mask = 0; mask < coalitions; ++mask) {
      if (mask & bit) continue;
      const auto size = static_cast<std::size_t>(std::popcount(mask));
      phi += weight[size] * (value[mask | bit] - value[mask]);
    }
    result.values[outputs[i].agent().index] = phi;
  }
  return result;
}

ContributionVector reward_shares(const ContributionVector& shapley, RewardValue reward) {
  ContributionVector shares;
  shares.mode = shapley.mode;
  const double r = reward.value();
  for (const auto& [agent, phi] : shapley.values) shares.values[agent] = r == 0.0 ? 0.0 : phi / r;
  return shares;
}

ContributionVector parse_judge_contributions(const json& reply, std::span<const AgentOutput> outputs,
                                             bool signed_scores) {
  if (!reply.is_object() || !reply.contains("csc") || !reply["csc"].is_array())
    throw Error(Errc::malformed_judge_reply, "non-numeric", "reply lacks a 'csc' array");
  const auto& csc = reply["csc"];
  if (csc.size() != outputs.size())
    throw Error(Errc::malformed_judge_reply, "length-mismatch",
                "expected " + std::to_string(outputs.size()) + " scores, got " + std::to_string(csc.size()));

  std::vector<double> raw;
  raw.reserve(csc.size());
  for (const auto& v : csc) {
    if (!v.is_number()) throw Error(Errc::malformed_judge_reply, "non-numeric", "score is not a number: " + v.dump());
    const double x = v.get<double>();
    const double lo = signed_scores ? -1.0 : 0.0;
    if (!(std::isfinite(x) && x >= lo && x <= 1.0))
      throw Error(Errc::malformed_judge_reply, "out-of-range", "score " + v.dump() + " outside the allowed range");
    raw.push_back(x);
  }
  double total = 0.0;
  for (double x : raw) total += std::abs(x);
  if (!(total >= 0.5 && total <= 2.0))
    throw Error(Errc::malformed_judge_reply, "out-of-range", "scores sum to " + format_number(total));

  ContributionVector result;
  result.mode = ContributionMode::judge;
  for (std::size_t i = 0; i < outputs.size(); ++i) result.values[outputs[i].agent().index] = raw[i] / total;
  return result;
}

ContributionVector judge_contributions(const Query& query, const std::string& final_answer,
                                       std::span<const AgentOutput> outputs,
                                       std::span<const NeighborMessage> messages, JudgeChannel& judge,
                                       bool signed_scores) {
  const auto request = make_contribution_request(query, final_answer, outputs, messages);
  return parse_judge_contributions(judge.score_contributions(request), outputs, signed_scores);
}

double updated_crs(double crs, double csc, double reward, double eta) noexcept {
  return crs * (1.0 + eta * csc * reward);
}

CredibilityLedger update_credibility(const CredibilityLedger& ledger, std::span<const std::size_t> team,
                                     const ContributionVector& contributions, RewardValue reward, double eta,
                                     bool clamp) {
  CrsMap next = ledger.scores();
  for (std::size_t agent : team) {
    const auto it = contributions.values.find(agent);
    if (it == contributions.values.end())
      throw Error(Errc::missing_contribution, "agent " + std::to_string(agent), "no contribution score for team member");
    double value = updated_crs(ledger.crs(agent), it->second, reward.value(), eta);
    if (clamp) value = std::clamp(value, 0.0, 1.0);
    next[agent] = value;
  }
  CredibilityLedger updated = ledger;
  updated.commit(std::move(next));
  return updated;
}

}  // namespace crsim
