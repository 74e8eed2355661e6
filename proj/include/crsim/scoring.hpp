// Contribution scores and the credibility update.

#pragma once

#include <cstddef>
#include <functional>
#include <json.hpp>
#include <map>
#include <span>
#include <string>

#include "crsim/agents.hpp"
#include "crsim/judge.hpp"
#include "crsim/ledger.hpp"

namespace crsim {

inline constexpr std::size_t kMaxShapleyTeam = 12;

struct ContributionVector {
  ContributionMode mode = ContributionMode::shapley;
  std::map<std::size_t, double> values;  // agent index -> CSc

  double sum() const;
  friend bool operator==(const ContributionVector&, const ContributionVector&) = default;
};

/// Final answer produced from a subset of the round's outputs (kept in agent
/// order). Never called with an empty subset.
using SubsetAggregator = std::function<std::string(std::span<const AgentOutput>)>;
using RewardFunction = std::function<RewardValue(const std::string&)>;

/// Exact Shapley values of the game v(S) = reward(aggregate(S)), v({}) = 0.
/// Coalitions are evaluated once each, in ascending bitmask order; `jobs`
/// only spreads those evaluations over threads. Throws Error(team_too_large)
/// above kMaxShapleyTeam outputs.
ContributionVector shapley_contributions(std::span<const AgentOutput> outputs, const SubsetAggregator& aggregator,
                                         const RewardFunction& reward, unsigned jobs = 1);

/// Shapley values expressed as shares of the round reward: phi_i / r, so the
/// shares sum to 1 whenever the full coalition earns r != 0. A zero reward
/// yields all-zero shares (the credibility update is then a no-op anyway).
ContributionVector reward_shares(const ContributionVector& shapley, RewardValue reward);

/// Check a judge's {csc: [...]} reply against the team and rescale it to sum
/// to 1 (or absolute values summing to 1 when `signed_scores`). Totals
/// outside [0.5, 2] are rejected. Throws Error(malformed_judge_reply) whose
/// subject is one of length-mismatch, non-numeric, out-of-range.
ContributionVector parse_judge_contributions(const nlohmann::json& reply, std::span<const AgentOutput> outputs,
                                             bool signed_scores = false);

/// Ask the judge for per-agent contributions given the final answer, the
/// message log and every agent's output history.
ContributionVector judge_contributions(const Query& query, const std::string& final_answer,
                                       std::span<const AgentOutput> outputs,
                                       std::span<const NeighborMessage> messages, JudgeChannel& judge,
                                       bool signed_scores = false);

/// CrS_t = CrS_{t-1} * (1 + eta * CSc * r) for each team member, optionally
/// clamped to [0, 1]. Agents outside `team` keep their exact value.
/// Throws Error(missing_contribution) or Error(missing_crs).
CredibilityLedger update_credibility(const CredibilityLedger& ledger, std::span<const std::size_t> team,
                                     const ContributionVector& contributions, RewardValue reward, double eta,
                                     bool clamp);

/// The single-agent form of the update rule.
double updated_crs(double crs, double csc, double reward, double eta) noexcept;

}  // namespace crsim
