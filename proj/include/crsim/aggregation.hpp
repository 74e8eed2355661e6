// Output fusion strategies.
//
// Every aggregator is a pure function of its inputs and breaks ties toward the
// lowest agent index. Answers are grouped after normalize_answer().

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crsim/core.hpp"
#include "crsim/embedding.hpp"
#include "crsim/judge.hpp"
#include "crsim/ledger.hpp"

namespace crsim {

struct AggregationResult {
  std::string final_answer;
  std::optional<AgentId> chosen_agent;
  std::map<std::size_t, double> candidate_scores;  // agent index -> score

  friend bool operator==(const AggregationResult&, const AggregationResult&) = default;
};

/// (1/N) * sum_i w_i * v_i. Weights are used as given, not normalized.
EmbeddingVector weighted_centroid(std::span<const EmbeddingVector> vectors, std::span<const double> weights);

/// The credibility-aware centroid: weights are the agents' current CrS.
/// Throws Error(missing_crs) for an agent absent from the ledger.
EmbeddingVector crs_centroid(std::span<const AgentOutput> outputs, const CredibilityLedger& ledger,
                             const FeatureHashEmbedder& embedder);

struct NearestPick {
  std::size_t index = 0;
  std::vector<double> distances;
};
/// Index of the vector with minimum cosine distance to `centroid`.
NearestPick nearest_to(std::span<const EmbeddingVector> vectors, const EmbeddingVector& centroid);

/// The output closest (cosine distance) to `centroid`; scores hold distances.
AggregationResult select_nearest(std::span<const AgentOutput> outputs, const EmbeddingVector& centroid,
                                 const FeatureHashEmbedder& embedder);

/// Group by normalized answer and pick the group with the largest total
/// weight; ties go to the group holding the lowest agent index. The chosen
/// agent is that group's lowest-index member. Scores hold each agent's group
/// total.
AggregationResult weighted_vote(std::span<const AgentOutput> outputs, std::span<const double> weights);

AggregationResult weighted_majority(std::span<const AgentOutput> outputs, const CredibilityLedger& ledger);
AggregationResult majority(std::span<const AgentOutput> outputs);

/// Output with the largest sum of cosine similarities to all others.
/// Throws Error(too_few_outputs) for fewer than two outputs.
AggregationResult similarity_ensemble(std::span<const AgentOutput> outputs, const FeatureHashEmbedder& embedder);

/// Baseline: the first output (lowest position) alone.
AggregationResult single_agent(std::span<const AgentOutput> outputs);

/// Sends candidates and credibility scores to the judge and adopts its final
/// answer. Throws Error(judge_unavailable) or Error(malformed_judge_reply).
AggregationResult coordinator_aggregate(std::span<const AgentOutput> outputs, const CredibilityLedger& ledger,
                                        const Query& query, JudgeChannel& judge);

struct AggregationContext {
  FeatureHashEmbedder embedder;
  JudgeChannel* judge = nullptr;  // coordinator only
  const Query* query = nullptr;   // coordinator only
};

/// Dispatch on `kind`. Throws Error(too_few_outputs) for an empty set; a
/// single output is returned as-is by every strategy.
AggregationResult aggregate(AggregatorKind kind, std::span<const AgentOutput> outputs,
                            const CredibilityLedger& ledger, const AggregationContext& context);

}  // namespace crsim
