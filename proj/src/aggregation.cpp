#include "crsim/aggregation.hpp"

#include <algorithm>
#include <tuple>

namespace crsim {

namespace {

std::vector<EmbeddingVector> embed_all(std::span<const AgentOutput> outputs, const FeatureHashEmbedder& embedder) {
  std::vector<EmbeddingVector> out;
  out.reserve(outputs.size());
  for (const auto& o : outputs) out.push_back(embedder.embed(o.answer()));
  return out;
}

void require_nonempty(std::span<const AgentOutput> outputs) {
  if (outputs.empty()) throw Error(Errc::too_few_outputs, "outputs", "at least one output is required");
}

AggregationResult pick(const AgentOutput& chosen) {
  return {chosen.answer(), chosen.agent(), {}};
}

}  // namespace

EmbeddingVector weighted_centroid(std::span<const EmbeddingVector> vectors, std::span<const double> weights) {
  if (vectors.empty()) throw Error(Errc::too_few_outputs, "outputs", "centroid of an empty set");
  if (vectors.size() != weights.size()) throw Error(Errc::invalid_field, "weights", "one weight per vector");
  EmbeddingVector c;
  c.components.assign(vectors.front().dim(), 0.0);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].dim() != c.dim()) throw Error(Errc::invalid_field, "embedding", "dimension mismatch");
    for (std::size_t d = 0; d < c.dim(); ++d) c.components[d] += weights[i] * vectors[i].components[d];
  }
  const double n = static_cast<double>(vectors.size());
  for (double& x : c.components) x /= n;
  return c;
}

EmbeddingVector crs_centroid(std::span<const AgentOutput> outputs, const CredibilityLedger& ledger,
                             const FeatureHashEmbedder& embedder) {
  require_nonempty(outputs);
  std::vector<double> weights;
  weights.reserve(outputs.size());
  for (const auto& o : outputs) weights.push_back(ledger.crs(o.agent().index));
  const auto vectors = embed_all(outputs, embedder);
  return weighted_centroid(vectors, weights);
}

NearestPick nearest_to(std::span<const EmbeddingVector> vectors, const EmbeddingVector& centroid) {
  NearestPick pick;
  pick.distances.reserve(vectors.size());
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    const double d = cosine_distance(vectors[i], centroid);
    pick.distances.push_back(d);
    if (d < pick.distances[pick.index]) pick.index = i;
  }
  return pick;
}

AggregationResult select_nearest(std::span<const AgentOutput> outputs, const EmbeddingVector& centroid,
                                 const FeatureHashEmbedder& embedder) {
  require_nonempty(outputs);
  const auto vectors = embed_all(outputs, embedder);
  // Positions follow agent order, so the lowest position is the lowest index.
  const auto nearest = nearest_to(vectors, centroid);
  auto result = pick(outputs[nearest.index]);
  for (std::size_t i = 0; i < outputs.size(); ++i)
    result.candidate_scores[outputs[i].agent().index] = nearest.distances[i];
  return result;
}

AggregationResult weighted_vote(std::span<const AgentOutput> outputs, std::span<const double> weights) {
  require_nonempty(outputs);
  if (outputs.size() != weights.size()) throw Error(Errc::invalid_field, "weights", "one weight per output");

  // normalized answer -> (total weight, position of lowest agent index)
  std::map<std::string, std::pair<double, std::size_t>> groups;
  std::vector<std::string> keys;
  keys.reserve(outputs.size());
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    keys.push_back(normalize_answer(outputs[i].answer()));
    auto [it, fresh] = groups.try_emplace(keys.back(), 0.0, i);
    it->second.first += weights[i];
    if (outputs[i].agent().index < outputs[it->second.second].agent().index) it->second.second = i;
  }

  const std::pair<double, std::size_t>* best = nullptr;
  for (const auto& [key, group] : groups) {
    if (best == nullptr || group.first > best->first ||
        (group.first == best->first &&
         outputs[group.second].agent().index < outputs[best->second].agent().index))
      best = &group;
  }

  auto result = pick(outputs[best->second]);
  for (std::size_t i = 0; i < outputs.size(); ++i)
    result.candidate_scores[outputs[i].agent().index] = groups.at(keys[i]).first;
  return result;
}

AggregationResult weighted_majority(std::span<const AgentOutput> outputs, const CredibilityLedger& ledger) {
  std::vector<double> weights;
  weights.reserve(outputs.size());
  for (const auto& o : outputs) weights.push_back(ledger.crs(o.agent().index));
  return weighted_vote(outputs, weights);
}

AggregationResult majority(std::span<const AgentOutput> outputs) {
  const std::vector<double> ones(outputs.size(), 1.0);
  return weighted_vote(outputs, ones);
}

AggregationResult similarity_ensemble(std::span<const AgentOutput> outputs, const FeatureHashEmbedder& embedder) {
  if (outputs.size() < 2) throw Error(Errc::too_few_outputs, "outputs", "similarity ensemble needs two outputs");
  const auto vectors = embed_all(outputs, embedder);
  const std::size_t n = outputs.size();
  std::vector<double> total(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> terms;
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) terms.push_back(cosine_similarity(vectors[i], vectors[j]));
    // Summing in sorted order gives outputs with identical text identical totals.
    std::sort(terms.begin(), terms.end());
    for (double t : terms) total[i] += t;
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (total[i] > total[best]) best = i;
  auto result = pick(outputs[best]);
  for (std::size_t i = 0; i < n; ++i) result.candidate_scores[outputs[i].agent().index] = total[i];
  return result;
}

AggregationResult single_agent(std::span<const AgentOutput> outputs) {
  require_nonempty(outputs);
  auto result = pick(outputs.front());
  result.candidate_scores[outputs.front().agent().index] = 1.0;
  return result;
}

AggregationResult coordinator_aggregate(std::span<const AgentOutput> outputs, const CredibilityLedger& ledger,
                                        const Query& query, JudgeChannel& judge) {
  require_nonempty(outputs);
  const auto request = make_coordinator_request(outputs, ledger, query);
  const auto reply = judge.coordinate(request);
  if (!reply.is_object() || !reply.contains("final") || !reply["final"].is_string())
    throw Error(Errc::malformed_judge_reply, "final", "coordinator reply lacks a text 'final' field");

  AggregationResult result;
  result.final_answer = reply["final"].get<std::string>();
  const auto key = normalize_answer(result.final_answer);
  for (const auto& o : outputs) {
    result.candidate_scores[o.agent().index] = ledger.crs(o.agent().index);
    if (!result.chosen_agent && normalize_answer(o.answer()) == key) {
      result.chosen_agent = o.agent();
      result.final_answer = o.answer();
    }
  }
  return result;
}

AggregationResult aggregate(AggregatorKind kind, std::span<const AgentOutput> outputs,
                            const CredibilityLedger& ledger, const AggregationContext& context) {
  require_nonempty(outputs);
  if (outputs.size() == 1) {
    auto result = pick(outputs.front());
    result.candidate_scores[outputs.front().agent().index] = 0.0;
    return result;
  }
  switch (kind) {
    case AggregatorKind::crs_centroid:
      return select_nearest(outputs, crs_centroid(outputs, ledger, context.embedder), context.embedder);
    case AggregatorKind::weighted_majority:
      return weighted_majority(outputs, ledger);
    case AggregatorKind::majority:
      return majority(outputs);
    case AggregatorKind::similarity:
      return similarity_ensemble(outputs, context.embedder);
    case AggregatorKind::coordinator:
      if (context.judge == nullptr || context.query == nullptr)
        throw Error(Errc::judge_unavailable, "judge", "coordinator aggregation needs a judge channel");
      return coordinator_aggregate(outputs, ledger, *context.query, *context.judge);
    case AggregatorKind::single_agent:
      return single_agent(outputs);
  }
  throw Error(Errc::invalid_kind, "aggregator", "unhandled aggregator");
}

}  // namespace crsim
