// Judge channel: the external evaluator used by the coordinator aggregator
// and by judge-mode contribution scoring.
//
// Wire formats (JSON):
//   coordinate           {candidates: [{agent, answer, crs}], query}
//                     -> {final, rationale}
//   score_contributions  {query, final, outputs: [{agent, answer, revisions}], messages: [...]}
//                     -> {csc: [real; N]}
//
// SyntheticJudge answers both in-process with fixed deterministic policies.

#pragma once

#include <json.hpp>
#include <span>
#include <string>
#include <vector>

#include "crsim/agents.hpp"
#include "crsim/ledger.hpp"
#include "crsim/remote.hpp"

namespace crsim {

class JudgeChannel {
 public:
  virtual ~JudgeChannel() = default;
  virtual nlohmann::json coordinate(const nlohmann::json& request) = 0;
  virtual nlohmann::json score_contributions(const nlohmann::json& request) = 0;
  virtual std::string name() const = 0;
};

/// Offline stand-in.
///
/// coordinate: credibility-weighted vote over normalized answers; when every
/// answer is distinct, the highest-credibility candidate wins (lowest agent
/// index on ties).
///
/// score_contributions: agents whose answer matches the team's final answer
/// share 0.8 equally, the others share 0.2, and the vector is rescaled to sum
/// to 1. With `signed_scores` the non-matching shares are negated instead, so
/// dissenting agents gain credibility when the team is penalized.
class SyntheticJudge final : public JudgeChannel {
 public:
  explicit SyntheticJudge(bool signed_scores = false) : signed_(signed_scores) {}

  nlohmann::json coordinate(const nlohmann::json& request) override;
  nlohmann::json score_contributions(const nlohmann::json& request) override;
  std::string name() const override { return signed_ ? "synthetic-signed" : "synthetic"; }

 private:
  bool signed_;
};

/// Forwards the request JSON to a chat-completion endpoint and parses the
/// completion text as the reply JSON. Transport failures surface as
/// Error(judge_unavailable); unparseable completions as
/// Error(malformed_judge_reply).
class RemoteJudge final : public JudgeChannel {
 public:
  explicit RemoteJudge(EndpointDescriptor endpoint) : client_(std::move(endpoint)) {}

  nlohmann::json coordinate(const nlohmann::json& request) override;
  nlohmann::json score_contributions(const nlohmann::json& request) override;
  std::string name() const override { return "remote"; }

 private:
  nlohmann::json ask(const std::string& instruction, const nlohmann::json& request);
  ChatClient client_;
};

nlohmann::json outputs_to_json(std::span<const AgentOutput> outputs);
nlohmann::json messages_to_json(std::span<const NeighborMessage> messages);

nlohmann::json make_coordinator_request(std::span<const AgentOutput> outputs, const CredibilityLedger& ledger,
                                        const Query& query);
nlohmann::json make_contribution_request(const Query& query, const std::string& final_answer,
                                         std::span<const AgentOutput> outputs,
                                         std::span<const NeighborMessage> messages);

}  // namespace crsim
