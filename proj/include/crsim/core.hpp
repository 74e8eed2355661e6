// Domain types shared by every part of the simulator.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace crsim {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

enum class Errc {
  invalid_field,
  invalid_kind,
  too_small,
  script_exhausted,
  endpoint_unreachable,
  malformed_response,
  missing_crs,
  too_few_outputs,
  judge_unavailable,
  malformed_judge_reply,
  team_too_large,
  missing_contribution,
  dataset_error,
  record_error,
};

std::string_view to_string(Errc code) noexcept;

/// The single exception type thrown by the library. `subject` names the
/// offending field, agent or file so callers can report it precisely.
class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string subject, const std::string& reason)
      : std::runtime_error(std::string(to_string(code)) + "(" + subject + "): " + reason),
        code_(code),
        subject_(std::move(subject)) {}

  Errc code() const noexcept { return code_; }
  const std::string& subject() const noexcept { return subject_; }

 private:
  Errc code_;
  std::string subject_;
};

// ---------------------------------------------------------------------------
// Text helpers
// ---------------------------------------------------------------------------

/// Trim, case-fold and collapse internal whitespace. Used for grouping
/// answers during aggregation and for exact grading.
std::string normalize_answer(std::string_view text);

/// Shortest decimal text that round-trips to `value`.
std::string format_number(double value);

/// Parse a whole string as a finite real number; surrounding whitespace is
/// allowed, anything else is not.
std::optional<double> parse_number(std::string_view text);

// ---------------------------------------------------------------------------
// Queries and grading targets
// ---------------------------------------------------------------------------

enum class TaskKind { multiple_choice, numeric, free_text };

struct GoldAnswer {
  std::string canonical;
  std::vector<std::string> accepted_alternates;
  std::optional<double> numeric_value;
  std::optional<double> numeric_tolerance;  // only with numeric_value
};

enum class RubricKind { exact, numeric, tiered };

struct PartialBand {
  // "alternate" matches any accepted alternate, "alternate:<k>" the k-th one,
  // "contains-canonical" a final answer containing the canonical text.
  std::string predicate;
  double reward = 0.5;  // within [0.5, 1)
};

struct GradingRubric {
  RubricKind kind = RubricKind::exact;
  double correct_reward = 1.0;
  double wrong_reward = -1.0;
  std::vector<PartialBand> partial_bands;
};

struct Query {
  std::string id;
  std::string prompt;
  TaskKind kind = TaskKind::multiple_choice;
  std::vector<std::string> options;   // multiple-choice only
  GoldAnswer gold;
  std::optional<std::string> decoy;   // designated wrong answer for adversaries
  GradingRubric rubric;
};

/// Throws Error(invalid_field) when a query or its gold answer breaks an
/// invariant.
void validate_query(const Query& query);

/// Throws Error(invalid_field) naming the first bad rubric field.
void validate_rubric(const GradingRubric& rubric);

// ---------------------------------------------------------------------------
// Agents and their outputs
// ---------------------------------------------------------------------------

struct AgentId {
  std::size_t index = 0;
  std::string label;

  friend bool operator==(const AgentId&, const AgentId&) = default;
};

struct Revision {
  std::size_t phase = 0;
  std::string text;

  friend bool operator==(const Revision&, const Revision&) = default;
};

/// One agent's candidate answer. The revision history is never empty and its
/// last entry always equals `answer()`.
class AgentOutput {
 public:
  AgentOutput(AgentId agent, std::string initial_answer);
  /// Rebuild from a recorded history; throws Error(record_error) when empty.
  AgentOutput(AgentId agent, std::vector<Revision> history);

  const AgentId& agent() const noexcept { return agent_; }
  const std::string& answer() const noexcept { return history_.back().text; }
  const std::vector<Revision>& revisions() const noexcept { return history_; }

  /// A copy extended by one revision entry.
  AgentOutput revised(std::size_t phase, std::string text) const;

  /// Number of revisions whose text differs from the preceding entry.
  std::size_t change_count() const;

  friend bool operator==(const AgentOutput&, const AgentOutput&) = default;

 private:
  AgentId agent_;
  std::vector<Revision> history_;
};

/// r_t, always within [-1, 1].
class RewardValue {
 public:
  /// Throws Error(invalid_field) outside [-1, 1] or for NaN.
  static RewardValue checked(double value);
  /// Saturates into [-1, 1]; NaN becomes -1.
  static RewardValue clamped(double value) noexcept;

  double value() const noexcept { return value_; }
  friend bool operator==(const RewardValue&, const RewardValue&) = default;

 private:
  explicit RewardValue(double v) noexcept : value_(v) {}
  double value_;
};

// ---------------------------------------------------------------------------
// Enumerations shared by config, topology, aggregation and scoring
// ---------------------------------------------------------------------------

enum class TopologyKind { edgeless, sia_random, crs_chain, ring, complete };

enum class AggregatorKind {
  crs_centroid,       // nearest output to the credibility-weighted centroid
  weighted_majority,  // answer group with the largest credibility mass
  majority,           // plurality vote
  similarity,         // largest total pairwise similarity
  coordinator,        // judge-channel coordinator
  single_agent,       // agent 0 alone
};

enum class ContributionMode { shapley, judge };

std::string_view to_string(TaskKind kind) noexcept;
std::string_view to_string(RubricKind kind) noexcept;
std::string_view to_string(TopologyKind kind) noexcept;
std::string_view to_string(AggregatorKind kind) noexcept;
std::string_view to_string(ContributionMode mode) noexcept;

// Parsers throw Error(invalid_kind) naming `field`.
TaskKind parse_task_kind(std::string_view text, std::string_view field = "kind");
RubricKind parse_rubric_kind(std::string_view text, std::string_view field = "kind");
TopologyKind parse_topology_kind(std::string_view text, std::string_view field = "topology");
AggregatorKind parse_aggregator_kind(std::string_view text, std::string_view field = "aggregator");
ContributionMode parse_contribution_mode(std::string_view text,
                                         std::string_view field = "contribution_mode");

}  // namespace crsim
