// Agent behaviors.
//
// An Agent drafts an answer for a query (respond) and may revise it after
// reading its neighbors' answers (revise). The synthetic behaviors here are
// deterministic given the query sequence and the random stream handed in by
// the caller; they stand in for LLM agents in every test path.
//
// Agents only ever see queries, their own output and neighbor messages.
// Credibility and contribution scores never cross this interface.

#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crsim/core.hpp"
#include "crsim/rng.hpp"

namespace crsim {

enum class BehaviorKind { faithful, adversarial_consistent, adversarial_subtle, persuadable, scripted };

std::string_view to_string(BehaviorKind kind) noexcept;
BehaviorKind parse_behavior_kind(std::string_view text, std::string_view field = "behavior");
bool is_adversarial(BehaviorKind kind) noexcept;

inline constexpr double kDefaultSubtleOffset = 0.10;
inline constexpr std::size_t kDefaultFlipThreshold = 2;

struct AgentProfile {
  BehaviorKind kind = BehaviorKind::faithful;
  std::optional<double> accuracy;                  // faithful, persuadable
  std::optional<std::size_t> flip_threshold;       // persuadable
  std::optional<std::vector<std::string>> script;  // scripted
  std::optional<double> flip_probability;          // adversarial-subtle (default 0)
  std::optional<double> relative_offset;           // adversarial-subtle (default 0.1)

  static AgentProfile faithful(double accuracy);
  static AgentProfile adversarial_consistent();
  static AgentProfile adversarial_subtle(double flip_probability, double relative_offset = kDefaultSubtleOffset);
  static AgentProfile persuadable(double accuracy, std::size_t flip_threshold = kDefaultFlipThreshold);
  static AgentProfile scripted(std::vector<std::string> script);

  friend bool operator==(const AgentProfile&, const AgentProfile&) = default;
};

/// Parameters must be present exactly when the behavior needs them.
/// Throws Error(invalid_field) naming `field`.
void validate_profile(const AgentProfile& profile, std::string_view field = "agent");

/// A peer answer delivered over one graph edge during one interaction phase.
struct NeighborMessage {
  AgentId sender;
  AgentId receiver;
  std::string content;
  std::size_t phase = 0;

  friend bool operator==(const NeighborMessage&, const NeighborMessage&) = default;
};

class Agent {
 public:
  explicit Agent(AgentId id) : id_(std::move(id)) {}
  virtual ~Agent() = default;

  Agent(const Agent&) = delete;
  Agent& operator=(const Agent&) = delete;

  const AgentId& id() const noexcept { return id_; }

  /// Local inference: a fresh output with one revision entry at phase 0.
  virtual AgentOutput respond(const Query& query, Rng& rng) = 0;

  /// Returns `own` extended by exactly one revision entry.
  virtual AgentOutput revise(const AgentOutput& own, std::span<const NeighborMessage> inbox, Rng& rng) = 0;

  /// Short behavior name recorded alongside the agent in round records.
  virtual std::string describe() const = 0;

 protected:
  /// Throws Error(invalid_field) when `own` belongs to another agent.
  void check_owner(const AgentOutput& own) const;

 private:
  AgentId id_;
};

class SyntheticAgent final : public Agent {
 public:
  SyntheticAgent(AgentId id, AgentProfile profile);

  AgentOutput respond(const Query& query, Rng& rng) override;
  AgentOutput revise(const AgentOutput& own, std::span<const NeighborMessage> inbox, Rng& rng) override;
  std::string describe() const override { return std::string(to_string(profile_.kind)); }

  const AgentProfile& profile() const noexcept { return profile_; }

 private:
  std::string next_scripted();

  AgentProfile profile_;
  // Per-query memory, reset by every respond call.
  std::optional<Query> current_;
  // Scripted agents persist their position across queries.
  std::size_t script_cursor_ = 0;
};

std::unique_ptr<Agent> make_agent(AgentId id, AgentProfile profile);

// Answer construction shared by the synthetic behaviors.
std::string correct_answer(const Query& query);
/// The decoy when the query names one; otherwise the option after the gold
/// (multiple choice), 1.5 * gold + 1 (numeric) or a fixed refusal (free text).
std::string designated_wrong(const Query& query);
/// Gold perturbed by `relative_offset` for numeric queries, the designated
/// wrong answer otherwise.
std::string near_miss(const Query& query, double relative_offset);
/// A uniformly drawn wrong answer (another option, a shifted number, or a
/// hedge string).
std::string random_wrong(const Query& query, Rng& rng);

}  // namespace crsim
