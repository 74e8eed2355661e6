// Experiment configuration: defaults, validation and strict JSON mapping.

#pragma once

#include <cstddef>
#include <cstdint>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "crsim/agents.hpp"
#include "crsim/remote.hpp"

namespace crsim {

enum class ShapleyNormalization {
  reward_share,  // CSc = phi / r, shares sum to 1
  raw,           // CSc = phi, sums to r
};

std::string_view to_string(ShapleyNormalization mode) noexcept;

/// One team slot: a synthetic profile, or a remote endpoint.
struct AgentSpec {
  AgentProfile profile;
  std::optional<EndpointDescriptor> endpoint;  // set => remote agent
};

struct ExperimentConfig {
  std::size_t team_size = 5;
  std::size_t adversary_count = 3;
  BehaviorKind adversary_behavior = BehaviorKind::adversarial_consistent;
  double faithful_accuracy = 0.95;
  double subtle_flip_probability = 0.0;
  double subtle_offset = kDefaultSubtleOffset;
  std::vector<AgentSpec> agents;  // explicit roster; empty => built from the fields above

  TopologyKind topology = TopologyKind::edgeless;
  std::size_t edge_count = 6;
  std::size_t edge_cap = 16;
  std::size_t interaction_phases = 1;

  AggregatorKind aggregator = AggregatorKind::crs_centroid;
  std::optional<ContributionMode> contribution_mode;  // unset => chosen per round
  ShapleyNormalization shapley_normalization = ShapleyNormalization::reward_share;
  bool judge_signed = false;
  std::optional<EndpointDescriptor> judge_endpoint;

  double learning_rate = 0.02;
  double initial_crs = 0.5;
  std::uint64_t seed = 0;
  bool crs_clamp = true;
  std::size_t embedding_dim = 256;
  std::size_t warmup_rounds = 0;
};

/// Returns the config unchanged when every invariant holds; otherwise throws
/// Error(invalid_field) naming the first violated field.
ExperimentConfig validate_config(ExperimentConfig config);

/// The team roster implied by the config: explicit agents, or faithful agents
/// first followed by `adversary_count` adversaries.
std::vector<AgentSpec> team_roster(const ExperimentConfig& config);

nlohmann::json config_to_json(const ExperimentConfig& config);
/// Strict: unknown keys and wrong types are Error(invalid_field). Missing keys
/// keep their defaults. The result is validated.
ExperimentConfig config_from_json(const nlohmann::json& doc);

/// Apply `key=value` overrides (dotted keys reach nested objects; values are
/// parsed as JSON when possible, otherwise taken as strings) and re-validate.
ExperimentConfig apply_overrides(const ExperimentConfig& config, const std::vector<std::string>& overrides);

nlohmann::json profile_to_json(const AgentProfile& profile);
AgentProfile profile_from_json(const nlohmann::json& doc, const std::string& field);
nlohmann::json endpoint_to_json(const EndpointDescriptor& endpoint);
EndpointDescriptor endpoint_from_json(const nlohmann::json& doc, const std::string& field);

}  // namespace crsim
