#include "crsim/config.hpp"

#include <cmath>
#include <set>

#include "crsim/scoring.hpp"
#include "crsim/topology.hpp"

namespace crsim {

using nlohmann::json;

std::string_view to_string(ShapleyNormalization mode) noexcept {
  return mode == ShapleyNormalization::raw ? "raw" : "reward-share";
}

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& why) { throw Error(Errc::invalid_field, field, why); }

void reject_unknown(const json& doc, const std::set<std::string>& known, const std::string& prefix) {
  if (!doc.is_object()) bad(prefix.empty() ? "config" : prefix, "expected a JSON object");
  for (const auto& [key, value] : doc.items())
    if (!known.count(key)) bad(prefix + key, "unknown field");
}

template <typename T>
T get_as(const json& doc, const std::string& key, const std::string& field) {
  const auto& v = doc.at(key);
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) bad(field, "expected a boolean");
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) bad(field, "expected a string");
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) bad(field, "expected a number");
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) bad(field, "expected an integer");
    if constexpr (std::is_unsigned_v<T>)
      if (v.is_number_integer() && !v.is_number_unsigned()) bad(field, "must be nonnegative");
  }
  return v.get<T>();
}

template <typename T>
void read(const json& doc, const std::string& key, T& out, const std::string& prefix = "") {
  if (doc.contains(key)) out = get_as<T>(doc, key, prefix + key);
}

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

}  // namespace

// ---------------------------------------------------------------------------
// Profiles and endpoints
// ---------------------------------------------------------------------------

json profile_to_json(const AgentProfile& p) {
  json j{{"behavior", std::string(to_string(p.kind))}};
  if (p.accuracy) j["accuracy"] = *p.accuracy;
  if (p.flip_threshold) j["flip_threshold"] = *p.flip_threshold;
  if (p.script) j["script"] = *p.script;
  if (p.flip_probability) j["flip_probability"] = *p.flip_probability;
  if (p.relative_offset) j["relative_offset"] = *p.relative_offset;
  return j;
}

AgentProfile profile_from_json(const json& doc, const std::string& field) {
  reject_unknown(doc, {"behavior", "accuracy", "flip_threshold", "script", "flip_probability", "relative_offset"},
                 field + ".");
  if (!doc.contains("behavior")) bad(field + ".behavior", "required");
  AgentProfile p;
  p.kind = parse_behavior_kind(get_as<std::string>(doc, "behavior", field + ".behavior"), field + ".behavior");
  if (doc.contains("accuracy")) p.accuracy = get_as<double>(doc, "accuracy", field + ".accuracy");
  if (doc.contains("flip_threshold"))
    p.flip_threshold = get_as<std::size_t>(doc, "flip_threshold", field + ".flip_threshold");
  if (doc.contains("script")) {
    if (!doc["script"].is_array()) bad(field + ".script", "expected an array of strings");
    std::vector<std::string> script;
    for (const auto& s : doc["script"]) {
      if (!s.is_string()) bad(field + ".script", "expected an array of strings");
      script.push_back(s.get<std::string>());
    }
    p.script = std::move(script);
  }
  if (doc.contains("flip_probability"))
    p.flip_probability = get_as<double>(doc, "flip_probability", field + ".flip_probability");
  if (doc.contains("relative_offset"))
    p.relative_offset = get_as<double>(doc, "relative_offset", field + ".relative_offset");
  return p;
}

json endpoint_to_json(const EndpointDescriptor& e) {
  // The credential never leaves the process.
  return {{"url", e.url},
          {"model", e.model},
          {"prompt_template", e.prompt_template},
          {"revise_template", e.revise_template},
          {"timeout_ms", e.timeout_ms},
          {"retries", e.retries}};
}

EndpointDescriptor endpoint_from_json(const json& doc, const std::string& field) {
  const std::string prefix = field + ".";
  reject_unknown(doc, {"url", "model", "prompt_template", "revise_template", "timeout_ms", "retries"}, prefix);
  EndpointDescriptor e;
  read(doc, "url", e.url, prefix);
  read(doc, "model", e.model, prefix);
  read(doc, "prompt_template", e.prompt_template, prefix);
  read(doc, "revise_template", e.revise_template, prefix);
  read(doc, "timeout_ms", e.timeout_ms, prefix);
  read(doc, "retries", e.retries, prefix);
  return e;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

ExperimentConfig validate_config(ExperimentConfig c) {
  if (c.team_size == 0) bad("team_size", "must be positive");
  if (c.adversary_count > c.team_size) bad("adversary_count", "cannot exceed team_size");
  if (!is_adversarial(c.adversary_behavior)) bad("adversary_behavior", "must be an adversarial behavior");
  if (!in_unit(c.faithful_accuracy)) bad("faithful_accuracy", "must lie in [0, 1]");
  if (!in_unit(c.subtle_flip_probability)) bad("subtle_flip_probability", "must lie in [0, 1]");
  if (!std::isfinite(c.subtle_offset) || c.subtle_offset == 0.0) bad("subtle_offset", "must be finite and nonzero");

  if (!c.agents.empty()) {
    if (c.agents.size() != c.team_size) bad("agents", "roster length must equal team_size");
    std::size_t adversaries = 0;
    for (std::size_t i = 0; i < c.agents.size(); ++i) {
      const auto field = "agents[" + std::to_string(i) + "]";
      if (c.agents[i].endpoint) {
        ChatClient probe(*c.agents[i].endpoint);  // validates the url
        continue;
      }
      validate_profile(c.agents[i].profile, field);
      if (is_adversarial(c.agents[i].profile.kind)) ++adversaries;
    }
    if (adversaries != c.adversary_count) bad("adversary_count", "must equal the number of adversaries in agents");
  }

  if (c.topology != TopologyKind::edgeless && c.team_size < 2) bad("team_size", "interaction needs at least two agents");
  if (c.edge_cap == 0) bad("edge_cap", "must be positive");
  if (c.edge_count == 0) bad("edge_count", "must be positive");
  if (c.topology == TopologyKind::sia_random && c.edge_count > c.edge_cap) bad("edge_count", "exceeds edge_cap");
  if (c.interaction_phases == 0 || c.interaction_phases > kMaxInteractionPhases)
    bad("interaction_phases", "must lie in [1, 8]");

  const bool shapley_possible = c.contribution_mode ? *c.contribution_mode == ContributionMode::shapley
                                                    : (c.topology == TopologyKind::edgeless &&
                                                       c.aggregator != AggregatorKind::coordinator);
  if (shapley_possible && c.team_size > kMaxShapleyTeam) bad("team_size", "exact Shapley supports at most 12 agents");

  if (c.judge_endpoint) ChatClient probe(*c.judge_endpoint);

  if (!(std::isfinite(c.learning_rate) && c.learning_rate > 0.0)) bad("learning_rate", "must be positive");
  if (!in_unit(c.initial_crs)) bad("initial_crs", "must lie in [0, 1]");
  if (c.embedding_dim == 0) bad("embedding_dim", "must be positive");
  return c;
}

std::vector<AgentSpec> team_roster(const ExperimentConfig& c) {
  if (!c.agents.empty()) return c.agents;
  std::vector<AgentSpec> roster;
  const std::size_t faithful = c.team_size - c.adversary_count;
  for (std::size_t i = 0; i < faithful; ++i) roster.push_back({AgentProfile::faithful(c.faithful_accuracy), {}});
  for (std::size_t i = 0; i < c.adversary_count; ++i) {
    if (c.adversary_behavior == BehaviorKind::adversarial_subtle)
      roster.push_back({AgentProfile::adversarial_subtle(c.subtle_flip_probability, c.subtle_offset), {}});
    else
      roster.push_back({AgentProfile::adversarial_consistent(), {}});
  }
  return roster;
}

// ---------------------------------------------------------------------------
// JSON mapping
// ---------------------------------------------------------------------------

json config_to_json(const ExperimentConfig& c) {
  json j{{"team_size", c.team_size},
         {"adversary_count", c.adversary_count},
         {"adversary_behavior", std::string(to_string(c.adversary_behavior))},
         {"faithful_accuracy", c.faithful_accuracy},
         {"subtle_flip_probability", c.subtle_flip_probability},
         {"subtle_offset", c.subtle_offset},
         {"topology", std::string(to_string(c.topology))},
         {"edge_count", c.edge_count},
         {"edge_cap", c.edge_cap},
         {"interaction_phases", c.interaction_phases},
         {"aggregator", std::string(to_string(c.aggregator))},
         {"contribution_mode", c.contribution_mode ? std::string(to_string(*c.contribution_mode)) : "auto"},
         {"shapley_normalization", std::string(to_string(c.shapley_normalization))},
         {"judge_signed", c.judge_signed},
         {"learning_rate", c.learning_rate},
         {"initial_crs", c.initial_crs},
         {"seed", c.seed},
         {"crs_clamp", c.crs_clamp},
         {"embedding_dim", c.embedding_dim},
         {"warmup_rounds", c.warmup_rounds}};
  if (!c.agents.empty()) {
    json agents = json::array();
    for (const auto& a : c.agents) {
      if (a.endpoint) agents.push_back({{"behavior", "remote"}, {"endpoint", endpoint_to_json(*a.endpoint)}});
      else agents.push_back(profile_to_json(a.profile));
    }
    j["agents"] = std::move(agents);
  }
  if (c.judge_endpoint) j["judge_endpoint"] = endpoint_to_json(*c.judge_endpoint);
  return j;
}

ExperimentConfig config_from_json(const json& doc) {
  reject_unknown(doc,
                 {"team_size", "adversary_count", "adversary_behavior", "faithful_accuracy", "subtle_flip_probability",
                  "subtle_offset", "agents", "topology", "edge_count", "edge_cap", "interaction_phases", "aggregator",
                  "contribution_mode", "shapley_normalization", "judge_signed", "judge_endpoint", "learning_rate",
                  "initial_crs", "seed", "crs_clamp", "embedding_dim", "warmup_rounds"},
                 "");
  ExperimentConfig c;
  read(doc, "team_size", c.team_size);
  read(doc, "adversary_count", c.adversary_count);
  if (doc.contains("adversary_behavior"))
    c.adversary_behavior = parse_behavior_kind(get_as<std::string>(doc, "adversary_behavior", "adversary_behavior"),
                                               "adversary_behavior");
  read(doc, "faithful_accuracy", c.faithful_accuracy);
  read(doc, "subtle_flip_probability", c.subtle_flip_probability);
  read(doc, "subtle_offset", c.subtle_offset);
  if (doc.contains("agents")) {
    if (!doc["agents"].is_array()) bad("agents", "expected an array");
    for (std::size_t i = 0; i < doc["agents"].size(); ++i) {
      const auto& a = doc["agents"][i];
      const auto field = "agents[" + std::to_string(i) + "]";
      if (a.is_object() && a.value("behavior", "") == "remote") {
        reject_unknown(a, {"behavior", "endpoint"}, field + ".");
        if (!a.contains("endpoint")) bad(field + ".endpoint", "required for remote agents");
        c.agents.push_back({AgentProfile{}, endpoint_from_json(a["endpoint"], field + ".endpoint")});
      } else {
        c.agents.push_back({profile_from_json(a, field), {}});
      }
    }
  }
  if (doc.contains("topology")) c.topology = parse_topology_kind(get_as<std::string>(doc, "topology", "topology"));
  read(doc, "edge_count", c.edge_count);
  read(doc, "edge_cap", c.edge_cap);
  read(doc, "interaction_phases", c.interaction_phases);
  if (doc.contains("aggregator"))
    c.aggregator = parse_aggregator_kind(get_as<std::string>(doc, "aggregator", "aggregator"));
  if (doc.contains("contribution_mode")) {
    const auto mode = get_as<std::string>(doc, "contribution_mode", "contribution_mode");
    if (mode == "auto") c.contribution_mode.reset();
    else c.contribution_mode = parse_contribution_mode(mode);
  }
  if (doc.contains("shapley_normalization")) {
    const auto mode = get_as<std::string>(doc, "shapley_normalization", "shapley_normalization");
    if (mode == "raw") c.shapley_normalization = ShapleyNormalization::raw;
    else if (mode == "reward-share") c.shapley_normalization = ShapleyNormalization::reward_share;
    else bad("shapley_normalization", "expected 'reward-share' or 'raw'");
  }
  read(doc, "judge_signed", c.judge_signed);
  if (doc.contains("judge_endpoint")) {
    if (doc["judge_endpoint"].is_null()) c.judge_endpoint.reset();
    else c.judge_endpoint = endpoint_from_json(doc["judge_endpoint"], "judge_endpoint");
  }
  read(doc, "learning_rate", c.learning_rate);
  read(doc, "initial_crs", c.initial_crs);
  read(doc, "seed", c.seed);
  read(doc, "crs_clamp", c.crs_clamp);
  read(doc, "embedding_dim", c.embedding_dim);
  read(doc, "warmup_rounds", c.warmup_rounds);
  return validate_config(std::move(c));
}

ExperimentConfig apply_overrides(const ExperimentConfig& config, const std::vector<std::string>& overrides) {
  json doc = config_to_json(config);
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) bad(item, "override must look like key=value");
    const std::string key = item.substr(0, eq);
    const std::string text = item.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;

    json* target = &doc;
    std::size_t start = 0;
    for (auto dot = key.find('.'); dot != std::string::npos; dot = key.find('.', start)) {
      target = &(*target)[key.substr(start, dot - start)];
      start = dot + 1;
    }
    (*target)[key.substr(start)] = std::move(value);
  }
  return config_from_json(doc);
}

}  // namespace crsim
