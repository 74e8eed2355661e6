#include "crsim/agents.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>
#include <utility>

namespace crsim {

std::string_view to_string(BehaviorKind kind) noexcept {
  switch (kind) {
    case BehaviorKind::faithful: return "faithful";
    case BehaviorKind::adversarial_consistent: return "adversarial-consistent";
    case BehaviorKind::adversarial_subtle: return "adversarial-subtle";
    case BehaviorKind::persuadable: return "persuadable";
    case BehaviorKind::scripted: return "scripted";
  }
  return "unknown";
}

BehaviorKind parse_behavior_kind(std::string_view text, std::string_view field) {
  for (auto k : {BehaviorKind::faithful, BehaviorKind::adversarial_consistent, BehaviorKind::adversarial_subtle,
                 BehaviorKind::persuadable, BehaviorKind::scripted})
    if (to_string(k) == text) return k;
  throw Error(Errc::invalid_kind, std::string(field), "unknown behavior '" + std::string(text) + "'");
}

bool is_adversarial(BehaviorKind kind) noexcept {
  return kind == BehaviorKind::adversarial_consistent || kind == BehaviorKind::adversarial_subtle;
}

AgentProfile AgentProfile::faithful(double accuracy) {
  AgentProfile p;
  p.kind = BehaviorKind::faithful;
  p.accuracy = accuracy;
  return p;
}

AgentProfile AgentProfile::adversarial_consistent() {
  AgentProfile p;
  p.kind = BehaviorKind::adversarial_consistent;
  return p;
}

AgentProfile AgentProfile::adversarial_subtle(double flip_probability, double relative_offset) {
  AgentProfile p;
  p.kind = BehaviorKind::adversarial_subtle;
  p.flip_probability = flip_probability;
  p.relative_offset = relative_offset;
  return p;
}

AgentProfile AgentProfile::persuadable(double accuracy, std::size_t flip_threshold) {
  AgentProfile p;
  p.kind = BehaviorKind::persuadable;
  p.accuracy = accuracy;
  p.flip_threshold = flip_threshold;
  return p;
}

AgentProfile AgentProfile::scripted(std::vector<std::string> script) {
  AgentProfile p;
  p.kind = BehaviorKind::scripted;
  p.script = std::move(script);
  return p;
}

void validate_profile(const AgentProfile& p, std::string_view field) {
  const std::string f(field);
  auto fail = [&](const std::string& name, const std::string& why) {
    throw Error(Errc::invalid_field, f + "." + name, why);
  };
  const bool wants_accuracy = p.kind == BehaviorKind::faithful || p.kind == BehaviorKind::persuadable;
  const bool wants_threshold = p.kind == BehaviorKind::persuadable;
  const bool wants_script = p.kind == BehaviorKind::scripted;
  const bool wants_subtle = p.kind == BehaviorKind::adversarial_subtle;

  if (wants_accuracy != p.accuracy.has_value())
    fail("accuracy", wants_accuracy ? "required for this behavior" : "not valid for this behavior");
  if (p.accuracy && !(*p.accuracy >= 0.0 && *p.accuracy <= 1.0)) fail("accuracy", "must lie in [0, 1]");
  if (wants_threshold != p.flip_threshold.has_value())
    fail("flip_threshold", wants_threshold ? "required for this behavior" : "not valid for this behavior");
  if (p.flip_threshold && *p.flip_threshold == 0) fail("flip_threshold", "must be positive");
  if (wants_script != p.script.has_value())
    fail("script", wants_script ? "required for this behavior" : "not valid for this behavior");
  if (!wants_subtle && (p.flip_probability || p.relative_offset))
    fail("flip_probability", "only valid for adversarial-subtle");
  if (p.flip_probability && !(*p.flip_probability >= 0.0 && *p.flip_probability <= 1.0))
    fail("flip_probability", "must lie in [0, 1]");
  if (p.relative_offset && !(std::isfinite(*p.relative_offset) && *p.relative_offset != 0.0))
    fail("relative_offset", "must be finite and nonzero");
}

void Agent::check_owner(const AgentOutput& own) const {
  if (own.agent().index != id_.index)
    throw Error(Errc::invalid_field, "own", "output of agent " + own.agent().label + " passed to " + id_.label);
}

// ---------------------------------------------------------------------------
// Answer construction
// ---------------------------------------------------------------------------

std::string correct_answer(const Query& query) { return query.gold.canonical; }

std::string designated_wrong(const Query& query) {
  if (query.decoy) return *query.decoy;
  switch (query.kind) {
    case TaskKind::multiple_choice: {
      const auto gold = normalize_answer(query.gold.canonical);
      const auto n = query.options.size();
      for (std::size_t i = 0; i < n; ++i)
        if (normalize_answer(query.options[i]) == gold) return query.options[(i + 1) % n];
      return query.options.empty() ? std::string("?") : query.options.front();
    }
    case TaskKind::numeric:
      return format_number(query.gold.numeric_value.value_or(0.0) * 1.5 + 1.0);
    case TaskKind::free_text:
      return "cannot be determined";
  }
  return "?";
}

std::string near_miss(const Query& query, double relative_offset) {
  if (query.kind == TaskKind::numeric && query.gold.numeric_value) {
    const double gold = *query.gold.numeric_value;
    const double shifted = gold == 0.0 ? relative_offset : gold * (1.0 + relative_offset);
    return format_number(shifted);
  }
  return designated_wrong(query);
}

std::string random_wrong(const Query& query, Rng& rng) {
  switch (query.kind) {
    case TaskKind::multiple_choice: {
      const auto gold = normalize_answer(query.gold.canonical);
      std::vector<const std::string*> wrong;
      for (const auto& opt : query.options)
        if (normalize_answer(opt) != gold) wrong.push_back(&opt);
      if (wrong.empty()) return designated_wrong(query);
      return *wrong[rng.below(wrong.size())];
    }
    case TaskKind::numeric: {
      const double gold = query.gold.numeric_value.value_or(0.0);
      const double step = std::max({1.0, std::abs(gold) * 0.1, 2.0 * query.gold.numeric_tolerance.value_or(0.0)});
      const auto k = static_cast<double>(rng.below(5) + 1);
      return format_number(rng.bernoulli(0.5) ? gold + k * step : gold - k * step);
    }
    case TaskKind::free_text:
      return "unsure " + std::to_string(rng.below(9) + 1);
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Synthetic behaviors
// ---------------------------------------------------------------------------

SyntheticAgent::SyntheticAgent(AgentId id, AgentProfile profile) : Agent(std::move(id)), profile_(std::move(profile)) {
  validate_profile(profile_, "agent[" + std::to_string(this->id().index) + "]");
}

std::string SyntheticAgent::next_scripted() {
  const auto& script = *profile_.script;
  if (script_cursor_ >= script.size())
    throw Error(Errc::script_exhausted, id().label, "no script entries left after " + std::to_string(script.size()));
  return script[script_cursor_++];
}

AgentOutput SyntheticAgent::respond(const Query& query, Rng& rng) {
  current_ = query;
  switch (profile_.kind) {
    case BehaviorKind::faithful:
    case BehaviorKind::persuadable:
      if (rng.uniform() < *profile_.accuracy) return AgentOutput(id(), correct_answer(query));
      return AgentOutput(id(), random_wrong(query, rng));
    case BehaviorKind::adversarial_consistent:
      return AgentOutput(id(), designated_wrong(query));
    case BehaviorKind::adversarial_subtle:
      return AgentOutput(id(), near_miss(query, profile_.relative_offset.value_or(kDefaultSubtleOffset)));
    case BehaviorKind::scripted:
      return AgentOutput(id(), next_scripted());
  }
  throw Error(Errc::invalid_kind, "behavior", "unhandled behavior");
}

AgentOutput SyntheticAgent::revise(const AgentOutput& own, std::span<const NeighborMessage> inbox, Rng& rng) {
  check_owner(own);
  const std::size_t phase = own.revisions().back().phase + 1;

  switch (profile_.kind) {
    case BehaviorKind::faithful:
    case BehaviorKind::adversarial_consistent:
      return own.revised(phase, own.answer());

    case BehaviorKind::adversarial_subtle: {
      const double p = profile_.flip_probability.value_or(0.0);
      if (current_ && rng.bernoulli(p)) return own.revised(phase, correct_answer(*current_));
      return own.revised(phase, own.answer());
    }

    case BehaviorKind::persuadable: {
      const auto mine = normalize_answer(own.answer());
      std::size_t disagree = 0;
      // normalized answer -> (count, lowest sender index, raw text)
      std::map<std::string, std::tuple<std::size_t, std::size_t, std::string>> tally;
      for (const auto& msg : inbox) {
        auto key = normalize_answer(msg.content);
        if (key != mine) ++disagree;
        auto [it, fresh] = tally.try_emplace(key, 0, msg.sender.index, msg.content);
        auto& [count, first, text] = it->second;
        ++count;
        if (!fresh && msg.sender.index < first) {
          first = msg.sender.index;
          text = msg.content;
        }
      }
      if (disagree < *profile_.flip_threshold || tally.empty()) return own.revised(phase, own.answer());
      const auto modal = std::min_element(tally.begin(), tally.end(), [](const auto& a, const auto& b) {
        const auto& [ca, fa, ta] = a.second;
        const auto& [cb, fb, tb] = b.second;
        return ca != cb ? ca > cb : fa < fb;
      });
      return own.revised(phase, std::get<2>(modal->second));
    }

    case BehaviorKind::scripted:
      return own.revised(phase, next_scripted());
  }
  throw Error(Errc::invalid_kind, "behavior", "unhandled behavior");
}

std::unique_ptr<Agent> make_agent(AgentId id, AgentProfile profile) {
  return std::make_unique<SyntheticAgent>(std::move(id), std::move(profile));
}

}  // namespace crsim
