#include "crsim/core.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <utility>

namespace crsim {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_field: return "invalid-field";
    case Errc::invalid_kind: return "invalid-kind";
    case Errc::too_small: return "too-small";
    case Errc::script_exhausted: return "script-exhausted";
    case Errc::endpoint_unreachable: return "endpoint-unreachable";
    case Errc::malformed_response: return "malformed-response";
    case Errc::missing_crs: return "missing-crs";
    case Errc::too_few_outputs: return "too-few-outputs";
    case Errc::judge_unavailable: return "judge-unavailable";
    case Errc::malformed_judge_reply: return "malformed-judge-reply";
    case Errc::team_too_large: return "team-too-large";
    case Errc::missing_contribution: return "missing-contribution";
    case Errc::dataset_error: return "dataset-error";
    case Errc::record_error: return "record-error";
  }
  return "unknown";
}

std::string normalize_answer(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    const auto uc = static_cast<unsigned char>(c);
    if (std::isspace(uc)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(uc)));
  }
  return out;
}

std::string format_number(double value) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) return "nan";
  return std::string(buf.data(), end);
}

std::optional<double> parse_number(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return std::nullopt;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) return std::nullopt;
  return value;
}

void validate_rubric(const GradingRubric& rubric) {
  auto in_unit = [](double v) { return std::isfinite(v) && v >= -1.0 && v <= 1.0; };
  if (!in_unit(rubric.correct_reward))
    throw Error(Errc::invalid_field, "rubric.correct_reward", "must lie in [-1, 1]");
  if (!in_unit(rubric.wrong_reward))
    throw Error(Errc::invalid_field, "rubric.wrong_reward", "must lie in [-1, 1]");
  for (const auto& band : rubric.partial_bands) {
    if (!(band.reward >= 0.5 && band.reward < 1.0))
      throw Error(Errc::invalid_field, "rubric.partial_bands", "band reward must lie in [0.5, 1)");
    const bool known = band.predicate == "alternate" || band.predicate == "contains-canonical" ||
                       band.predicate.rfind("alternate:", 0) == 0;
    if (!known) throw Error(Errc::invalid_field, "rubric.partial_bands", "unknown predicate '" + band.predicate + "'");
  }
  if (rubric.kind != RubricKind::tiered && !rubric.partial_bands.empty())
    throw Error(Errc::invalid_field, "rubric.partial_bands", "bands are only valid for tiered rubrics");
}

void validate_query(const Query& query) {
  if (query.id.empty()) throw Error(Errc::invalid_field, "id", "must be nonempty");
  const auto& gold = query.gold;
  if (gold.numeric_tolerance && !gold.numeric_value)
    throw Error(Errc::invalid_field, query.id + ".gold.numeric_tolerance", "requires numeric_value");
  if (gold.numeric_tolerance && !(*gold.numeric_tolerance >= 0.0))
    throw Error(Errc::invalid_field, query.id + ".gold.numeric_tolerance", "must be nonnegative");
  if (query.kind == TaskKind::multiple_choice) {
    if (query.options.size() < 2)
      throw Error(Errc::invalid_field, query.id + ".options", "multiple-choice needs at least two options");
    const auto gold_norm = normalize_answer(gold.canonical);
    bool found = false;
    for (const auto& opt : query.options) found = found || normalize_answer(opt) == gold_norm;
    if (!found) throw Error(Errc::invalid_field, query.id + ".gold", "gold must name one of the options");
  }
  if (query.kind == TaskKind::numeric && !gold.numeric_value)
    throw Error(Errc::invalid_field, query.id + ".gold.numeric_value", "numeric queries need a numeric gold");
  if (query.rubric.kind == RubricKind::numeric && !gold.numeric_value)
    throw Error(Errc::invalid_field, query.id + ".rubric", "numeric rubric needs a numeric gold");
  validate_rubric(query.rubric);
}

AgentOutput::AgentOutput(AgentId agent, std::string initial_answer) : agent_(std::move(agent)) {
  history_.push_back({0, std::move(initial_answer)});
}

AgentOutput::AgentOutput(AgentId agent, std::vector<Revision> history)
    : agent_(std::move(agent)), history_(std::move(history)) {
  if (history_.empty()) throw Error(Errc::record_error, agent_.label, "revision history must be nonempty");
}

AgentOutput AgentOutput::revised(std::size_t phase, std::string text) const {
  AgentOutput next = *this;
  next.history_.push_back({phase, std::move(text)});
  return next;
}

std::size_t AgentOutput::change_count() const {
  std::size_t n = 0;
  for (std::size_t i = 1; i < history_.size(); ++i)
    if (history_[i].text != history_[i - 1].text) ++n;
  return n;
}

RewardValue RewardValue::checked(double value) {
  if (!(value >= -1.0 && value <= 1.0)) throw Error(Errc::invalid_field, "reward", "must lie in [-1, 1]");
  return RewardValue(value);
}

RewardValue RewardValue::clamped(double value) noexcept {
  if (std::isnan(value)) return RewardValue(-1.0);
  return RewardValue(std::clamp(value, -1.0, 1.0));
}

// ---------------------------------------------------------------------------
// Enum names
// ---------------------------------------------------------------------------

namespace {

template <typename Enum, std::size_t N>
using NameTable = std::array<std::pair<Enum, std::string_view>, N>;

constexpr NameTable<TaskKind, 3> kTaskKinds{{{TaskKind::multiple_choice, "multiple-choice"},
                                              {TaskKind::numeric, "numeric"},
                                              {TaskKind::free_text, "free-text"}}};
constexpr NameTable<RubricKind, 3> kRubricKinds{
    {{RubricKind::exact, "exact"}, {RubricKind::numeric, "numeric"}, {RubricKind::tiered, "tiered"}}};
constexpr NameTable<TopologyKind, 5> kTopologyKinds{{{TopologyKind::edgeless, "edgeless"},
                                                      {TopologyKind::sia_random, "sia-random"},
                                                      {TopologyKind::crs_chain, "crs-chain"},
                                                      {TopologyKind::ring, "ring"},
                                                      {TopologyKind::complete, "complete"}}};
constexpr NameTable<AggregatorKind, 6> kAggregatorKinds{{{AggregatorKind::crs_centroid, "crs-centroid"},
                                                          {AggregatorKind::weighted_majority, "weighted-majority"},
                                                          {AggregatorKind::majority, "majority"},
                                                          {AggregatorKind::similarity, "similarity"},
                                                          {AggregatorKind::coordinator, "coordinator"},
                                                          {AggregatorKind::single_agent, "single-agent"}}};
constexpr NameTable<ContributionMode, 2> kContributionModes{
    {{ContributionMode::shapley, "shapley"}, {ContributionMode::judge, "judge"}}};

template <typename Enum, std::size_t N>
std::string_view name_of(const NameTable<Enum, N>& table, Enum value) noexcept {
  for (const auto& [e, name] : table)
    if (e == value) return name;
  return "unknown";
}

template <typename Enum, std::size_t N>
Enum parse_name(const NameTable<Enum, N>& table, std::string_view text, std::string_view field) {
  for (const auto& [e, name] : table)
    if (name == text) return e;
  std::string allowed;
  for (const auto& [e, name] : table) allowed += (allowed.empty() ? "" : ", ") + std::string(name);
  throw Error(Errc::invalid_kind, std::string(field), "'" + std::string(text) + "' is not one of " + allowed);
}

}  // namespace

std::string_view to_string(TaskKind kind) noexcept { return name_of(kTaskKinds, kind); }
std::string_view to_string(RubricKind kind) noexcept { return name_of(kRubricKinds, kind); }
std::string_view to_string(TopologyKind kind) noexcept { return name_of(kTopologyKinds, kind); }
std::string_view to_string(AggregatorKind kind) noexcept { return name_of(kAggregatorKinds, kind); }
std::string_view to_string(ContributionMode mode) noexcept { return name_of(kContributionModes, mode); }

TaskKind parse_task_kind(std::string_view text, std::string_view field) {
  return parse_name(kTaskKinds, text, field);
}
RubricKind parse_rubric_kind(std::string_view text, std::string_view field) {
  return parse_name(kRubricKinds, text, field);
}
TopologyKind parse_topology_kind(std::string_view text, std::string_view field) {
  return parse_name(kTopologyKinds, text, field);
}
AggregatorKind parse_aggregator_kind(std::string_view text, std::string_view field) {
  return parse_name(kAggregatorKinds, text, field);
}
ContributionMode parse_contribution_mode(std::string_view text, std::string_view field) {
  return parse_name(kContributionModes, text, field);
}

}  // namespace crsim
