#include "crsim/reward.hpp"

#include <cmath>
#include <string>

namespace crsim {

namespace {

bool band_matches(const PartialBand& band, const std::string& answer, const GoldAnswer& gold) {
  const auto& alts = gold.accepted_alternates;
  if (band.predicate == "alternate") {
    for (const auto& a : alts)
      if (normalize_answer(a) == answer) return true;
    return false;
  }
  if (band.predicate == "contains-canonical") {
    const auto canonical = normalize_answer(gold.canonical);
    return !canonical.empty() && answer.find(canonical) != std::string::npos;
  }
  // alternate:<k>
  const auto k = parse_number(std::string_view(band.predicate).substr(std::string_view("alternate:").size()));
  if (!k || *k < 0 || *k != std::floor(*k)) return false;
  const auto idx = static_cast<std::size_t>(*k);
  return idx < alts.size() && normalize_answer(alts[idx]) == answer;
}

}  // namespace

Grade grade(std::string_view final_answer, const GoldAnswer& gold, const GradingRubric& rubric) {
  validate_rubric(rubric);
  Grade g;
  const auto right = RewardValue::checked(rubric.correct_reward);
  const auto wrong = RewardValue::checked(rubric.wrong_reward);
  const auto answer = normalize_answer(final_answer);

  switch (rubric.kind) {
    case RubricKind::exact:
      g.fully_correct = answer == normalize_answer(gold.canonical);
      g.reward = g.fully_correct ? right : wrong;
      return g;

    case RubricKind::numeric: {
      if (!gold.numeric_value) throw Error(Errc::invalid_field, "gold.numeric_value", "numeric rubric needs a numeric gold");
      const auto value = parse_number(final_answer);
      if (!value) {
        g.unparseable = true;
        g.reward = wrong;
        return g;
      }
      const double tol = gold.numeric_tolerance.value_or(kDefaultNumericTolerance);
      g.fully_correct = std::abs(*value - *gold.numeric_value) <= tol;
      g.reward = g.fully_correct ? right : wrong;
      return g;
    }

    case RubricKind::tiered:
      if (answer == normalize_answer(gold.canonical)) {
        g.fully_correct = true;
        g.reward = RewardValue::checked(1.0);
        return g;
      }
      for (const auto& band : rubric.partial_bands) {
        if (band_matches(band, answer, gold)) {
          g.reward = RewardValue::checked(band.reward);
          return g;
        }
      }
      g.reward = RewardValue::checked(-1.0);
      return g;
  }
  throw Error(Errc::invalid_kind, "rubric.kind", "unhandled rubric kind");
}

}  // namespace crsim
