// Reward oracles: map a final answer to r_t in [-1, 1].

#pragma once

#include <string_view>

#include "crsim/core.hpp"

namespace crsim {

struct Grade {
  RewardValue reward = RewardValue::clamped(-1.0);
  bool fully_correct = false;  // matched the canonical / numeric gold
  bool unparseable = false;    // numeric rubric only
};

/// exact   : normalized equality with the canonical answer.
/// numeric : |final - gold| <= tolerance (default 1e-9); unparseable text is
///           graded wrong and flagged.
/// tiered  : canonical match -> 1; otherwise the first partial band whose
///           predicate matches; otherwise -1.
/// Throws Error(invalid_field) for an invalid rubric.
Grade grade(std::string_view final_answer, const GoldAnswer& gold, const GradingRubric& rubric);

inline constexpr double kDefaultNumericTolerance = 1e-9;

}  // namespace crsim
