#include <doctest.h>

#include <cmath>

#include "crsim/aggregation.hpp"
#include "crsim/judge.hpp"
#include "crsim/scoring.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace crsim;
using crsim::testing::ledger_of;
using crsim::testing::mc_query;
using crsim::testing::outputs_of;

namespace {

RewardFunction exact_reward(const std::string& gold) {
  return [gold](const std::string& a) { return RewardValue::checked(normalize_answer(a) == normalize_answer(gold) ? 1.0 : -1.0); };
}

SubsetAggregator by_majority() {
  return [](std::span<const AgentOutput> s) { return majority(s).final_answer; };
}

struct StubJudge final : JudgeChannel {
  nlohmann::json reply;
  nlohmann::json coordinate(const nlohmann::json&) override { return {}; }
  nlohmann::json score_contributions(const nlohmann::json&) override { return reply; }
  std::string name() const override { return "stub"; }
};

Errc code_of(auto&& fn, std::string* subject = nullptr) {
  try {
    fn();
  } catch (const Error& e) {
    if (subject) *subject = e.subject();
    return e.code();
  }
  FAIL("expected an Error");
  return Errc::record_error;
}

}  // namespace

// ---------------------------------------------------------------------------
// Shapley
// ---------------------------------------------------------------------------

TEST_CASE("single player receives the full value") {
  const auto outs = outputs_of({"A"});
  const auto c = shapley_contributions(outs, by_majority(), exact_reward("A"));
  CHECK(c.values.at(0) == 1.0);
}

TEST_CASE("three-agent majority example: 2/3, 2/3, -1/3") {
  const auto outs = outputs_of({"A", "A", "B"});
  const auto c = shapley_contributions(outs, by_majority(), exact_reward("A"));
  CHECK(c.values.at(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(c.values.at(1) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(c.values.at(2) == doctest::Approx(-1.0 / 3.0).epsilon(1e-12));
  CHECK(c.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("five-agent team with a three-adversary bloc") {
  const auto outs = outputs_of({"G", "G", "D", "D", "D"});
  const auto c = shapley_contributions(outs, by_majority(), exact_reward("G"));
  // Hand enumeration over orderings: faithful agents 0.8 each, adversaries -13/15 each.
  CHECK(c.values.at(0) == doctest::Approx(0.8));
  CHECK(c.values.at(2) == doctest::Approx(-13.0 / 15.0));
  CHECK(c.sum() == doctest::Approx(-1.0));
  const auto shares = reward_shares(c, RewardValue::checked(-1.0));
  CHECK(shares.values.at(0) == doctest::Approx(-0.8));
  CHECK(shares.values.at(2) == doctest::Approx(13.0 / 15.0));
  CHECK(shares.sum() == doctest::Approx(1.0));
  CHECK(reward_shares(c, RewardValue::checked(0.0)).sum() == 0.0);
}

TEST_CASE("Shapley matches the permutation oracle and is efficient") {
  FeatureHashEmbedder e;
  Rng rng(31);
  for (int t = 0; t < 120; ++t) {
    const std::size_t n = 1 + rng.below(6);
    const auto answers = crsim::testing::random_answers(rng, n, 1 + rng.below(4));
    const auto outs = outputs_of(answers);
    const auto ledger = ledger_of(crsim::testing::random_crs(rng, n));
    const auto gold = answers[rng.below(n)];
    const auto reward = exact_reward(gold);

    const std::vector<SubsetAggregator> aggregators{
        by_majority(),
        [&](std::span<const AgentOutput> s) { return weighted_majority(s, ledger).final_answer; },
        [&](std::span<const AgentOutput> s) { return aggregate(AggregatorKind::crs_centroid, s, ledger, {e}).final_answer; },
    };
    for (const auto& agg : aggregators) {
      const auto c = shapley_contributions(outs, agg, reward, 1 + static_cast<unsigned>(t % 3));
      const auto phi = oracle::shapley_by_permutation(n, [&](const std::vector<std::size_t>& members) {
        std::vector<AgentOutput> sub;
        for (auto m : members) sub.push_back(outs[m]);
        return reward(agg(sub)).value();
      });
      for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(c.values.at(i) - phi[i]) < 1e-9);
      CHECK(std::abs(c.sum() - reward(agg(outs)).value()) < 1e-9);
    }
  }
}

TEST_CASE("Shapley symmetry and dummy axioms") {
  // A fixed aggregator ignores agent 2 entirely, so agent 2 is a dummy.
  const auto outs = outputs_of({"A", "A", "Z"});
  const SubsetAggregator ignore_z = [](std::span<const AgentOutput> s) {
    for (const auto& o : s)
      if (o.answer() != "Z") return o.answer();
    return std::string("none");
  };
  const RewardFunction reward = [](const std::string& a) { return RewardValue::checked(a == "A" ? 1.0 : 0.0); };
  const auto c = shapley_contributions(outs, ignore_z, reward);
  CHECK(c.values.at(2) == doctest::Approx(0.0));
  CHECK(c.values.at(0) == c.values.at(1));
}

TEST_CASE("Shapley refuses teams above twelve") {
  std::vector<std::string> answers(13, "A");
  CHECK(code_of([&] { shapley_contributions(outputs_of(answers), by_majority(), exact_reward("A")); }) ==
        Errc::team_too_large);
}

// ---------------------------------------------------------------------------
// Judge contributions
// ---------------------------------------------------------------------------

TEST_CASE("synthetic judge heuristic") {
  SyntheticJudge judge;
  const auto outs = outputs_of({"C", "C", "B", "B", "B"});
  const auto c = judge_contributions(mc_query("B"), "B", outs, {}, judge);
  CHECK(c.mode == ContributionMode::judge);
  CHECK(c.values.at(0) == doctest::Approx(0.1));
  CHECK(c.values.at(1) == doctest::Approx(0.1));
  for (std::size_t i = 2; i < 5; ++i) CHECK(c.values.at(i) == doctest::Approx(0.8 / 3.0));
  CHECK(c.sum() == doctest::Approx(1.0).epsilon(1e-12));

  SyntheticJudge all_match;
  const auto same = judge_contributions(mc_query("B"), "B", outputs_of({"B", "B"}), {}, all_match);
  CHECK(same.values.at(0) == doctest::Approx(0.5));

  SyntheticJudge signed_judge(true);
  const auto s = judge_contributions(mc_query("B"), "B", outs, {}, signed_judge, true);
  CHECK(s.values.at(0) == doctest::Approx(-0.1));
  CHECK(s.values.at(2) == doctest::Approx(0.8 / 3.0));
}

TEST_CASE("judge replies are validated") {
  const auto outs = outputs_of({"A", "B", "C", "D", "E"});
  std::string subject;
  CHECK(code_of([&] { parse_judge_contributions({{"csc", {0.2, 0.8}}}, outs); }, &subject) ==
        Errc::malformed_judge_reply);
  CHECK(subject == "length-mismatch");
  CHECK(code_of([&] { parse_judge_contributions({{"csc", {0.2, "x", 0.2, 0.2, 0.2}}}, outs); }, &subject) ==
        Errc::malformed_judge_reply);
  CHECK(subject == "non-numeric");
  CHECK(code_of([&] { parse_judge_contributions({{"csc", {0.2, 1.5, 0.2, 0.2, 0.2}}}, outs); }, &subject) ==
        Errc::malformed_judge_reply);
  CHECK(subject == "out-of-range");
  CHECK(code_of([&] { parse_judge_contributions({{"csc", {0.9, 0.9, 0.9, 0.9, 0.9}}}, outs); }, &subject) ==
        Errc::malformed_judge_reply);
  CHECK(subject == "out-of-range");

  const auto ok = parse_judge_contributions({{"csc", {0.15, 0.20, 0.20, 0.25, 0.20}}}, outs);
  CHECK(ok.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ok.values.at(3) == doctest::Approx(0.25));

  const auto scaled = parse_judge_contributions({{"csc", {0.3, 0.3, 0.3, 0.3, 0.3}}}, outs);
  CHECK(scaled.values.at(0) == doctest::Approx(0.2));

  StubJudge stub;
  stub.reply = {{"csc", {0.2, 0.8}}};
  CHECK(code_of([&] { judge_contributions(mc_query("A"), "A", outs, {}, stub); }) == Errc::malformed_judge_reply);
}

// ---------------------------------------------------------------------------
// Credibility update
// ---------------------------------------------------------------------------

TEST_CASE("update rule on random tuples") {
  Rng rng(2);
  for (int t = 0; t < 1000; ++t) {
    const double crs = rng.uniform();
    const double csc = rng.uniform() * 2.0 - 1.0;
    const double r = rng.uniform() * 2.0 - 1.0;
    const double eta = rng.uniform();
    const double expected = crs * (1.0 + eta * csc * r);
    CHECK(std::abs(updated_crs(crs, csc, r, eta) - expected) < 1e-12);
  }
}

TEST_CASE("worked ledger row: 0.4711 -> 0.4688") {
  CHECK(std::abs(updated_crs(0.4711, 0.25, -1.0, 0.01953) - 0.4688) < 5e-4);
}

TEST_CASE("update_credibility examples and invariants") {
  const auto ledger = ledger_of({0.5, 0.5, 0.9});
  ContributionVector c;
  c.values = {{0, 0.0}, {1, 1.0}};
  const std::vector<std::size_t> team{0, 1};
  const auto next = update_credibility(ledger, team, c, RewardValue::checked(1.0), 0.5, true);
  CHECK(next.crs(0) == 0.5);
  CHECK(next.crs(1) == 0.75);
  CHECK(next.crs(2) == 0.9);
  CHECK(next.round() == 1);
  CHECK(next.history().size() == 1);

  const auto zero = update_credibility(ledger, team, c, RewardValue::checked(0.0), 0.5, true);
  CHECK(zero.scores() == ledger.scores());

  c.values[1] = 10.0;
  CHECK(update_credibility(ledger, team, c, RewardValue::checked(1.0), 0.5, true).crs(1) == 1.0);
  CHECK(update_credibility(ledger, team, c, RewardValue::checked(1.0), 0.5, false).crs(1) == 3.0);
  CHECK(update_credibility(ledger, team, c, RewardValue::checked(-1.0), 0.5, true).crs(1) == 0.0);

  ContributionVector partial;
  partial.values = {{0, 0.5}};
  CHECK(code_of([&] { update_credibility(ledger, team, partial, RewardValue::checked(1.0), 0.1, true); }) ==
        Errc::missing_contribution);
}

TEST_CASE("update monotonicity and isolation") {
  Rng rng(6);
  for (int t = 0; t < 500; ++t) {
    const auto crs = 0.01 + 0.98 * rng.uniform();
    const auto csc = 0.01 + rng.uniform();
    const auto eta = 0.001 + 0.5 * rng.uniform();
    CHECK(updated_crs(crs, csc, -0.5, eta) < crs);
    CHECK(updated_crs(crs, csc, 0.5, eta) > crs);

    const double outsider = rng.uniform();
    const auto ledger = ledger_of({crs, outsider});
    ContributionVector c;
    c.values = {{0, csc}};
    const std::vector<std::size_t> team{0};
    const auto next = update_credibility(ledger, team, c, RewardValue::checked(-1.0), eta, true);
    CHECK(next.crs(1) == outsider);
  }
}
