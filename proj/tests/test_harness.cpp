#include <doctest.h>

#include <set>

#include "crsim/dataset.hpp"
#include "crsim/harness.hpp"
#include "support.hpp"

using namespace crsim;
using crsim::testing::mc_query;

namespace {

std::vector<Query> mc_dataset(std::size_t n, std::uint64_t seed) {
  std::vector<Query> out;
  Rng rng(seed);
  const char* letters[] = {"A", "B", "C", "D"};
  for (std::size_t i = 0; i < n; ++i) out.push_back(mc_query(letters[rng.below(4)], "q" + std::to_string(i)));
  return out;
}

ExperimentConfig mixed_team(double faithful_accuracy, AggregatorKind aggregator) {
  ExperimentConfig c;
  c.team_size = 5;
  c.adversary_count = 3;
  c.faithful_accuracy = faithful_accuracy;
  c.aggregator = aggregator;
  return c;
}

struct StubJudge final : JudgeChannel {
  nlohmann::json reply;
  nlohmann::json coordinate(const nlohmann::json&) override { return {{"final", "A"}}; }
  nlohmann::json score_contributions(const nlohmann::json&) override { return reply; }
  std::string name() const override { return "stub"; }
};

}  // namespace

TEST_CASE("one perfect agent earns the full reward") {
  ExperimentConfig c;
  c.team_size = 1;
  c.adversary_count = 0;
  c.faithful_accuracy = 1.0;
  ExperimentState state(c);
  const auto rec = state.run_round(mc_query("B"));
  CHECK(rec.reward.value() == 1.0);
  CHECK(rec.contributions.mode == ContributionMode::shapley);
  CHECK(rec.contributions.values.at(0) == 1.0);
  CHECK(rec.ledger_after.crs(0) == doctest::Approx(0.5 * (1.0 + c.learning_rate)));
  CHECK(state.ledger().crs(0) == rec.ledger_after.crs(0));
}

TEST_CASE("an adversary majority defeats unweighted majority every round") {
  const auto result = run_experiment(mixed_team(1.0, AggregatorKind::majority), mc_dataset(40, 1));
  for (const auto& rec : result.records) CHECK(rec.reward.value() == -1.0);
  CHECK(result.metrics.accuracy() == 0.0);
}

TEST_CASE("credibility weighting beats the unweighted vote (100 rounds, seed 7)") {
  auto weighted = mixed_team(1.0, AggregatorKind::weighted_majority);
  weighted.seed = 7;
  auto plain = weighted;
  plain.aggregator = AggregatorKind::majority;
  const auto data = mc_dataset(100, 7);
  const auto a = run_experiment(weighted, data);
  const auto b = run_experiment(plain, data);
  CHECK(a.metrics.accuracy() > b.metrics.accuracy());
}

TEST_CASE("adversaries end below every faithful agent after 50 rounds") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto c = mixed_team(0.95, AggregatorKind::crs_centroid);
    c.seed = seed;
    const auto m = run_experiment(c, mc_dataset(50, seed)).metrics;
    const auto& last = m.crs.back();
    CHECK(std::max({last[2], last[3], last[4]}) < std::min(last[0], last[1]));
  }
}

TEST_CASE("metrics are consistent with the records") {
  auto c = mixed_team(0.8, AggregatorKind::weighted_majority);
  c.topology = TopologyKind::sia_random;
  c.warmup_rounds = 5;
  c.team_size = 6;
  c.agents = {{AgentProfile::faithful(0.8), {}},      {AgentProfile::persuadable(0.8, 1), {}},
              {AgentProfile::persuadable(0.7, 2), {}}, {AgentProfile::adversarial_subtle(0.3), {}},
              {AgentProfile::adversarial_consistent(), {}}, {AgentProfile::adversarial_consistent(), {}}};
  const auto data = make_synthetic_dataset(30, 2);
  const auto r = run_experiment(c, data);
  const auto& m = r.metrics;
  REQUIRE(m.rounds() == 30);
  CHECK(m.crs.size() == 30);
  double hits = 0;
  std::size_t flips = 0;
  for (std::size_t t = 0; t < 30; ++t) {
    hits += m.correct[t] ? 1.0 : 0.0;
    CHECK(m.cumulative_accuracy[t] == doctest::Approx(hits / static_cast<double>(t + 1)));
    CHECK(m.realized_edges[t] == r.records[t].topology.edge_count());
    CHECK(m.realized_edges[t] <= 6);
    for (const auto& o : r.records[t].final_outputs) flips += o.change_count();
  }
  std::size_t counted = 0;
  for (auto f : m.flips) counted += f;
  CHECK(counted == flips);
  CHECK(flips > 0);
  for (const auto& row : m.crs)
    for (double v : row) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
}

TEST_CASE("contribution mode follows communication and the aggregator") {
  ExperimentConfig c;
  TopologyGraph none;
  TopologyGraph some;
  some.edges = {{0, 1}};
  CHECK(effective_contribution_mode(c, none) == ContributionMode::shapley);
  CHECK(effective_contribution_mode(c, some) == ContributionMode::judge);
  c.aggregator = AggregatorKind::coordinator;
  CHECK(effective_contribution_mode(c, none) == ContributionMode::judge);
  c.contribution_mode = ContributionMode::shapley;
  CHECK(effective_contribution_mode(c, some) == ContributionMode::shapley);
}

TEST_CASE("full-run determinism across worker counts") {
  auto c = mixed_team(0.9, AggregatorKind::crs_centroid);
  c.topology = TopologyKind::sia_random;
  c.interaction_phases = 2;
  c.adversary_behavior = BehaviorKind::adversarial_subtle;
  c.subtle_flip_probability = 0.25;
  c.seed = 123;
  const auto data = make_synthetic_dataset(25, 9);
  const auto a = run_experiment(c, data);
  const auto b = run_experiment(c, data, {.jobs = 4, .judge_factory = {}});
  CHECK(records_to_jsonl(a.header, a.records) == records_to_jsonl(b.header, b.records));
  c.seed = 124;
  const auto d = run_experiment(c, data);
  CHECK(records_to_jsonl(a.header, a.records) != records_to_jsonl(d.header, d.records));
}

TEST_CASE("records round-trip through JSON") {
  auto c = mixed_team(0.9, AggregatorKind::weighted_majority);
  c.topology = TopologyKind::crs_chain;
  const auto r = run_experiment(c, make_synthetic_dataset(6, 1));
  for (const auto& rec : r.records) CHECK(record_to_json(record_from_json(record_to_json(rec))) == record_to_json(rec));
}

TEST_CASE("replay verifies untouched streams for every topology and aggregator") {
  const auto data = make_synthetic_dataset(12, 5);
  for (auto topo : {TopologyKind::edgeless, TopologyKind::sia_random, TopologyKind::crs_chain, TopologyKind::ring,
                    TopologyKind::complete}) {
    for (auto agg : {AggregatorKind::crs_centroid, AggregatorKind::weighted_majority, AggregatorKind::majority,
                     AggregatorKind::similarity, AggregatorKind::coordinator, AggregatorKind::single_agent}) {
      auto c = mixed_team(0.9, agg);
      c.topology = topo;
      c.interaction_phases = 2;
      c.agents = {{AgentProfile::faithful(0.9), {}}, {AgentProfile::persuadable(0.9, 1), {}},
                  {AgentProfile::adversarial_consistent(), {}}, {AgentProfile::adversarial_subtle(0.5), {}},
                  {AgentProfile::adversarial_consistent(), {}}};
      const auto r = run_experiment(c, data);
      const auto report = replay(records_to_jsonl(r.header, r.records));
      CHECK_MESSAGE(report.ok, to_string(topo), " ", to_string(agg), " ",
                    report.divergence ? report.divergence->field + ": " + report.divergence->detail : "");
      CHECK(report.rounds_checked == 12);
    }
  }
}

TEST_CASE("replay catches every single-bit tamper") {
  auto c = mixed_team(0.9, AggregatorKind::crs_centroid);
  const auto r = run_experiment(c, make_synthetic_dataset(8, 3));
  const auto stream = records_to_jsonl(r.header, r.records);
  Rng rng(17);
  for (int t = 0; t < 400; ++t) {
    auto bad = stream;
    const auto pos = rng.below(bad.size());
    bad[pos] = static_cast<char>(bad[pos] ^ (1 << rng.below(7)));
    const auto report = replay(bad);
    CHECK_FALSE(report.ok);
    REQUIRE(report.divergence);
    // The divergence never lands after the tampered line.
    const auto line = static_cast<std::size_t>(std::count(stream.begin(), stream.begin() + static_cast<long>(pos), '\n'));
    CHECK(report.divergence->round <= line);
  }
}

TEST_CASE("a tampered reward is reported at its round") {
  const auto r = run_experiment(mixed_team(0.9, AggregatorKind::majority), mc_dataset(6, 2));
  auto stream = records_to_jsonl(r.header, r.records);
  std::size_t line_start = 0;
  for (int k = 0; k < 4; ++k) line_start = stream.find('\n', line_start) + 1;
  const auto pos = stream.find("\"reward\":", line_start) + 9;
  stream[pos] = stream[pos] == '-' ? '+' : '-';
  const auto report = replay(stream);
  CHECK_FALSE(report.ok);
  CHECK(report.divergence->round == 4);
}

TEST_CASE("a failed round rolls back the ledger") {
  auto c = mixed_team(0.9, AggregatorKind::majority);
  c.contribution_mode = ContributionMode::judge;
  auto judge = std::make_unique<StubJudge>();
  auto* stub = judge.get();
  stub->reply = {{"csc", {0.2, 0.2, 0.2, 0.2, 0.2}}};
  ExperimentState state(c, std::move(judge));
  state.run_round(mc_query("A", "ok"));
  const auto before = state.ledger();

  stub->reply = {{"csc", {0.2, 0.8}}};
  try {
    state.run_round(mc_query("A", "bad"));
    FAIL("expected malformed-judge-reply");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::malformed_judge_reply);
    CHECK(e.subject() == "length-mismatch");
  }
  CHECK(state.ledger() == before);
  CHECK(state.rounds_completed() == 1);

  stub->reply = {{"csc", {0.2, 0.2, 0.2, 0.2, 0.2}}};
  CHECK(state.run_round(mc_query("A", "next")).round == 2);
}

TEST_CASE("empty datasets abort before the first round") {
  CHECK_THROWS_AS(run_experiment(ExperimentConfig{}, {}), Error);
}

TEST_CASE("metrics CSV layout") {
  const auto r = run_experiment(mixed_team(0.9, AggregatorKind::majority), mc_dataset(20, 1));
  const auto csv = metrics_to_csv(r.metrics);
  CHECK(csv.rfind("round,accuracy,crs_0,crs_1,crs_2,crs_3,crs_4,realized_edges,reward\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 21);
}

TEST_CASE("edge-count sweep reports realized edges") {
  auto c = mixed_team(0.9, AggregatorKind::weighted_majority);
  c.topology = TopologyKind::sia_random;
  const std::vector<std::string> values{"2", "3", "4", "5", "6", "7", "8", "9"};
  const auto rows = sweep(SweepParameter::edge_count, values, c, mc_dataset(15, 4));
  REQUIRE(rows.size() == 8);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    CHECK(rows[k].mean_realized_edges > 0.0);
    CHECK(rows[k].mean_realized_edges <= static_cast<double>(k + 2));
    for (auto e : rows[k].result.metrics.realized_edges) CHECK(e <= k + 2);
  }
  const auto csv = sweep_to_csv(SweepParameter::edge_count, rows);
  CHECK(csv.rfind("edge-count,rounds,accuracy,post_warmup_accuracy,mean_realized_edges", 0) == 0);
}

TEST_CASE("aggregator sweep rows differ only in aggregation-dependent fields") {
  const auto c = mixed_team(0.8, AggregatorKind::crs_centroid);
  const std::vector<std::string> values{"crs-centroid", "weighted-majority", "majority", "similarity",
                                        "single-agent"};
  const auto rows = sweep(SweepParameter::aggregator_kind, values, c, mc_dataset(30, 8));
  const std::set<std::string> dependent{"aggregation", "reward", "correct", "unparseable", "contributions",
                                        "ledger_before", "ledger_after"};
  for (std::size_t k = 1; k < rows.size(); ++k) {
    bool any_difference = false;
    for (std::size_t t = 0; t < rows[0].result.records.size(); ++t) {
      const auto a = record_to_json(rows[0].result.records[t]);
      const auto b = record_to_json(rows[k].result.records[t]);
      for (const auto& [key, value] : a.items()) {
        if (dependent.count(key)) {
          any_difference = any_difference || value != b.at(key);
          continue;
        }
        CHECK_MESSAGE(value == b.at(key), key);
      }
    }
    CHECK(any_difference);
  }
}

TEST_CASE("adversary-count sweep uses fresh ledgers") {
  auto c = mixed_team(0.95, AggregatorKind::weighted_majority);
  const auto rows = sweep(SweepParameter::adversary_count, {"1", "2", "3", "4"}, c, mc_dataset(10, 1));
  REQUIRE(rows.size() == 4);
  for (std::size_t k = 0; k < 4; ++k) {
    const auto& first = rows[k].result.records.front();
    CHECK(first.ledger_before.round() == 0);
    for (const auto& [agent, crs] : first.ledger_before.scores()) CHECK(crs == c.initial_crs);
    CHECK(rows[k].result.header["config"]["adversary_count"] == k + 1);
  }
  CHECK_THROWS_AS(sweep(SweepParameter::adversary_count, {"6"}, c, mc_dataset(3, 1)), Error);
}
