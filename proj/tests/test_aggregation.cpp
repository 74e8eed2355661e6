#include <doctest.h>

#include <cmath>

#include "crsim/aggregation.hpp"
#include "crsim/judge.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace crsim;
using crsim::testing::ledger_of;
using crsim::testing::mc_query;
using crsim::testing::outputs_of;

namespace {

EmbeddingVector vec(std::vector<double> c) { return EmbeddingVector{std::move(c), false}; }

}  // namespace

// ---------------------------------------------------------------------------
// Embedding
// ---------------------------------------------------------------------------

TEST_CASE("embedding is deterministic and unit length") {
  FeatureHashEmbedder e;
  CHECK(e.embed("the cat sat") == e.embed("the cat sat"));
  CHECK(norm(e.embed("the cat sat")) == doctest::Approx(1.0));
  CHECK(cosine_distance(e.embed("B"), e.embed("B")) == doctest::Approx(0.0));
  CHECK(cosine_distance(e.embed("the cat sat"), e.embed("completely different words")) > 0.5);
  CHECK(e.embed("The, CAT!") == e.embed("the cat"));
}

TEST_CASE("empty text embeds to a flagged zero vector") {
  FeatureHashEmbedder e;
  const auto z = e.embed("  ...  ");
  CHECK(z.from_empty_text);
  CHECK(norm(z) == 0.0);
  CHECK(cosine_similarity(z, e.embed("x")) == 0.0);
}

TEST_CASE("single letters land in distinct buckets") {
  FeatureHashEmbedder e;
  for (char a = 'a'; a <= 'z'; ++a)
    for (char b = static_cast<char>(a + 1); b <= 'z'; ++b)
      CHECK(cosine_similarity(e.embed(std::string(1, a)), e.embed(std::string(1, b))) == 0.0);
}

TEST_CASE("tokenize keeps utf-8 words whole") {
  CHECK(tokenize("Héllo, wörld 42") == std::vector<std::string>{"h\xc3\xa9llo", "w\xc3\xb6rld", "42"});
}

// ---------------------------------------------------------------------------
// Centroid and nearest selection
// ---------------------------------------------------------------------------

TEST_CASE("centroid of 2-D stubs") {
  const std::vector<EmbeddingVector> v{vec({1, 0}), vec({0, 1}), vec({1, 1})};
  const std::vector<double> w{0.5, 0.5, 0.5};
  const auto c = weighted_centroid(v, w);
  CHECK(c.components[0] == doctest::Approx(1.0 / 3.0));
  CHECK(c.components[1] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("centroid edge cases") {
  FeatureHashEmbedder e;
  const auto same = outputs_of({"x y", "x y", "x y"});
  const auto c = crs_centroid(same, ledger_of({0.4, 0.4, 0.4}), e);
  const auto vx = e.embed("x y");
  for (std::size_t d = 0; d < e.dim(); ++d) CHECK(c.components[d] == doctest::Approx(0.4 * vx.components[d]));

  const auto two = outputs_of({"left", "right"});
  const auto half = crs_centroid(two, ledger_of({1.0, 0.0}), e);
  const auto vl = e.embed("left");
  for (std::size_t d = 0; d < e.dim(); ++d) CHECK(half.components[d] == doctest::Approx(vl.components[d] / 2));

  try {
    crs_centroid(two, ledger_of({1.0}), e);
    FAIL("expected missing-crs");
  } catch (const Error& err) {
    CHECK(err.code() == Errc::missing_crs);
  }
}

TEST_CASE("nearest_to is an argmin with lowest-index ties") {
  const std::vector<EmbeddingVector> v{vec({1, 0}), vec({0, 1}), vec({-1, 0.1})};
  CHECK(nearest_to(v, vec({0.2, 1})).index == 1);
  const std::vector<EmbeddingVector> tied{vec({1, 1}), vec({1, 1})};
  CHECK(nearest_to(tied, vec({1, 0})).index == 0);
}

TEST_CASE("selection is invariant to scaling every CrS") {
  FeatureHashEmbedder e;
  Rng rng(8);
  for (int t = 0; t < 200; ++t) {
    const auto answers = crsim::testing::random_answers(rng, 2 + rng.below(6), 4);
    auto crs = crsim::testing::random_crs(rng, answers.size());
    const auto outs = outputs_of(answers);
    const auto a = select_nearest(outs, crs_centroid(outs, ledger_of(crs), e), e);
    for (double& c : crs) c *= 3.0;
    const auto b = select_nearest(outs, crs_centroid(outs, ledger_of(crs), e), e);
    CHECK(a.chosen_agent == b.chosen_agent);
  }
}

// ---------------------------------------------------------------------------
// Votes
// ---------------------------------------------------------------------------

TEST_CASE("weighted majority and majority examples") {
  const auto outs = outputs_of({"C", "C", "C", "B", "B"});
  const auto w = weighted_majority(outs, ledger_of({0.2, 0.2, 0.2, 0.9, 0.8}));
  CHECK(w.final_answer == "B");
  CHECK(w.chosen_agent->index == 3);
  CHECK(w.candidate_scores.at(3) == doctest::Approx(1.7));
  CHECK(majority(outs).final_answer == "C");
  CHECK(majority(outputs_of({"B", "B", "C"})).final_answer == "B");
  CHECK(majority(outputs_of({"B", "C"})).final_answer == "B");
  CHECK(majority(outputs_of({"c ", "B", " C"})).final_answer == "c ");
}

TEST_CASE("similarity ensemble examples") {
  FeatureHashEmbedder e;
  const auto r = similarity_ensemble(outputs_of({"zebra", "A", "A", "A"}), e);
  CHECK(r.chosen_agent->index == 1);
  CHECK(similarity_ensemble(outputs_of({"X", "Y"}), e).chosen_agent->index == 0);
  try {
    similarity_ensemble(outputs_of({"X"}), e);
    FAIL("expected too-few-outputs");
  } catch (const Error& err) {
    CHECK(err.code() == Errc::too_few_outputs);
  }
}

TEST_CASE("uniform weights reduce weighted majority to majority") {
  Rng rng(12);
  for (int t = 0; t < 300; ++t) {
    const auto outs = outputs_of(crsim::testing::random_answers(rng, 1 + rng.below(8), 3));
    const double c = static_cast<double>(1 + rng.below(9)) / 10.0;
    std::vector<double> crs(outs.size(), c);
    CHECK(weighted_majority(outs, ledger_of(crs)) .final_answer == majority(outs).final_answer);
  }
}

TEST_CASE("aggregators match exhaustive oracles") {
  FeatureHashEmbedder e;
  Rng rng(99);
  for (int t = 0; t < 500; ++t) {
    const std::size_t n = 2 + rng.below(7);
    const auto answers = crsim::testing::random_answers(rng, n, 1 + rng.below(5));
    const auto crs = crsim::testing::random_crs(rng, n);
    const auto outs = outputs_of(answers);
    const auto ledger = ledger_of(crs);

    CHECK(select_nearest(outs, crs_centroid(outs, ledger, e), e).chosen_agent->index ==
          oracle::nearest(answers, crs, e));
    CHECK(weighted_majority(outs, ledger).chosen_agent->index == oracle::vote(answers, crs));
    CHECK(similarity_ensemble(outs, e).chosen_agent->index == oracle::most_similar(answers, e));
  }
}

TEST_CASE("aggregators are pure and the chosen agent's answer is final") {
  FeatureHashEmbedder e;
  SyntheticJudge judge;
  const auto q = mc_query("A");
  const AggregationContext ctx{e, &judge, &q};
  Rng rng(4);
  for (int t = 0; t < 100; ++t) {
    const auto outs = outputs_of(crsim::testing::random_answers(rng, 1 + rng.below(6), 4));
    const auto ledger = ledger_of(crsim::testing::random_crs(rng, outs.size()));
    for (auto kind : {AggregatorKind::crs_centroid, AggregatorKind::weighted_majority, AggregatorKind::majority,
                      AggregatorKind::similarity, AggregatorKind::coordinator, AggregatorKind::single_agent}) {
      const auto a = aggregate(kind, outs, ledger, ctx);
      CHECK(a == aggregate(kind, outs, ledger, ctx));
      REQUIRE(a.chosen_agent);
      CHECK(outs[a.chosen_agent->index].answer() == a.final_answer);
    }
  }
}

// ---------------------------------------------------------------------------
// Coordinator
// ---------------------------------------------------------------------------

TEST_CASE("synthetic coordinator: weighted vote, then highest credibility") {
  SyntheticJudge judge;
  const auto q = mc_query("B");
  CHECK(coordinator_aggregate(outputs_of({"C", "C", "B"}), ledger_of({0.1, 0.1, 0.9}), q, judge).final_answer == "B");
  const auto r = coordinator_aggregate(outputs_of({"A", "B", "C", "D"}), ledger_of({0.2, 0.3, 0.9, 0.1}), q, judge);
  CHECK(r.final_answer == "C");
  CHECK(r.chosen_agent->index == 2);
}

namespace {

struct BrokenJudge final : JudgeChannel {
  nlohmann::json coordinate(const nlohmann::json&) override { return {{"rationale", "no answer"}}; }
  nlohmann::json score_contributions(const nlohmann::json&) override { return {}; }
  std::string name() const override { return "broken"; }
};

}  // namespace

TEST_CASE("coordinator failures surface as judge errors") {
  BrokenJudge broken;
  const auto q = mc_query("B");
  try {
    coordinator_aggregate(outputs_of({"A", "B"}), ledger_of({0.5, 0.5}), q, broken);
    FAIL("expected malformed-judge-reply");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::malformed_judge_reply);
  }

  EndpointDescriptor ep;
  ep.url = "http://127.0.0.1:1/v1";
  ep.timeout_ms = 200;
  ep.retries = 0;
  RemoteJudge remote(ep);
  try {
    coordinator_aggregate(outputs_of({"A", "B"}), ledger_of({0.5, 0.5}), q, remote);
    FAIL("expected judge-unavailable");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::judge_unavailable);
  }
}
