#include "crsim/harness.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "crsim/dataset.hpp"
#include "crsim/parallel.hpp"
#include "crsim/remote.hpp"
#include "crsim/reward.hpp"
#include "crsim/rng.hpp"

namespace crsim {

using nlohmann::json;

namespace {

std::string agent_label(std::size_t index) { return "a" + std::to_string(index); }

std::vector<std::size_t> team_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

std::vector<Rng> round_streams(std::uint64_t seed, std::size_t round, std::size_t n) {
  std::vector<Rng> rngs;
  rngs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) rngs.emplace_back(derive_seed(seed, {round, i}));
  return rngs;
}

Rng topology_stream(std::uint64_t seed, std::size_t round) {
  return Rng(derive_seed(seed, {round, kTopologyStream}));
}

// The contribution step shared by run_round and replay.
struct ScoredContributions {
  ContributionVector applied;
  std::optional<ContributionVector> raw;
};

ScoredContributions score_round(const ExperimentConfig& config, ContributionMode mode, const Query& query,
                                const std::vector<AgentOutput>& outputs,
                                const std::vector<NeighborMessage>& messages, const std::string& final_answer,
                                RewardValue reward, const CredibilityLedger& ledger,
                                const AggregationContext& ctx, JudgeChannel& judge, unsigned jobs) {
  ScoredContributions out;
  if (mode == ContributionMode::shapley) {
    const SubsetAggregator subset = [&](std::span<const AgentOutput> s) {
      return aggregate(config.aggregator, s, ledger, ctx).final_answer;
    };
    const RewardFunction value = [&](const std::string& answer) {
      return grade(answer, query.gold, query.rubric).reward;
    };
    auto phi = shapley_contributions(outputs, subset, value, jobs);
    out.applied = config.shapley_normalization == ShapleyNormalization::reward_share ? reward_shares(phi, reward) : phi;
    out.raw = std::move(phi);
  } else {
    out.applied = judge_contributions(query, final_answer, outputs, messages, judge, config.judge_signed);
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// State and the round loop
// ---------------------------------------------------------------------------

std::unique_ptr<JudgeChannel> make_judge(const ExperimentConfig& config) {
  if (config.judge_endpoint) {
    if (const char* key = std::getenv(kJudgeKeyEnv); key && *key) {
      auto endpoint = *config.judge_endpoint;
      endpoint.api_key = key;
      return std::make_unique<RemoteJudge>(std::move(endpoint));
    }
  }
  return std::make_unique<SyntheticJudge>(config.judge_signed);
}

ContributionMode effective_contribution_mode(const ExperimentConfig& config, const TopologyGraph& graph) {
  if (config.contribution_mode) return *config.contribution_mode;
  const bool communicated = graph.edge_count() > 0;
  return !communicated && config.aggregator != AggregatorKind::coordinator ? ContributionMode::shapley
                                                                           : ContributionMode::judge;
}

ExperimentState::ExperimentState(ExperimentConfig config, std::unique_ptr<JudgeChannel> judge, unsigned jobs)
    : config_(validate_config(std::move(config))),
      ledger_(CredibilityLedger::uniform(config_.team_size, config_.initial_crs)),
      judge_(judge ? std::move(judge) : make_judge(config_)),
      embedder_(config_.embedding_dim),
      jobs_(jobs == 0 ? 1 : jobs) {
  const auto roster = team_roster(config_);
  const char* agent_key = std::getenv(kAgentKeyEnv);
  for (std::size_t i = 0; i < roster.size(); ++i) {
    AgentId id{i, agent_label(i)};
    const auto& spec = roster[i];
    if (spec.endpoint) {
      auto endpoint = *spec.endpoint;
      if (agent_key) endpoint.api_key = agent_key;
      agents_.push_back(make_remote_agent(id, std::move(endpoint)));
      team_.push_back({id, "remote", false});
    } else {
      agents_.push_back(make_agent(id, spec.profile));
      team_.push_back({id, std::string(to_string(spec.profile.kind)), is_adversarial(spec.profile.kind)});
    }
  }
}

RoundRecord ExperimentState::run_round(const Query& query) {
  validate_query(query);
  const std::size_t n = agents_.size();
  const std::size_t round = rounds_ + 1;

  RoundRecord rec;
  rec.round = round;
  rec.query = query;
  rec.aggregator = config_.aggregator;
  rec.ledger_before = ledger_;

  auto rngs = round_streams(config_.seed, round, n);
  rec.initial_outputs.resize(n, AgentOutput(AgentId{}, std::string()));
  parallel_for(n, jobs_, [&](std::size_t i) { rec.initial_outputs[i] = agents_[i]->respond(query, rngs[i]); });

  auto topo_rng = topology_stream(config_.seed, round);
  rec.topology = generate_topology(config_.topology, n, config_.edge_count, ledger_, topo_rng);

  std::vector<Agent*> raw_agents;
  for (auto& a : agents_) raw_agents.push_back(a.get());
  auto interaction = run_interaction(rec.topology, raw_agents, rec.initial_outputs, config_.interaction_phases, rngs,
                                     {.jobs = jobs_, .evaluation_order = {}});
  rec.final_outputs = std::move(interaction.outputs);
  rec.messages = std::move(interaction.messages);

  const AggregationContext ctx{embedder_, judge_.get(), &query};
  rec.aggregation = aggregate(config_.aggregator, rec.final_outputs, ledger_, ctx);

  const auto g = grade(rec.aggregation.final_answer, query.gold, query.rubric);
  rec.reward = g.reward;
  rec.correct = g.fully_correct;
  rec.unparseable = g.unparseable;

  const auto mode = effective_contribution_mode(config_, rec.topology);
  auto scored = score_round(config_, mode, query, rec.final_outputs, rec.messages, rec.aggregation.final_answer,
                            rec.reward, ledger_, ctx, *judge_, jobs_);
  rec.contributions = std::move(scored.applied);
  rec.shapley_raw = std::move(scored.raw);

  const auto team = team_indices(n);
  rec.ledger_after = update_credibility(ledger_, team, rec.contributions, rec.reward, config_.learning_rate,
                                        config_.crs_clamp);

  // Commit only once every step has succeeded.
  ledger_ = rec.ledger_after;
  rounds_ = round;
  return rec;
}

// ---------------------------------------------------------------------------
// Experiments and metrics
// ---------------------------------------------------------------------------

double ExperimentMetrics::accuracy() const { return cumulative_accuracy.empty() ? 0.0 : cumulative_accuracy.back(); }

double ExperimentMetrics::post_warmup_accuracy() const {
  if (correct.size() <= warmup_rounds) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = warmup_rounds; i < correct.size(); ++i) hits += correct[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(correct.size() - warmup_rounds);
}

ExperimentMetrics compute_metrics(const std::vector<RoundRecord>& records, std::size_t team_size,
                                  std::size_t warmup_rounds) {
  ExperimentMetrics m;
  m.warmup_rounds = warmup_rounds;
  m.flips.assign(team_size, 0);
  std::size_t hits = 0;
  for (const auto& rec : records) {
    m.correct.push_back(rec.correct);
    hits += rec.correct ? 1 : 0;
    m.cumulative_accuracy.push_back(static_cast<double>(hits) / static_cast<double>(m.correct.size()));
    m.rewards.push_back(rec.reward.value());
    std::vector<double> crs;
    for (std::size_t i = 0; i < team_size; ++i) crs.push_back(rec.ledger_after.crs(i));
    m.crs.push_back(std::move(crs));
    m.realized_edges.push_back(rec.topology.edge_count());
    for (const auto& o : rec.final_outputs)
      if (o.agent().index < team_size) m.flips[o.agent().index] += o.change_count();
  }
  return m;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const std::vector<Query>& dataset,
                                const RunOptions& options) {
  if (dataset.empty()) throw Error(Errc::dataset_error, "dataset", "dataset holds no queries");
  auto judge = options.judge_factory ? options.judge_factory(config) : nullptr;
  ExperimentState state(config, std::move(judge), options.jobs);

  ExperimentResult result;
  result.header = make_header(state.config(), state.team(), state.judge().name());
  result.records.reserve(dataset.size());
  for (const auto& q : dataset) result.records.push_back(state.run_round(q));
  result.metrics = compute_metrics(result.records, state.config().team_size, state.config().warmup_rounds);
  return result;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

json output_to_json(const AgentOutput& o) {
  json revisions = json::array();
  for (const auto& r : o.revisions()) revisions.push_back(json::array({r.phase, r.text}));
  return {{"agent", o.agent().index}, {"label", o.agent().label}, {"revisions", std::move(revisions)}};
}

AgentOutput output_from_json(const json& j) {
  std::vector<Revision> history;
  for (const auto& r : j.at("revisions")) history.push_back({r.at(0).get<std::size_t>(), r.at(1).get<std::string>()});
  return AgentOutput(AgentId{j.at("agent").get<std::size_t>(), j.at("label").get<std::string>()}, std::move(history));
}

json score_map_to_json(const std::map<std::size_t, double>& m) {
  json arr = json::array();
  for (const auto& [agent, v] : m) arr.push_back(json::array({agent, v}));
  return arr;
}

std::map<std::size_t, double> score_map_from_json(const json& j) {
  std::map<std::size_t, double> m;
  for (const auto& e : j) m[e.at(0).get<std::size_t>()] = e.at(1).get<double>();
  return m;
}

json ledger_to_json(const CredibilityLedger& l) { return {{"round", l.round()}, {"crs", score_map_to_json(l.scores())}}; }

CredibilityLedger ledger_from_json(const json& j) {
  return CredibilityLedger(score_map_from_json(j.at("crs")), j.at("round").get<std::size_t>());
}

json contributions_to_json(const ContributionVector& c) {
  return {{"mode", std::string(to_string(c.mode))}, {"values", score_map_to_json(c.values)}};
}

ContributionVector contributions_from_json(const json& j) {
  ContributionVector c;
  c.mode = parse_contribution_mode(j.at("mode").get<std::string>());
  c.values = score_map_from_json(j.at("values"));
  return c;
}

json topology_to_json(const TopologyGraph& g) {
  json edges = json::array();
  for (const auto& [a, b] : g.edges) edges.push_back(json::array({a, b}));
  return {{"kind", std::string(to_string(g.kind))},
          {"nodes", g.node_count},
          {"edges", std::move(edges)},
          {"realized_edges", g.edge_count()},
          {"path", g.path}};
}

TopologyGraph topology_from_json(const json& j) {
  TopologyGraph g;
  g.kind = parse_topology_kind(j.at("kind").get<std::string>());
  g.node_count = j.at("nodes").get<std::size_t>();
  for (const auto& e : j.at("edges")) g.edges.insert({e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>()});
  g.path = j.at("path").get<std::vector<std::size_t>>();
  if (j.at("realized_edges").get<std::size_t>() != g.edge_count())
    throw Error(Errc::record_error, "topology.realized_edges", "does not match the edge list");
  return g;
}

constexpr std::string_view kDigestMarker = ",\"digest\":\"";

std::string seal(const std::string& body, std::uint64_t& chain) {
  // body is a dumped JSON object; splice the digest in before its closing brace.
  const std::string open = body.substr(0, body.size() - 1);
  chain = fnv1a(open, chain);
  return open + std::string(kDigestMarker) + hex_digest(chain) + "\"}";
}

}  // namespace

json make_header(const ExperimentConfig& config, const std::vector<TeamMember>& team, const std::string& judge_name) {
  json members = json::array();
  for (const auto& m : team)
    members.push_back({{"index", m.id.index}, {"label", m.id.label}, {"behavior", m.behavior},
                       {"adversarial", m.adversarial}});
  return {{"type", "header"},
          {"schema", kRecordSchema},
          {"config", config_to_json(config)},
          {"team", std::move(members)},
          {"judge", judge_name}};
}

json record_to_json(const RoundRecord& r) {
  json initial = json::array();
  for (const auto& o : r.initial_outputs) initial.push_back(output_to_json(o));
  json final_outputs = json::array();
  for (const auto& o : r.final_outputs) final_outputs.push_back(output_to_json(o));

  json aggregation{{"kind", std::string(to_string(r.aggregator))},
                   {"final", r.aggregation.final_answer},
                   {"chosen_agent", r.aggregation.chosen_agent ? json(r.aggregation.chosen_agent->index) : json()},
                   {"scores", score_map_to_json(r.aggregation.candidate_scores)}};

  json contributions = contributions_to_json(r.contributions);
  contributions["raw"] = r.shapley_raw ? score_map_to_json(r.shapley_raw->values) : json();

  return {{"type", "round"},
          {"round", r.round},
          {"query", query_to_json(r.query)},
          {"topology", topology_to_json(r.topology)},
          {"initial_outputs", std::move(initial)},
          {"final_outputs", std::move(final_outputs)},
          {"messages", messages_to_json(r.messages)},
          {"aggregation", std::move(aggregation)},
          {"reward", r.reward.value()},
          {"correct", r.correct},
          {"unparseable", r.unparseable},
          {"contributions", std::move(contributions)},
          {"ledger_before", ledger_to_json(r.ledger_before)},
          {"ledger_after", ledger_to_json(r.ledger_after)}};
}

RoundRecord record_from_json(const json& j) {
  try {
    if (j.at("type") != "round") throw Error(Errc::record_error, "type", "expected a round record");
    RoundRecord r;
    r.round = j.at("round").get<std::size_t>();
    r.query = query_from_json(j.at("query"), "query");
    r.topology = topology_from_json(j.at("topology"));
    for (const auto& o : j.at("initial_outputs")) r.initial_outputs.push_back(output_from_json(o));
    for (const auto& o : j.at("final_outputs")) r.final_outputs.push_back(output_from_json(o));

    std::map<std::size_t, AgentId> ids;
    for (const auto& o : r.final_outputs) ids[o.agent().index] = o.agent();
    for (const auto& m : j.at("messages")) {
      const auto s = m.at("sender").get<std::size_t>();
      const auto t = m.at("receiver").get<std::size_t>();
      if (!ids.count(s) || !ids.count(t)) throw Error(Errc::record_error, "messages", "unknown agent");
      r.messages.push_back({ids[s], ids[t], m.at("content").get<std::string>(), m.at("phase").get<std::size_t>()});
    }

    const auto& agg = j.at("aggregation");
    r.aggregator = parse_aggregator_kind(agg.at("kind").get<std::string>());
    r.aggregation.final_answer = agg.at("final").get<std::string>();
    if (!agg.at("chosen_agent").is_null()) {
      const auto c = agg.at("chosen_agent").get<std::size_t>();
      if (!ids.count(c)) throw Error(Errc::record_error, "aggregation.chosen_agent", "unknown agent");
      r.aggregation.chosen_agent = ids[c];
    }
    r.aggregation.candidate_scores = score_map_from_json(agg.at("scores"));

    if (!j.at("reward").is_number()) throw Error(Errc::record_error, "reward", "expected a number");
    r.reward = RewardValue::checked(j.at("reward").get<double>());
    r.correct = j.at("correct").get<bool>();
    r.unparseable = j.at("unparseable").get<bool>();
    r.contributions = contributions_from_json(j.at("contributions"));
    if (!j.at("contributions").at("raw").is_null()) {
      ContributionVector raw;
      raw.mode = ContributionMode::shapley;
      raw.values = score_map_from_json(j.at("contributions").at("raw"));
      r.shapley_raw = std::move(raw);
    }
    r.ledger_before = ledger_from_json(j.at("ledger_before"));
    r.ledger_after = ledger_from_json(j.at("ledger_after"));
    return r;
  } catch (const json::exception& e) {
    throw Error(Errc::record_error, "round", e.what());
  }
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = 0xcbf29ce484222325ull ^ seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex_digest(std::uint64_t digest) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, digest >>= 4) out[static_cast<std::size_t>(i)] = digits[digest & 0xF];
  return out;
}

std::string records_to_jsonl(const json& header, const std::vector<RoundRecord>& records) {
  std::uint64_t chain = 0;
  std::string out = seal(header.dump(), chain) + "\n";
  for (const auto& r : records) out += seal(record_to_json(r).dump(), chain) + "\n";
  return out;
}

std::string metrics_to_csv(const ExperimentMetrics& m) {
  const std::size_t n = m.crs.empty() ? 0 : m.crs.front().size();
  std::string out = "round,accuracy";
  for (std::size_t i = 0; i < n; ++i) out += ",crs_" + std::to_string(i);
  out += ",realized_edges,reward\n";
  for (std::size_t t = 0; t < m.rounds(); ++t) {
    out += std::to_string(t + 1) + "," + format_number(m.cumulative_accuracy[t]);
    for (double c : m.crs[t]) out += "," + format_number(c);
    out += "," + std::to_string(m.realized_edges[t]) + "," + format_number(m.rewards[t]) + "\n";
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error(Errc::record_error, path.string(), "cannot write file");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::record_error, path.string(), "cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

std::string_view to_string(SweepParameter p) noexcept {
  switch (p) {
    case SweepParameter::adversary_count: return "adversary-count";
    case SweepParameter::edge_count: return "edge-count";
    case SweepParameter::aggregator_kind: return "aggregator-kind";
  }
  return "unknown";
}

SweepParameter parse_sweep_parameter(std::string_view text) {
  for (auto p : {SweepParameter::adversary_count, SweepParameter::edge_count, SweepParameter::aggregator_kind})
    if (to_string(p) == text) return p;
  throw Error(Errc::invalid_kind, "parameter", "unknown sweep parameter '" + std::string(text) + "'");
}

std::vector<SweepRow> sweep(SweepParameter parameter, const std::vector<std::string>& values,
                            const ExperimentConfig& config, const std::vector<Query>& dataset,
                            const RunOptions& options) {
  static constexpr const char* keys[] = {"adversary_count", "edge_count", "aggregator"};
  const std::string key = keys[static_cast<int>(parameter)];

  std::vector<SweepRow> rows;
  for (const auto& value : values) {
    const auto point = apply_overrides(config, {key + "=" + value});
    SweepRow row;
    row.value = value;
    row.result = run_experiment(point, dataset, options);

    const auto& m = row.result.metrics;
    const auto team = row.result.header.at("team");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    if (!m.crs.empty()) {
      for (const auto& member : team) {
        const double c = m.crs.back()[member.at("index").get<std::size_t>()];
        if (member.at("adversarial").get<bool>()) hi = std::max(hi, c);
        else lo = std::min(lo, c);
      }
    }
    row.min_faithful_crs = std::isfinite(lo) ? lo : 0.0;
    row.max_adversary_crs = std::isfinite(hi) ? hi : 0.0;
    double edges = 0.0;
    for (auto e : m.realized_edges) edges += static_cast<double>(e);
    row.mean_realized_edges = m.rounds() ? edges / static_cast<double>(m.rounds()) : 0.0;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string sweep_to_csv(SweepParameter parameter, const std::vector<SweepRow>& rows) {
  std::string out = std::string(to_string(parameter)) +
                    ",rounds,accuracy,post_warmup_accuracy,mean_realized_edges,min_faithful_crs,max_adversary_crs\n";
  for (const auto& r : rows) {
    const auto& m = r.result.metrics;
    out += r.value + "," + std::to_string(m.rounds()) + "," + format_number(m.accuracy()) + "," +
           format_number(m.post_warmup_accuracy()) + "," + format_number(r.mean_realized_edges) + "," +
           format_number(r.min_faithful_crs) + "," + format_number(r.max_adversary_crs) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Replay
// ---------------------------------------------------------------------------

namespace {

struct Mismatch {
  std::string field;
  std::string detail;
};

// Split a sealed line into its body and digest; nullopt when the seal is damaged.
std::optional<std::pair<std::string, std::string>> unseal(std::string_view line) {
  const auto pos = line.rfind(kDigestMarker);
  if (pos == std::string_view::npos) return std::nullopt;
  const auto tail = line.substr(pos + kDigestMarker.size());
  if (tail.size() != 18 || tail.substr(16) != "\"}") return std::nullopt;
  return std::pair{std::string(line.substr(0, pos)), std::string(tail.substr(0, 16))};
}

std::optional<Mismatch> check_round(const RoundRecord& rec, std::size_t expected_round, const ExperimentConfig& config,
                                    const CredibilityLedger& ledger, bool offline_judge,
                                    const FeatureHashEmbedder& embedder) {
  const std::size_t n = config.team_size;
  if (rec.round != expected_round) return Mismatch{"round", "expected " + std::to_string(expected_round)};
  if (rec.ledger_before.scores() != ledger.scores() || rec.ledger_before.round() != ledger.round()) return Mismatch{"ledger_before", "does not continue the previous round"};
  if (rec.initial_outputs.size() != n || rec.final_outputs.size() != n)
    return Mismatch{"final_outputs", "team size mismatch"};
  for (std::size_t i = 0; i < n; ++i) {
    const auto& init = rec.initial_outputs[i];
    const auto& fin = rec.final_outputs[i];
    if (init.agent().index != i || fin.agent().index != i || init.revisions().size() != 1 ||
        fin.revisions().front() != init.revisions().front())
      return Mismatch{"initial_outputs", "agent " + std::to_string(i) + " history does not start at its initial output"};
  }

  // Topology: regenerate from the same stream and the pre-round ledger.
  try {
    auto rng = topology_stream(config.seed, rec.round);
    const auto graph = generate_topology(config.topology, n, config.edge_count, ledger, rng);
    if (!(graph == rec.topology)) return Mismatch{"topology", "graph differs from the regenerated one"};
  } catch (const Error& e) {
    return Mismatch{"topology", e.what()};
  }

  // Messages: phase p carries every sender's answer after p revisions.
  std::vector<NeighborMessage> expected;
  if (rec.topology.edge_count() > 0) {
    for (std::size_t phase = 0; phase < config.interaction_phases; ++phase)
      for (std::size_t s = 0; s < n; ++s)
        for (std::size_t r : rec.topology.neighbors(s)) {
          const auto& hist = rec.final_outputs[s].revisions();
          if (phase >= hist.size()) return Mismatch{"final_outputs", "revision history too short"};
          expected.push_back({rec.final_outputs[s].agent(), rec.final_outputs[r].agent(), hist[phase].text, phase});
        }
  }
  if (expected != rec.messages) return Mismatch{"messages", "message log differs from the revision histories"};
  for (std::size_t i = 0; i < n; ++i) {
    const bool talks = !rec.topology.neighbors(i).empty();
    const std::size_t want = talks ? config.interaction_phases + 1 : 1;
    if (rec.final_outputs[i].revisions().size() != want)
      return Mismatch{"final_outputs", "agent " + std::to_string(i) + " has the wrong number of revisions"};
  }

  SyntheticJudge judge(config.judge_signed);
  const AggregationContext ctx{embedder, &judge, &rec.query};
  const bool judge_aggregation = config.aggregator == AggregatorKind::coordinator;
  if (rec.aggregator != config.aggregator) return Mismatch{"aggregation.kind", "differs from the config"};
  if (offline_judge || !judge_aggregation) {
    try {
      const auto agg = aggregate(config.aggregator, rec.final_outputs, ledger, ctx);
      if (!(agg == rec.aggregation)) return Mismatch{"aggregation", "re-derived aggregation differs"};
    } catch (const Error& e) {
      return Mismatch{"aggregation", e.what()};
    }
  }

  const auto g = grade(rec.aggregation.final_answer, rec.query.gold, rec.query.rubric);
  if (!(g.reward == rec.reward)) return Mismatch{"reward", "re-graded reward is " + format_number(g.reward.value())};
  if (g.fully_correct != rec.correct) return Mismatch{"correct", "re-graded indicator differs"};
  if (g.unparseable != rec.unparseable) return Mismatch{"unparseable", "re-graded flag differs"};

  const auto mode = effective_contribution_mode(config, rec.topology);
  if (rec.contributions.mode != mode) return Mismatch{"contributions.mode", "differs from the contribution rule"};
  if (mode == ContributionMode::shapley || offline_judge) {
    try {
      const auto scored = score_round(config, mode, rec.query, rec.final_outputs, rec.messages,
                                      rec.aggregation.final_answer, rec.reward, ledger, ctx, judge, 1);
      if (!(scored.applied == rec.contributions)) return Mismatch{"contributions", "re-derived scores differ"};
      if (scored.raw != rec.shapley_raw) return Mismatch{"contributions.raw", "re-derived Shapley values differ"};
    } catch (const Error& e) {
      return Mismatch{"contributions", e.what()};
    }
  }

  try {
    const auto team = team_indices(n);
    const auto next = update_credibility(ledger, team, rec.contributions, rec.reward, config.learning_rate,
                                         config.crs_clamp);
    if (!(next.scores() == rec.ledger_after.scores()) || next.round() != rec.ledger_after.round())
      return Mismatch{"ledger_after", "credibility update does not reproduce"};
  } catch (const Error& e) {
    return Mismatch{"ledger_after", e.what()};
  }
  return std::nullopt;
}

}  // namespace

VerificationReport replay(std::string_view stream) {
  VerificationReport report;
  auto diverge = [&](std::size_t round, std::string field, std::string detail) {
    report.ok = false;
    report.divergence = Divergence{round, std::move(field), std::move(detail)};
    return report;
  };

  std::vector<std::string_view> lines;
  for (std::size_t start = 0; start < stream.size();) {
    auto end = stream.find('\n', start);
    if (end == std::string_view::npos) end = stream.size();
    lines.push_back(stream.substr(start, end - start));
    start = end + 1;
  }
  if (lines.empty()) return diverge(0, "header", "empty record stream");

  std::uint64_t chain = 0;
  ExperimentConfig config;
  bool offline_judge = true;
  CredibilityLedger ledger;
  std::optional<FeatureHashEmbedder> embedder;

  for (std::size_t k = 0; k < lines.size(); ++k) {
    const std::size_t round = k;  // line k holds round k; line 0 is the header
    const auto sealed = unseal(lines[k]);
    if (!sealed) return diverge(round, "digest", "line is missing its digest");
    const json doc = json::parse(sealed->first + "}", nullptr, false);
    if (doc.is_discarded()) return diverge(round, "line", "not valid JSON");

    if (k == 0) {
      try {
        if (doc.at("type") != "header" || doc.at("schema") != kRecordSchema)
          return diverge(0, "header", "not a " + std::string(kRecordSchema) + " header");
        config = config_from_json(doc.at("config"));
        offline_judge = doc.at("judge").get<std::string>() != "remote";
        if (doc.at("team").size() != config.team_size) return diverge(0, "team", "size differs from the config");
      } catch (const std::exception& e) {
        return diverge(0, "header", e.what());
      }
      ledger = CredibilityLedger::uniform(config.team_size, config.initial_crs);
      embedder.emplace(config.embedding_dim);
    } else {
      RoundRecord rec;
      try {
        rec = record_from_json(doc);
      } catch (const std::exception& e) {
        return diverge(round, "record", e.what());
      }
      if (auto bad = check_round(rec, round, config, ledger, offline_judge, *embedder))
        return diverge(round, bad->field, bad->detail);
      ledger = rec.ledger_after;
      ++report.rounds_checked;
    }

    chain = fnv1a(sealed->first, chain);
    if (hex_digest(chain) != sealed->second) return diverge(round, "digest", "line bytes differ from the recorded digest");
  }
  report.ok = true;
  return report;
}

VerificationReport replay_file(const std::filesystem::path& path) { return replay(read_text(path)); }

}  // namespace crsim
