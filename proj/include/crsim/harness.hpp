// The iterative game loop, experiment sweeps, metrics and record persistence.
//
// Record stream (JSONL): one header line followed by one line per round.
//   {"type":"header","schema":"crsim.records/1","config":{...},"team":[...],"judge":"synthetic","digest":"..."}
//   {"type":"round","round":1,"query":{...},"topology":{...},...,"digest":"..."}
// Every line ends with a chained FNV-1a digest over its own bytes (everything
// before `,"digest":`) seeded with the previous line's digest.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <json.hpp>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "crsim/aggregation.hpp"
#include "crsim/config.hpp"
#include "crsim/judge.hpp"
#include "crsim/ledger.hpp"
#include "crsim/scoring.hpp"
#include "crsim/topology.hpp"

namespace crsim {

inline constexpr const char* kRecordSchema = "crsim.records/1";
inline constexpr const char* kJudgeKeyEnv = "CRSIM_JUDGE_API_KEY";
inline constexpr const char* kAgentKeyEnv = "CRSIM_AGENT_API_KEY";

struct TeamMember {
  AgentId id;
  std::string behavior;
  bool adversarial = false;
};

struct RoundRecord {
  std::size_t round = 0;  // 1-based
  Query query;
  TopologyGraph topology;
  std::vector<AgentOutput> initial_outputs;
  std::vector<AgentOutput> final_outputs;
  std::vector<NeighborMessage> messages;
  AggregatorKind aggregator = AggregatorKind::crs_centroid;
  AggregationResult aggregation;
  RewardValue reward = RewardValue::clamped(0.0);
  bool correct = false;
  bool unparseable = false;
  ContributionVector contributions;               // the CSc applied in the update
  std::optional<ContributionVector> shapley_raw;  // phi before normalization
  CredibilityLedger ledger_before;
  CredibilityLedger ledger_after;
};

/// One experiment's mutable state: the team, its ledger and the judge.
class ExperimentState {
 public:
  /// Builds the team from the config roster. Without an explicit judge a
  /// remote judge is used when the config names an endpoint and the
  /// credential variable is set, the synthetic judge otherwise.
  explicit ExperimentState(ExperimentConfig config, std::unique_ptr<JudgeChannel> judge = nullptr,
                           unsigned jobs = 1);

  /// respond -> topology -> interaction -> aggregate -> grade -> contributions
  /// -> credibility update. On any error the ledger and round counter are
  /// left untouched and the error propagates.
  RoundRecord run_round(const Query& query);

  const ExperimentConfig& config() const noexcept { return config_; }
  const CredibilityLedger& ledger() const noexcept { return ledger_; }
  const std::vector<TeamMember>& team() const noexcept { return team_; }
  const JudgeChannel& judge() const noexcept { return *judge_; }
  std::size_t rounds_completed() const noexcept { return rounds_; }

 private:
  ExperimentConfig config_;
  std::vector<std::unique_ptr<Agent>> agents_;
  std::vector<TeamMember> team_;
  CredibilityLedger ledger_;
  std::unique_ptr<JudgeChannel> judge_;
  FeatureHashEmbedder embedder_;
  unsigned jobs_;
  std::size_t rounds_ = 0;
};

std::unique_ptr<JudgeChannel> make_judge(const ExperimentConfig& config);

/// Shapley when the round had no communication and the aggregator does not
/// consult the judge; judge otherwise. An explicit config mode wins.
ContributionMode effective_contribution_mode(const ExperimentConfig& config, const TopologyGraph& graph);

struct ExperimentMetrics {
  std::size_t warmup_rounds = 0;
  std::vector<bool> correct;                // per-round accuracy indicator
  std::vector<double> cumulative_accuracy;  // running mean of `correct`
  std::vector<double> rewards;
  std::vector<std::vector<double>> crs;     // per round, per agent, after the update
  std::vector<std::size_t> realized_edges;
  std::vector<std::size_t> flips;           // per agent, summed over rounds

  std::size_t rounds() const noexcept { return correct.size(); }
  double accuracy() const;
  /// Accuracy over rounds after the first `warmup_rounds`; 0 when none remain.
  double post_warmup_accuracy() const;
};

struct ExperimentResult {
  ExperimentMetrics metrics;
  std::vector<RoundRecord> records;
  nlohmann::json header;
};

struct RunOptions {
  unsigned jobs = 1;
  // Overrides make_judge when set (tests inject stubs here).
  std::function<std::unique_ptr<JudgeChannel>(const ExperimentConfig&)> judge_factory;
};

/// Folds run_round over the dataset in order, carrying the ledger.
/// Throws Error(dataset_error) before round 1 when the dataset is empty.
ExperimentResult run_experiment(const ExperimentConfig& config, const std::vector<Query>& dataset,
                                const RunOptions& options = {});

ExperimentMetrics compute_metrics(const std::vector<RoundRecord>& records, std::size_t team_size,
                                  std::size_t warmup_rounds);

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

nlohmann::json make_header(const ExperimentConfig& config, const std::vector<TeamMember>& team,
                           const std::string& judge_name);
nlohmann::json record_to_json(const RoundRecord& record);
RoundRecord record_from_json(const nlohmann::json& doc);

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed);
std::string hex_digest(std::uint64_t digest);

/// Header line plus one line per record, each with its chained digest.
std::string records_to_jsonl(const nlohmann::json& header, const std::vector<RoundRecord>& records);
std::string metrics_to_csv(const ExperimentMetrics& metrics);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

enum class SweepParameter { adversary_count, edge_count, aggregator_kind };

std::string_view to_string(SweepParameter parameter) noexcept;
SweepParameter parse_sweep_parameter(std::string_view text);

struct SweepRow {
  std::string value;
  ExperimentResult result;
  double min_faithful_crs = 0.0;  // final round; NaN-free, 0 when no such agent
  double max_adversary_crs = 0.0;
  double mean_realized_edges = 0.0;
};

/// One experiment per value. Each point starts from a fresh ledger and runs
/// on the config seed, so points differ only through the swept parameter.
std::vector<SweepRow> sweep(SweepParameter parameter, const std::vector<std::string>& values,
                            const ExperimentConfig& config, const std::vector<Query>& dataset,
                            const RunOptions& options = {});

std::string sweep_to_csv(SweepParameter parameter, const std::vector<SweepRow>& rows);

// ---------------------------------------------------------------------------
// Replay
// ---------------------------------------------------------------------------

struct Divergence {
  std::size_t round = 0;  // 0 for the header
  std::string field;
  std::string detail;
};

struct VerificationReport {
  bool ok = false;
  std::size_t rounds_checked = 0;
  std::optional<Divergence> divergence;
};

/// Re-derive topology, messages, aggregation, reward, contributions and every
/// credibility transition from the recorded outputs, then check each line's
/// digest. Stops at the first divergence. Remote-judge decisions cannot be
/// recomputed offline; those rounds are checked for shape and ledger
/// arithmetic only.
VerificationReport replay(std::string_view record_stream);
VerificationReport replay_file(const std::filesystem::path& path);

}  // namespace crsim
