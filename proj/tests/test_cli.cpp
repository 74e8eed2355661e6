#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <set>
#include <sstream>

#include "crsim/cli.hpp"
#include "crsim/harness.hpp"

using namespace crsim;
namespace fs = std::filesystem;

namespace {

const fs::path kData = fs::path(CRSIM_SOURCE_DIR) / "data";

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("crsim_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

struct Outcome {
  int status;
  std::string out;
  std::string err;
};

Outcome run(const CommandInvocation& inv) {
  std::ostringstream out, err;
  const int status = execute(inv, out, err);
  return {status, out.str(), err.str()};
}

CommandInvocation run_invocation(const fs::path& out_dir) {
  CommandInvocation inv;
  inv.command = "run";
  inv.dataset_path = kData / "synthetic_20.jsonl";
  inv.output_dir = out_dir;
  return inv;
}

std::set<std::string> listing(const fs::path& dir) {
  std::set<std::string> names;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    names.insert(e.path().string() + ":" + std::to_string(e.is_regular_file() ? fs::file_size(e.path()) : 0));
  return names;
}

}  // namespace

TEST_CASE("run writes records and one metrics row per round") {
  const auto dir = scratch("run");
  const auto r = run(run_invocation(dir));
  REQUIRE(r.status == kExitOk);
  CHECK(r.out.find("rounds 20") != std::string::npos);
  const auto csv = read_text(dir / "metrics.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 21);
  const auto records = read_text(dir / "records.jsonl");
  CHECK(std::count(records.begin(), records.end(), '\n') == 21);
}

TEST_CASE("the same seed gives byte-identical output") {
  const auto a = scratch("det_a");
  const auto b = scratch("det_b");
  auto inv = run_invocation(a);
  inv.seed = 11;
  inv.overrides = {"topology=sia-random", "interaction_phases=2"};
  REQUIRE(run(inv).status == kExitOk);
  inv.output_dir = b;
  inv.jobs = 3;
  REQUIRE(run(inv).status == kExitOk);
  CHECK(read_text(a / "records.jsonl") == read_text(b / "records.jsonl"));
  CHECK(read_text(a / "metrics.csv") == read_text(b / "metrics.csv"));
}

TEST_CASE("overrides and seed land in the recorded config") {
  const auto dir = scratch("overrides");
  auto inv = run_invocation(dir);
  inv.overrides = {"aggregator=majority", "seed=3"};
  inv.seed = 9;
  REQUIRE(run(inv).status == kExitOk);
  const auto text = read_text(dir / "records.jsonl");
  const auto header = nlohmann::json::parse(text.substr(0, text.find('\n')));
  CHECK(header["config"]["aggregator"] == "majority");
  CHECK(header["config"]["seed"] == 9);
}

TEST_CASE("replay accepts an untouched stream and rejects a tampered one") {
  const auto dir = scratch("replay");
  REQUIRE(run(run_invocation(dir)).status == kExitOk);
  CommandInvocation inv;
  inv.command = "replay";
  inv.record_files = {dir / "records.jsonl"};
  const auto ok = run(inv);
  CHECK(ok.status == kExitOk);
  CHECK(ok.out.find("ok, 20 rounds verified") != std::string::npos);

  auto text = read_text(dir / "records.jsonl");
  const auto pos = text.find("\"reward\":") + 9;
  text[pos] = text[pos] == '-' ? '+' : '-';
  write_text(dir / "tampered.jsonl", text);
  inv.record_files = {dir / "tampered.jsonl"};
  const auto bad = run(inv);
  CHECK(bad.status == kExitDivergence);
  CHECK(bad.out.find("divergence at round 1") != std::string::npos);
}

TEST_CASE("configuration errors exit 1") {
  const auto dir = scratch("config");
  auto inv = run_invocation(dir);
  inv.overrides = {"adversary_count=9"};
  const auto r = run(inv);
  CHECK(r.status == kExitConfig);
  CHECK(r.err.find("adversary_count") != std::string::npos);

  write_text(dir / "bad.json", R"({"team_size": 5, "colour": "red"})");
  inv.overrides.clear();
  inv.config_path = dir / "bad.json";
  CHECK(run(inv).status == kExitConfig);
  inv.config_path = dir / "missing.json";
  CHECK(run(inv).status == kExitConfig);
  CHECK_FALSE(fs::exists(dir / "records.jsonl"));
}

TEST_CASE("dataset errors exit 2") {
  const auto dir = scratch("dataset");
  auto inv = run_invocation(dir);
  inv.dataset_path = dir / "missing.jsonl";
  CHECK(run(inv).status == kExitDataset);
  write_text(dir / "empty.jsonl", "\n");
  inv.dataset_path = dir / "empty.jsonl";
  CHECK(run(inv).status == kExitDataset);
  write_text(dir / "broken.jsonl", "{\"id\":\"x\"}\n");
  inv.dataset_path = dir / "broken.jsonl";
  CHECK(run(inv).status == kExitDataset);
}

TEST_CASE("an unreachable judge exits 4") {
  const auto dir = scratch("judge");
  auto inv = run_invocation(dir);
  inv.overrides = {"aggregator=coordinator", R"(judge_endpoint={"url":"http://127.0.0.1:1/v1","model":"m"})"};
  ::setenv(kJudgeKeyEnv, "test-key", 1);
  const auto r = run(inv);
  ::unsetenv(kJudgeKeyEnv);
  CHECK(r.status == kExitJudge);
  CHECK_FALSE(fs::exists(dir / "records.jsonl"));
}

TEST_CASE("report is read-only") {
  const auto dir = scratch("report");
  auto inv = run_invocation(dir / "weighted");
  inv.overrides = {"aggregator=weighted-majority"};
  REQUIRE(run(inv).status == kExitOk);
  inv.output_dir = dir / "majority";
  inv.overrides = {"aggregator=majority"};
  REQUIRE(run(inv).status == kExitOk);

  const auto before = listing(dir);
  CommandInvocation report;
  report.command = "report";
  report.output_dir = dir;
  const auto r = run(report);
  CHECK(r.status == kExitOk);
  CHECK(r.out.find("aggregator weighted-majority") != std::string::npos);
  CHECK(r.out.find("delta vs majority") != std::string::npos);
  CHECK(listing(dir) == before);
}

TEST_CASE("sweep writes a table and one directory per point") {
  const auto dir = scratch("sweep");
  CommandInvocation inv;
  inv.command = "sweep";
  inv.dataset_path = kData / "synthetic_20.jsonl";
  inv.output_dir = dir;
  inv.sweep_parameter = "adversary-count";
  inv.sweep_values = {"1", "2", "3"};
  const auto r = run(inv);
  REQUIRE(r.status == kExitOk);
  const auto csv = read_text(dir / "sweep.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  for (int k = 0; k < 3; ++k) {
    const auto point = dir / ("point_" + std::to_string(k));
    CHECK(fs::exists(point / "records.jsonl"));
    CommandInvocation replay_inv;
    replay_inv.command = "replay";
    replay_inv.record_files = {point / "records.jsonl"};
    CHECK(run(replay_inv).status == kExitOk);
  }
  inv.sweep_parameter = "temperature";
  CHECK(run(inv).status == kExitConfig);
}

TEST_CASE("unknown commands exit 1") {
  CommandInvocation inv;
  inv.command = "explode";
  CHECK(run(inv).status == kExitConfig);
}
