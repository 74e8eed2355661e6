// Command-line entry point wrapping the harness.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace crsim {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 1,
  kExitDataset = 2,
  kExitDivergence = 3,
  kExitJudge = 4,
};

struct CommandInvocation {
  std::string command;  // run | sweep | replay | report
  std::filesystem::path config_path;   // optional for run/sweep; defaults apply when empty
  std::filesystem::path dataset_path;  // run/sweep
  std::filesystem::path output_dir;    // run/sweep: written; report: scanned when no record files given
  std::optional<std::uint64_t> seed;   // applied after every --set
  unsigned jobs = 1;
  std::vector<std::string> overrides;  // key=value
  std::string sweep_parameter;         // adversary-count | edge-count | aggregator-kind
  std::vector<std::string> sweep_values;
  std::vector<std::filesystem::path> record_files;  // replay/report
};

/// Runs one command; returns its exit status. Progress and reports go to
/// `out`, diagnostics to `err`.
int execute(const CommandInvocation& invocation, std::ostream& out, std::ostream& err);

}  // namespace crsim
