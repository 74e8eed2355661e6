#include "crsim/cli.hpp"

#include <algorithm>
#include <map>

#include "crsim/dataset.hpp"
#include "crsim/harness.hpp"

namespace crsim {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::dataset_error: return kExitDataset;
    case Errc::record_error: return kExitDivergence;
    case Errc::judge_unavailable:
    case Errc::malformed_judge_reply:
    case Errc::endpoint_unreachable:
    case Errc::malformed_response: return kExitJudge;
    default: return kExitConfig;
  }
}

ExperimentConfig load_config(const CommandInvocation& inv) {
  ExperimentConfig config;
  if (!inv.config_path.empty()) {
    std::string text;
    try {
      text = read_text(inv.config_path);
    } catch (const Error&) {
      throw Error(Errc::invalid_field, inv.config_path.string(), "cannot open config file");
    }
    const json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded()) throw Error(Errc::invalid_field, inv.config_path.string(), "config is not valid JSON");
    config = config_from_json(doc);
  }
  auto overrides = inv.overrides;
  if (inv.seed) overrides.push_back("seed=" + std::to_string(*inv.seed));
  return overrides.empty() ? validate_config(config) : apply_overrides(config, overrides);
}

void write_experiment(const fs::path& dir, const ExperimentResult& result) {
  write_text(dir / "records.jsonl", records_to_jsonl(result.header, result.records));
  write_text(dir / "metrics.csv", metrics_to_csv(result.metrics));
}

void print_summary(std::ostream& out, const ExperimentResult& r) {
  const auto& m = r.metrics;
  out << "rounds " << m.rounds() << "  accuracy " << format_number(m.accuracy());
  if (m.warmup_rounds > 0) out << "  post-warmup " << format_number(m.post_warmup_accuracy());
  out << "\n";
  if (!m.crs.empty()) {
    out << "final crs";
    for (double c : m.crs.back()) out << " " << format_number(c);
    out << "\n";
  }
}

int run_command(const CommandInvocation& inv, std::ostream& out) {
  const auto config = load_config(inv);
  if (inv.dataset_path.empty()) throw Error(Errc::dataset_error, "--dataset", "a dataset file is required");
  if (inv.output_dir.empty()) throw Error(Errc::invalid_field, "--out", "an output directory is required");
  const auto dataset = load_dataset(inv.dataset_path);
  const auto result = run_experiment(config, dataset, {.jobs = inv.jobs, .judge_factory = {}});
  write_experiment(inv.output_dir, result);
  print_summary(out, result);
  out << "wrote " << (inv.output_dir / "records.jsonl").string() << " and "
      << (inv.output_dir / "metrics.csv").string() << "\n";
  return kExitOk;
}

int sweep_command(const CommandInvocation& inv, std::ostream& out) {
  const auto config = load_config(inv);
  const auto parameter = parse_sweep_parameter(inv.sweep_parameter);
  if (inv.sweep_values.empty()) throw Error(Errc::invalid_field, "--values", "at least one sweep value is required");
  if (inv.dataset_path.empty()) throw Error(Errc::dataset_error, "--dataset", "a dataset file is required");
  if (inv.output_dir.empty()) throw Error(Errc::invalid_field, "--out", "an output directory is required");
  const auto dataset = load_dataset(inv.dataset_path);
  const auto rows = sweep(parameter, inv.sweep_values, config, dataset, {.jobs = inv.jobs, .judge_factory = {}});
  for (std::size_t k = 0; k < rows.size(); ++k)
    write_experiment(inv.output_dir / ("point_" + std::to_string(k)), rows[k].result);
  const auto table = sweep_to_csv(parameter, rows);
  write_text(inv.output_dir / "sweep.csv", table);
  out << table;
  return kExitOk;
}

int replay_command(const CommandInvocation& inv, std::ostream& out) {
  if (inv.record_files.empty()) throw Error(Errc::invalid_field, "records", "a record file is required");
  int status = kExitOk;
  for (const auto& path : inv.record_files) {
    const auto report = replay_file(path);
    if (report.ok) {
      out << path.string() << ": ok, " << report.rounds_checked << " rounds verified\n";
      continue;
    }
    const auto& d = *report.divergence;
    out << path.string() << ": divergence at round " << d.round << " field " << d.field << ": " << d.detail << "\n";
    status = kExitDivergence;
  }
  return status;
}

std::vector<fs::path> find_record_files(const CommandInvocation& inv) {
  std::vector<fs::path> files = inv.record_files;
  if (files.empty() && !inv.output_dir.empty() && fs::is_directory(inv.output_dir)) {
    for (const auto& entry : fs::recursive_directory_iterator(inv.output_dir))
      if (entry.is_regular_file() && entry.path().filename() == "records.jsonl") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
  }
  if (files.empty()) throw Error(Errc::invalid_field, "records", "no record files to report on");
  return files;
}

int report_command(const CommandInvocation& inv, std::ostream& out) {
  struct Row {
    std::string file;
    std::string aggregator;
    double accuracy = 0.0;
    std::size_t rounds = 0;
    std::vector<std::pair<std::string, double>> final_crs;
  };
  std::vector<Row> rows;
  for (const auto& path : find_record_files(inv)) {
    const auto text = read_text(path);
    Row row;
    row.file = path.string();
    std::size_t hits = 0;
    std::optional<json> last;
    std::size_t line_no = 0;
    for (std::size_t start = 0; start < text.size();) {
      auto end = text.find('\n', start);
      if (end == std::string::npos) end = text.size();
      const json doc = json::parse(text.substr(start, end - start), nullptr, false);
      start = end + 1;
      ++line_no;
      if (doc.is_discarded()) throw Error(Errc::record_error, row.file + ":" + std::to_string(line_no), "not JSON");
      if (doc.value("type", "") == "header") {
        row.aggregator = doc.at("config").at("aggregator").get<std::string>();
        continue;
      }
      ++row.rounds;
      hits += doc.at("correct").get<bool>() ? 1 : 0;
      last = doc;
    }
    row.accuracy = row.rounds ? static_cast<double>(hits) / static_cast<double>(row.rounds) : 0.0;
    if (last)
      for (const auto& e : last->at("ledger_after").at("crs"))
        row.final_crs.emplace_back("a" + std::to_string(e.at(0).get<std::size_t>()), e.at(1).get<double>());
    rows.push_back(std::move(row));
  }

  std::map<std::string, std::pair<double, std::size_t>> by_aggregator;
  for (const auto& r : rows) {
    out << r.file << "\n  aggregator " << r.aggregator << "  rounds " << r.rounds << "  accuracy "
        << format_number(r.accuracy) << "\n  final crs";
    for (const auto& [label, c] : r.final_crs) out << " " << label << "=" << format_number(c);
    out << "\n";
    auto& [sum, count] = by_aggregator[r.aggregator];
    sum += r.accuracy;
    ++count;
  }
  if (by_aggregator.size() > 1) {
    const auto base = by_aggregator.count("majority") ? by_aggregator.find("majority") : by_aggregator.begin();
    const double base_acc = base->second.first / static_cast<double>(base->second.second);
    out << "accuracy by aggregator (delta vs " << base->first << ")\n";
    for (const auto& [name, acc] : by_aggregator) {
      const double mean = acc.first / static_cast<double>(acc.second);
      out << "  " << name << " " << format_number(mean) << " (" << (mean >= base_acc ? "+" : "")
          << format_number(mean - base_acc) << ")\n";
    }
  }
  return kExitOk;
}

}  // namespace

int execute(const CommandInvocation& inv, std::ostream& out, std::ostream& err) {
  try {
    if (inv.command == "run") return run_command(inv, out);
    if (inv.command == "sweep") return sweep_command(inv, out);
    if (inv.command == "replay") return replay_command(inv, out);
    if (inv.command == "report") return report_command(inv, out);
    err << "unknown command '" << inv.command << "'\n";
    return kExitConfig;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    if (inv.command == "report" && e.code() == Errc::record_error) return kExitDataset;
    return exit_code_for(e.code());
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
    return inv.command == "run" || inv.command == "sweep" ? kExitConfig : kExitDivergence;
  }
}

}  // namespace crsim
