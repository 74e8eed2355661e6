#include <CLI11.hpp>
#include <iostream>

#include "crsim/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Credibility-scored multi-agent coordination simulator"};
  app.require_subcommand(1);

  crsim::CommandInvocation inv;
  std::uint64_t seed = 0;
  std::string values;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", inv.config_path, "experiment config (JSON)")->check(CLI::ExistingFile);
    sub->add_option("--dataset", inv.dataset_path, "query dataset (JSONL)")->required();
    sub->add_option("--out", inv.output_dir, "output directory")->required();
    sub->add_option("--seed", seed, "master seed (overrides the config)");
    sub->add_option("--jobs", inv.jobs, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--set", inv.overrides, "key=value config override (repeatable)");
  };

  auto* run = app.add_subcommand("run", "run one experiment");
  common(run);
  auto* sw = app.add_subcommand("sweep", "run one experiment per parameter value");
  common(sw);
  sw->add_option("--param", inv.sweep_parameter, "adversary-count | edge-count | aggregator-kind")->required();
  sw->add_option("--values", values, "comma-separated values")->required();

  auto* rp = app.add_subcommand("replay", "verify a record file");
  rp->add_option("records", inv.record_files, "record files")->required()->check(CLI::ExistingFile);

  auto* rep = app.add_subcommand("report", "summarize existing record files");
  rep->add_option("records", inv.record_files, "record files")->check(CLI::ExistingFile);
  rep->add_option("--out", inv.output_dir, "directory to scan for records.jsonl");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? crsim::kExitOk : crsim::kExitConfig;
  }

  inv.command = app.get_subcommands().front()->get_name();
  for (auto* sub : {run, sw})
    if (sub->parsed() && sub->count("--seed")) inv.seed = seed;
  for (std::size_t start = 0; !values.empty() && start <= values.size();) {
    auto end = values.find(',', start);
    if (end == std::string::npos) end = values.size();
    inv.sweep_values.push_back(values.substr(start, end - start));
    start = end + 1;
  }
  return crsim::execute(inv, std::cout, std::cerr);
}
