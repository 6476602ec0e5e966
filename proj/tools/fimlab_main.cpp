#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fimlab/errors.hpp"
#include "fimlab/experiments.hpp"
#include "fimlab/table.hpp"

namespace {

// results.csv + table "case_a" -> results_case_a.csv
std::string per_table_path(const std::string& out, const std::string& name) {
  const auto slash = out.find_last_of('/');
  const auto dot = out.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
    return out + "_" + name;
  return out.substr(0, dot) + "_" + name + out.substr(dot);
}

void print_listing() {
  for (const auto& info : fimlab::list_experiments()) {
    std::printf("%s\n  %s\n  overrides:", info.name.c_str(), info.description.c_str());
    for (const auto& o : info.overrides) std::printf(" %s", o.key.c_str());
    std::printf("\n");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fimlab: expected vs observed Fisher information experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  int threads = 0;
  std::uint64_t reps = 0;
  std::string format = "csv";
  std::string out_path;
  std::string scale;

  auto* run = app.add_subcommand("run", "Run one experiment from a JSON config");
  run->add_option("config", config_path, "experiment config file (JSON)")->required();
  auto* seed_opt = run->add_option("--seed", seed, "master seed (overrides config)");
  auto* threads_opt = run->add_option("--threads", threads, "worker threads")
                          ->check(CLI::PositiveNumber);
  auto* reps_opt =
      run->add_option("--reps", reps, "replication count (the experiment's reps knob)");
  run->add_option("--format", format, "output format")
      ->check(CLI::IsMember({"csv", "md", "json"}));
  run->add_option("--out", out_path,
                  "output file; multi-table experiments get a _<table> suffix");
  auto* scale_opt =
      run->add_option("--scale", scale, "preset scale")->check(CLI::IsMember({"desk", "paper"}));

  auto* list = app.add_subcommand("list", "List experiments and their override keys");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (list->parsed()) {
    print_listing();
    return 0;
  }

  fimlab::ExperimentConfig cfg;
  try {
    cfg = fimlab::ExperimentConfig::from_json_file(config_path);
    if (*seed_opt) cfg.seed = seed;
    if (*threads_opt) cfg.threads = threads;
    if (*scale_opt) cfg.scale = fimlab::parse_scale(scale);
    if (*reps_opt) cfg.overrides["reps"] = static_cast<double>(reps);
  } catch (const fimlab::Error& e) {
    std::fprintf(stderr, "fimlab: %s\n", e.what());
    return 2;
  }

  const fimlab::TableFormat fmt = fimlab::parse_format(format);
  std::vector<fimlab::ResultTable> tables;
  try {
    tables = fimlab::run_experiment(cfg);
  } catch (const fimlab::UnknownExperiment& e) {
    std::fprintf(stderr, "fimlab: %s\n", e.what());
    return 2;
  } catch (const fimlab::InvalidOverride& e) {
    std::fprintf(stderr, "fimlab: %s\n", e.what());
    return 2;
  } catch (const fimlab::Error& e) {
    std::fprintf(stderr, "fimlab: study failed: %s\n", e.what());
    return 3;
  }

  try {
    if (out_path.empty()) {
      std::fputs(fimlab::render_all(tables, fmt).c_str(), stdout);
    } else if (tables.size() == 1) {
      fimlab::emit(tables.front(), fmt, out_path);
      std::fprintf(stderr, "fimlab: wrote %s\n", out_path.c_str());
    } else {
      for (const auto& t : tables) {
        const std::string path = per_table_path(out_path, t.name);
        fimlab::emit(t, fmt, path);
        std::fprintf(stderr, "fimlab: wrote %s\n", path.c_str());
      }
    }
  } catch (const fimlab::IoFailure& e) {
    std::fprintf(stderr, "fimlab: %s\n", e.what());
    return 2;
  }
  return 0;
}
