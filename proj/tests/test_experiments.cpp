#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "doctest.h"
#include "json.hpp"

#include "fimlab/errors.hpp"
#include "fimlab/experiments.hpp"
#include "fimlab/table.hpp"

using namespace fimlab;

namespace {

ResultTable tiny_table() {
  ResultTable t;
  t.name = "tiny";
  t.title = "tiny table";
  t.columns = {"a", "b"};
  t.rows = {{Cell::number(1.0), Cell::number(0.5)},
            {Cell::number(-2.25), Cell::label("x,y")}};
  return t;
}

int count_lines(const std::string& s) {
  int n = 0;
  for (char c : s) n += (c == '\n');
  return n;
}

bool all_cells_finite(const ResultTable& t) {
  for (const auto& row : t.rows) {
    for (const auto& c : row) {
      if (c.numeric && !std::isfinite(c.num)) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("config parses fields and applies defaults") {
  const auto cfg = ExperimentConfig::from_json_text(
      R"({"experiment": "spsa_table_A2", "seed": 9, "scale": "paper",
          "threads": 2, "overrides": {"reps": 50}})");
  CHECK(cfg.experiment == "spsa_table_A2");
  CHECK(cfg.seed == 9);
  CHECK(cfg.scale == Scale::paper);
  CHECK(cfg.threads == 2);
  CHECK(cfg.overrides.at("reps") == 50.0);

  const auto bare = ExperimentConfig::from_json_text(R"({"experiment": "diagnostics_ch2"})");
  CHECK(bare.seed == 1);
  CHECK(bare.scale == Scale::desk);
  CHECK(bare.threads == 1);
  CHECK(bare.overrides.empty());
}

TEST_CASE("config rejects malformed documents") {
  CHECK_THROWS_AS(ExperimentConfig::from_json_text("{nope"), InvalidOverride);
  CHECK_THROWS_AS(ExperimentConfig::from_json_text("[1, 2]"), InvalidOverride);
  CHECK_THROWS_AS(ExperimentConfig::from_json_text(R"({"seed": 1})"), InvalidOverride);
  CHECK_THROWS_AS(
      ExperimentConfig::from_json_text(R"({"experiment": "spsa_table_A2", "extra": 1})"),
      InvalidOverride);
  CHECK_THROWS_AS(
      ExperimentConfig::from_json_text(R"({"experiment": "spsa_table_A2", "seed": "9"})"),
      InvalidOverride);
  CHECK_THROWS_AS(
      ExperimentConfig::from_json_text(R"({"experiment": "spsa_table_A2", "seed": -1})"),
      InvalidOverride);
  CHECK_THROWS_AS(
      ExperimentConfig::from_json_text(R"({"experiment": "spsa_table_A2", "threads": 0})"),
      InvalidOverride);
  CHECK_THROWS_AS(
      ExperimentConfig::from_json_text(R"({"experiment": "spsa_table_A2", "scale": "big"})"),
      InvalidOverride);
  CHECK_THROWS_AS(ExperimentConfig::from_json_text(
                      R"({"experiment": "spsa_table_A2", "overrides": {"reps": "10"}})"),
                  InvalidOverride);
  CHECK_THROWS_AS(ExperimentConfig::from_json_text(R"({"experiment": "who"})"),
                  UnknownExperiment);
  CHECK_THROWS_AS(ExperimentConfig::from_json_file("/nonexistent/fimlab_cfg.json"),
                  IoFailure);
}

TEST_CASE("listing covers all ten experiments with table references") {
  const auto& infos = list_experiments();
  REQUIRE(infos.size() == 10);
  const std::set<std::string> expected = {
      "mixture_table_3_1", "spn_table_3_2",    "statespace_table_3_3",
      "statespace_table_3_4", "spsa_table_A2", "spsa_table_A3",
      "mcfim_table_B1",    "mcfim_table_B2",   "mcfim_table_B3",
      "diagnostics_ch2"};
  std::set<std::string> seen;
  for (const auto& info : infos) {
    seen.insert(info.name);
    CHECK(!info.description.empty());
    const bool has_ref = info.description.find("Table") != std::string::npos ||
                         info.description.find("Chapter") != std::string::npos;
    CHECK(has_ref);
    bool has_reps = false;
    for (const auto& o : info.overrides) has_reps |= (o.key == "reps");
    CHECK(has_reps);  // --reps must be meaningful everywhere
  }
  CHECK(seen == expected);
}

TEST_CASE("override validation enforces the published schema") {
  ExperimentConfig cfg;
  cfg.experiment = "spsa_table_A2";
  cfg.overrides["bogus"] = 1.0;
  CHECK_THROWS_AS(run_experiment(cfg), InvalidOverride);

  cfg.overrides.clear();
  cfg.overrides["reps"] = -5.0;
  CHECK_THROWS_AS(run_experiment(cfg), InvalidOverride);

  cfg.overrides["reps"] = 10.5;
  CHECK_THROWS_AS(run_experiment(cfg), InvalidOverride);

  cfg.overrides["reps"] = std::nan("");
  CHECK_THROWS_AS(run_experiment(cfg), InvalidOverride);

  cfg.overrides.clear();
  cfg.threads = 0;
  CHECK_THROWS_AS(run_experiment(cfg), InvalidOverride);

  cfg.threads = 1;
  cfg.experiment = "who";
  CHECK_THROWS_AS(run_experiment(cfg), UnknownExperiment);
  try {
    run_experiment(cfg);
  } catch (const UnknownExperiment& e) {
    CHECK(std::string(e.what()).find("fimlab list") != std::string::npos);
  }
}

TEST_CASE("csv rendering is header plus one line per row") {
  ResultTable t = tiny_table();
  std::string csv = render(t, TableFormat::csv);
  CHECK(count_lines(csv) == 3);  // no metadata: header + 2 rows
  CHECK(csv.substr(0, 4) == "a,b\n");
  CHECK(csv.find("\"x,y\"") != std::string::npos);  // comma forces quoting
  CHECK(csv.find('\r') == std::string::npos);

  t.rows.clear();
  CHECK(render(t, TableFormat::csv) == "a,b\n");

  t.add_metadata("seed", "7");
  csv = render(t, TableFormat::csv);
  CHECK(csv == "# seed: 7\na,b\n");
}

TEST_CASE("json rendering round-trips values and metadata") {
  ResultTable t = tiny_table();
  t.rows.push_back({Cell::number(1.0 / 3.0), Cell::number(std::nan(""))});
  t.add_metadata("seed", "7");
  const auto j = nlohmann::json::parse(render(t, TableFormat::json));
  CHECK(j["name"] == "tiny");
  CHECK(j["columns"].size() == 2);
  CHECK(j["rows"].size() == 3);
  CHECK(j["rows"][0][0].get<double>() == 1.0);
  CHECK(j["rows"][1][1].get<std::string>() == "x,y");
  CHECK(j["rows"][2][0].get<double>() == 0.333333);  // six significant digits
  CHECK(j["rows"][2][1].is_null());
  CHECK(j["metadata"]["seed"] == "7");
}

TEST_CASE("markdown rendering is a pipe table with metadata bullets") {
  ResultTable t = tiny_table();
  t.add_metadata("seed", "7");
  const std::string md = render(t, TableFormat::markdown);
  CHECK(md.find("## tiny table\n") == 0);
  CHECK(md.find("| a | b |") != std::string::npos);
  CHECK(md.find("| --- | --- |") != std::string::npos);
  CHECK(md.find("- seed: 7") != std::string::npos);
}

TEST_CASE("emit writes render output and fails cleanly on bad paths") {
  const ResultTable t = tiny_table();
  const auto path =
      (std::filesystem::temp_directory_path() / "fimlab_emit_test.csv").string();
  emit(t, TableFormat::csv, path);
  std::ifstream in(path, std::ios::binary);
  std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(body == render(t, TableFormat::csv));
  std::filesystem::remove(path);

  CHECK_THROWS_AS(emit(t, TableFormat::csv, "/nonexistent_dir/f.csv"), IoFailure);
}

TEST_CASE("spsa smoke run yields four finite rows") {
  ExperimentConfig cfg;
  cfg.experiment = "spsa_table_A2";
  cfg.seed = 7;
  cfg.overrides["reps"] = 10;
  const auto tables = run_experiment(cfg);
  REQUIRE(tables.size() == 1);
  const ResultTable& t = tables.front();
  REQUIRE(t.rows.size() == 4);
  CHECK(all_cells_finite(t));
  const double iters[] = {1, 5, 10, 1000};
  for (int r = 0; r < 4; ++r) {
    CHECK(t.rows[r][0].num == iters[r]);
    CHECK(t.rows[r][1].num == 10);
  }
  bool has_seed = false;
  for (const auto& [k, v] : t.metadata) has_seed |= (k == "seed" && v == "7");
  CHECK(has_seed);
}

TEST_CASE("mcfim table doubles the dataset count on its third row") {
  ExperimentConfig cfg;
  cfg.experiment = "mcfim_table_B1";
  cfg.seed = 7;
  cfg.overrides["N"] = 300;
  cfg.overrides["runs"] = 4;
  const auto tables = run_experiment(cfg);
  REQUIRE(tables.size() == 1);
  const ResultTable& t = tables.front();
  REQUIRE(t.rows.size() == 3);
  CHECK(all_cells_finite(t));
  CHECK(t.rows[0][0].text == "gradient");
  CHECK(t.rows[1][0].text == "likelihood_only");
  CHECK(t.rows[2][0].text == "likelihood_only");
  CHECK(t.rows[0][1].num == 300);
  CHECK(t.rows[1][1].num == 300);
  CHECK(t.rows[2][1].num == 600);
}

TEST_CASE("mixture study keeps two cases unless the case is overridden") {
  ExperimentConfig cfg;
  cfg.experiment = "mixture_table_3_1";
  cfg.seed = 7;
  cfg.overrides["reps"] = 60;
  cfg.overrides["reps_target"] = 120;
  cfg.overrides["fim_datasets"] = 10;
  auto tables = run_experiment(cfg);
  REQUIRE(tables.size() == 2);
  CHECK(tables[0].name == "mixture_table_3_1_case_a");
  CHECK(tables[1].name == "mixture_table_3_1_case_b");
  CHECK(tables[0].rows.size() == 6);  // upper triangle of a 3x3 matrix

  cfg.overrides["n"] = 40;
  tables = run_experiment(cfg);
  REQUIRE(tables.size() == 1);
  CHECK(tables[0].name == "mixture_table_3_1_custom");
}

TEST_CASE("experiment output is byte-identical across worker counts") {
  ExperimentConfig cfg;
  cfg.experiment = "spsa_table_A2";
  cfg.seed = 21;
  cfg.overrides["reps"] = 40;
  cfg.threads = 1;
  const std::string one = render_all(run_experiment(cfg), TableFormat::csv);
  cfg.threads = 3;
  const std::string three = render_all(run_experiment(cfg), TableFormat::csv);
  CHECK(one == three);

  ExperimentConfig mc;
  mc.experiment = "mcfim_table_B3";
  mc.seed = 21;
  mc.overrides["N"] = 150;
  mc.overrides["runs"] = 3;
  mc.overrides["ref_datasets"] = 400;
  mc.threads = 1;
  const std::string a = render_all(run_experiment(mc), TableFormat::json);
  mc.threads = 2;
  const std::string b = render_all(run_experiment(mc), TableFormat::json);
  CHECK(a == b);
}

TEST_CASE("diagnostics returns all four tables at reduced sizes") {
  ExperimentConfig cfg;
  cfg.experiment = "diagnostics_ch2";
  cfg.seed = 3;
  cfg.overrides["n"] = 40;
  cfg.overrides["reps"] = 200;
  cfg.overrides["cum_reps"] = 100;
  cfg.overrides["a9_reps"] = 100;
  cfg.overrides["gap_reps"] = 100;
  const auto tables = run_experiment(cfg);
  REQUIRE(tables.size() == 4);
  CHECK(tables[0].name == "diag_score_orthogonality");
  CHECK(tables[1].name == "diag_exactness");
  CHECK(tables[2].name == "diag_theorem1_gap");
  CHECK(tables[3].name == "diag_condition_a9");
  CHECK(tables[0].rows.size() == 18);  // p * p(p+1)/2 triples for p = 3
  const std::string all = render_all(tables, TableFormat::csv);
  CHECK(all.find("# table: diag_exactness") != std::string::npos);
}
