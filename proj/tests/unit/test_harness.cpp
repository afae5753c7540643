#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "vmint/harness.hpp"

using namespace vmint;

namespace {
std::string csv(const ExperimentResult& r) {
  std::ostringstream out;
  write_csv(r, out);
  return out.str();
}

const char* kSmall = R"(
[experiment ruin]
type = hit_before
kernel = nearest_neighbor
start = 3
hit = 10
avoid = 0
expect = 0.3
reps = 5000

[experiment sweep]
type = tightness
kernel = uniform_range(2)
t = 50, 200
M = 1, 3
reps = 300

[experiment decay]
type = density
kernel = nearest_neighbor
K = 0, 4
window = 200
reps = 100
)";
}  // namespace

TEST_CASE("csv quoting") {
  CHECK(csv_field("plain") == "plain");
  CHECK(csv_field("a,b") == "\"a,b\"");
  CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(csv_field("two\nlines") == "\"two\nlines\"");
}

TEST_CASE("tables are identical across worker counts") {
  const auto config = parse_config_text(kSmall);
  RunContext one = context_of(config), three = context_of(config);
  three.workers = 3;
  for (const auto& spec : config.experiments) {
    const auto a = run_experiment(spec, one);
    const auto b = run_experiment(spec, three);
    INFO(a.name << ": " << a.detail);
    CHECK(a.passed());
    CHECK(csv(a) == csv(b));
  }
}

TEST_CASE("csv layout") {
  const auto config = parse_config_text(kSmall);
  const auto r = run_experiment(config.experiments[1], context_of(config));
  std::istringstream in(csv(r));
  std::string header;
  std::getline(in, header);
  CHECK(header.rfind("experiment,kernel,", 0) == 0);
  CHECK(header.find("point,ci_low,ci_high,reps,censored") != std::string::npos);
  CHECK(header.find("wall") == std::string::npos);
  int lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  CHECK(lines == 2 * 2 + 2);
}

TEST_CASE("verdict failures are reported") {
  auto config = parse_config_text(R"(
[experiment wrong]
type = hit_before
kernel = nearest_neighbor
start = 3
hit = 10
avoid = 0
expect = 0.5
reps = 5000
)");
  const auto r = run_experiment(config.experiments[0], context_of(config));
  CHECK(r.verdict == "fail");
  CHECK(r.detail.find("0.5") != std::string::npos);
}

TEST_CASE("kernel cutoff ceiling is enforced") {
  auto config = parse_config_text(R"(
[run]
kernel_cutoff_ceiling = 100

[experiment big]
type = hit_before
kernel = power_law(1.5, 1000)
start = 3
hit = 10
avoid = 0
reps = 100
)");
  CHECK_THROWS_AS(run_experiment(config.experiments[0], context_of(config)), ConfigError);
}

TEST_CASE("run_all writes tables, verdicts and plot data") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "vmint_harness_test";
  fs::remove_all(dir);
  auto config = parse_config_text(kSmall);
  config.output_dir = dir.string();
  std::ostringstream log;
  const auto summary = run_all(config, log);
  CHECK(summary.exit_code == 0);
  CHECK(fs::exists(dir / "ruin.csv"));
  CHECK(fs::exists(dir / "sweep.csv"));
  std::ifstream jsonl(dir / "verdicts.jsonl");
  std::string line;
  int count = 0;
  std::ostringstream all;
  while (std::getline(jsonl, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.contains("config_hash"));
    CHECK(j["config_hash"] == config.hash());
    CHECK(j["verdict"] == "pass");
    CHECK(j.contains("timestamp"));
    CHECK(j.contains("version"));
    all << line << "\n";
    ++count;
  }
  CHECK(count == 1 + 6 + 2);
  std::istringstream records(all.str());
  std::ostringstream survival;
  emit_plot_data(records, "survival", survival);
  CHECK(survival.str().rfind("t,M,p_hat,ci_low,ci_high,series\n", 0) == 0);
  const std::string table = survival.str();
  CHECK(std::count(table.begin(), table.end(), '\n') == 5);
  std::istringstream again(all.str());
  std::ostringstream dens;
  emit_plot_data(again, "density", dens);
  CHECK(dens.str().find("\n0,1,") != std::string::npos);
  std::istringstream third(all.str());
  std::ostringstream sink;
  CHECK_THROWS_AS(emit_plot_data(third, "histogram", sink), PlotKindError);
  fs::remove_all(dir);
}

TEST_CASE("empty experiment list writes nothing") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "vmint_empty_test";
  fs::remove_all(dir);
  auto config = parse_config_text("");
  config.output_dir = dir.string();
  std::ostringstream log;
  const auto summary = run_all(config, log);
  CHECK(summary.exit_code == 0);
  CHECK(summary.files.empty());
  CHECK_FALSE(fs::exists(dir));
}
