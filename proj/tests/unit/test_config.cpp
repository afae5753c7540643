#include <doctest.h>

#include <string>

#include "vmint/config.hpp"

using namespace vmint;

namespace {
const char* kGood = R"(# demo
[run]
seed = 42
workers = 2
output_dir = out

[experiment ruin]
type = hit_before
kernel = nearest_neighbor
start = 3
hit = 10
avoid = 0
reps = 1000

[experiment sweep]
type = tightness
kernel = power_law(1.5, 1000)
t = 10, 100
M = 1, 5
reps = 200
)";

std::string error_of(const std::string& text) {
  try {
    parse_config_text(text, "cfg");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}
}  // namespace

TEST_CASE("parses run settings and experiments") {
  const auto c = parse_config_text(kGood);
  CHECK(c.master_seed == 42);
  CHECK(c.workers == 2);
  CHECK(c.output_dir == "out");
  REQUIRE(c.experiments.size() == 2);
  CHECK(c.experiments[0].name == "ruin");
  CHECK(c.experiments[0].integer("start") == 3);
  CHECK(c.experiments[1].numbers("t") == std::vector<double>{10, 100});
  CHECK(c.experiments[1].integers("M") == std::vector<std::int64_t>{1, 5});
  CHECK(c.experiments[1].kernel().alpha == 1.5);
  CHECK(c.experiments[1].number_or("growth", 2.0) == 2.0);
}

TEST_CASE("diagnostics carry the origin and line") {
  const std::string base = "[experiment a]\ntype = hit_before\nkernel = nearest_neighbor\nstart = 1\nhit = 2\navoid = 0\nreps = 100\n";
  CHECK(error_of(base + "colour = red\n").find("cfg:8") != std::string::npos);
  CHECK(error_of(base + "colour = red\n").find("unknown key 'colour'") != std::string::npos);
  const auto unknown_type = error_of("[experiment a]\ntype = teleport\nkernel = nearest_neighbor\nreps = 100\n");
  CHECK(unknown_type.find("unknown experiment type 'teleport'") != std::string::npos);
  CHECK(unknown_type.find("tightness") != std::string::npos);
  CHECK(error_of(base + base).find("duplicate experiment name 'a'") != std::string::npos);
  CHECK(error_of(base + "reps = 200\n").find("duplicate") != std::string::npos);
  CHECK(error_of("[run]\nworkers = 0\n").find("workers") != std::string::npos);
  CHECK(error_of("[experiment a]\ntype = hit_before\nkernel = nearest_neighbor\nstart = x\nhit = 2\navoid = 0\nreps = 100\n")
            .find("start") != std::string::npos);
  CHECK(error_of("[experiment a]\ntype = hit_before\nkernel = nearest_neighbor\nstart = 1\nhit = 2\navoid = 0\nreps = 10\n")
            .find("reps") != std::string::npos);
  CHECK(error_of("[experiment a]\ntype = hit_before\nkernel = nearest_neighbor\nhit = 2\navoid = 0\nreps = 100\n")
            .find("missing required key 'start'") != std::string::npos);
}

TEST_CASE("hash ignores ordering and whitespace") {
  const auto a = parse_config_text(kGood);
  const char* reordered = R"(
[experiment sweep]
reps=200
M = 1,5
t = 10,   100
kernel = power_law(1.5, 1000)
type = tightness

[run]
output_dir = out
workers = 2
seed = 42

[experiment ruin]
reps = 1000
avoid = 0
hit = 10
start = 3
kernel = nearest_neighbor
type = hit_before
)";
  const auto b = parse_config_text(reordered);
  CHECK(a.hash() == b.hash());
  CHECK(a.hash().size() == 16);
  auto changed = std::string(kGood);
  changed.replace(changed.find("seed = 42"), 9, "seed = 43");
  CHECK(parse_config_text(changed).hash() != a.hash());
}

TEST_CASE("empty config is valid") {
  const auto c = parse_config_text("# nothing\n");
  CHECK(c.experiments.empty());
  CHECK(experiment_types().size() == 13);
}
