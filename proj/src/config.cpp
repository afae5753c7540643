#include "vmint/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "vmint/rng.hpp"

namespace vmint {

namespace {

enum class ValueType { text, kernel, integer, number, integers, numbers, choice };

struct KeyRule {
  const char* key;
  ValueType type;
  bool required;
};

const std::map<std::string, std::vector<KeyRule>>& schemas() {
  static const std::map<std::string, std::vector<KeyRule>> s = {
      {"vk", {{"k", ValueType::integers, true}, {"t", ValueType::numbers, true}}},
      {"akr", {{"k", ValueType::integers, true}, {"r", ValueType::integers, true}, {"band", ValueType::number, false}}},
      {"overshoot",
       {{"k", ValueType::integers, true}, {"r", ValueType::integer, true}, {"assert_trend", ValueType::choice, false}}},
      {"uk_far",
       {{"k", ValueType::integer, true}, {"m", ValueType::numbers, true}, {"t", ValueType::number, true},
        {"band", ValueType::number, false}}},
      {"excursion",
       {{"k", ValueType::integers, true}, {"t", ValueType::numbers, true}, {"floor", ValueType::number, false}}},
      {"tightness",
       {{"t", ValueType::numbers, true}, {"M", ValueType::integers, true}, {"expect", ValueType::choice, false},
        {"growth", ValueType::number, false}, {"variation", ValueType::number, false}}},
      {"schedule",
       {{"C", ValueType::number, true}, {"k", ValueType::integers, true}, {"walk_reps", ValueType::integer, false},
        {"floor", ValueType::number, false}, {"moment_tolerance", ValueType::number, false}}},
      {"greenfn",
       {{"k", ValueType::integer, true}, {"r", ValueType::integer, true}, {"x", ValueType::integer, true},
        {"l", ValueType::integer, true}}},
      {"density", {{"K", ValueType::numbers, true}, {"window", ValueType::integer, true}}},
      {"duality",
       {{"t", ValueType::number, true}, {"x", ValueType::integers, true}, {"tolerance", ValueType::number, false}}},
      {"crossing", {{"t", ValueType::number, true}, {"K", ValueType::numbers, true}, {"window", ValueType::integer, true}}},
      {"hit_before",
       {{"start", ValueType::integer, true}, {"hit", ValueType::integer, true}, {"avoid", ValueType::integer, true},
        {"expect", ValueType::number, false}}},
      {"return_tail",
       {{"n", ValueType::integers, true}, {"reference", ValueType::number, false},
        {"tolerance", ValueType::number, false}}},
  };
  return s;
}

const std::vector<KeyRule> kCommon = {
    {"type", ValueType::text, true},
    {"kernel", ValueType::kernel, true},
    {"reps", ValueType::integer, true},
    {"seed", ValueType::integer, false},
};

const std::map<std::string, std::vector<std::string>> kChoices = {
    {"expect", {"tight", "not_tight"}},
    {"assert_trend", {"true", "false"}},
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string strip_spaces(std::string_view s) {
  std::string out;
  for (char c : s)
    if (c != ' ' && c != '\t' && c != '\r') out += c;
  return out;
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

bool parse_int(std::string_view s, std::int64_t& out) {
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && p == end;
}

bool parse_double(std::string_view s, double& out) {
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && p == end && std::isfinite(out);
}

[[noreturn]] void fail(std::string_view origin, int line, const std::string& what) {
  throw ConfigError(std::string(origin) + ":" + std::to_string(line) + ": " + what);
}

void check_value(std::string_view origin, int line, const std::string& key, ValueType type, const std::string& value) {
  auto bad = [&](const char* expected) { fail(origin, line, "key '" + key + "' expects " + expected + ", got '" + value + "'"); };
  switch (type) {
    case ValueType::text:
      if (value.empty()) bad("a value");
      break;
    case ValueType::kernel:
      try {
        parse_kernel_spec(value);
      } catch (const KernelError& e) {
        fail(origin, line, "key '" + key + "': " + e.what());
      }
      break;
    case ValueType::integer: {
      std::int64_t v;
      if (!parse_int(value, v)) bad("an integer");
      break;
    }
    case ValueType::number: {
      double v;
      if (!parse_double(value, v)) bad("a number");
      break;
    }
    case ValueType::integers:
      for (const auto& item : split_list(value)) {
        std::int64_t v;
        if (!parse_int(item, v)) bad("a comma-separated list of integers");
      }
      break;
    case ValueType::numbers:
      for (const auto& item : split_list(value)) {
        double v;
        if (!parse_double(item, v)) bad("a comma-separated list of numbers");
      }
      break;
    case ValueType::choice: {
      const auto& options = kChoices.at(key);
      if (std::find(options.begin(), options.end(), value) == options.end()) {
        std::string list;
        for (const auto& o : options) list += (list.empty() ? "" : ", ") + o;
        fail(origin, line, "key '" + key + "' expects one of {" + list + "}, got '" + value + "'");
      }
      break;
    }
  }
}

struct Section {
  std::string header;
  std::string name;
  int line = 0;
  std::vector<std::pair<std::string, std::string>> entries;
  std::vector<int> lines;
};

void finish_experiment(const Section& sec, std::string_view origin, RunConfig& cfg) {
  ExperimentSpec spec;
  spec.name = sec.name;
  spec.line = sec.line;
  spec.entries = sec.entries;
  auto type_it = std::find_if(sec.entries.begin(), sec.entries.end(), [](const auto& e) { return e.first == "type"; });
  if (type_it == sec.entries.end()) fail(origin, sec.line, "experiment '" + sec.name + "' is missing required key 'type'");
  spec.type = type_it->second;
  const auto schema = schemas().find(spec.type);
  if (schema == schemas().end()) {
    std::string list;
    for (const auto& t : experiment_types()) list += (list.empty() ? "" : ", ") + t;
    fail(origin, sec.lines[static_cast<std::size_t>(type_it - sec.entries.begin())],
         "unknown experiment type '" + spec.type + "' (known: " + list + ")");
  }
  std::vector<KeyRule> rules = kCommon;
  rules.insert(rules.end(), schema->second.begin(), schema->second.end());
  for (std::size_t i = 0; i < sec.entries.size(); ++i) {
    const auto& [key, value] = sec.entries[i];
    auto rule = std::find_if(rules.begin(), rules.end(), [&](const KeyRule& r) { return key == r.key; });
    if (rule == rules.end())
      fail(origin, sec.lines[i], "unknown key '" + key + "' for experiment type '" + spec.type + "'");
    check_value(origin, sec.lines[i], key, rule->type, value);
  }
  for (const auto& rule : rules) {
    if (rule.required && !spec.has(rule.key))
      fail(origin, sec.line, "experiment '" + sec.name + "' is missing required key '" + rule.key + "'");
  }
  if (spec.integer("reps") < 100) fail(origin, sec.line, "experiment '" + sec.name + "': reps must be >= 100");
  for (const auto& other : cfg.experiments)
    if (other.name == spec.name)
      fail(origin, sec.line, "duplicate experiment name '" + spec.name + "' (first defined on line " +
                                 std::to_string(other.line) + ")");
  cfg.experiments.push_back(std::move(spec));
}

void finish_run(const Section& sec, std::string_view origin, RunConfig& cfg) {
  for (std::size_t i = 0; i < sec.entries.size(); ++i) {
    const auto& [key, value] = sec.entries[i];
    const int line = sec.lines[i];
    std::int64_t v = 0;
    if (key == "output_dir") {
      check_value(origin, line, key, ValueType::text, value);
      cfg.output_dir = value;
      continue;
    }
    if (key != "seed" && key != "workers" && key != "hybrid_cap" && key != "exact_solve_ceiling" &&
        key != "kernel_cutoff_ceiling")
      fail(origin, line, "unknown key '" + key + "' in [run]");
    if (key == "seed") {
      std::uint64_t u = 0;
      auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), u);
      if (ec != std::errc() || p != value.data() + value.size())
        fail(origin, line, "key 'seed' expects an unsigned 64-bit integer, got '" + value + "'");
      cfg.master_seed = u;
      continue;
    }
    check_value(origin, line, key, ValueType::integer, value);
    parse_int(value, v);
    if (key == "workers") {
      if (v < 1) fail(origin, line, "workers must be >= 1");
      cfg.workers = static_cast<unsigned>(v);
    } else if (v < 1) {
      fail(origin, line, "key '" + key + "' must be >= 1");
    } else if (key == "hybrid_cap") {
      cfg.hybrid_cap = v;
    } else if (key == "exact_solve_ceiling") {
      cfg.exact_solve_ceiling = v;
    } else {
      cfg.kernel_cutoff_ceiling = v;
    }
  }
  cfg.run_entries = sec.entries;
}

}  // namespace

std::vector<std::string> experiment_types() {
  std::vector<std::string> out;
  for (const auto& [name, rules] : schemas()) out.push_back(name);
  return out;
}

bool ExperimentSpec::has(std::string_view key) const {
  return std::any_of(entries.begin(), entries.end(), [&](const auto& e) { return e.first == key; });
}

const std::string& ExperimentSpec::text(std::string_view key) const {
  for (const auto& e : entries)
    if (e.first == key) return e.second;
  throw ConfigError("experiment '" + name + "': missing key '" + std::string(key) + "'");
}

double ExperimentSpec::number(std::string_view key) const {
  double v = 0;
  if (!parse_double(text(key), v)) throw ConfigError("experiment '" + name + "': key '" + std::string(key) + "' is not a number");
  return v;
}

double ExperimentSpec::number_or(std::string_view key, double fallback) const { return has(key) ? number(key) : fallback; }

std::int64_t ExperimentSpec::integer(std::string_view key) const {
  std::int64_t v = 0;
  if (!parse_int(text(key), v)) throw ConfigError("experiment '" + name + "': key '" + std::string(key) + "' is not an integer");
  return v;
}

std::int64_t ExperimentSpec::integer_or(std::string_view key, std::int64_t fallback) const {
  return has(key) ? integer(key) : fallback;
}

std::vector<double> ExperimentSpec::numbers(std::string_view key) const {
  std::vector<double> out;
  for (const auto& item : split_list(text(key))) {
    double v = 0;
    if (!parse_double(item, v)) throw ConfigError("experiment '" + name + "': bad number '" + item + "'");
    out.push_back(v);
  }
  return out;
}

std::vector<std::int64_t> ExperimentSpec::integers(std::string_view key) const {
  std::vector<std::int64_t> out;
  for (const auto& item : split_list(text(key))) {
    std::int64_t v = 0;
    if (!parse_int(item, v)) throw ConfigError("experiment '" + name + "': bad integer '" + item + "'");
    out.push_back(v);
  }
  return out;
}

KernelSpec ExperimentSpec::kernel() const { return parse_kernel_spec(text("kernel")); }

std::string RunConfig::canonical() const {
  auto block = [](const std::string& header, std::vector<std::pair<std::string, std::string>> entries) {
    for (auto& e : entries) e.second = strip_spaces(e.second);
    std::sort(entries.begin(), entries.end());
    std::string out = "[" + header + "]\n";
    for (const auto& [k, v] : entries) out += k + "=" + v + "\n";
    return out;
  };
  std::vector<std::string> blocks;
  for (const auto& e : experiments) blocks.push_back(block("experiment " + e.name, e.entries));
  std::sort(blocks.begin(), blocks.end());
  std::string out = block("run", run_entries);
  for (const auto& b : blocks) out += b;
  return out;
}

std::string RunConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical())));
  return buf;
}

RunConfig parse_config_text(std::string_view text, std::string_view origin) {
  RunConfig cfg;
  std::optional<Section> current;
  bool seen_run = false;
  auto close = [&] {
    if (!current) return;
    if (current->header == "run")
      finish_run(*current, origin, cfg);
    else
      finish_experiment(*current, origin, cfg);
    current.reset();
  };
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash_at = raw.find('#');
    const std::string line = trim(hash_at == std::string::npos ? raw : raw.substr(0, hash_at));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(origin, line_no, "unterminated section header");
      close();
      const std::string inner = trim(line.substr(1, line.size() - 2));
      Section sec;
      sec.line = line_no;
      if (inner == "run") {
        if (seen_run) fail(origin, line_no, "duplicate [run] section");
        seen_run = true;
        sec.header = "run";
      } else if (inner.rfind("experiment", 0) == 0 && inner.size() > 10 && (inner[10] == ' ' || inner[10] == '\t')) {
        sec.header = "experiment";
        sec.name = trim(inner.substr(10));
        if (sec.name.empty() || sec.name.find_first_of(" \t/\\") != std::string::npos)
          fail(origin, line_no, "experiment names must be nonempty without spaces or slashes");
      } else {
        fail(origin, line_no, "unknown section [" + inner + "] (expected [run] or [experiment NAME])");
      }
      current = std::move(sec);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(origin, line_no, "expected key = value");
    if (!current) fail(origin, line_no, "key outside of any section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail(origin, line_no, "empty key");
    for (const auto& e : current->entries)
      if (e.first == key) fail(origin, line_no, "duplicate key '" + key + "'");
    current->entries.emplace_back(key, value);
    current->lines.push_back(line_no);
  }
  close();
  return cfg;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

}  // namespace vmint
