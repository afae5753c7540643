#include "vmint/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "vmint/dual.hpp"
#include "vmint/experiments.hpp"
#include "vmint/parallel.hpp"
#include "vmint/walks.hpp"

namespace vmint {

namespace {

using Clock = std::chrono::steady_clock;

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : "; ") + s;
  return out;
}

std::string point_key(const std::string& name, std::initializer_list<std::pair<const char*, double>> params) {
  std::string key = name;
  for (const auto& [k, v] : params) key += std::string("/") + k + "=" + format_number(v);
  return key;
}

bool is_nearest_neighbor(const Kernel& kernel) {
  return kernel.sites().size() == 2 && kernel.mass(1) > 0.0 && kernel.mass(-1) > 0.0;
}

double censored_fraction(const EstimateReport& r) {
  return r.reps ? static_cast<double>(r.censored) / static_cast<double>(r.reps) : 0.0;
}

// Each runner fills rows and returns the list of failed checks.
struct Runner {
  const ExperimentSpec& spec;
  const RunContext& ctx;
  const Kernel& kernel;
  std::uint64_t seed;
  std::uint64_t reps;
  ExperimentResult& result;
  bool censored = false;

  Streams streams(const std::string& key) const { return {seed, key, ctx.workers}; }
  VoterOptions voter_options() const {
    VoterOptions o;
    o.hybrid_cap = ctx.hybrid_cap;
    return o;
  }
  ExactSolveOptions solve_options() const {
    ExactSolveOptions o;
    o.max_unknowns = static_cast<std::size_t>(ctx.exact_solve_ceiling);
    return o;
  }

  std::vector<std::string> vk() {
    std::vector<std::string> failures;
    auto ts = spec.numbers("t");
    std::sort(ts.begin(), ts.end());
    const bool skip_free = is_nearest_neighbor(kernel);
    for (std::int64_t k : spec.integers("k")) {
      std::vector<EstimateReport> line;
      for (double t : ts) {
        line.push_back(exp_Vk(kernel, k, t, reps, streams(point_key(spec.name, {{"k", double(k)}, {"t", t}}))));
        if (skip_free && line.back().point != 0.0)
          failures.push_back("nearest_neighbor V^k must be exactly 0 at k=" + std::to_string(k) + ", t=" + format_number(t));
      }
      for (std::size_t i = 1; i < line.size(); ++i) {
        const double s0 = std::sqrt(ts[i - 1]) / double(k), s1 = std::sqrt(ts[i]) / double(k);
        if (line[i].ci_low * s1 > line[i - 1].ci_high * s0)
          failures.push_back("normalized ratio grows from t=" + format_number(ts[i - 1]) + " to t=" +
                             format_number(ts[i]) + " at k=" + std::to_string(k));
      }
      result.rows.insert(result.rows.end(), line.begin(), line.end());
    }
    return failures;
  }

  std::vector<std::string> akr() {
    std::vector<std::string> failures;
    const double band = spec.number_or("band", 3.0);
    auto rs = spec.integers("r");
    std::sort(rs.begin(), rs.end());
    for (std::int64_t k : spec.integers("k")) {
      std::vector<EstimateReport> line;
      for (std::int64_t r : rs)
        line.push_back(exp_Akr(kernel, k, static_cast<int>(r), reps,
                               streams(point_key(spec.name, {{"k", double(k)}, {"r", double(r)}}))));
      double lo = INFINITY, hi = 0.0;
      for (const auto& rep : line) {
        lo = std::min(lo, rep.extra("scaled"));
        hi = std::max(hi, rep.extra("scaled"));
      }
      if (!(lo > 0.0) || hi / lo > band)
        failures.push_back("2^r P band " + format_number(lo > 0 ? hi / lo : INFINITY) + " exceeds " +
                           format_number(band) + " at k=" + std::to_string(k));
      for (std::size_t i = 1; i < line.size(); ++i)
        if (!strictly_below(line[i], line[i - 1]))
          failures.push_back("P(A(k,r)) not strictly decreasing at k=" + std::to_string(k) + ", r=" +
                             std::to_string(rs[i]));
      result.rows.insert(result.rows.end(), line.begin(), line.end());
    }
    return failures;
  }

  std::vector<std::string> overshoot() {
    std::vector<std::string> failures;
    const bool assert_trend = !spec.has("assert_trend") || spec.text("assert_trend") == "true";
    const int r = static_cast<int>(spec.integer("r"));
    auto ks = spec.integers("k");
    std::sort(ks.begin(), ks.end());
    std::vector<EstimateReport> means;
    for (std::int64_t k : ks) {
      auto o = exp_overshoot(kernel, k, r, reps, streams(point_key(spec.name, {{"k", double(k)}, {"r", double(r)}})));
      if (censored_fraction(o.mean_overshoot) > 0.01) censored = true;
      means.push_back(o.mean_overshoot);
      result.rows.push_back(o.mean_overshoot);
      result.rows.push_back(o.exit_far);
    }
    if (assert_trend)
      for (std::size_t i = 1; i < ks.size(); ++i)
        if (means[i].ci_low / double(ks[i]) > means[i - 1].ci_high / double(ks[i - 1]))
          failures.push_back("E|overshoot|/k grows from k=" + std::to_string(ks[i - 1]) + " to k=" + std::to_string(ks[i]));
    return failures;
  }

  std::vector<std::string> uk_far() {
    const double band = spec.number_or("band", 20.0);
    const std::int64_t k = spec.integer("k");
    const double t = spec.number("t");
    double worst = 0.0;
    for (double m : spec.numbers("m")) {
      auto o = exp_Uk_far(kernel, k, m, t, reps, streams(point_key(spec.name, {{"k", double(k)}, {"m", m}, {"t", t}})));
      worst = std::max(worst, o.ratio);
      result.rows.push_back(o.joint);
      result.rows.push_back(o.no_collision);
      result.rows.push_back(o.tail);
    }
    if (worst > band) return {"ratio " + format_number(worst) + " exceeds band " + format_number(band)};
    return {};
  }

  std::vector<std::string> excursion() {
    std::vector<std::string> failures;
    const double floor = spec.number_or("floor", 0.01);
    for (std::int64_t k : spec.integers("k"))
      for (double t : spec.numbers("t")) {
        auto o = exp_excursion(kernel, k, t, reps, streams(point_key(spec.name, {{"k", double(k)}, {"t", t}})));
        for (const auto* rep : {&o.long_excursion, &o.reach_given_long})
          if (rep->point < floor)
            failures.push_back("estimate " + format_number(rep->point) + " below floor at k=" + std::to_string(k) +
                               ", t=" + format_number(t));
        result.rows.push_back(o.long_excursion);
        result.rows.push_back(o.reach_given_long);
      }
    return failures;
  }

  std::vector<std::string> tightness() {
    std::vector<std::string> failures;
    const auto times = spec.numbers("t");
    const auto levels = spec.integers("M");
    const TightnessTable table =
        exp_tightness_sweep(kernel, times, levels, reps, streams(spec.name), voter_options());
    result.rows.insert(result.rows.end(), table.survival.begin(), table.survival.end());
    result.rows.insert(result.rows.end(), table.median_size.begin(), table.median_size.end());
    if (static_cast<double>(table.censored) > 0.01 * static_cast<double>(table.reps)) censored = true;
    const std::size_t nt = table.times.size(), nm = table.levels.size();
    if (spec.has("expect") && spec.text("expect") == "not_tight") {
      const double growth = spec.number_or("growth", 2.0);
      const double first = table.median_size.front().point, last = table.median_size.back().point;
      if (!(last >= growth * first))
        failures.push_back("median size grows by " + format_number(first > 0 ? last / first : 0.0) +
                           ", below factor " + format_number(growth));
      return failures;
    }
    const double variation = spec.number_or("variation", 0.5);
    double lo = INFINITY, hi = 0.0;
    for (const auto& m : table.median_size) {
      lo = std::min(lo, m.point);
      hi = std::max(hi, m.point);
    }
    if (!(hi == lo || (lo > 0.0 && (hi - lo) / lo < variation)))
      failures.push_back("median size varies by more than " + format_number(variation * 100) + "% across t");
    for (std::size_t mi = 0; mi < nm; ++mi)
      if (nt > 1 && strictly_below(table.at(0, mi), table.at(nt - 1, mi)))
        failures.push_back("P(r-l > " + std::to_string(table.levels[mi]) + ") grows in t");
    std::vector<std::size_t> by_level(nm);
    for (std::size_t i = 0; i < nm; ++i) by_level[i] = i;
    std::sort(by_level.begin(), by_level.end(), [&](auto a, auto b) { return table.levels[a] < table.levels[b]; });
    for (std::size_t ti = 0; ti < nt; ++ti)
      for (std::size_t j = 1; j < nm; ++j) {
        const auto& lower = table.at(ti, by_level[j - 1]);
        const auto& higher = table.at(ti, by_level[j]);
        if (higher.point > lower.point)
          failures.push_back("survival increases in M at t=" + format_number(table.times[ti]));
      }
    return failures;
  }

  std::vector<std::string> schedule() {
    std::vector<std::string> failures;
    const double floor = spec.number_or("floor", 0.01);
    const double tol = spec.number_or("moment_tolerance", 0.05);
    std::vector<int> ks;
    for (auto k : spec.integers("k")) ks.push_back(static_cast<int>(k));
    const auto walk_reps = static_cast<std::uint64_t>(spec.integer_or("walk_reps", static_cast<std::int64_t>(reps)));
    const auto rows = exp_theorem2_schedule(kernel, spec.number("C"), ks, walk_reps, reps, streams(spec.name),
                                            voter_options());
    for (const auto& row : rows) {
      const std::string at = " at k=" + std::to_string(row.point.k);
      if (censored_fraction(row.interface) > 0.01) censored = true;
      if (row.interface.point < floor) failures.push_back("P(r-l >= M_k) below floor" + at);
      if (!contains(row.big_jump, row.big_jump_exact)) failures.push_back("P(F_k,1) interval misses C e^-2C" + at);
      if (std::abs(row.small_moment.point - row.small_moment_exact) > tol * row.small_moment_exact)
        failures.push_back("Z' second moment off by more than " + format_number(tol * 100) + "%" + at);
      result.rows.push_back(row.interface);
      result.rows.push_back(row.big_jump);
      result.rows.push_back(row.small_moment);
      result.rows.push_back(row.small_confined);
    }
    return failures;
  }

  std::vector<std::string> greenfn() {
    const auto o = exp_greenfn(kernel, spec.integer("k"), static_cast<int>(spec.integer("r")), spec.integer("x"),
                               spec.integer("l"), reps, streams(spec.name), solve_options());
    result.rows = {o.occupation, o.hit, o.escape, o.ratio};
    if (!o.agree) return {"occupation, ratio identity and exact green value disagree"};
    return {};
  }

  std::vector<std::string> density_decay() {
    std::vector<std::string> failures;
    auto Ks = spec.numbers("K");
    std::sort(Ks.begin(), Ks.end());
    const std::int64_t window = spec.integer("window");
    for (double K : Ks) {
      result.rows.push_back(density(kernel, K, window, reps, streams(point_key(spec.name, {{"K", K}}))));
      if (K == 0.0 && result.rows.back().point != 1.0) failures.push_back("density at K=0 is not exactly 1");
    }
    for (std::size_t i = 1; i < Ks.size(); ++i)
      if (!strictly_below(result.rows[i], result.rows[i - 1]))
        failures.push_back("density not strictly decreasing from K=" + format_number(Ks[i - 1]) + " to K=" +
                           format_number(Ks[i]));
    return failures;
  }

  std::vector<std::string> duality() {
    std::vector<std::string> failures;
    const double t = spec.number("t");
    const double tol = spec.number_or("tolerance", 0.03);
    const auto sites = spec.integers("x");
    auto forward = forward_marginals(kernel, t, sites, reps, streams(spec.name + "/forward"), voter_options());
    for (std::size_t i = 0; i < sites.size(); ++i) {
      auto dual = dual_marginal(kernel, sites[i], t, reps, streams(point_key(spec.name + "/dual", {{"x", double(sites[i])}})));
      const double gap = std::abs(forward[i].point - dual.point);
      forward[i].with_param("quantity", std::string("forward")).with_extra("gap", gap);
      dual.with_param("quantity", std::string("dual")).with_extra("gap", gap);
      if (gap > tol)
        failures.push_back("|forward - dual| = " + format_number(gap) + " at x=" + std::to_string(sites[i]));
      result.rows.push_back(forward[i]);
      result.rows.push_back(dual);
    }
    return failures;
  }

  std::vector<std::string> crossing() {
    std::vector<std::string> failures;
    auto Ks = spec.numbers("K");
    std::sort(Ks.begin(), Ks.end());
    const double t = spec.number("t");
    const std::int64_t window = spec.integer("window");
    for (double K : Ks)
      result.rows.push_back(
          crossing_census(kernel, t, K, window, reps, streams(point_key(spec.name, {{"K", K}}))).probability);
    for (std::size_t i = 1; i < Ks.size(); ++i)
      if (!not_above(result.rows[i], result.rows[i - 1]))
        failures.push_back("P(A_K(t) > 0) grows from K=" + format_number(Ks[i - 1]) + " to K=" + format_number(Ks[i]));
    return failures;
  }

  std::vector<std::string> hit() {
    auto r = hit_before(kernel, spec.integer("start"), Target::point(spec.integer("hit")),
                        Target::point(spec.integer("avoid")), reps, streams(spec.name));
    r.with_param("hit", double(spec.integer("hit"))).with_param("avoid", double(spec.integer("avoid")));
    result.rows.push_back(r);
    if (spec.has("expect") && !contains(r, spec.number("expect")))
      return {"interval misses expected " + format_number(spec.number("expect"))};
    return {};
  }

  std::vector<std::string> return_tails() {
    std::vector<std::string> failures;
    auto ns = spec.integers("n");
    std::sort(ns.begin(), ns.end());
    std::vector<EstimateReport> embedded;
    for (std::int64_t n : ns) {
      auto rt = return_tail(kernel, n, reps, streams(point_key(spec.name, {{"n", double(n)}})));
      rt.continuous.with_param("quantity", std::string("continuous"));
      rt.embedded.with_param("quantity", std::string("embedded"));
      result.rows.push_back(rt.continuous);
      result.rows.push_back(rt.embedded);
      embedded.push_back(rt.embedded);
    }
    for (std::size_t i = 1; i < embedded.size(); ++i)
      if (!not_above(embedded[i], embedded[i - 1]))
        failures.push_back("return tail grows from n=" + std::to_string(ns[i - 1]) + " to n=" + std::to_string(ns[i]));
    if (spec.has("reference")) {
      const double ref = spec.number("reference"), tol = spec.number_or("tolerance", 0.1);
      const double got = embedded.back().extra("n_times_p");
      if (std::abs(got - ref) > tol * ref)
        failures.push_back("n P at n=" + std::to_string(ns.back()) + " is " + format_number(got) + ", not within " +
                           format_number(tol * 100) + "% of " + format_number(ref));
    }
    return failures;
  }
};

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

RunContext context_of(const RunConfig& config) {
  return {config.master_seed, config.workers, config.hybrid_cap, config.exact_solve_ceiling,
          config.kernel_cutoff_ceiling};
}

ExperimentResult run_experiment(const ExperimentSpec& spec, const RunContext& context) {
  const auto start = Clock::now();
  const KernelSpec kspec = spec.kernel();
  const Kernel kernel = build_kernel(kspec);
  if (kernel.radius() > context.kernel_cutoff_ceiling)
    throw ConfigError("experiment '" + spec.name + "': kernel radius " + std::to_string(kernel.radius()) +
                      " exceeds kernel_cutoff_ceiling " + std::to_string(context.kernel_cutoff_ceiling));
  ExperimentResult result;
  result.name = spec.name;
  result.type = spec.type;
  result.kernel = kspec.to_string();
  result.seed = spec.has("seed") ? static_cast<std::uint64_t>(spec.integer("seed")) : context.seed;
  Runner run{spec, context, kernel, result.seed, static_cast<std::uint64_t>(spec.integer("reps")), result};

  std::vector<std::string> failures;
  const std::string& t = spec.type;
  if (t == "vk") failures = run.vk();
  else if (t == "akr") failures = run.akr();
  else if (t == "overshoot") failures = run.overshoot();
  else if (t == "uk_far") failures = run.uk_far();
  else if (t == "excursion") failures = run.excursion();
  else if (t == "tightness") failures = run.tightness();
  else if (t == "schedule") failures = run.schedule();
  else if (t == "greenfn") failures = run.greenfn();
  else if (t == "density") failures = run.density_decay();
  else if (t == "duality") failures = run.duality();
  else if (t == "crossing") failures = run.crossing();
  else if (t == "hit_before") failures = run.hit();
  else if (t == "return_tail") failures = run.return_tails();
  else throw ConfigError("experiment '" + spec.name + "': unknown type '" + t + "'");

  for (auto& row : result.rows) {
    row.experiment = spec.name;
    row.seed = result.seed;
  }
  if (run.censored) {
    result.verdict = "inconclusive: censored";
    result.detail = "more than 1% of replicates hit the hybrid cap";
  } else {
    result.verdict = failures.empty() ? "pass" : "fail";
    result.detail = join(failures);
  }
  result.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  for (auto& row : result.rows) row.wall_seconds = result.seconds;
  return result;
}

std::string csv_field(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void write_csv(const ExperimentResult& result, std::ostream& out) {
  std::vector<std::string> params, extras;
  for (const auto& row : result.rows) {
    for (const auto& [k, v] : row.params)
      if (std::find(params.begin(), params.end(), k) == params.end()) params.push_back(k);
    for (const auto& [k, v] : row.extras)
      if (std::find(extras.begin(), extras.end(), k) == extras.end()) extras.push_back(k);
  }
  out << "experiment,kernel";
  for (const auto& p : params) out << ',' << csv_field(p);
  out << ",point,ci_low,ci_high,reps,censored";
  for (const auto& e : extras) out << ',' << csv_field(e);
  out << '\n';
  for (const auto& row : result.rows) {
    out << csv_field(result.name) << ',' << csv_field(result.kernel);
    for (const auto& p : params) {
      out << ',';
      for (const auto& [k, v] : row.params)
        if (k == p) out << csv_field(v);
    }
    out << ',' << format_number(row.point) << ',' << format_number(row.ci_low) << ',' << format_number(row.ci_high)
        << ',' << row.reps << ',' << row.censored;
    for (const auto& e : extras) {
      out << ',';
      for (const auto& [k, v] : row.extras)
        if (k == e) out << format_number(v);
    }
    out << '\n';
  }
}

void write_jsonl(const ExperimentResult& result, const std::string& config_hash, std::ostream& out) {
  const std::string stamp = utc_timestamp();
  for (const auto& row : result.rows) {
    nlohmann::ordered_json j;
    j["experiment"] = result.name;
    j["type"] = result.type;
    j["kernel"] = result.kernel;
    nlohmann::ordered_json params = nlohmann::ordered_json::object();
    for (const auto& [k, v] : row.params) params[k] = v;
    j["params"] = params;
    j["point"] = row.point;
    j["ci"] = {row.ci_low, row.ci_high};
    j["reps"] = row.reps;
    j["censored"] = row.censored;
    nlohmann::ordered_json extras = nlohmann::ordered_json::object();
    for (const auto& [k, v] : row.extras) {
      if (std::isfinite(v))
        extras[k] = v;
      else
        extras[k] = format_number(v);
    }
    j["extras"] = extras;
    j["verdict"] = result.verdict;
    j["detail"] = result.detail;
    j["seed"] = result.seed;
    j["duration_seconds"] = result.seconds;
    j["version"] = kVersion;
    j["config_hash"] = config_hash;
    j["timestamp"] = stamp;
    out << j.dump() << '\n';
  }
}

RunSummary run_all(const RunConfig& config, std::ostream& log) {
  RunSummary summary;
  if (config.experiments.empty()) return summary;
  if (config.workers < 1) throw ConfigError("workers must be >= 1");
  namespace fs = std::filesystem;
  const fs::path dir(config.output_dir);
  fs::create_directories(dir);
  const RunContext ctx = context_of(config);
  const std::string hash = config.hash();
  const fs::path jsonl = dir / "verdicts.jsonl";
  std::ofstream verdicts(jsonl, std::ios::binary | std::ios::trunc);
  if (!verdicts) throw std::runtime_error("cannot write " + jsonl.string());
  summary.files.push_back(jsonl.string());
  for (const auto& spec : config.experiments) {
    log << "[" << spec.name << "] running " << spec.type << "\n" << std::flush;
    ExperimentResult result = run_experiment(spec, ctx);
    const fs::path csv = dir / (spec.name + ".csv");
    std::ofstream out(csv, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + csv.string());
    write_csv(result, out);
    summary.files.push_back(csv.string());
    write_jsonl(result, hash, verdicts);
    verdicts.flush();
    log << "[" << spec.name << "] " << result.verdict << (result.detail.empty() ? "" : " (" + result.detail + ")")
        << " in " << format_number(std::round(result.seconds * 100) / 100) << " s\n"
        << std::flush;
    if (!result.passed()) summary.exit_code = 1;
    summary.results.push_back(std::move(result));
  }
  return summary;
}

std::vector<std::string> plot_kinds() { return {"survival", "density", "schedule"}; }

void emit_plot_data(std::istream& records, const std::string& kind, std::ostream& out) {
  const auto kinds = plot_kinds();
  if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) {
    std::string list;
    for (const auto& k : kinds) list += (list.empty() ? "" : ", ") + k;
    throw PlotKindError("unknown plot kind '" + kind + "' (supported: " + list + ")");
  }
  std::vector<nlohmann::json> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(records, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      rows.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw std::invalid_argument("records line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (rows.empty()) throw std::invalid_argument("no records to reshape");
  auto param = [](const nlohmann::json& r, const char* key) -> std::string {
    const auto& p = r.at("params");
    return p.contains(key) ? p.at(key).get<std::string>() : std::string();
  };
  auto num = [](double v) { return format_number(v); };
  if (kind == "survival") {
    out << "t,M,p_hat,ci_low,ci_high,series\n";
    for (const auto& r : rows)
      if (r.at("type") == "tightness" && !param(r, "M").empty())
        out << param(r, "t") << ',' << param(r, "M") << ',' << num(r.at("point").get<double>()) << ','
            << num(r.at("ci")[0].get<double>()) << ',' << num(r.at("ci")[1].get<double>()) << ','
            << csv_field(r.at("experiment").get<std::string>()) << '\n';
  } else if (kind == "density") {
    out << "K,density,ci_low,ci_high,series\n";
    for (const auto& r : rows)
      if (r.at("type") == "density")
        out << param(r, "K") << ',' << num(r.at("point").get<double>()) << ',' << num(r.at("ci")[0].get<double>())
            << ',' << num(r.at("ci")[1].get<double>()) << ',' << csv_field(r.at("experiment").get<std::string>())
            << '\n';
  } else {
    out << "k,M_k,t_k,p_hat,ci_low,ci_high,series\n";
    for (const auto& r : rows)
      if (r.at("type") == "schedule" && param(r, "quantity") == "interface_at_least_M")
        out << param(r, "k") << ',' << param(r, "M_k") << ',' << param(r, "t_k") << ','
            << num(r.at("point").get<double>()) << ',' << num(r.at("ci")[0].get<double>()) << ','
            << num(r.at("ci")[1].get<double>()) << ',' << csv_field(r.at("experiment").get<std::string>()) << '\n';
  }
}

}  // namespace vmint
