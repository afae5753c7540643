#include "vmint/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include "vmint/experiments.hpp"
#include "vmint/walks.hpp"

namespace vmint {

namespace {

using Clock = std::chrono::steady_clock;

struct Check {
  bool ok = true;
  std::vector<std::string> notes;
  std::vector<std::string> failures;

  void require(bool condition, const std::string& what) {
    if (!condition) {
      ok = false;
      failures.push_back(what);
    }
  }
  void note(const std::string& what) { notes.push_back(what); }
};

struct Criterion {
  int id;
  const char* name;
  double limit;
  bool smoke;
  std::function<void(const RunContext&, Check&, std::vector<ExperimentResult>&)> body;
};

std::vector<ExperimentResult> run_text(const std::string& text, const RunContext& ctx) {
  const RunConfig config = parse_config_text(text, "<acceptance>");
  std::vector<ExperimentResult> out;
  for (const auto& spec : config.experiments) out.push_back(run_experiment(spec, ctx));
  return out;
}

const std::string* param_of(const EstimateReport& r, const std::string& key) {
  for (const auto& [k, v] : r.params)
    if (k == key) return &v;
  return nullptr;
}

std::vector<const EstimateReport*> rows_where(const ExperimentResult& result, const std::string& key,
                                              const std::string& value) {
  std::vector<const EstimateReport*> out;
  for (const auto& row : result.rows) {
    const std::string* v = param_of(row, key);
    if (v && *v == value) out.push_back(&row);
  }
  return out;
}

const EstimateReport& row_at(const ExperimentResult& result,
                             std::initializer_list<std::pair<std::string, std::string>> match) {
  for (const auto& row : result.rows) {
    bool all = true;
    for (const auto& [k, v] : match) {
      const std::string* got = param_of(row, k);
      all = all && got && *got == v;
    }
    if (all) return row;
  }
  std::string what = "no row in '" + result.name + "' with";
  for (const auto& [k, v] : match) what += " " + k + "=" + v;
  throw std::logic_error(what);
}

std::string fmt(double v) { return format_number(v); }

std::string interval(const EstimateReport& r) {
  return fmt(r.point) + " [" + fmt(r.ci_low) + ", " + fmt(r.ci_high) + "]";
}

void require_no_censoring(const ExperimentResult& result, Check& check) {
  if (result.verdict.rfind("inconclusive", 0) == 0)
    check.require(false, result.name + ": " + result.verdict + " (" + result.detail + ")");
}

// Exact P(strict return to 0 takes more than 2m steps) for simple random walk:
// C(2m, m) / 4^m, built as a running product.
double central_binomial_tail(int m) {
  double p = 1.0;
  for (int j = 1; j <= m; ++j) p *= (2.0 * j - 1.0) / (2.0 * j);
  return p;
}

void gamblers_ruin(const RunContext& ctx, Check& check, std::vector<ExperimentResult>& tables) {
  tables = run_text(R"(
[experiment gamblers_ruin]
type = hit_before
kernel = nearest_neighbor
start = 3
hit = 10
avoid = 0
expect = 0.3
reps = 100000
)", ctx);
  const auto& mc = tables[0].rows.at(0);
  check.require(contains(mc, 0.3), "Wilson interval " + interval(mc) + " misses 0.3");
  const Kernel nn = build_kernel(parse_kernel_spec("nearest_neighbor"));
  const double exact = exact_solve(nn, 0, 10, two_sided_partition(0, 10), 2).absorption(3, 1);
  check.require(std::abs(exact - 0.3) <= 1e-10, "exact solve gives " + fmt(exact));
  check.note("MC " + interval(mc) + ", exact " + fmt(exact));
}

void return_tail_constant(const RunContext& ctx, Check& check, std::vector<ExperimentResult>& tables) {
  tables = run_text(R"(
[experiment return_tail]
type = return_tail
kernel = nearest_neighbor
n = 2, 30
reference = 0.7978845608028654
tolerance = 0.1
reps = 1000000
)", ctx);
  const double reference = std::sqrt(2.0 / std::numbers::pi);
  const auto& far = row_at(tables[0], {{"n", "30"}, {"quantity", "embedded"}});
  const double scaled = far.extra("n_times_p");
  check.require(std::abs(scaled - reference) <= 0.1 * reference,
                "n P at n=30 is " + fmt(scaled) + ", reference " + fmt(reference));
  const auto& near = row_at(tables[0], {{"n", "2"}, {"quantity", "embedded"}});
  const double exact = central_binomial_tail(2);
  check.require(contains(near, exact), "P(return > 4 steps) " + interval(near) + " misses " + fmt(exact));
  check.note("30 P = " + fmt(scaled) + ", P(>4) = " + interval(near));
}

void green_agreement(const RunContext& ctx, Check& check, std::vector<ExperimentResult>& tables) {
  tables = run_text(R"(
[experiment green_k4_r1]
type = greenfn
kernel = uniform_range(2)
k = 4
r = 1
x = 2
l = 2
reps = 100000
)", ctx);
  const auto& t = tables[0];
  check.require(t.passed(), "three-way comparison failed: " + t.detail);
  const auto& occ = row_at(t, {{"quantity", "occupation_visits"}});
  const auto& ratio = row_at(t, {{"quantity", "ratio"}});
  check.note("occupation " + interval(occ) + ", ratio " + interval(ratio) + ", exact " + fmt(occ.extra("exact_green")));
}

void dyadic_band(const RunContext& ctx, Check& check, std::vector<ExperimentResult>& tables) {
  tables = run_text(R"(
[experiment akr_k8]
type = akr
kernel = uniform_range(2)
k = 8
r = 1, 2, 3
band = 3
reps = 100000
)", ctx);
  std::vector<const EstimateReport*> line;
  for (const char* r : {"1", "2", "3"}) line.push_back(&row_at(tables[0], {{"r", r}}));
  double lo = INFINITY, hi = 0.0;
  for (const auto* row : line) {
    lo = std::min(lo, row->extra("scaled"));
    hi = std::max(hi, row->extra("scaled"));
  }
  check.require(lo > 0.0 && hi / lo <= 3.0, "max/min of 2^r P is " + fmt(hi / lo));
  for (std::size_t i = 1; i < line.size(); ++i)
    check.require(strictly_below(*line[i], *line[i - 1]), "P(A(8," + std::to_string(i + 1) +
                                                              ")) not strictly below r=" + std::to_string(i));
  check.note("max/min " + fmt(hi / lo));
}

void duality_check(const RunContext& ctx, Check& check, std::vector<ExperimentResult>& tables) {
  tables = run_text(R"(
[experiment duality_t8]
type = duality
kernel = uniform_range(2)
t = 8
x = -3, -2, -1, 0, 1, 2, 3
tolerance = 0.03
reps = 100000
)", ctx);
  double worst = 0.0;
  for (const auto* row : rows_where(tables[0], "quantity", "forward")) worst = std::max(worst, row->extra("gap"));
  check.require(worst <= 0.03, "largest |forward - dual| is " + fmt(worst));
  check.note("largest gap " + fmt(worst));
}

void density_decay(const RunContext& ctx, Check& check, std::vector<ExperimentResult>& tables) {
  tables = run_text(R"(
[experiment density_nn]
type = density
kernel = nearest_neighbor
K = 0, 4, 16, 64
window = 1000
reps = 200
)", ctx);
  const auto& d0 = row_at(tables[0], {{"K", "0"}});
  check.require(d0.point == 1.0, "density at K=0 is " + fmt(d0.point));
  const char* Ks[] = {"4", "16", "64"};
  for (int i = 1; i < 3; ++i) {
    const auto& earlier = row_at(tables[0], {{"K", Ks[i - 1]}});
    const auto& later = row_at(tables[0], {{"K", Ks[i]}});
    check.require(strictly_below(later, earlier),
                  std::string("density at K=") + Ks[i] + " not strictly below K=" + Ks[i - 1]);
  }
  check.note("densities " + fmt(row_at(tables[0], {{"K", "4"}}).point) + " > " +
             fmt(row_at(tables[0], {{"K", "16"}}).point) + " > " + fmt(row_at(tables[0], {{"K", "64"}}).point));
}

double median_at(const ExperimentResult& t, const std::string& time) {
  return row_at(t, {{"t", time}, {"quantity", "median_size"}}).point;
}

void tight_signature(const RunContext& ctx, Check& check, std::vector<ExperimentResult>& tables) {
  tables = run_text(R"(
[experiment tightness_uniform2]
type = tightness
kernel = uniform_range(2)
t = 250, 1000, 4000
M = 5, 20
expect = tight
reps = 2000
)", ctx);
  const auto& t = tables[0];
  require_no_censoring(t, check);
  double lo = INFINITY, hi = 0.0;
  for (const char* time : {"250", "1000", "4000"}) {
    lo = std::min(lo, median_at(t, time));
    hi = std::max(hi, median_at(t, time));
    const auto& small = row_at(t, {{"t", time}, {"M", "5"}});
    const auto& large = row_at(t, {{"t", time}, {"M", "20"}});
    check.require(large.point < small.point, std::string("P(r-l > 20) not below P(r-l > 5) at t=") + time);
  }
  check.require(hi == lo || (lo > 0.0 && (hi - lo) / lo < 0.5), "median size ranges over [" + fmt(lo) + ", " + fmt(hi) + "]");
  check.note("median size in [" + fmt(lo) + ", " + fmt(hi) + "]");
}

void heavy_signature(const RunContext& ctx, Check& check, std::vector<ExperimentResult>& tables) {
  tables = run_text(R"(
[experiment tightness_power_law]
type = tightness
kernel = power_law(1.2, 100000)
t = 250, 1000, 4000
M = 5, 20
expect = not_tight
growth = 2
reps = 2000

[experiment schedule_power_law]
type = schedule
kernel = power_law(1.2, 100000)
C = 0.25
k = 3, 4, 5
walk_reps = 10000
floor = 0.01
reps = 400
)", ctx);
  for (const auto& t : tables) require_no_censoring(t, check);
  const double first = median_at(tables[0], "250"), last = median_at(tables[0], "4000");
  check.require(last >= 2.0 * first, "median size grows from " + fmt(first) + " to " + fmt(last) + " only");
  std::string probs;
  for (const auto* row : rows_where(tables[1], "quantity", "interface_at_least_M")) {
    check.require(row->point >= 0.01, "P(r-l >= M_k) = " + fmt(row->point) + " at k=" + *param_of(*row, "k"));
    probs += (probs.empty() ? "" : ", ") + fmt(row->point);
  }
  check.note("median " + fmt(first) + " -> " + fmt(last) + ", schedule P " + probs);
}

void schedule_anchor(const RunContext& ctx, Check& check, std::vector<ExperimentResult>& tables) {
  const Kernel kernel = build_kernel(parse_kernel_spec("power_law(1.2, 100000)"));
  const double C = 0.25;
  const std::vector<int> ks = {3, 4, 5};
  const auto rows = exp_theorem2_schedule(kernel, C, ks, 10000, 0, Streams{ctx.seed, "schedule_anchor", ctx.workers});
  ExperimentResult table;
  table.name = "schedule_anchor";
  table.type = "schedule";
  table.kernel = "power_law(1.2,100000)";
  table.seed = ctx.seed;
  table.verdict = "pass";
  const double target = C * std::exp(-2.0 * C);
  for (const auto& row : rows) {
    const std::string at = " at k=" + std::to_string(row.point.k);
    check.require(contains(row.big_jump, target), "P(F) " + interval(row.big_jump) + " misses " + fmt(target) + at);
    // t times the second moment of the kernel restricted to |x| < 4 M_k.
    const std::int64_t big = 4 * row.point.M;
    double second = 0.0;
    for (std::int64_t x : kernel.sites())
      if (x > -big && x < big) second += static_cast<double>(x) * static_cast<double>(x) * kernel.mass(x);
    const double exact = row.point.t * second;
    const double rel = std::abs(row.small_moment.point - exact) / exact;
    check.require(rel <= 0.05, "E Z'^2 = " + fmt(row.small_moment.point) + " vs " + fmt(exact) + at);
    check.note("k=" + std::to_string(row.point.k) + ": P(F) " + fmt(row.big_jump.point) + ", moment error " +
               fmt(std::round(rel * 10000) / 100) + "%");
    for (const auto* r : {&row.big_jump, &row.small_moment, &row.small_confined}) {
      table.rows.push_back(*r);
      table.rows.back().experiment = table.name;
      table.rows.back().seed = ctx.seed;
    }
  }
  tables.push_back(std::move(table));
}

void structural_zeros(const RunContext& ctx, Check& check, std::vector<ExperimentResult>& tables) {
  tables = run_text(R"(
[experiment vk_nearest]
type = vk
kernel = nearest_neighbor
k = 1, 2, 4, 8
t = 1, 10, 100, 1000
reps = 1000

[experiment tightness_nearest]
type = tightness
kernel = nearest_neighbor
t = 250, 1000, 4000
M = 1, 5, 20
expect = tight
reps = 200
)", ctx);
  std::size_t checked = 0;
  for (const auto& row : tables[0].rows) {
    ++checked;
    check.require(row.point == 0.0, "V^k nonzero: " + fmt(row.point));
  }
  for (const auto& row : tables[1].rows)
    if (param_of(row, "M")) {
      ++checked;
      check.require(row.point == 0.0, "survival nonzero at t=" + *param_of(row, "t") + ", M=" + *param_of(row, "M"));
    }
  check.note(std::to_string(checked) + " estimates, all exactly 0");
}

std::vector<Criterion> criteria() {
  return {
      {1, "gamblers_ruin_exactness", 10, true, gamblers_ruin},
      {2, "return_tail_constant", 60, false, return_tail_constant},
      {3, "green_three_way_agreement", 60, true, green_agreement},
      {4, "dyadic_band", 120, false, dyadic_band},
      {5, "duality", 300, false, duality_check},
      {6, "density_decay", 300, true, density_decay},
      {7, "tight_interface_signature", 600, false, tight_signature},
      {8, "heavy_tail_interface_growth", 900, false, heavy_signature},
      {9, "schedule_analytic_anchor", 60, true, schedule_anchor},
      {10, "structural_zeros", 0, true, structural_zeros},
  };
}

std::string csv_of(const ExperimentResult& r) {
  std::ostringstream out;
  write_csv(r, out);
  return out.str();
}

void save_tables(const std::string& dir, const CriterionOutcome& outcome) {
  if (dir.empty()) return;
  namespace fs = std::filesystem;
  const fs::path sub = fs::path(dir) / outcome.name;
  fs::create_directories(sub);
  for (const auto& t : outcome.tables) {
    std::ofstream out(sub / (t.name + ".csv"), std::ios::binary | std::ios::trunc);
    write_csv(t, out);
  }
}

}  // namespace

std::vector<std::string> suite_names() { return {"acceptance", "smoke"}; }

std::string format_outcome(const CriterionOutcome& o) {
  std::string line = std::string(o.passed ? "PASS" : "FAIL") + " criterion " + std::to_string(o.id) + " " + o.name +
                     " (" + fmt(std::round(o.seconds * 10) / 10) + " s";
  if (o.limit_seconds > 0) line += ", limit " + fmt(o.limit_seconds) + " s";
  line += ")";
  if (!o.detail.empty()) line += ": " + o.detail;
  return line;
}

std::vector<CriterionOutcome> run_suite(const std::string& suite, const SuiteOptions& options, std::ostream& out) {
  const auto names = suite_names();
  if (std::find(names.begin(), names.end(), suite) == names.end())
    throw UnknownSuiteError("unknown suite '" + suite + "' (available: acceptance, smoke)");
  const bool smoke = suite == "smoke";
  RunContext ctx;
  ctx.seed = options.seed;
  ctx.workers = options.workers;

  std::vector<CriterionOutcome> outcomes;
  auto evaluate = [&](const Criterion& c, const RunContext& context) {
    CriterionOutcome o;
    o.id = c.id;
    o.name = c.name;
    o.limit_seconds = c.limit;
    Check check;
    const auto start = Clock::now();
    try {
      c.body(context, check, o.tables);
    } catch (const std::exception& e) {
      check.require(false, std::string("error: ") + e.what());
    }
    o.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    if (c.limit > 0 && o.seconds > c.limit)
      check.require(false, "runtime " + fmt(std::round(o.seconds)) + " s exceeds " + fmt(c.limit) + " s");
    o.passed = check.ok;
    std::vector<std::string> parts = check.ok ? check.notes : check.failures;
    for (const auto& p : parts) o.detail += (o.detail.empty() ? "" : "; ") + p;
    return o;
  };

  for (const auto& c : criteria()) {
    if (smoke && !c.smoke) continue;
    outcomes.push_back(evaluate(c, ctx));
    save_tables(options.output_dir, outcomes.back());
    out << format_outcome(outcomes.back()) << "\n" << std::flush;
  }

  // Determinism: repeat the quick criteria with another worker count and
  // compare every table byte for byte.
  CriterionOutcome det;
  det.id = 11;
  det.name = "determinism_across_workers";
  const auto start = Clock::now();
  RunContext alt = ctx;
  alt.workers = options.alternate_workers == options.workers ? options.workers + 1 : options.alternate_workers;
  std::size_t compared = 0;
  std::vector<std::string> mismatches;
  for (const auto& c : criteria()) {
    if (!c.smoke) continue;
    auto first = std::find_if(outcomes.begin(), outcomes.end(), [&](const auto& o) { return o.id == c.id; });
    const auto again = evaluate(c, alt);
    if (first->tables.size() != again.tables.size()) {
      mismatches.push_back(std::string(c.name) + ": table count differs");
      continue;
    }
    for (std::size_t i = 0; i < again.tables.size(); ++i) {
      ++compared;
      if (csv_of(first->tables[i]) != csv_of(again.tables[i])) mismatches.push_back(again.tables[i].name);
    }
  }
  det.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  det.passed = mismatches.empty() && compared > 0;
  if (det.passed) {
    det.detail = std::to_string(compared) + " tables identical with " + std::to_string(ctx.workers) + " and " +
                 std::to_string(alt.workers) + " workers";
  } else {
    det.detail = "differing tables:";
    for (const auto& m : mismatches) det.detail += " " + m;
  }
  outcomes.push_back(det);
  out << format_outcome(det) << "\n" << std::flush;
  return outcomes;
}

}  // namespace vmint
