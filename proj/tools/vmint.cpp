#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "vmint/harness.hpp"
#include "vmint/verify.hpp"
#include "vmint/walks.hpp"

namespace {

constexpr int kUsageError = 2;

std::optional<unsigned> env_workers() {
  const char* raw = std::getenv("VMINT_WORKERS");
  if (!raw || !*raw) return std::nullopt;
  char* end = nullptr;
  const long v = std::strtol(raw, &end, 10);
  if (*end != '\0' || v < 1) throw vmint::ConfigError(std::string("VMINT_WORKERS must be a positive integer, got '") + raw + "'");
  return static_cast<unsigned>(v);
}

bool config_sets(const vmint::RunConfig& config, const std::string& key) {
  for (const auto& [k, v] : config.run_entries)
    if (k == key) return true;
  return false;
}

void inspect_kernel(const std::string& text) {
  using vmint::format_number;
  const vmint::KernelSpec spec = vmint::parse_kernel_spec(text);
  const vmint::Kernel k = vmint::build_kernel(spec);
  std::cout << "kernel        " << spec.to_string() << "\n"
            << "support       " << k.sites().size() << " sites, radius " << k.radius() << "\n"
            << "total mass    " << format_number(k.total_mass()) << "\n"
            << "mean          " << format_number(k.mean()) << "\n"
            << "E|X|          " << format_number(k.moment(1.0)) << "\n"
            << "E X^2         " << format_number(k.moment(2.0)) << "\n"
            << "symmetric     " << (k.is_symmetric() ? "yes" : "no") << "\n"
            << "irreducible   " << (vmint::is_irreducible(k) ? "yes" : "no") << "\n"
            << "tails         m, P(X >= m), P(X <= -m), m^2 P(|X| >= m)\n";
  for (std::int64_t m = 1; m <= k.radius(); m *= 2) {
    const double two = k.tail_mass(m);
    std::cout << "              " << m << ", " << format_number(k.tail_mass(m, vmint::TailSide::positive)) << ", "
              << format_number(k.tail_mass(m, vmint::TailSide::negative)) << ", "
              << format_number(static_cast<double>(m) * static_cast<double>(m) * two) << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interface simulations for the one-dimensional voter model"};
  app.set_version_flag("--version", std::string(vmint::kVersion));
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::optional<std::string> out_dir;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed, "Master seed");
    cmd->add_option("--workers", workers, "Worker threads (default from VMINT_WORKERS)")->check(CLI::PositiveNumber);
    cmd->add_option("--out", out_dir, "Output directory");
  };

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run the experiments of a config file");
  run->add_option("config", config_path, "Config file")->required();
  add_common(run);

  std::string suite;
  auto* verify = app.add_subcommand("verify", "Run a built-in acceptance suite (acceptance, smoke)");
  verify->add_option("suite", suite, "Suite name")->required();
  add_common(verify);

  std::string kernel_text;
  auto* kernel = app.add_subcommand("kernel", "Kernel utilities");
  kernel->require_subcommand(1);
  auto* inspect = kernel->add_subcommand("inspect", "Print moments and tails of a kernel");
  inspect->add_option("spec", kernel_text, "Kernel spec, e.g. power_law(1.5,1000)")->required();

  std::string records_path, kind;
  auto* plot = app.add_subcommand("plot-data", "Reshape verdict records into a plotting table");
  plot->add_option("records", records_path, "verdicts.jsonl file, or - for stdin")->required();
  plot->add_option("--kind", kind, "survival, density or schedule")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (*run) {
      vmint::RunConfig config = vmint::parse_config(config_path);
      if (seed) config.master_seed = *seed;
      if (workers) config.workers = *workers;
      else if (!config_sets(config, "workers")) config.workers = env_workers().value_or(config.workers);
      if (out_dir) config.output_dir = *out_dir;
      const auto summary = vmint::run_all(config, std::cerr);
      if (config.experiments.empty()) std::cerr << "no experiments in " << config_path << "\n";
      for (const auto& f : summary.files) std::cout << f << "\n";
      return summary.exit_code;
    }
    if (*verify) {
      vmint::SuiteOptions options;
      if (seed) options.seed = *seed;
      options.workers = workers ? *workers : env_workers().value_or(1);
      if (out_dir) options.output_dir = *out_dir;
      const auto outcomes = vmint::run_suite(suite, options, std::cout);
      std::size_t passed = 0;
      for (const auto& o : outcomes) passed += o.passed;
      std::cout << passed << "/" << outcomes.size() << " criteria passed\n";
      return passed == outcomes.size() ? 0 : 1;
    }
    if (*inspect) {
      inspect_kernel(kernel_text);
      return 0;
    }
    if (*plot) {
      if (records_path == "-") {
        vmint::emit_plot_data(std::cin, kind, std::cout);
      } else {
        std::ifstream in(records_path);
        if (!in) throw std::invalid_argument("cannot open " + records_path);
        vmint::emit_plot_data(in, kind, std::cout);
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "vmint: " << e.what() << "\n";
    return kUsageError;
  }
  return kUsageError;
}
