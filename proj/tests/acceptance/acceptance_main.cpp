#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <string>

#include "vmint/verify.hpp"

int main(int argc, char** argv) {
  vmint::SuiteOptions options;
  if (const char* w = std::getenv("VMINT_WORKERS")) options.workers = static_cast<unsigned>(std::max(1, std::atoi(w)));
  std::string suite = argc > 1 ? argv[1] : "acceptance";
  if (argc > 2) options.output_dir = argv[2];
  const auto outcomes = vmint::run_suite(suite, options, std::cout);
  int failed = 0;
  for (const auto& o : outcomes) failed += !o.passed;
  std::cout << (outcomes.size() - failed) << "/" << outcomes.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
