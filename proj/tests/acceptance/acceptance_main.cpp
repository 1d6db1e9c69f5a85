// Acceptance runner: executes the verification matrix and prints one
// pass/fail line per criterion.  Exit code 0 only when everything passes.

#include <cstring>
#include <iostream>
#include <string>

#include "ccgeo/verify.hpp"

int main(int argc, char** argv) {
  int only_id = 0;
  std::uint64_t seed = 12345;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--id") == 0 && i + 1 < argc) {
      only_id = std::atoi(argv[++i]);
    } else if (std::strcmp(argv[i], "--seed") == 0 && i + 1 < argc) {
      seed = std::strtoull(argv[++i], nullptr, 10);
    } else {
      std::cerr << "usage: acceptance [--id N] [--seed S]\n";
      return 1;
    }
  }

  bool all_pass = true;
  auto emit = [&](const ccgeo::CriterionResult& cr) {
    std::cout << (cr.pass ? "[PASS] " : "[FAIL] ") << "criterion " << cr.id << " ("
              << cr.name << "): " << cr.details << "  [" << cr.seconds << "s]"
              << std::endl;
    all_pass = all_pass && cr.pass;
  };

  try {
    if (only_id > 0) {
      emit(ccgeo::run_criterion(only_id, seed));
    } else {
      for (const auto& [id, name] : ccgeo::criterion_catalog())
        emit(ccgeo::run_criterion(id, seed));
    }
  } catch (const std::exception& e) {
    std::cerr << "acceptance runner error: " << e.what() << "\n";
    return 1;
  }
  std::cout << (all_pass ? "ALL PASS" : "FAILURES PRESENT") << std::endl;
  return all_pass ? 0 : 1;
}
