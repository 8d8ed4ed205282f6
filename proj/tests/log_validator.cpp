// log_validator FILE...: exit 0 iff every logged case satisfies its
// follow-up constraints.
#include <fstream>
#include <iostream>

#include "log_check.hpp"

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: log_validator cases.jsonl...\n";
    return 1;
  }
  std::size_t cases = 0, constraints = 0, bad = 0;
  for (int i = 1; i < argc; ++i) {
    std::ifstream in(argv[i]);
    if (!in) {
      std::cerr << argv[i] << ": cannot read file\n";
      return 1;
    }
    const auto s = logcheck::check_log(in);
    cases += s.cases;
    constraints += s.constraints;
    bad += s.violations.size();
    for (const auto& v : s.violations) std::cerr << argv[i] << ": " << v << "\n";
  }
  std::cout << cases << " cases, " << constraints << " constraints, " << bad << " violations\n";
  return bad == 0 ? 0 : 1;
}
