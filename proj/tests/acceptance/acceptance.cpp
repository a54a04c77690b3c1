// Acceptance suite: one PASS/FAIL line per criterion.
// Usage: acceptance [id ...]   (no ids: run everything)

#include <iostream>
#include <set>
#include <string>

#include "prescribe/verify.hpp"

int main(int argc, char** argv) {
  std::set<std::string> only(argv + 1, argv + argc);
  int failed = 0, ran = 0;
  for (const auto& c : prescribe::verify::acceptance_checks()) {
    if (!only.empty() && !only.count(c.id)) continue;
    prescribe::verify::Line l;
    try {
      l = c.run();
    } catch (const std::exception& e) {
      l = {c.id, "check aborted", false, e.what()};
    }
    std::cout << prescribe::verify::format_line(l) << std::endl;
    ++ran;
    if (!l.pass) ++failed;
  }
  if (ran == 0) {
    std::cerr << "no acceptance check matches the given ids\n";
    return 2;
  }
  std::cout << (ran - failed) << "/" << ran << " checks passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
