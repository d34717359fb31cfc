// Acceptance runner: one PASS/FAIL line per criterion, bounds pinned in
// src/acceptance.cpp. Exit status is zero only when every criterion passes.
#include <cstdio>
#include <fstream>

#include "pmp/acceptance.hpp"

int main(int argc, char** argv) {
  pmp::VerifyOptions opts;
  const char* manifest = argc > 1 ? argv[1] : "acceptance_manifest.json";
  const pmp::Manifest m = pmp::verify_all(opts, [](const pmp::CriterionResult& r) {
    std::printf("%s\n", pmp::criterion_line(r).c_str());
    for (const pmp::SubCheck& s : r.checks) {
      std::printf("        %s %-58s %.6e %s %.6e\n", s.passed ? "ok  " : "FAIL", s.name.c_str(), s.measured,
                  s.op.c_str(), s.bound);
    }
    std::fflush(stdout);
  });
  std::ofstream(manifest, std::ios::binary) << m.json(opts);
  int failed = 0;
  for (const pmp::CriterionResult& r : m.criteria) failed += r.passed ? 0 : 1;
  std::printf("%d of %zu criteria passed; manifest %s\n", static_cast<int>(m.criteria.size()) - failed,
              m.criteria.size(), manifest);
  return failed == 0 ? 0 : 1;
}
