#pragma once

#include <string>
#include <vector>

namespace jitai {

struct SelfcheckOptions {
  // Test fixture: negate analytic gradients before comparing them with
  // finite differences. The gradient checks must then fail.
  bool flip_gradient_sign = false;
  // Run only checks whose name contains this substring (empty: all).
  std::string filter;
};

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct SelfcheckReport {
  std::vector<CheckResult> checks;
  bool all_passed() const;
};

std::vector<std::string> selfcheck_names();
SelfcheckReport run_selfcheck(const SelfcheckOptions& options = {});

}  // namespace jitai
