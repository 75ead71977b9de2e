#pragma once

#include <string>
#include <vector>

namespace blowup_lab {

struct SelftestCase {
  std::string name;
  bool passed = false;
  double error = 0.0;
  double tolerance = 0.0;
};

// Closed-form oracles: Gaussian quadrature (N = 1, 3), reaction-only blow-up
// times (p = 2, 3), exact power laws through estimate_T and the rate fit, and
// heat-equation decay of sin(pi x).
std::vector<SelftestCase> run_selftest();

}  // namespace blowup_lab
