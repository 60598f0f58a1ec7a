#pragma once

#include <string>
#include <vector>

namespace pbpa {

struct GradCheckEntry {
  std::string op;
  double err = 0.0;
  double tol = 0.0;
  bool pass = false;
};

// Central-difference checks (eps 1e-6, float64, kink-avoiding inputs) for
// every differentiable op plus a miniature end-to-end pipeline. `corrupt_op`
// is a test fixture: that op's check runs with a deliberately broken
// backward, so the harness itself is verified to catch faults.
std::vector<GradCheckEntry> run_gradcheck_suite(const std::string& corrupt_op = "");

bool gradcheck_passed(const std::vector<GradCheckEntry>& entries);

}  // namespace pbpa
