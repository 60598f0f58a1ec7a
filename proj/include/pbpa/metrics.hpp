#pragma once

#include <cstdint>
#include <vector>

#include "pbpa/errors.hpp"

namespace pbpa {

struct EvalResult {
  double map = 0.0;
  std::vector<double> per_class_ap;  // -1 for classes with no positives
  std::vector<int> positives;        // per-class positive count
};

// All-point-interpolation AP per class over image-level scores, averaged over
// classes that have at least one positive. Score ties rank by image index.
// scores: [N][C], labels: [N][C] in {0,1}. Throws if no class has a positive.
EvalResult evaluate_map(const std::vector<std::vector<double>>& scores,
                        const std::vector<std::vector<std::uint8_t>>& labels);

}  // namespace pbpa
