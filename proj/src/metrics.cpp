#include "pbpa/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace pbpa {

EvalResult evaluate_map(const std::vector<std::vector<double>>& scores,
                        const std::vector<std::vector<std::uint8_t>>& labels) {
  if (scores.size() != labels.size()) throw DimensionError("evaluate_map: scores/labels length mismatch");
  if (scores.empty()) throw ContractError("evaluate_map: empty dataset");
  const std::size_t n = scores.size();
  const std::size_t c = scores[0].size();
  for (std::size_t i = 0; i < n; ++i)
    if (scores[i].size() != c || labels[i].size() != c)
      throw DimensionError("evaluate_map: ragged row at image " + std::to_string(i));

  EvalResult res;
  res.per_class_ap.assign(c, -1.0);
  res.positives.assign(c, 0);

  std::vector<int> order(n);
  double ap_sum = 0.0;
  int classes_with_pos = 0;
  for (std::size_t cls = 0; cls < c; ++cls) {
    int pos = 0;
    for (std::size_t i = 0; i < n; ++i) pos += labels[i][cls] ? 1 : 0;
    res.positives[cls] = pos;
    if (pos == 0) continue;

    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (scores[static_cast<size_t>(a)][cls] != scores[static_cast<size_t>(b)][cls])
        return scores[static_cast<size_t>(a)][cls] > scores[static_cast<size_t>(b)][cls];
      return a < b;  // deterministic rank for tied scores
    });

    int hit = 0;
    double ap = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      if (!labels[static_cast<size_t>(order[r])][cls]) continue;
      ++hit;
      ap += static_cast<double>(hit) / static_cast<double>(r + 1);
    }
    ap /= pos;
    res.per_class_ap[cls] = ap;
    ap_sum += ap;
    ++classes_with_pos;
  }
  if (classes_with_pos == 0) throw ContractError("evaluate_map: no positives in any class");
  res.map = ap_sum / classes_with_pos;
  return res;
}

}  // namespace pbpa
