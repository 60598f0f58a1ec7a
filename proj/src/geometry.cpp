#include "pbpa/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace pbpa {

const std::array<std::string, kNumParts>& part_names() {
  static const std::array<std::string, kNumParts> names = {
      "l.ankle", "r.ankle", "l.knee", "r.knee", "l.wrist",
      "r.wrist", "l.elbow", "r.elbow", "neck",  "pelvis",
  };
  return names;
}

std::vector<std::pair<int, int>> enumerate_pairs(int n) {
  if (n < 2) throw ContractError("enumerate_pairs: n must be >= 2, got " + std::to_string(n));
  std::vector<std::pair<int, int>> out;
  out.reserve(static_cast<size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) out.emplace_back(i, j);
  return out;
}

int pair_index(int i, int j, int n) {
  if (i < 0 || j <= i || j >= n) throw ContractError("pair_index: need 0 <= i < j < n");
  return i * n - i * (i + 1) / 2 + (j - i - 1);
}

std::string pair_name(int pi) {
  if (pi < 0 || pi >= kNumPairs) throw ContractError("pair_name: index out of range");
  const auto pairs = enumerate_pairs(kNumParts);
  const auto& [a, b] = pairs[static_cast<size_t>(pi)];
  return part_names()[static_cast<size_t>(a)] + "-" + part_names()[static_cast<size_t>(b)];
}

PartLayout part_boxes_from_keypoints(const Keypoints& kp, double ratio) {
  if (ratio <= 0.0) throw ContractError("part_boxes_from_keypoints: ratio must be positive");
  if (!kp.visible[kNeck] || !kp.visible[kPelvis])
    throw ContractError("part_boxes_from_keypoints: neck and pelvis must be visible");
  const double dx = kp.pts[kNeck].x - kp.pts[kPelvis].x;
  const double dy = kp.pts[kNeck].y - kp.pts[kPelvis].y;
  const double torso = std::sqrt(dx * dx + dy * dy);
  if (torso == 0.0) throw ContractError("part_boxes_from_keypoints: degenerate pose, neck equals pelvis");

  const double side = ratio * torso;
  PartLayout layout;
  layout.pairs = enumerate_pairs(kNumParts);
  for (int p = 0; p < kNumParts; ++p) {
    if (!kp.visible[static_cast<size_t>(p)]) {
      layout.parts[static_cast<size_t>(p)] = BoundingBox::empty_box();
      continue;
    }
    BoundingBox b;
    b.r = kp.pts[static_cast<size_t>(p)].y - side / 2.0;
    b.c = kp.pts[static_cast<size_t>(p)].x - side / 2.0;
    b.h = side;
    b.w = side;
    layout.parts[static_cast<size_t>(p)] = b;
  }
  return layout;
}

BoundingBox union_box(const BoundingBox& a, const BoundingBox& b) {
  if (a.empty || b.empty) return BoundingBox::empty_box();
  BoundingBox u;
  u.r = std::min(a.r, b.r);
  u.c = std::min(a.c, b.c);
  u.h = std::max(a.r2(), b.r2()) - u.r;
  u.w = std::max(a.c2(), b.c2()) - u.c;
  return u;
}

BoundingBox project_to_feature(const BoundingBox& box, int stride, int fmap_h, int fmap_w) {
  if (stride < 1) throw ContractError("project_to_feature: stride must be >= 1");
  if (box.empty) return BoundingBox::empty_box();
  double r0 = std::floor(box.r / stride);
  double c0 = std::floor(box.c / stride);
  double r1 = std::ceil(box.r2() / stride);
  double c1 = std::ceil(box.c2() / stride);
  r0 = std::max(r0, 0.0);
  c0 = std::max(c0, 0.0);
  r1 = std::min(r1, static_cast<double>(fmap_h));
  c1 = std::min(c1, static_cast<double>(fmap_w));
  if (r1 - r0 < 1.0 || c1 - c0 < 1.0) return BoundingBox::empty_box();
  BoundingBox out;
  out.r = r0;
  out.c = c0;
  out.h = r1 - r0;
  out.w = c1 - c0;
  return out;
}

}  // namespace pbpa
