#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "pbpa/errors.hpp"

namespace pbpa {

// Axis-aligned box: top-left corner (row, col) plus height and width, in
// image pixels or feature-map cells. An empty box stands for a missing or
// fully clipped region; its extent fields are meaningless.
struct BoundingBox {
  double r = 0.0;
  double c = 0.0;
  double h = 0.0;
  double w = 0.0;
  bool empty = false;

  static BoundingBox empty_box() {
    BoundingBox b;
    b.empty = true;
    return b;
  }

  double r2() const { return r + h; }  // exclusive bottom
  double c2() const { return c + w; }  // exclusive right

  bool contains(double row, double col) const {
    return !empty && row >= r && row < r2() && col >= c && col < c2();
  }
  bool intersects(const BoundingBox& o) const {
    return !empty && !o.empty && r < o.r2() && o.r < r2() && c < o.c2() && o.c < c2();
  }
  bool operator==(const BoundingBox& o) const {
    if (empty || o.empty) return empty == o.empty;
    return r == o.r && c == o.c && h == o.h && w == o.w;
  }
};

struct Point2 {
  double x = 0.0;  // column
  double y = 0.0;  // row
};

inline constexpr int kNumParts = 10;
inline constexpr int kNumPairs = 45;  // C(10,2)

// Canonical part order. Index into Keypoints::pts and PartLayout::parts.
enum PartId : int {
  kLAnkle = 0,
  kRAnkle = 1,
  kLKnee = 2,
  kRKnee = 3,
  kLWrist = 4,
  kRWrist = 5,
  kLElbow = 6,
  kRElbow = 7,
  kNeck = 8,
  kPelvis = 9,
};

const std::array<std::string, kNumParts>& part_names();  // "l.ankle" ... "pelvis"
std::string pair_name(int pair_index);                   // "l.knee-r.wrist" style

// 10 named 2-D keypoints in canonical order with per-point visibility.
struct Keypoints {
  std::array<Point2, kNumParts> pts{};
  std::array<bool, kNumParts> visible{};

  Keypoints() { visible.fill(true); }
};

// The 10 part boxes plus the fixed enumeration of the 45 part pairs.
struct PartLayout {
  std::array<BoundingBox, kNumParts> parts{};
  std::vector<std::pair<int, int>> pairs;  // lexicographic (i,j), i < j
};

// All (i,j) with 0 <= i < j < n in lexicographic order; length n(n-1)/2.
std::vector<std::pair<int, int>> enumerate_pairs(int n);

// Position of (i,j) in enumerate_pairs(n) order.
int pair_index(int i, int j, int n = kNumParts);

// Square boxes of side ratio*torso_length centered on each keypoint.
// Invisible keypoints yield empty boxes. Requires neck and pelvis visible
// and a nonzero torso.
PartLayout part_boxes_from_keypoints(const Keypoints& kp, double ratio);

// Smallest box containing both. An empty input propagates the empty flag.
BoundingBox union_box(const BoundingBox& a, const BoundingBox& b);

// Image box -> feature-map cells: corners divided by stride, top-left
// floored, bottom-right ceiled, clipped to the map. At least 1x1 unless the
// box lies fully outside (then empty).
BoundingBox project_to_feature(const BoundingBox& box, int stride, int fmap_h, int fmap_w);

}  // namespace pbpa
