#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "pbpa/geometry.hpp"
#include "pbpa/rng.hpp"

using namespace pbpa;

namespace {

Keypoints simple_pose() {
  // upright pose, neck above pelvis
  Keypoints kp;
  kp.pts[kNeck] = {0.0, 10.0};
  kp.pts[kPelvis] = {0.0, 0.0};
  kp.pts[kLAnkle] = {-2.0, -12.0};
  kp.pts[kRAnkle] = {2.0, -12.0};
  kp.pts[kLKnee] = {-1.5, -6.0};
  kp.pts[kRKnee] = {1.5, -6.0};
  kp.pts[kLWrist] = {-5.0, 4.0};
  kp.pts[kRWrist] = {5.0, 4.0};
  kp.pts[kLElbow] = {-3.0, 7.0};
  kp.pts[kRElbow] = {3.0, 7.0};
  return kp;
}

}  // namespace

TEST_CASE("part boxes: worked example, side 0.5 * torso") {
  // neck=(0,10), pelvis=(0,0): torso length 10, ratio 0.5 -> side 5
  const Keypoints kp = simple_pose();
  const PartLayout layout = part_boxes_from_keypoints(kp, 0.5);
  for (int p = 0; p < kNumParts; ++p) {
    const BoundingBox& b = layout.parts[static_cast<size_t>(p)];
    REQUIRE_FALSE(b.empty);
    CHECK(b.h == doctest::Approx(5.0));
    CHECK(b.w == doctest::Approx(5.0));
    CHECK(b.r + b.h / 2 == doctest::Approx(kp.pts[static_cast<size_t>(p)].y));
    CHECK(b.c + b.w / 2 == doctest::Approx(kp.pts[static_cast<size_t>(p)].x));
  }
  CHECK(layout.pairs.size() == 45);
}

TEST_CASE("part boxes: translation equivariance") {
  Keypoints kp = simple_pose();
  const PartLayout base = part_boxes_from_keypoints(kp, 0.5);
  const double dx = 13.5, dy = -4.25;
  for (auto& p : kp.pts) {
    p.x += dx;
    p.y += dy;
  }
  const PartLayout moved = part_boxes_from_keypoints(kp, 0.5);
  for (int p = 0; p < kNumParts; ++p) {
    CHECK(moved.parts[static_cast<size_t>(p)].r == doctest::Approx(base.parts[static_cast<size_t>(p)].r + dy));
    CHECK(moved.parts[static_cast<size_t>(p)].c == doctest::Approx(base.parts[static_cast<size_t>(p)].c + dx));
    CHECK(moved.parts[static_cast<size_t>(p)].h == doctest::Approx(base.parts[static_cast<size_t>(p)].h));
  }
}

TEST_CASE("part boxes: scale covariance about the origin") {
  Keypoints kp = simple_pose();
  const PartLayout base = part_boxes_from_keypoints(kp, 0.5);
  const double lam = 2.75;
  for (auto& p : kp.pts) {
    p.x *= lam;
    p.y *= lam;
  }
  const PartLayout scaled = part_boxes_from_keypoints(kp, 0.5);
  for (int p = 0; p < kNumParts; ++p) {
    CHECK(scaled.parts[static_cast<size_t>(p)].h == doctest::Approx(lam * base.parts[static_cast<size_t>(p)].h));
    CHECK(scaled.parts[static_cast<size_t>(p)].r == doctest::Approx(lam * base.parts[static_cast<size_t>(p)].r));
  }
}

TEST_CASE("part boxes: degenerate pose and invisible keypoints") {
  Keypoints kp = simple_pose();
  kp.pts[kNeck] = kp.pts[kPelvis];
  CHECK_THROWS_AS(part_boxes_from_keypoints(kp, 0.5), ContractError);

  Keypoints kp2 = simple_pose();
  kp2.visible[kLWrist] = false;
  const PartLayout layout = part_boxes_from_keypoints(kp2, 0.5);
  CHECK(layout.parts[kLWrist].empty);
  CHECK_FALSE(layout.parts[kRWrist].empty);

  Keypoints kp3 = simple_pose();
  kp3.visible[kNeck] = false;
  CHECK_THROWS_AS(part_boxes_from_keypoints(kp3, 0.5), ContractError);
}

TEST_CASE("union_box worked cases") {
  const BoundingBox a{0, 0, 2, 2};
  const BoundingBox b{4, 4, 2, 2};
  const BoundingBox u = union_box(a, b);
  CHECK(u.r == 0.0);
  CHECK(u.c == 0.0);
  CHECK(u.h == 6.0);
  CHECK(u.w == 6.0);

  CHECK(union_box(a, a) == a);                     // idempotent
  CHECK(union_box(a, b) == union_box(b, a));       // commutative
  CHECK(union_box(a, BoundingBox::empty_box()).empty);  // empty propagates
}

TEST_CASE("union_box associativity and monotonicity") {
  Rng rng(17);
  for (int rep = 0; rep < 200; ++rep) {
    auto rand_box = [&rng]() {
      BoundingBox b;
      b.r = rng.uniform(-10, 10);
      b.c = rng.uniform(-10, 10);
      b.h = rng.uniform(0.5, 8);
      b.w = rng.uniform(0.5, 8);
      return b;
    };
    const BoundingBox a = rand_box(), b = rand_box(), c = rand_box();
    const BoundingBox left = union_box(union_box(a, b), c);
    const BoundingBox right = union_box(a, union_box(b, c));
    CHECK(left.r == doctest::Approx(right.r));
    CHECK(left.c == doctest::Approx(right.c));
    CHECK(left.h == doctest::Approx(right.h));
    CHECK(left.w == doctest::Approx(right.w));
    // a is contained in union(a,b); corner recomputation costs one ulp-ish
    const BoundingBox u = union_box(a, b);
    CHECK(u.r <= a.r);
    CHECK(u.c <= a.c);
    CHECK(u.r2() >= a.r2() - 1e-12);
    CHECK(u.c2() >= a.c2() - 1e-12);
  }
}

TEST_CASE("enumerate_pairs counts and order") {
  CHECK(enumerate_pairs(10).size() == 45);
  CHECK(enumerate_pairs(2) == std::vector<std::pair<int, int>>{{0, 1}});
  CHECK(enumerate_pairs(4) ==
        std::vector<std::pair<int, int>>{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}});
  CHECK_THROWS_AS(enumerate_pairs(1), ContractError);

  for (int n = 2; n <= 12; ++n) {
    const auto pairs = enumerate_pairs(n);
    CHECK(static_cast<int>(pairs.size()) == n * (n - 1) / 2);
    std::set<std::pair<int, int>> seen;
    for (std::size_t t = 0; t < pairs.size(); ++t) {
      const auto [i, j] = pairs[t];
      CHECK(i < j);  // no (i,i) and canonical order
      CHECK(seen.insert(pairs[t]).second);
      if (t > 0) CHECK(pairs[t - 1] < pairs[t]);  // strictly increasing lexicographically
      CHECK(pair_index(i, j, n) == static_cast<int>(t));
    }
  }
}

TEST_CASE("project_to_feature") {
  // stride 1 is the identity up to clipping
  const BoundingBox b{2, 3, 4, 5};
  const BoundingBox p1 = project_to_feature(b, 1, 16, 16);
  CHECK(p1 == b);

  // worked floor/ceil case
  const BoundingBox p4 = project_to_feature(BoundingBox{4, 4, 4, 4}, 4, 16, 16);
  CHECK(p4.r == 1.0);
  CHECK(p4.c == 1.0);
  CHECK(p4.h == 1.0);
  CHECK(p4.w == 1.0);

  // fully outside -> empty
  CHECK(project_to_feature(BoundingBox{100, 100, 4, 4}, 4, 16, 16).empty);
  CHECK(project_to_feature(BoundingBox{-20, 2, 4, 4}, 4, 16, 16).empty);

  // tiny boxes still land on at least one cell
  const BoundingBox tiny = project_to_feature(BoundingBox{5.2, 9.7, 0.1, 0.1}, 4, 16, 16);
  REQUIRE_FALSE(tiny.empty);
  CHECK(tiny.h >= 1.0);
  CHECK(tiny.w >= 1.0);

  // partial overlap clips to the canvas
  const BoundingBox edge = project_to_feature(BoundingBox{-3, 60, 10, 10}, 4, 16, 16);
  REQUIRE_FALSE(edge.empty);
  CHECK(edge.r == 0.0);
  CHECK(edge.c2() == 16.0);
}

TEST_CASE("pair naming matches the part table") {
  CHECK(pair_name(pair_index(kLKnee, kRWrist)) == "l.knee-r.wrist");
  CHECK(pair_name(pair_index(kRWrist, kNeck)) == "r.wrist-neck");
  CHECK(pair_name(pair_index(kLElbow, kNeck)) == "l.elbow-neck");
  CHECK(pair_name(0) == "l.ankle-r.ankle");
  CHECK(pair_name(44) == "neck-pelvis");
}
