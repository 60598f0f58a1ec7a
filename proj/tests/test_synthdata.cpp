#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstring>
#include <set>

#include "pbpa/synthdata.hpp"

using namespace pbpa;

namespace {

std::uint64_t image_hash(const Tensor& t) {
  std::uint64_t h = 1469598103934665603ull;
  const unsigned char* p = reinterpret_cast<const unsigned char*>(t.data());
  for (std::size_t i = 0; i < t.size() * sizeof(double); ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

bool scenes_equal(const Scene& a, const Scene& b) {
  if (a.image.size() != b.image.size()) return false;
  if (std::memcmp(a.image.data(), b.image.data(), a.image.size() * sizeof(double)) != 0) return false;
  if (a.persons.size() != b.persons.size() || a.objects.size() != b.objects.size()) return false;
  for (std::size_t p = 0; p < a.persons.size(); ++p) {
    if (!(a.persons[p].box == b.persons[p].box)) return false;
    for (int q = 0; q < kNumParts; ++q) {
      if (a.persons[p].keypoints.pts[static_cast<size_t>(q)].x != b.persons[p].keypoints.pts[static_cast<size_t>(q)].x)
        return false;
      if (a.persons[p].keypoints.pts[static_cast<size_t>(q)].y != b.persons[p].keypoints.pts[static_cast<size_t>(q)].y)
        return false;
      if (a.persons[p].keypoints.visible[static_cast<size_t>(q)] != b.persons[p].keypoints.visible[static_cast<size_t>(q)])
        return false;
    }
  }
  for (std::size_t o = 0; o < a.objects.size(); ++o)
    if (!(a.objects[o] == b.objects[o])) return false;
  if (a.labels != b.labels) return false;
  if (a.planted.size() != b.planted.size()) return false;
  for (std::size_t i = 0; i < a.planted.size(); ++i)
    if (a.planted[i].cls != b.planted[i].cls || a.planted[i].person != b.planted[i].person ||
        a.planted[i].pair != b.planted[i].pair)
      return false;
  return true;
}

}  // namespace

TEST_CASE("class table binds each class to a valid pair") {
  const auto& table = class_table();
  REQUIRE(table.size() == 12);
  for (const auto& spec : table) {
    CHECK(spec.part_a != spec.part_b);
    const int pi = spec.pair_index();
    CHECK(pi >= 0);
    CHECK(pi < kNumPairs);
  }
}

TEST_CASE("generation is deterministic in (seed, cfg)") {
  GenConfig cfg;
  const Scene a = generate_scene(12345, cfg);
  const Scene b = generate_scene(12345, cfg);
  CHECK(scenes_equal(a, b));

  const Scene c = generate_scene(12346, cfg);
  CHECK_FALSE(scenes_equal(a, c));
}

TEST_CASE("scene geometry stays on the canvas") {
  GenConfig cfg;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Scene s = generate_scene(seed, cfg);
    REQUIRE(!s.persons.empty());
    CHECK(s.persons.size() <= 3);
    CHECK(s.objects.size() <= 4);
    for (const auto& p : s.persons) {
      REQUIRE_FALSE(p.box.empty);
      CHECK(p.box.r >= 0.0);
      CHECK(p.box.c >= 0.0);
      CHECK(p.box.r2() <= cfg.canvas);
      CHECK(p.box.c2() <= cfg.canvas);
    }
    for (const auto& o : s.objects) {
      REQUIRE_FALSE(o.empty);
      CHECK(o.r >= 0.0);
      CHECK(o.c >= 0.0);
      CHECK(o.r2() <= cfg.canvas);
      CHECK(o.c2() <= cfg.canvas);
    }
    for (double v : s.image.vec()) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("labels reproduce from stored geometry; image label is the OR over persons") {
  GenConfig cfg;
  for (std::uint64_t seed = 200; seed < 500; ++seed) {
    const Scene s = generate_scene(seed, cfg);
    std::vector<std::uint8_t> want(static_cast<size_t>(cfg.classes), 0);
    for (const auto& person : s.persons) {
      const auto pl = evaluate_person_labels(person, s.objects, cfg);
      for (int c = 0; c < cfg.classes; ++c) want[static_cast<size_t>(c)] |= pl[static_cast<size_t>(c)];
    }
    REQUIRE(s.labels == want);

    // every positive label carries a planted pair whose person satisfies it
    std::set<int> planted_classes;
    for (const auto& pp : s.planted) {
      planted_classes.insert(pp.cls);
      REQUIRE(pp.person >= 0);
      REQUIRE(pp.person < static_cast<int>(s.persons.size()));
      CHECK(pp.pair == class_table()[static_cast<size_t>(pp.cls)].pair_index());
      const auto pl = evaluate_person_labels(s.persons[static_cast<size_t>(pp.person)], s.objects, cfg);
      CHECK(pl[static_cast<size_t>(pp.cls)] == 1);
    }
    for (int c = 0; c < cfg.classes; ++c)
      CHECK((s.labels[static_cast<size_t>(c)] == 1) == (planted_classes.count(c) == 1));
  }
}

TEST_CASE("scenes without objects have all object classes negative") {
  GenConfig cfg;
  int seen = 0;
  for (std::uint64_t seed = 0; seed < 400 && seen < 10; ++seed) {
    const Scene s = generate_scene(seed, cfg);
    if (!s.objects.empty()) continue;
    ++seen;
    for (int c = 0; c < cfg.classes; ++c)
      if (class_table()[static_cast<size_t>(c)].kind == ClassSpec::kObjectTouch)
        CHECK(s.labels[static_cast<size_t>(c)] == 0);
  }
  CHECK(seen > 0);  // the draw must actually produce object-free scenes
}

TEST_CASE("dataset file round-trips bit-exactly") {
  GenConfig cfg;
  const std::string path = "/tmp/pbpa_test_roundtrip.pbpd";
  const Dataset written = generate_dataset(9000, 20, cfg, path);
  const Dataset read = read_dataset(path);

  CHECK(read.classes == written.classes);
  CHECK(read.canvas == written.canvas);
  CHECK(read.digest == written.digest);
  CHECK(read.digest == cfg.digest());
  CHECK(read.class_pairs == written.class_pairs);
  REQUIRE(read.scenes.size() == written.scenes.size());
  for (std::size_t i = 0; i < read.scenes.size(); ++i) REQUIRE(scenes_equal(read.scenes[i], written.scenes[i]));

  // single-record file round-trips too
  const std::string tiny = "/tmp/pbpa_test_single.pbpd";
  const Dataset one = generate_dataset(17, 1, cfg, tiny);
  REQUIRE(one.scenes.size() == 1);
  CHECK(scenes_equal(read_dataset(tiny).scenes[0], one.scenes[0]));

  std::remove(path.c_str());
  std::remove(tiny.c_str());
}

TEST_CASE("disjoint seed ranges share no images") {
  GenConfig cfg;
  std::set<std::uint64_t> train_hashes;
  for (std::uint64_t seed = 0; seed < 60; ++seed) train_hashes.insert(image_hash(generate_scene(seed, cfg).image));
  for (std::uint64_t seed = 100000; seed < 100060; ++seed)
    CHECK(train_hashes.count(image_hash(generate_scene(seed, cfg).image)) == 0);
}

TEST_CASE("per-class positive rates stay in the regression band") {
  // Monte-Carlo over 10k seeds. First-run measurement: 0.140 .. 0.391 per
  // class, within the required [0.1, 0.6]; frozen here at [0.1, 0.45].
  GenConfig cfg;
  const int n = 10000;
  std::vector<int> counts(static_cast<size_t>(cfg.classes), 0);
  for (int i = 0; i < n; ++i) {
    const Scene s = generate_scene(static_cast<std::uint64_t>(50000 + i), cfg);
    for (int c = 0; c < cfg.classes; ++c) counts[static_cast<size_t>(c)] += s.labels[static_cast<size_t>(c)];
  }
  for (int c = 0; c < cfg.classes; ++c) {
    const double rate = static_cast<double>(counts[static_cast<size_t>(c)]) / n;
    INFO("class ", c, " rate ", rate);
    CHECK(rate >= 0.1);
    CHECK(rate <= 0.45);
  }
}

TEST_CASE("generator config validation") {
  GenConfig cfg;
  cfg.classes = 1;
  CHECK_THROWS_AS(cfg.validate(), ContractError);
  cfg = GenConfig{};
  cfg.canvas = 16;
  CHECK_THROWS_AS(cfg.validate(), ContractError);
  cfg = GenConfig{};
  cfg.max_persons = 7;
  CHECK_THROWS_AS(cfg.validate(), ContractError);
  cfg = GenConfig{};
  cfg.act_prob = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ContractError);

  // digest is order-free and sensitive to every field
  GenConfig a, b;
  CHECK(a.digest() == b.digest());
  b.contact_ratio += 1e-9;
  CHECK(a.digest() != b.digest());
}
