#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "pbpa/model.hpp"
#include "pbpa/rng.hpp"

using namespace pbpa;

namespace {

// small but structurally complete config for fast tests
ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.canvas = 32;
  cfg.classes = 4;
  cfg.k = 10;
  cfg.branch_width = 16;
  cfg.head_width = 8;
  cfg.batch = 2;
  cfg.steps = 100;
  return cfg;
}

Scene make_scene(std::uint64_t seed, const GenConfig& gen) { return generate_scene(seed, gen); }

GenConfig tiny_gen() {
  GenConfig gen;
  gen.canvas = 32;
  gen.classes = 4;
  gen.max_persons = 2;
  return gen;
}

}  // namespace

TEST_CASE("mil_aggregate worked cases and gradient routing") {
  Graph g;
  Var one = g.leaf(Tensor({1, 3}, {0.1, 0.5, 0.9}));
  Var m1 = mil_aggregate(g, one);
  CHECK(g.value(m1).vec() == std::vector<double>{0.1, 0.5, 0.9});  // P=1 identity

  Graph g2;
  Var x = g2.leaf(Tensor({2, 2}, {0.2, 0.9, 0.7, 0.1}));
  Var m2 = mil_aggregate(g2, x);
  CHECK(g2.value(m2)[0] == 0.7);
  CHECK(g2.value(m2)[1] == 0.9);
  g2.backward(g2.sum(m2));
  // per class, exactly one person receives gradient
  CHECK(g2.grad(x)[0] == 0.0);
  CHECK(g2.grad(x)[1] == 1.0);
  CHECK(g2.grad(x)[2] == 1.0);
  CHECK(g2.grad(x)[3] == 0.0);

  // equal rows: gradient goes to person 0
  Graph g3;
  Var xe = g3.leaf(Tensor({3, 2}, {0.5, 0.5, 0.5, 0.5, 0.5, 0.5}));
  Var m3 = mil_aggregate(g3, xe);
  CHECK(g3.value(m3).vec() == std::vector<double>{0.5, 0.5});
  g3.backward(g3.sum(m3));
  CHECK(g3.grad(xe)[0] == 1.0);
  CHECK(g3.grad(xe)[1] == 1.0);
  for (int i = 2; i < 6; ++i) CHECK(g3.grad(xe)[static_cast<size_t>(i)] == 0.0);

  Graph g4;
  CHECK_THROWS_AS(mil_aggregate(g4, g4.leaf(Tensor({3}))), DimensionError);
}

TEST_CASE("weighted_bce_loss reproduces hand values") {
  Graph g;
  // y=1, yhat -> 1: loss -> 0
  Var near_one = g.leaf(Tensor({1}, {1.0 - 1e-9}));
  Var l0 = weighted_bce_loss(g, near_one, Tensor({1}, {1.0}), 10.0, 1.0);
  CHECK(g.value(l0)[0] < 1e-5);

  // y=1, yhat=0.5, w_p=10 -> 10 ln 2
  Var half = g.leaf(Tensor({1}, {0.5}));
  Var lp = weighted_bce_loss(g, half, Tensor({1}, {1.0}), 10.0, 1.0);
  CHECK(std::abs(g.value(lp)[0] - 10.0 * std::log(2.0)) < 1e-12);

  // y=0, yhat=0.5, w_n=1 -> ln 2
  Var ln = weighted_bce_loss(g, half, Tensor({1}, {0.0}), 10.0, 1.0);
  CHECK(std::abs(g.value(ln)[0] - std::log(2.0)) < 1e-12);

  // labels outside {0,1} rejected
  CHECK_THROWS_AS(weighted_bce_loss(g, half, Tensor({1}, {0.5}), 10.0, 1.0), ContractError);

  // loss stays finite at the clamp boundary and is nonnegative
  Var worst = g.leaf(Tensor({2}, {1e-12, 1.0 - 1e-12}));
  Var lw = weighted_bce_loss(g, worst, Tensor({2}, {1.0, 0.0}), 10.0, 1.0);
  CHECK(std::isfinite(g.value(lw)[0]));
  CHECK(g.value(lw)[0] >= 0.0);
}

TEST_CASE("weighted_bce_loss gradient matches finite differences") {
  const double err = grad_check(
      [](Graph& g, const std::vector<Var>& vs) {
        return weighted_bce_loss(g, vs[0], Tensor({3}, {1.0, 0.0, 1.0}), 10.0, 1.0);
      },
      {Tensor({3}, {0.3, 0.6, 0.8})}, 1e-6);
  CHECK(err < 1e-6);
}

TEST_CASE("zero feature map propagates to sigmoid(bias) scores") {
  ModelConfig cfg = tiny_config();
  Model model(cfg, 5);

  Scene scene = make_scene(3, tiny_gen());
  scene.image = Tensor({3, cfg.canvas, cfg.canvas});  // all zeros

  const auto pred = model.predict(scene);
  // biases initialize to zero, so zero activations give sigmoid(0) = 0.5
  for (double s : pred.image_scores) CHECK(s == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("duplicate persons produce identical scores") {
  ModelConfig cfg = tiny_config();
  Model model(cfg, 7);
  Scene scene = make_scene(11, tiny_gen());
  scene.persons.resize(1);
  scene.persons.push_back(scene.persons[0]);
  const auto pred = model.predict(scene);
  REQUIRE(pred.persons.size() == 2);
  REQUIRE(pred.persons[0].scores.size() == pred.persons[1].scores.size());
  for (std::size_t i = 0; i < pred.persons[0].scores.size(); ++i)
    CHECK(pred.persons[0].scores[i] == pred.persons[1].scores[i]);
}

TEST_CASE("attention off: keypoints do not reach the output; pairs mode: they do") {
  GenConfig gen = tiny_gen();
  Scene scene = make_scene(17, gen);
  scene.persons.resize(1);
  Scene moved = scene;
  // nudge non-torso keypoints; the person box and image stay fixed
  for (int p : {kLWrist, kRWrist, kLElbow, kRElbow})
    moved.persons[0].keypoints.pts[static_cast<size_t>(p)].x += 2.5;

  ModelConfig off = tiny_config();
  off.attention_mode = ModelConfig::AttentionMode::kOff;
  Model moff(off, 9);
  const auto a = moff.predict(scene);
  const auto b = moff.predict(moved);
  for (std::size_t i = 0; i < a.image_scores.size(); ++i) CHECK(a.image_scores[i] == b.image_scores[i]);

  ModelConfig on = tiny_config();
  Model mon(on, 9);
  const auto c = mon.predict(scene);
  const auto d = mon.predict(moved);
  double delta = 0.0;
  for (std::size_t i = 0; i < c.image_scores.size(); ++i) delta += std::abs(c.image_scores[i] - d.image_scores[i]);
  CHECK(delta > 0.0);
}

TEST_CASE("unselected local slots contribute no gradient to their fc rows") {
  ModelConfig cfg = tiny_config();
  cfg.k = 5;
  Model model(cfg, 13);
  Scene scene = make_scene(19, tiny_gen());
  scene.persons.resize(1);

  Graph g;
  auto bp = model.bind(g, true);
  Tensor img({1, 3, cfg.canvas, cfg.canvas}, scene.image.vec());
  Var fmap = model.backbone(g, g.constant(std::move(img)), bp);
  auto fwd = model.forward_person(g, fmap, 0, scene.persons[0], scene.objects, bp);
  g.backward(g.sum(fwd.scores));

  REQUIRE(static_cast<int>(fwd.attention.phi.size()) == cfg.k);
  const Tensor& dW = g.grad_buf(bp.by_name.at("local.w1"));
  const int plen = cfg.pair_feat_len();
  std::vector<bool> selected(static_cast<size_t>(cfg.local_slots()), false);
  for (int i : fwd.attention.phi) selected[static_cast<size_t>(i)] = true;
  int nonzero_selected_rows = 0;
  for (int slot = 0; slot < cfg.local_slots(); ++slot) {
    double mass = 0.0;
    for (int r = slot * plen; r < (slot + 1) * plen; ++r)
      for (int c = 0; c < cfg.branch_width; ++c)
        mass += std::abs(dW[static_cast<size_t>(r) * cfg.branch_width + c]);
    if (!selected[static_cast<size_t>(slot)]) {
      CHECK(mass == 0.0);  // dropped pair: its slot input is exactly zero
    } else if (mass > 0.0) {
      ++nonzero_selected_rows;
    }
  }
  CHECK(nonzero_selected_rows > 0);
}

TEST_CASE("train_step: lr 0 keeps parameters bit-identical; same seed, same trace") {
  GenConfig gen = tiny_gen();
  std::vector<Scene> scenes;
  for (int i = 0; i < 4; ++i) scenes.push_back(make_scene(100 + static_cast<std::uint64_t>(i), gen));

  ModelConfig cfg = tiny_config();
  cfg.lr = 0.0;
  Model frozen(cfg, 21);
  std::vector<Tensor> before;
  for (const auto& [name, t] : frozen.named_params()) before.push_back(*t);
  std::vector<Model::BatchItem> batch{{&scenes[0], 0}, {&scenes[1], 1}};
  frozen.train_step(batch, 0);
  const auto after = frozen.named_params();
  for (std::size_t i = 0; i < after.size(); ++i)
    CHECK(std::memcmp(before[i].data(), after[i].second->data(), before[i].size() * sizeof(double)) == 0);

  // identical seeds and batches give an identical loss trace
  cfg.lr = 0.05;
  Model m1(cfg, 33), m2(cfg, 33);
  for (int step = 0; step < 4; ++step) {
    std::vector<Model::BatchItem> b{{&scenes[static_cast<size_t>(step % 4)], step % 4},
                                    {&scenes[static_cast<size_t>((step + 1) % 4)], (step + 1) % 4}};
    const double l1 = m1.train_step(b, step);
    const double l2 = m2.train_step(b, step);
    CHECK(l1 == l2);
  }
}

TEST_CASE("single-scene overfit drives the loss down") {
  GenConfig gen = tiny_gen();
  Scene scene = make_scene(42, gen);
  ModelConfig cfg = tiny_config();
  cfg.lr = 0.01;
  cfg.steps = 200;
  Model model(cfg, 55);
  std::vector<Model::BatchItem> batch{{&scene, 0}};
  double first = 0.0, last = 0.0;
  for (int step = 0; step < 200; ++step) {
    const double loss = model.train_step(batch, step);
    if (step == 0) first = loss;
    last = loss;
  }
  CHECK(last < first);
  CHECK(last < 0.05);
}

TEST_CASE("evaluate_map worked cases") {
  // perfect ranking -> mAP 1
  std::vector<std::vector<double>> scores{{0.9}, {0.8}, {0.2}, {0.1}};
  std::vector<std::vector<std::uint8_t>> labels{{1}, {1}, {0}, {0}};
  CHECK(evaluate_map(scores, labels).map == doctest::Approx(1.0));

  // one positive ranked second of two -> AP 0.5
  scores = {{0.9}, {0.6}};
  labels = {{0}, {1}};
  CHECK(evaluate_map(scores, labels).map == doctest::Approx(0.5));

  // no positives anywhere -> contract error
  labels = {{0}, {0}};
  CHECK_THROWS_AS(evaluate_map(scores, labels), ContractError);

  // tied scores rank by image index
  scores = {{0.5}, {0.5}};
  labels = {{0}, {1}};
  CHECK(evaluate_map(scores, labels).map == doctest::Approx(0.5));
}

TEST_CASE("random scores give AP near the class positive rate") {
  Rng rng(64);
  const int n = 4000;
  const double rate = 0.3;
  std::vector<std::vector<double>> scores(n);
  std::vector<std::vector<std::uint8_t>> labels(n);
  for (int i = 0; i < n; ++i) {
    scores[static_cast<size_t>(i)] = {rng.uniform()};
    labels[static_cast<size_t>(i)] = {static_cast<std::uint8_t>(rng.bernoulli(rate) ? 1 : 0)};
  }
  const double ap = evaluate_map(scores, labels).map;
  CHECK(std::abs(ap - rate) < 0.05);
}

TEST_CASE("checkpoint round-trip reproduces evaluation bit-identically") {
  GenConfig gen = tiny_gen();
  std::vector<Scene> scenes;
  for (int i = 0; i < 6; ++i) scenes.push_back(make_scene(300 + static_cast<std::uint64_t>(i), gen));

  ModelConfig cfg = tiny_config();
  Model model(cfg, 77);
  std::vector<Model::BatchItem> batch{{&scenes[0], 0}, {&scenes[1], 1}};
  for (int step = 0; step < 5; ++step) model.train_step(batch, step);

  const std::string path = "/tmp/pbpa_test_ckpt.pbpa";
  model.save(path, 0xdeadbeefcafef00dull, 5);

  Model loaded(cfg, 1234);  // different init; load must overwrite everything
  const auto info = loaded.load(path);
  CHECK(info.gen_digest == 0xdeadbeefcafef00dull);
  CHECK(info.step == 5);

  for (const Scene& s : scenes) {
    const auto a = model.predict(s);
    const auto b = loaded.predict(s);
    REQUIRE(a.image_scores.size() == b.image_scores.size());
    CHECK(std::memcmp(a.image_scores.data(), b.image_scores.data(), a.image_scores.size() * sizeof(double)) == 0);
  }

  // config mismatch is rejected
  ModelConfig other = cfg;
  other.classes = cfg.classes + 1;
  Model wrong(other, 1);
  CHECK_THROWS_AS(wrong.load(path), IoError);
}

TEST_CASE("forward_person rejects an empty person box and too many objects") {
  ModelConfig cfg = tiny_config();
  Model model(cfg, 3);
  Scene scene = make_scene(500, tiny_gen());
  Graph g;
  auto bp = model.bind(g, false);
  Tensor img({1, 3, cfg.canvas, cfg.canvas}, scene.image.vec());
  Var fmap = model.backbone(g, g.constant(std::move(img)), bp);

  PersonInstance bad = scene.persons[0];
  bad.box = BoundingBox::empty_box();
  CHECK_THROWS_AS(model.forward_person(g, fmap, 0, bad, scene.objects, bp), ContractError);

  std::vector<BoundingBox> many(static_cast<size_t>(cfg.max_objects) + 1, BoundingBox{1, 1, 4, 4});
  CHECK_THROWS_AS(model.forward_person(g, fmap, 0, scene.persons[0], many, bp), ContractError);
}

TEST_CASE("k = m equals running without the selection layer") {
  // with k = all slots, every slot carries its rescaled feature, so the
  // pipeline must match a hand-built no-selection forward bit-for-bit
  ModelConfig cfg = tiny_config();
  cfg.k = cfg.local_slots();
  Model model(cfg, 91);
  Scene scene = make_scene(600, tiny_gen());
  scene.persons.resize(1);
  const auto pred = model.predict(scene);
  REQUIRE(static_cast<int>(pred.persons[0].phi.size()) == cfg.local_slots());
  for (int i = 0; i < cfg.local_slots(); ++i) CHECK(pred.persons[0].phi[static_cast<size_t>(i)] == i);
}
