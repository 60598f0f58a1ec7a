#include "pbpa/gradcheck.hpp"

#include <cmath>

#include "pbpa/attention.hpp"
#include "pbpa/model.hpp"
#include "pbpa/pooling.hpp"
#include "pbpa/rng.hpp"
#include "pbpa/tensor.hpp"

namespace pbpa {

namespace {

Tensor rand_t(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

// keep relu/maxpool arguments away from kinks and ties: distinct lattice
// values, offset half a step so none lands on zero
Tensor rand_lattice(std::vector<int> shape, Rng& rng, double step = 0.01) {
  Tensor t(std::move(shape));
  std::vector<int> perm(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) perm[i] = static_cast<int>(i) + 1;
  for (std::size_t i = t.size() - 1; i > 0; --i)
    std::swap(perm[i], perm[static_cast<size_t>(rng.uniform_int(0, static_cast<int>(i)))]);
  for (std::size_t i = 0; i < t.size(); ++i)
    t[i] = step * (perm[i] - 0.5 - static_cast<double>(t.size()) / 2.0);
  return t;
}

// test fixture: pass-through with a broken adjoint (adds 1% to the gradient)
Var faulty_identity(Graph& g, Var x) {
  Tensor y = g.value(x);
  return g.custom({x}, std::move(y), [x](Graph& gg, const Tensor& go) {
    if (!gg.requires_grad(x)) return;
    Tensor& dx = gg.grad_buf(x);
    for (std::size_t i = 0; i < go.size(); ++i) dx[i] += 1.01 * go[i];
  });
}

using OpClosure = std::function<Var(Graph&, const std::vector<Var>&)>;

OpClosure maybe_corrupt(OpClosure inner, bool corrupt) {
  if (!corrupt) return inner;
  return [inner](Graph& g, const std::vector<Var>& vs) { return faulty_identity(g, inner(g, vs)); };
}

double end_to_end_miniature(bool corrupt) {
  // 8x8 images, 2 classes, skinny heads; full finite differences over every
  // trainable parameter
  ModelConfig cfg;
  cfg.canvas = 8;
  cfg.classes = 2;
  cfg.k = 6;
  cfg.max_humans = 2;
  cfg.max_objects = 1;
  cfg.pair_pool = 1;
  cfg.roi_pool = 1;
  cfg.branch_width = 6;
  cfg.head_width = 4;
  cfg.batch = 1;
  Model model(cfg, 77);

  Rng rng(321);
  Scene scene;
  scene.image = rand_lattice({3, 8, 8}, rng, 0.004);
  PersonInstance person;
  for (int p = 0; p < kNumParts; ++p)
    person.keypoints.pts[static_cast<size_t>(p)] = {rng.uniform(1.5, 6.5), rng.uniform(1.5, 6.5)};
  person.keypoints.pts[kNeck] = {3.0, 2.0};
  person.keypoints.pts[kPelvis] = {4.0, 6.0};
  person.box = BoundingBox{0.5, 0.5, 7.0, 7.0};
  scene.persons.push_back(person);
  scene.objects.push_back(BoundingBox{4.0, 4.0, 3.0, 3.0});
  scene.labels = {1, 0};

  const Tensor y({2}, {1.0, 0.0});
  auto pack = [&]() {
    std::vector<Tensor> inputs;
    for (const auto& [name, t] : model.named_params()) inputs.push_back(*t);
    return inputs;
  };

  auto closure = [&model, &scene, &y, corrupt](Graph& g, const std::vector<Var>& vs) {
    Model::Bound bp;
    const auto names = model.named_params();
    for (std::size_t i = 0; i < names.size(); ++i) {
      bp.vars.push_back(vs[i]);
      bp.by_name[names[i].first] = vs[i];
    }
    Tensor img({1, 3, 8, 8}, scene.image.vec());
    Var fmap = model.backbone(g, g.constant(std::move(img)), bp);
    auto fwd = model.forward_person(g, fmap, 0, scene.persons[0], scene.objects, bp);
    Var scores = fwd.scores;
    if (corrupt) scores = faulty_identity(g, scores);
    return weighted_bce_loss(g, scores, y, 10.0, 1.0);
  };
  return grad_check(closure, pack(), 1e-6);
}

}  // namespace

std::vector<GradCheckEntry> run_gradcheck_suite(const std::string& corrupt_op) {
  std::vector<GradCheckEntry> out;
  Rng rng(2024);
  auto run = [&](const std::string& name, double tol, const OpClosure& op, const std::vector<Tensor>& inputs) {
    GradCheckEntry e;
    e.op = name;
    e.tol = tol;
    e.err = grad_check(maybe_corrupt(op, corrupt_op == name), inputs, 1e-6);
    e.pass = e.err < tol;
    out.push_back(e);
  };

  // fc
  run("fc", 1e-5,
      [](Graph& g, const std::vector<Var>& vs) { return g.sum(g.fc(vs[0], vs[1], vs[2])); },
      {rand_t({3, 4}, rng), rand_t({4, 5}, rng), rand_t({5}, rng)});

  // conv2d
  run("conv2d", 1e-5,
      [](Graph& g, const std::vector<Var>& vs) { return g.sum(g.conv2d(vs[0], vs[1], 1, 1)); },
      {rand_t({2, 3, 6, 6}, rng), rand_t({4, 3, 3, 3}, rng)});

  // relu (inputs off the kink)
  run("relu", 1e-5, [](Graph& g, const std::vector<Var>& vs) { return g.sum(g.relu(vs[0])); },
      {rand_lattice({4, 8}, rng)});

  // sigmoid
  run("sigmoid", 1e-5, [](Graph& g, const std::vector<Var>& vs) { return g.sum(g.sigmoid(vs[0])); },
      {rand_t({4, 8}, rng, -3.0, 3.0)});

  // concat (weighted so both inputs matter differently)
  run("concat", 1e-5,
      [](Graph& g, const std::vector<Var>& vs) {
        Var c = g.concat({vs[0], vs[1]}, 1);
        return g.sum(g.mul(c, c));
      },
      {rand_t({3, 2}, rng), rand_t({3, 4}, rng)});

  // scale_mul
  run("scale_mul", 1e-5,
      [](Graph& g, const std::vector<Var>& vs) { return g.sum(g.scale_mul(vs[0], vs[1])); },
      {rand_t({3, 3}, rng), rand_t({1}, rng)});

  // maxpool2x2 (distinct lattice values, no ties)
  run("maxpool2x2", 1e-5,
      [](Graph& g, const std::vector<Var>& vs) { return g.sum(g.maxpool2x2(vs[0])); },
      {rand_lattice({1, 2, 6, 6}, rng)});

  // roi pooling
  {
    const BoundingBox b1{1, 1, 3, 2}, b2{2, 3, 3, 3};
    run("roi_max_pool", 1e-5,
        [b1](Graph& g, const std::vector<Var>& vs) { return g.sum(roi_max_pool(g, vs[0], 0, b1, 2, 2)); },
        {rand_lattice({1, 2, 6, 6}, rng)});
    run("roi_pairwise_pool", 1e-5,
        [b1, b2](Graph& g, const std::vector<Var>& vs) {
          return g.sum(roi_pairwise_pool(g, vs[0], 0, b1, b2, 3, 3));
        },
        {rand_lattice({1, 2, 6, 6}, rng)});
  }

  // attention composite (separated scores keep the selection stable)
  {
    std::vector<Tensor> inputs;
    for (int i = 0; i < 5; ++i) inputs.push_back(Tensor::full({1, 2, 2}, 0.3 * (i + 1) - 0.9));
    inputs.push_back(rand_t({4, 1}, rng));
    inputs.push_back(rand_t({1}, rng));
    run("attention", 1e-5,
        [](Graph& g, const std::vector<Var>& vs) {
          std::vector<Var> pairs(vs.begin(), vs.begin() + 5);
          AttentionState st = attention_forward(g, pairs, vs[5], vs[6], 2);
          Var loss{};
          for (std::size_t j = 0; j < st.rescaled.size(); ++j) {
            Var term = g.sum(st.rescaled[j]);
            loss = j == 0 ? term : g.add(loss, term);
          }
          return loss;
        },
        inputs);
  }

  // MIL (distinct rows avoid argmax flips)
  run("mil_aggregate", 1e-5,
      [](Graph& g, const std::vector<Var>& vs) { return g.sum(mil_aggregate(g, vs[0])); },
      {rand_lattice({3, 4}, rng)});

  // weighted loss
  {
    Tensor yhat({4}, {0.2, 0.7, 0.4, 0.9});
    const Tensor y({4}, {1.0, 0.0, 1.0, 0.0});
    run("weighted_bce", 1e-5,
        [y](Graph& g, const std::vector<Var>& vs) { return weighted_bce_loss(g, vs[0], y, 10.0, 1.0); }, {yhat});
  }

  // end-to-end miniature
  {
    GradCheckEntry e;
    e.op = "end_to_end_mini";
    e.tol = 1e-4;
    e.err = end_to_end_miniature(corrupt_op == "end_to_end_mini");
    e.pass = e.err < e.tol;
    out.push_back(e);
  }
  return out;
}

bool gradcheck_passed(const std::vector<GradCheckEntry>& entries) {
  for (const auto& e : entries)
    if (!e.pass) return false;
  return true;
}

}  // namespace pbpa
