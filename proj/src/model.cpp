#include "pbpa/model.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <memory>
#include <thread>

#include "pbpa/checkpoint.hpp"
#include "pbpa/pooling.hpp"
#include "pbpa/rng.hpp"

namespace pbpa {

int ModelConfig::local_slots() const {
  switch (attention_mode) {
    case AttentionMode::kPairs: return kNumPairs;
    case AttentionMode::kPairsParts: return kNumPairs + kNumParts;
    case AttentionMode::kOff: return 0;
  }
  return 0;
}

void ModelConfig::validate() const {
  if (max_humans < 1 || max_objects < 1) throw ContractError("model config: max_humans and max_objects must be >= 1");
  if (classes < 1) throw ContractError("model config: classes must be >= 1");
  if (pair_pool < 1 || roi_pool < 1) throw ContractError("model config: pooled grids must be >= 1");
  if (canvas % kStride != 0) throw ContractError("model config: canvas must be a multiple of the stride");
  if (attention_mode != AttentionMode::kOff) {
    if (k < 1) throw ContractError("model config: k must be >= 1");
    if (k > local_slots())
      throw ContractError("model config: k=" + std::to_string(k) + " exceeds " + std::to_string(local_slots()) +
                          " candidates for this attention mode");
  }
  if (batch < 1 || steps < 0) throw ContractError("model config: bad training sizes");
  if (branch_width < 1 || head_width < 1) throw ContractError("model config: widths must be >= 1");
  if (w_p <= 0.0 || w_n <= 0.0) throw ContractError("model config: loss weights must be positive");
}

// ---------------------------------------------------------------------------
// spec ops: MIL aggregation and weighted loss

Var mil_aggregate(Graph& g, Var per_person) {
  const Tensor& x = g.value(per_person);
  if (x.rank() != 2) throw DimensionError("mil_aggregate: expected [P,C]");
  const int p = x.dim(0), c = x.dim(1);
  if (p < 1) throw ContractError("mil_aggregate: needs at least one person");
  Tensor y({c});
  auto arg = std::make_shared<std::vector<int>>(static_cast<size_t>(c));
  for (int j = 0; j < c; ++j) {
    double best = x[static_cast<size_t>(j)];
    int who = 0;
    for (int i = 1; i < p; ++i) {
      const double v = x[static_cast<size_t>(i) * c + j];
      if (v > best) {  // ties keep the lowest person index
        best = v;
        who = i;
      }
    }
    y[static_cast<size_t>(j)] = best;
    (*arg)[static_cast<size_t>(j)] = who;
  }
  return g.custom({per_person}, std::move(y), [per_person, arg, c](Graph& gg, const Tensor& go) {
    if (!gg.requires_grad(per_person)) return;
    Tensor& dx = gg.grad_buf(per_person);
    for (int j = 0; j < c; ++j) dx[static_cast<size_t>((*arg)[static_cast<size_t>(j)]) * c + j] += go[static_cast<size_t>(j)];
  });
}

Var weighted_bce_loss(Graph& g, Var yhat, const Tensor& y, double w_p, double w_n) {
  const Tensor& pv = g.value(yhat);
  if (!pv.same_shape(y)) throw DimensionError("weighted_bce_loss: prediction/label shape mismatch");
  constexpr double kEps = 1e-7;
  for (std::size_t i = 0; i < y.size(); ++i)
    if (y[i] != 0.0 && y[i] != 1.0)
      throw ContractError("weighted_bce_loss: label entry " + std::to_string(i) + " is not 0 or 1");

  double loss = 0.0;
  auto clamped = std::make_shared<std::vector<double>>(pv.size());
  for (std::size_t i = 0; i < pv.size(); ++i) {
    const double c = std::clamp(pv[i], kEps, 1.0 - kEps);
    (*clamped)[i] = c;
    loss -= w_p * y[i] * std::log(c) + w_n * (1.0 - y[i]) * std::log(1.0 - c);
  }
  Tensor yc = y;  // keep labels alive for backward
  auto labels = std::make_shared<Tensor>(std::move(yc));
  return g.custom({yhat}, Tensor::scalar(loss), [yhat, clamped, labels, w_p, w_n](Graph& gg, const Tensor& go) {
    if (!gg.requires_grad(yhat)) return;
    const Tensor& pred = gg.value(yhat);
    Tensor& dx = gg.grad_buf(yhat);
    for (std::size_t i = 0; i < dx.size(); ++i) {
      const double c = (*clamped)[i];
      if (pred[i] <= kEps || pred[i] >= 1.0 - kEps) continue;  // clamp is flat outside
      dx[i] += go[0] * (-w_p * (*labels)[i] / c + w_n * (1.0 - (*labels)[i]) / (1.0 - c));
    }
  });
}

// ---------------------------------------------------------------------------
// parameters

namespace {

Tensor glorot(std::vector<int> shape, int fan_in, int fan_out, Rng& rng) {
  Tensor t(std::move(shape));
  const double a = std::sqrt(6.0 / (fan_in + fan_out));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-a, a);
  return t;
}

}  // namespace

Model::Model(ModelConfig cfg, std::uint64_t init_seed) : cfg_(std::move(cfg)) {
  cfg_.validate();
  Rng rng(init_seed ^ 0xabcdef0123456789ull);
  auto push = [this](const std::string& name, Tensor t) {
    index_[name] = params_.size();
    params_.emplace_back(name, std::move(t));
  };

  push("conv1.k", glorot({8, 3, 3, 3}, 3 * 9, 8 * 9, rng));
  push("conv2.k", glorot({16, 8, 3, 3}, 8 * 9, 16 * 9, rng));
  push("conv3.k", glorot({16, 16, 3, 3}, 16 * 9, 16 * 9, rng));

  const int gin = cfg_.global_in();
  const int bw = cfg_.branch_width;
  const int hw = cfg_.head_width;
  push("global.w1", glorot({gin, bw}, gin, bw, rng));
  push("global.b1", Tensor({bw}));
  push("global.w2", glorot({bw, bw}, bw, bw, rng));
  push("global.b2", Tensor({bw}));

  if (cfg_.attention_mode != ModelConfig::AttentionMode::kOff) {
    const int plen = cfg_.pair_feat_len();
    const int lin = cfg_.local_slots() * plen;
    push("score.w", glorot({plen, 1}, plen, 1, rng));
    push("score.b", Tensor({1}));
    push("local.w1", glorot({lin, bw}, lin, bw, rng));
    push("local.b1", Tensor({bw}));
    push("local.w2", glorot({bw, bw}, bw, bw, rng));
    push("local.b2", Tensor({bw}));
  }

  const int hin = cfg_.head_in();
  push("head.w1", glorot({hin, hw}, hin, hw, rng));
  push("head.b1", Tensor({hw}));
  push("head.w2", glorot({hw, cfg_.classes}, hw, cfg_.classes, rng));
  push("head.b2", Tensor({cfg_.classes}));
}

Model::Bound Model::bind(Graph& g, bool trainable) const {
  Bound b;
  b.vars.reserve(params_.size());
  for (const auto& [name, t] : params_) {
    Var v = g.leaf(t, trainable);
    b.vars.push_back(v);
    b.by_name[name] = v;
  }
  return b;
}

Tensor& Model::param(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("model: unknown parameter " + name);
  return params_[it->second].second;
}

std::vector<std::pair<std::string, const Tensor*>> Model::named_params() const {
  std::vector<std::pair<std::string, const Tensor*>> out;
  out.reserve(params_.size());
  for (const auto& [name, t] : params_) out.emplace_back(name, &t);
  return out;
}

// ---------------------------------------------------------------------------
// forward

Var Model::backbone(Graph& g, Var images, const Bound& bp) const {
  Var h = g.relu(g.conv2d(images, bp.by_name.at("conv1.k"), 1, 1));
  h = g.maxpool2x2(h);
  h = g.relu(g.conv2d(h, bp.by_name.at("conv2.k"), 1, 1));
  h = g.maxpool2x2(h);
  h = g.relu(g.conv2d(h, bp.by_name.at("conv3.k"), 1, 1));
  return h;  // [B, 16, canvas/4, canvas/4]
}

std::vector<Model::PersonForward> Model::forward_persons(Graph& g, Var fmap, const std::vector<PersonRef>& refs,
                                                         const Bound& bp) const {
  const int fs = cfg_.fmap_side();
  const int stride = ModelConfig::kStride;
  const int plen = cfg_.pair_feat_len();
  const int rlen = cfg_.roi_feat_len();
  const bool attention_on = cfg_.attention_mode != ModelConfig::AttentionMode::kOff;
  const BoundingBox whole_image{0.0, 0.0, static_cast<double>(cfg_.canvas), static_cast<double>(cfg_.canvas)};

  Var zero_roi = g.constant(Tensor({1, rlen}));
  Var zero_slot = attention_on ? g.constant(Tensor({1, plen})) : Var{};

  std::vector<Var> global_rows, local_rows;
  std::vector<AttentionState> states(refs.size());

  for (std::size_t ri = 0; ri < refs.size(); ++ri) {
    const PersonRef& ref = refs[ri];
    const PersonInstance& person = *ref.person;
    if (person.box.empty) throw ContractError("forward_person: empty person box");
    if (static_cast<int>(ref.objects->size()) > cfg_.max_objects)
      throw ContractError("forward_person: more objects than max_objects");

    // global branch: scene, person, then object slots (union or tight boxes),
    // missing proposals padded with zeros
    std::vector<Var> gparts;
    gparts.push_back(g.reshape(roi_max_pool(g, fmap, ref.image, project_to_feature(whole_image, stride, fs, fs),
                                            cfg_.roi_pool, cfg_.roi_pool),
                               {1, rlen}));
    gparts.push_back(g.reshape(
        roi_max_pool(g, fmap, ref.image, project_to_feature(person.box, stride, fs, fs), cfg_.roi_pool, cfg_.roi_pool),
        {1, rlen}));
    for (int s = 0; s < cfg_.max_objects; ++s) {
      if (s < static_cast<int>(ref.objects->size())) {
        const BoundingBox& obj = (*ref.objects)[static_cast<size_t>(s)];
        const BoundingBox roi =
            cfg_.object_mode == ModelConfig::ObjectMode::kUnion ? union_box(person.box, obj) : obj;
        gparts.push_back(g.reshape(
            roi_max_pool(g, fmap, ref.image, project_to_feature(roi, stride, fs, fs), cfg_.roi_pool, cfg_.roi_pool),
            {1, rlen}));
      } else {
        gparts.push_back(zero_roi);
      }
    }
    global_rows.push_back(g.concat(gparts, 1));  // [1, global_in]

    if (!attention_on) continue;

    // local branch: ROI-pairwise pooling over the 45 part pairs (plus the 10
    // single parts in pairs+parts mode), shared score head, top-k selection,
    // rescale, then scatter into a fixed slot layout (dropped slots zero)
    const PartLayout layout = part_boxes_from_keypoints(person.keypoints, cfg_.part_ratio);
    std::array<BoundingBox, kNumParts> fboxes;
    for (int p = 0; p < kNumParts; ++p)
      fboxes[static_cast<size_t>(p)] = project_to_feature(layout.parts[static_cast<size_t>(p)], stride, fs, fs);

    std::vector<Var> feats;
    feats.reserve(static_cast<size_t>(cfg_.local_slots()));
    for (const auto& [a, bq] : layout.pairs)
      feats.push_back(roi_pairwise_pool(g, fmap, ref.image, fboxes[static_cast<size_t>(a)],
                                        fboxes[static_cast<size_t>(bq)], cfg_.pair_pool, cfg_.pair_pool));
    if (cfg_.attention_mode == ModelConfig::AttentionMode::kPairsParts)
      for (int p = 0; p < kNumParts; ++p)
        feats.push_back(roi_max_pool(g, fmap, ref.image, fboxes[static_cast<size_t>(p)], cfg_.pair_pool, cfg_.pair_pool));

    AttentionState st = attention_forward(g, feats, bp.by_name.at("score.w"), bp.by_name.at("score.b"), cfg_.k);

    std::vector<Var> slots(static_cast<size_t>(cfg_.local_slots()), zero_slot);
    for (std::size_t j = 0; j < st.phi.size(); ++j)
      slots[static_cast<size_t>(st.phi[j])] = g.reshape(st.rescaled[j], {1, plen});
    local_rows.push_back(g.concat(slots, 1));  // [1, local_slots * plen]
    states[ri] = std::move(st);
  }

  const int p_total = static_cast<int>(refs.size());
  Var gmat = g.concat(global_rows, 0);  // [P, global_in]
  Var gh = g.relu(g.fc(gmat, bp.by_name.at("global.w1"), bp.by_name.at("global.b1")));
  gh = g.relu(g.fc(gh, bp.by_name.at("global.w2"), bp.by_name.at("global.b2")));

  Var trunk = gh;
  if (attention_on) {
    Var lmat = g.concat(local_rows, 0);
    Var lh = g.relu(g.fc(lmat, bp.by_name.at("local.w1"), bp.by_name.at("local.b1")));
    lh = g.relu(g.fc(lh, bp.by_name.at("local.w2"), bp.by_name.at("local.b2")));
    trunk = g.concat({gh, lh}, 1);  // [P, 512]
  }
  Var hh = g.relu(g.fc(trunk, bp.by_name.at("head.w1"), bp.by_name.at("head.b1")));
  Var scores = g.sigmoid(g.fc(hh, bp.by_name.at("head.w2"), bp.by_name.at("head.b2")));  // [P, classes]

  std::vector<PersonForward> out(refs.size());
  for (int i = 0; i < p_total; ++i) {
    out[static_cast<size_t>(i)].scores = g.reshape(g.slice_rows(scores, i, 1), {cfg_.classes});
    out[static_cast<size_t>(i)].attention = std::move(states[static_cast<size_t>(i)]);
  }
  return out;
}

Model::PersonForward Model::forward_person(Graph& g, Var fmap, int image_index, const PersonInstance& person,
                                           const std::vector<BoundingBox>& objects, const Bound& bp) const {
  std::vector<PersonRef> refs{PersonRef{image_index, &person, &objects}};
  auto v = forward_persons(g, fmap, refs, bp);
  return std::move(v[0]);
}

// ---------------------------------------------------------------------------
// training

double Model::lr_at(int step) const {
  const int decay_at = static_cast<int>(std::floor(cfg_.decay_frac * cfg_.steps));
  return step < decay_at ? cfg_.lr : cfg_.lr * cfg_.lr_decay;
}

double Model::train_step(const std::vector<BatchItem>& batch, int step) {
  if (batch.empty()) throw ContractError("train_step: empty batch");
  const int b = static_cast<int>(batch.size());
  Tensor images({b, 3, cfg_.canvas, cfg_.canvas});
  const std::size_t img_len = static_cast<size_t>(3) * cfg_.canvas * cfg_.canvas;
  for (int i = 0; i < b; ++i) {
    const Scene& s = *batch[static_cast<size_t>(i)].scene;
    if (s.image.size() != img_len) throw DimensionError("train_step: scene image size does not match config canvas");
    std::memcpy(images.data() + static_cast<size_t>(i) * img_len, s.image.data(), img_len * sizeof(double));
  }

  Graph g;
  Bound bp = bind(g, true);
  Var fmap = backbone(g, g.constant(std::move(images)), bp);

  // all persons across the batch ride one set of fc GEMMs
  std::vector<PersonRef> refs;
  std::vector<std::vector<BoundingBox>> capped_objects(batch.size());
  std::vector<int> scene_offset(batch.size() + 1, 0);
  for (int i = 0; i < b; ++i) {
    const Scene& s = *batch[static_cast<size_t>(i)].scene;
    if (s.persons.empty()) throw ContractError("train_step: scene without persons (id " +
                                               std::to_string(batch[static_cast<size_t>(i)].id) + ")");
    auto& objs = capped_objects[static_cast<size_t>(i)];
    objs = s.objects;
    if (static_cast<int>(objs.size()) > cfg_.max_objects) objs.resize(static_cast<size_t>(cfg_.max_objects));
    const int nper = std::min<int>(static_cast<int>(s.persons.size()), cfg_.max_humans);
    for (int p = 0; p < nper; ++p) refs.push_back(PersonRef{i, &s.persons[static_cast<size_t>(p)], &objs});
    scene_offset[static_cast<size_t>(i) + 1] = static_cast<int>(refs.size());
  }

  auto person_fwd = forward_persons(g, fmap, refs, bp);

  Var total{};
  for (int i = 0; i < b; ++i) {
    const int at = scene_offset[static_cast<size_t>(i)];
    const int count = scene_offset[static_cast<size_t>(i) + 1] - at;
    std::vector<Var> rows;
    rows.reserve(static_cast<size_t>(count));
    for (int p = 0; p < count; ++p)
      rows.push_back(g.reshape(person_fwd[static_cast<size_t>(at + p)].scores, {1, cfg_.classes}));
    Var image_scores = mil_aggregate(g, g.concat(rows, 0));
    const Scene& s = *batch[static_cast<size_t>(i)].scene;
    Tensor y({cfg_.classes});
    if (static_cast<int>(s.labels.size()) != cfg_.classes)
      throw DimensionError("train_step: label width does not match config classes");
    for (int c = 0; c < cfg_.classes; ++c) y[static_cast<size_t>(c)] = s.labels[static_cast<size_t>(c)];
    Var loss = weighted_bce_loss(g, image_scores, y, cfg_.w_p, cfg_.w_n);
    if (!std::isfinite(g.value(loss)[0]))
      throw NumericError("train_step: non-finite loss at scene id " + std::to_string(batch[static_cast<size_t>(i)].id));
    total = (i == 0) ? loss : g.add(total, loss);
  }
  Var mean_loss = g.scale_const(total, 1.0 / b);
  const double out = g.value(mean_loss)[0];

  g.backward(mean_loss);
  const double lr = lr_at(step);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i].second;
    const Tensor& grad = g.grad_buf(bp.vars[i]);
    for (std::size_t t = 0; t < p.size(); ++t) p[t] -= lr * grad[t];
  }
  return out;
}

// ---------------------------------------------------------------------------
// inference

Model::ScenePrediction Model::predict(const Scene& scene) const {
  Graph g;
  Bound bp = bind(g, false);
  Tensor image({1, 3, cfg_.canvas, cfg_.canvas}, scene.image.vec());
  Var fmap = backbone(g, g.constant(std::move(image)), bp);

  std::vector<BoundingBox> objs = scene.objects;
  if (static_cast<int>(objs.size()) > cfg_.max_objects) objs.resize(static_cast<size_t>(cfg_.max_objects));
  const int nper = std::min<int>(static_cast<int>(scene.persons.size()), cfg_.max_humans);
  if (nper < 1) throw ContractError("predict: scene without persons");
  std::vector<PersonRef> refs;
  for (int p = 0; p < nper; ++p) refs.push_back(PersonRef{0, &scene.persons[static_cast<size_t>(p)], &objs});

  auto fwd = forward_persons(g, fmap, refs, bp);

  ScenePrediction out;
  out.persons.resize(fwd.size());
  std::vector<Var> rows;
  for (std::size_t p = 0; p < fwd.size(); ++p) {
    out.persons[p].scores = g.value(fwd[p].scores).vec();
    out.persons[p].phi = fwd[p].attention.phi;
    if (fwd[p].attention.scores.valid()) out.persons[p].pair_scores = g.value(fwd[p].attention.scores).vec();
    rows.push_back(g.reshape(fwd[p].scores, {1, cfg_.classes}));
  }
  out.image_scores = g.value(mil_aggregate(g, g.concat(rows, 0))).vec();
  return out;
}

// ---------------------------------------------------------------------------
// persistence

namespace {

double bits_to_double(std::uint64_t v) {
  double d;
  std::memcpy(&d, &v, 8);
  return d;
}

std::uint64_t double_to_bits(double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, 8);
  return v;
}

}  // namespace

void Model::save(const std::string& path, std::uint64_t gen_digest, int step) const {
  std::vector<std::pair<std::string, Tensor>> out = params_;
  out.emplace_back("meta.gen_digest", Tensor({1}, {bits_to_double(gen_digest)}));
  out.emplace_back("meta.step", Tensor({1}, {static_cast<double>(step)}));
  save_checkpoint(path, out);
}

Model::LoadInfo Model::load(const std::string& path) {
  const auto tensors = load_checkpoint(path);
  LoadInfo info;
  std::size_t assigned = 0;
  for (const auto& [name, t] : tensors) {
    if (name == "meta.gen_digest") {
      info.gen_digest = double_to_bits(t[0]);
      continue;
    }
    if (name == "meta.step") {
      info.step = static_cast<int>(t[0]);
      continue;
    }
    auto it = index_.find(name);
    if (it == index_.end()) throw IoError("checkpoint: unknown tensor '" + name + "' for this configuration");
    Tensor& dst = params_[it->second].second;
    if (!dst.same_shape(t))
      throw IoError("checkpoint: tensor '" + name + "' shape does not match the configured architecture");
    dst = t;
    ++assigned;
  }
  if (assigned != params_.size())
    throw IoError("checkpoint: " + std::to_string(assigned) + " of " + std::to_string(params_.size()) +
                  " parameters present");
  return info;
}

// ---------------------------------------------------------------------------
// dataset-level drivers

std::vector<Model::ScenePrediction> predict_all(const Model& model, const std::vector<Scene>& scenes, int jobs) {
  std::vector<Model::ScenePrediction> preds(scenes.size());
  jobs = std::max(1, std::min<int>(jobs, static_cast<int>(scenes.size())));
  if (jobs == 1) {
    for (std::size_t i = 0; i < scenes.size(); ++i) preds[i] = model.predict(scenes[i]);
    return preds;
  }
  std::vector<std::thread> pool;
  std::atomic<std::size_t> next{0};
  for (int w = 0; w < jobs; ++w)
    pool.emplace_back([&]() {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= scenes.size()) return;
        preds[i] = model.predict(scenes[i]);
      }
    });
  for (auto& th : pool) th.join();
  return preds;
}

EvalResult evaluate_model(const Model& model, const std::vector<Scene>& scenes, int jobs) {
  if (scenes.empty()) throw ContractError("evaluate_model: empty dataset");
  const auto preds = predict_all(model, scenes, jobs);
  std::vector<std::vector<double>> scores(scenes.size());
  std::vector<std::vector<std::uint8_t>> labels(scenes.size());
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    scores[i] = preds[i].image_scores;
    labels[i] = scenes[i].labels;
  }
  return evaluate_map(scores, labels);
}

InspectResult inspect_attention(const Model& model, const std::vector<Scene>& scenes,
                                const std::vector<std::uint32_t>& class_pairs, int jobs) {
  const int classes = model.config().classes;
  const int slots = std::max(1, model.config().local_slots());
  InspectResult res;
  res.pair_counts.assign(static_cast<size_t>(classes), std::vector<int>(static_cast<size_t>(slots), 0));
  res.positives.assign(static_cast<size_t>(classes), 0);

  const auto preds = predict_all(model, scenes, jobs);
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const Scene& s = scenes[i];
    for (int c = 0; c < classes && c < static_cast<int>(s.labels.size()); ++c) {
      if (!s.labels[static_cast<size_t>(c)]) continue;
      ++res.positives[static_cast<size_t>(c)];
      // the acting person: the planted annotation when present, else the
      // person the MIL max picked
      int person = -1;
      for (const PlantedPair& pp : s.planted)
        if (pp.cls == c) {
          person = pp.person;
          break;
        }
      if (person < 0) {
        double best = -1.0;
        for (std::size_t p = 0; p < preds[i].persons.size(); ++p)
          if (preds[i].persons[p].scores[static_cast<size_t>(c)] > best) {
            best = preds[i].persons[p].scores[static_cast<size_t>(c)];
            person = static_cast<int>(p);
          }
      }
      if (person < 0 || person >= static_cast<int>(preds[i].persons.size())) continue;
      for (int pair : preds[i].persons[static_cast<size_t>(person)].phi)
        if (pair < slots) ++res.pair_counts[static_cast<size_t>(c)][static_cast<size_t>(pair)];
    }
  }

  int top1_hits = 0, top5_hits = 0;
  for (int c = 0; c < classes; ++c) {
    if (res.positives[static_cast<size_t>(c)] == 0) continue;
    ++res.classes_with_positives;
    if (c >= static_cast<int>(class_pairs.size())) continue;
    const int planted = static_cast<int>(class_pairs[static_cast<size_t>(c)]);
    std::vector<int> order(static_cast<size_t>(slots));
    for (int p = 0; p < slots; ++p) order[static_cast<size_t>(p)] = p;
    const auto& counts = res.pair_counts[static_cast<size_t>(c)];
    std::stable_sort(order.begin(), order.end(), [&counts](int a, int b) {
      if (counts[static_cast<size_t>(a)] != counts[static_cast<size_t>(b)])
        return counts[static_cast<size_t>(a)] > counts[static_cast<size_t>(b)];
      return a < b;
    });
    if (order[0] == planted) ++top1_hits;
    for (int r = 0; r < 5 && r < slots; ++r)
      if (order[static_cast<size_t>(r)] == planted) {
        ++top5_hits;
        break;
      }
  }
  if (res.classes_with_positives > 0) {
    res.top1 = static_cast<double>(top1_hits) / res.classes_with_positives;
    res.top5 = static_cast<double>(top5_hits) / res.classes_with_positives;
  }
  return res;
}

}  // namespace pbpa
