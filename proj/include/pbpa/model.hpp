#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pbpa/attention.hpp"
#include "pbpa/geometry.hpp"
#include "pbpa/metrics.hpp"
#include "pbpa/synthdata.hpp"
#include "pbpa/tensor.hpp"

namespace pbpa {

struct ModelConfig {
  int k = 20;
  int max_humans = 3;
  int max_objects = 4;
  int pair_pool = 3;  // pooled grid side for part pairs
  int roi_pool = 5;   // pooled grid side for scene/person/object ROIs
  double part_ratio = 0.5;
  enum class ObjectMode { kUnion, kTight } object_mode = ObjectMode::kUnion;
  enum class AttentionMode { kPairs, kPairsParts, kOff } attention_mode = AttentionMode::kPairs;
  double w_p = 10.0;
  double w_n = 1.0;
  int classes = 12;
  int canvas = 64;
  int branch_width = 256;  // two hidden layers per branch
  int head_width = 128;    // combined head
  double lr = 0.01;
  double lr_decay = 0.1;
  double decay_frac = 2.0 / 3.0;
  int steps = 3000;
  int batch = 8;
  std::uint64_t seed = 1;

  // backbone is fixed: 3x3 convs of 8/16/16 filters, pools after the first
  // two, total stride 4 onto a 16-channel shared map
  static constexpr int kStride = 4;
  static constexpr int kFmapChannels = 16;
  int fmap_side() const { return canvas / kStride; }
  int pair_feat_len() const { return kFmapChannels * pair_pool * pair_pool; }
  int roi_feat_len() const { return kFmapChannels * roi_pool * roi_pool; }
  int local_slots() const;  // 45, 55, or 0 depending on attention mode
  int global_in() const { return (2 + max_objects) * roi_feat_len(); }
  int head_in() const { return attention_mode == AttentionMode::kOff ? branch_width : 2 * branch_width; }

  void validate() const;
};

// Elementwise max over the person axis, [P,C] -> [C]; backward routes each
// class's gradient to the argmax person only (ties -> lowest person index).
Var mil_aggregate(Graph& g, Var per_person);

// loss = -sum_i( w_p*y_i*log(yhat_i) + w_n*(1-y_i)*log(1-yhat_i) ), with
// yhat clamped to [1e-7, 1-1e-7] before the logs. y entries must be 0 or 1.
Var weighted_bce_loss(Graph& g, Var yhat, const Tensor& y, double w_p, double w_n);

class Model {
 public:
  Model(ModelConfig cfg, std::uint64_t init_seed);

  const ModelConfig& config() const { return cfg_; }

  // Parameters bound into one graph episode.
  struct Bound {
    std::vector<Var> vars;                // aligned with named_params order
    std::map<std::string, Var> by_name;   // convenience lookup
  };
  Bound bind(Graph& g, bool trainable) const;

  // Shared backbone over a batch of images [B,3,canvas,canvas].
  Var backbone(Graph& g, Var images, const Bound& bp) const;

  struct PersonForward {
    Var scores;               // [classes]
    AttentionState attention; // empty phi when the local branch is off
  };
  PersonForward forward_person(Graph& g, Var fmap, int image_index, const PersonInstance& person,
                               const std::vector<BoundingBox>& objects, const Bound& bp) const;

  struct BatchItem {
    const Scene* scene;
    int id;  // dataset index, used in diagnostics
  };
  // Forward + MIL + mean weighted loss + backward + SGD update.
  // Returns the pre-update mean loss. Deterministic given params and batch.
  double train_step(const std::vector<BatchItem>& batch, int step);

  struct PersonPrediction {
    std::vector<double> scores;
    std::vector<int> phi;
    std::vector<double> pair_scores;
  };
  struct ScenePrediction {
    std::vector<double> image_scores;
    std::vector<PersonPrediction> persons;
  };
  ScenePrediction predict(const Scene& scene) const;

  // Checkpoint io; gen_digest and step ride along as meta tensors.
  void save(const std::string& path, std::uint64_t gen_digest, int step) const;
  struct LoadInfo {
    std::uint64_t gen_digest = 0;
    int step = 0;
  };
  LoadInfo load(const std::string& path);

  std::vector<std::pair<std::string, const Tensor*>> named_params() const;
  Tensor& param(const std::string& name);

 private:
  struct PersonRef {
    int image;
    const PersonInstance* person;
    const std::vector<BoundingBox>* objects;
  };
  std::vector<PersonForward> forward_persons(Graph& g, Var fmap, const std::vector<PersonRef>& refs,
                                             const Bound& bp) const;
  double lr_at(int step) const;

  ModelConfig cfg_;
  std::vector<std::pair<std::string, Tensor>> params_;
  std::map<std::string, std::size_t> index_;
};

// Per-scene prediction over a dataset; `jobs` threads fan out over scenes
// against the immutable model, results keep scene order.
std::vector<Model::ScenePrediction> predict_all(const Model& model, const std::vector<Scene>& scenes, int jobs = 1);

EvalResult evaluate_model(const Model& model, const std::vector<Scene>& scenes, int jobs = 1);

struct InspectResult {
  std::vector<std::vector<int>> pair_counts;  // [classes][local slots]
  std::vector<int> positives;                 // positive scenes per class
  double top1 = 0.0;                          // planted-pair hit rates over classes
  double top5 = 0.0;
  int classes_with_positives = 0;
};
// Counts how often each pair lands in the selected set of the acting person
// across positive scenes, and scores the class-level frequency ranking
// against the planted (class-bound) pairs.
InspectResult inspect_attention(const Model& model, const std::vector<Scene>& scenes,
                                const std::vector<std::uint32_t>& class_pairs, int jobs = 1);

}  // namespace pbpa
