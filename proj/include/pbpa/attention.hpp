#pragma once

#include <vector>

#include "pbpa/tensor.hpp"

namespace pbpa {

// Outcome of scoring + top-k selection + rescaling for one set of pair
// features. phi[j] is the original pair index of the j-th kept feature
// (ascending); rescaled[j] = pairs[phi[j]] * scores[phi[j]].
struct AttentionState {
  Var scores;                 // [m]
  std::vector<int> phi;       // |phi| = min(k, m), strictly increasing
  std::vector<Var> rescaled;  // aligned with phi
};

// One shared FC (output width 1) over each flattened pair feature, then
// sigmoid. All pair features must share a shape.
Var score_pairs(Graph& g, const std::vector<Var>& pair_feats, Var w, Var b);

// Indices of the k largest scores (all when k >= m), ties toward the smaller
// index, returned ascending.
std::vector<int> select_top_k(const Tensor& scores, int k);

// rescaled[j] = scale_mul(pairs[phi[j]], scores[phi[j]]).
std::vector<Var> rescale(Graph& g, const std::vector<Var>& pairs, Var scores, const std::vector<int>& phi);

// score_pairs + select_top_k + rescale in one step.
AttentionState attention_forward(Graph& g, const std::vector<Var>& pair_feats, Var w, Var b, int k);

// The selection backward contract, stated directly on values: selected i
// gets grad_pairs[i] = s_i * grad_f[j] and grad_scores[i] = <p_i, grad_f[j]>;
// dropped pairs get exact zeros. Test-side reference for the graph path.
struct AttentionGrads {
  std::vector<Tensor> pairs;
  Tensor scores;
};
AttentionGrads attention_backward(const std::vector<Tensor>& pair_values, const Tensor& scores,
                                  const std::vector<int>& phi, const std::vector<Tensor>& grad_f);

}  // namespace pbpa
