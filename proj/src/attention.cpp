#include "pbpa/attention.hpp"

#include <algorithm>
#include <numeric>

namespace pbpa {

Var score_pairs(Graph& g, const std::vector<Var>& pair_feats, Var w, Var b) {
  if (pair_feats.empty()) throw ContractError("score_pairs: no pair features");
  const int m = static_cast<int>(pair_feats.size());
  const std::size_t feat_len = g.value(pair_feats[0]).size();
  std::vector<Var> rows;
  rows.reserve(pair_feats.size());
  for (std::size_t i = 0; i < pair_feats.size(); ++i) {
    const Tensor& t = g.value(pair_feats[i]);
    if (t.size() != feat_len || !t.same_shape(g.value(pair_feats[0])))
      throw DimensionError("score_pairs: pair " + std::to_string(i) + " shape differs from pair 0");
    rows.push_back(g.reshape(pair_feats[i], {1, static_cast<int>(feat_len)}));
  }
  Var stacked = g.concat(rows, 0);              // [m, D]
  Var logits = g.fc(stacked, w, b);             // [m, 1]
  return g.reshape(g.sigmoid(logits), {m});     // [m]
}

std::vector<int> select_top_k(const Tensor& scores, int k) {
  if (k < 1) throw ContractError("select_top_k: k must be >= 1");
  const int m = static_cast<int>(scores.size());
  if (m < 1) throw ContractError("select_top_k: empty score vector");
  std::vector<int> order(static_cast<size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&scores](int a, int b) {
    if (scores[static_cast<size_t>(a)] != scores[static_cast<size_t>(b)])
      return scores[static_cast<size_t>(a)] > scores[static_cast<size_t>(b)];
    return a < b;  // tie toward the smaller pair index
  });
  const int keep = std::min(k, m);
  std::vector<int> phi(order.begin(), order.begin() + keep);
  std::sort(phi.begin(), phi.end());
  return phi;
}

std::vector<Var> rescale(Graph& g, const std::vector<Var>& pairs, Var scores, const std::vector<int>& phi) {
  const int m = static_cast<int>(g.value(scores).size());
  std::vector<Var> out;
  out.reserve(phi.size());
  for (int idx : phi) {
    if (idx < 0 || idx >= static_cast<int>(pairs.size()) || idx >= m)
      throw ContractError("rescale: pair index " + std::to_string(idx) + " out of range");
    Var s = g.pick(scores, static_cast<size_t>(idx));
    out.push_back(g.scale_mul(pairs[static_cast<size_t>(idx)], s));
  }
  return out;
}

AttentionState attention_forward(Graph& g, const std::vector<Var>& pair_feats, Var w, Var b, int k) {
  AttentionState st;
  st.scores = score_pairs(g, pair_feats, w, b);
  st.phi = select_top_k(g.value(st.scores), k);
  st.rescaled = rescale(g, pair_feats, st.scores, st.phi);
  return st;
}

AttentionGrads attention_backward(const std::vector<Tensor>& pair_values, const Tensor& scores,
                                  const std::vector<int>& phi, const std::vector<Tensor>& grad_f) {
  if (phi.size() != grad_f.size())
    throw ContractError("attention_backward: phi and grad_f lengths differ");
  AttentionGrads out;
  out.scores = Tensor(scores.shape());
  out.pairs.reserve(pair_values.size());
  for (const Tensor& p : pair_values) out.pairs.emplace_back(p.shape());  // zeros for dropped pairs

  for (std::size_t j = 0; j < phi.size(); ++j) {
    const int i = phi[j];
    if (i < 0 || i >= static_cast<int>(pair_values.size()))
      throw ContractError("attention_backward: selected index out of range");
    const Tensor& p = pair_values[static_cast<size_t>(i)];
    const Tensor& gf = grad_f[j];
    if (!gf.same_shape(p)) throw ContractError("attention_backward: grad_f[" + std::to_string(j) + "] misaligned");
    const double s = scores[static_cast<size_t>(i)];
    Tensor& gp = out.pairs[static_cast<size_t>(i)];
    double dot = 0.0;
    for (std::size_t t = 0; t < p.size(); ++t) {
      gp[t] += s * gf[t];
      dot += p[t] * gf[t];
    }
    out.scores[static_cast<size_t>(i)] += dot;
  }
  return out;
}

}  // namespace pbpa
