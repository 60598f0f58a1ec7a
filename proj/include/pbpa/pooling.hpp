#pragma once

#include <cstdint>
#include <vector>

#include "pbpa/geometry.hpp"
#include "pbpa/tensor.hpp"

namespace pbpa {

// Fixed-size max-pooled grid over a feature-map region. argmax holds, per
// output cell, the flat source index (c*Hf*Wf + r*Wf + col) that won the max,
// or -1 for a masked-zero cell (which carries exactly 0 and routes no
// gradient).
struct PooledFeature {
  Tensor data;                   // [C,H,W]
  std::vector<std::int64_t> argmax;  // length C*H*W
  int src_c = 0;
  int src_h = 0;
  int src_w = 0;
};

// Max pooling of `box` (feature-map cells, integer-valued fields) into an
// H x W grid. Grid cell (i,j) covers source rows
// [floor(i*h/H), ceil((i+1)*h/H)) relative to the box origin, columns
// likewise; ties break to the smallest flat source index. An empty box
// yields an all-masked output.
PooledFeature roi_max_pool(const double* fmap, int c, int hf, int wf, const BoundingBox& box, int h, int w);
PooledFeature roi_max_pool(const Tensor& fmap, const BoundingBox& box, int h, int w);

// Pooling over the union box of two part boxes: positions inside the union
// but outside box1 and box2 contribute value 0 to the max. A cell whose
// winner is such a position is masked-zero. Both boxes empty -> all masked.
PooledFeature roi_pairwise_pool(const double* fmap, int c, int hf, int wf, const BoundingBox& box1,
                                const BoundingBox& box2, int h, int w);
PooledFeature roi_pairwise_pool(const Tensor& fmap, const BoundingBox& box1, const BoundingBox& box2, int h, int w);

// Exact adjoint: each non-masked cell adds its grad at its argmax source.
Tensor pool_backward(const PooledFeature& pf, const Tensor& grad_out);
void pool_backward_accum(const PooledFeature& pf, const double* grad_out, double* grad_in);

// Graph wrappers over a batched feature map [B,C,Hf,Wf].
Var roi_max_pool(Graph& g, Var fmap, int batch_index, const BoundingBox& box, int h, int w);
Var roi_pairwise_pool(Graph& g, Var fmap, int batch_index, const BoundingBox& box1, const BoundingBox& box2, int h,
                      int w);

}  // namespace pbpa
