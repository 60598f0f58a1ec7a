#include "pbpa/pooling.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace pbpa {

namespace {

struct CellRange {
  int r0, r1, c0, c1;  // half-open, absolute feature-map coords
};

struct IntBox {
  int r0 = 0, c0 = 0, r1 = 0, c1 = 0;  // half-open
  bool empty = true;

  bool contains(int r, int c) const { return !empty && r >= r0 && r < r1 && c >= c0 && c < c1; }
};

IntBox to_cells(const BoundingBox& b, int hf, int wf) {
  IntBox ib;
  if (b.empty) return ib;
  ib.r0 = std::max(0, static_cast<int>(std::llround(b.r)));
  ib.c0 = std::max(0, static_cast<int>(std::llround(b.c)));
  ib.r1 = std::min(hf, static_cast<int>(std::llround(b.r2())));
  ib.c1 = std::min(wf, static_cast<int>(std::llround(b.c2())));
  ib.empty = ib.r1 <= ib.r0 || ib.c1 <= ib.c0;
  return ib;
}

CellRange grid_cell(const IntBox& roi, int h, int w, int i, int j) {
  const int hu = roi.r1 - roi.r0;
  const int wu = roi.c1 - roi.c0;
  CellRange cr;
  cr.r0 = roi.r0 + (i * hu) / h;
  cr.r1 = roi.r0 + ((i + 1) * hu + h - 1) / h;  // ceil
  cr.c0 = roi.c0 + (j * wu) / w;
  cr.c1 = roi.c0 + ((j + 1) * wu + w - 1) / w;
  return cr;
}

PooledFeature all_masked(int c, int hf, int wf, int h, int w) {
  PooledFeature pf;
  pf.data = Tensor({c, h, w});
  pf.argmax.assign(static_cast<size_t>(c) * h * w, -1);
  pf.src_c = c;
  pf.src_h = hf;
  pf.src_w = wf;
  return pf;
}

// Shared cell-max scan. When mask_fn is null every candidate is in-box.
template <typename MaskedFn>
PooledFeature pool_impl(const double* fmap, int c, int hf, int wf, const IntBox& roi, int h, int w, MaskedFn masked) {
  PooledFeature pf = all_masked(c, hf, wf, h, w);
  if (roi.empty) return pf;
  for (int ch = 0; ch < c; ++ch) {
    const double* plane = fmap + static_cast<size_t>(ch) * hf * wf;
    const std::int64_t plane_off = static_cast<std::int64_t>(ch) * hf * wf;
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        const CellRange cr = grid_cell(roi, h, w, i, j);
        double best = 0.0;
        std::int64_t best_idx = -1;
        bool best_masked = true;
        bool seen = false;
        for (int rr = cr.r0; rr < cr.r1; ++rr)
          for (int cc = cr.c0; cc < cr.c1; ++cc) {
            const bool m = masked(rr, cc);
            const double v = m ? 0.0 : plane[static_cast<size_t>(rr) * wf + cc];
            // ties (including masked-vs-real zeros) go to the smallest flat index
            if (!seen || v > best) {
              best = v;
              best_idx = plane_off + static_cast<std::int64_t>(rr) * wf + cc;
              best_masked = m;
              seen = true;
            }
          }
        const std::size_t out = (static_cast<size_t>(ch) * h + i) * w + j;
        if (!seen || best_masked) continue;  // stays masked-zero
        pf.data[out] = best;
        pf.argmax[out] = best_idx;
      }
  }
  return pf;
}

}  // namespace

PooledFeature roi_max_pool(const double* fmap, int c, int hf, int wf, const BoundingBox& box, int h, int w) {
  if (h < 1 || w < 1) throw ContractError("roi_max_pool: pooled grid must be at least 1x1");
  const IntBox roi = to_cells(box, hf, wf);
  return pool_impl(fmap, c, hf, wf, roi, h, w, [](int, int) { return false; });
}

PooledFeature roi_max_pool(const Tensor& fmap, const BoundingBox& box, int h, int w) {
  if (fmap.rank() != 3) throw DimensionError("roi_max_pool: expected [C,Hf,Wf] feature map");
  return roi_max_pool(fmap.data(), fmap.dim(0), fmap.dim(1), fmap.dim(2), box, h, w);
}

PooledFeature roi_pairwise_pool(const double* fmap, int c, int hf, int wf, const BoundingBox& box1,
                                const BoundingBox& box2, int h, int w) {
  if (h < 1 || w < 1) throw ContractError("roi_pairwise_pool: pooled grid must be at least 1x1");
  const IntBox b1 = to_cells(box1, hf, wf);
  const IntBox b2 = to_cells(box2, hf, wf);
  if (b1.empty && b2.empty) return all_masked(c, hf, wf, h, w);

  IntBox roi;
  if (b1.empty) {
    roi = b2;
  } else if (b2.empty) {
    roi = b1;
  } else {
    roi.r0 = std::min(b1.r0, b2.r0);
    roi.c0 = std::min(b1.c0, b2.c0);
    roi.r1 = std::max(b1.r1, b2.r1);
    roi.c1 = std::max(b1.c1, b2.c1);
    roi.empty = false;
  }
  return pool_impl(fmap, c, hf, wf, roi, h, w,
                   [&b1, &b2](int rr, int cc) { return !b1.contains(rr, cc) && !b2.contains(rr, cc); });
}

PooledFeature roi_pairwise_pool(const Tensor& fmap, const BoundingBox& box1, const BoundingBox& box2, int h, int w) {
  if (fmap.rank() != 3) throw DimensionError("roi_pairwise_pool: expected [C,Hf,Wf] feature map");
  return roi_pairwise_pool(fmap.data(), fmap.dim(0), fmap.dim(1), fmap.dim(2), box1, box2, h, w);
}

void pool_backward_accum(const PooledFeature& pf, const double* grad_out, double* grad_in) {
  for (std::size_t i = 0; i < pf.argmax.size(); ++i) {
    const std::int64_t src = pf.argmax[i];
    if (src >= 0) grad_in[src] += grad_out[i];
  }
}

Tensor pool_backward(const PooledFeature& pf, const Tensor& grad_out) {
  if (!grad_out.same_shape(pf.data)) throw DimensionError("pool_backward: grad shape does not match pooled data");
  Tensor grad_in({pf.src_c, pf.src_h, pf.src_w});
  pool_backward_accum(pf, grad_out.data(), grad_in.data());
  return grad_in;
}

namespace {

// Pools one image of a [B,C,Hf,Wf] variable and wires the adjoint into the
// batch slice.
Var wrap_pool(Graph& g, Var fmap, int batch_index, PooledFeature pf) {
  const Tensor& fv = g.value(fmap);
  const int c = fv.dim(1), hf = fv.dim(2), wf = fv.dim(3);
  const std::size_t plane = static_cast<size_t>(c) * hf * wf;
  auto shared = std::make_shared<PooledFeature>(std::move(pf));
  Tensor out = shared->data;
  return g.custom({fmap}, std::move(out), [fmap, batch_index, plane, shared](Graph& gg, const Tensor& go) {
    if (!gg.requires_grad(fmap)) return;
    double* base = gg.grad_buf(fmap).data() + static_cast<size_t>(batch_index) * plane;
    pool_backward_accum(*shared, go.data(), base);
  });
}

}  // namespace

Var roi_max_pool(Graph& g, Var fmap, int batch_index, const BoundingBox& box, int h, int w) {
  const Tensor& fv = g.value(fmap);
  if (fv.rank() != 4) throw DimensionError("roi_max_pool: expected [B,C,Hf,Wf] variable");
  const int c = fv.dim(1), hf = fv.dim(2), wf = fv.dim(3);
  const double* base = fv.data() + static_cast<size_t>(batch_index) * c * hf * wf;
  return wrap_pool(g, fmap, batch_index, roi_max_pool(base, c, hf, wf, box, h, w));
}

Var roi_pairwise_pool(Graph& g, Var fmap, int batch_index, const BoundingBox& box1, const BoundingBox& box2, int h,
                      int w) {
  const Tensor& fv = g.value(fmap);
  if (fv.rank() != 4) throw DimensionError("roi_pairwise_pool: expected [B,C,Hf,Wf] variable");
  const int c = fv.dim(1), hf = fv.dim(2), wf = fv.dim(3);
  const double* base = fv.data() + static_cast<size_t>(batch_index) * c * hf * wf;
  return wrap_pool(g, fmap, batch_index, roi_pairwise_pool(base, c, hf, wf, box1, box2, h, w));
}

}  // namespace pbpa
