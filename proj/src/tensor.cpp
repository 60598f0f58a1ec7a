#include "pbpa/tensor.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstring>
#include <memory>

namespace pbpa {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EMap = Eigen::Map<EMat>;
using ECMap = Eigen::Map<const EMat>;

Var Graph::push(Tensor value, bool requires_grad, BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

bool Graph::any_requires(const std::vector<Var>& vs) const {
  for (Var v : vs)
    if (node_at(v).requires_grad) return true;
  return false;
}

Var Graph::leaf(Tensor value, bool requires_grad) { return push(std::move(value), requires_grad, nullptr); }

const Tensor& Graph::grad(Var v) const {
  const Node& n = node_at(v);
  if (n.grad.size() == 0) throw StateError("graph: gradient not populated (no backward or unreachable node)");
  return n.grad;
}

Tensor& Graph::grad_buf(Var v) {
  Node& n = node_at(v);
  if (n.grad.size() == 0) n.grad = Tensor(n.value.shape());
  return n.grad;
}

Var Graph::custom(const std::vector<Var>& inputs, Tensor value, BackwardFn backward) {
  bool rg = any_requires(inputs);
  return push(std::move(value), rg, rg ? std::move(backward) : BackwardFn{});
}

void Graph::backward(Var loss) {
  if (backward_done_) throw StateError("graph: backward already ran; reset() before running again");
  Node& ln = node_at(loss);
  if (ln.value.size() != 1) throw ContractError("graph: backward requires a scalar loss");
  backward_done_ = true;
  grad_buf(loss)[0] = 1.0;
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (!n.requires_grad || !n.backward) continue;
    if (n.grad.size() == 0) continue;  // not on any path to the loss
    n.backward(*this, n.grad);
  }
}

void Graph::reset() {
  for (Node& n : nodes_) n.grad = Tensor();
  backward_done_ = false;
}

// ---------------------------------------------------------------------------
// fc

Var Graph::fc(Var x, Var w, Var b) {
  const Tensor& xv = value(x);
  const Tensor& wv = value(w);
  const Tensor& bv = value(b);
  if (xv.rank() != 2 || wv.rank() != 2 || bv.rank() != 1)
    throw DimensionError("fc: expected x rank 2, W rank 2, b rank 1");
  const int batch = xv.dim(0), in = xv.dim(1), out = wv.dim(1);
  if (wv.dim(0) != in)
    throw DimensionError("fc: inner axis mismatch, x has " + std::to_string(in) + " columns but W has " +
                         std::to_string(wv.dim(0)) + " rows");
  if (bv.dim(0) != out)
    throw DimensionError("fc: bias axis mismatch, W has " + std::to_string(out) + " columns but b has " +
                         std::to_string(bv.dim(0)));

  Tensor y({batch, out});
  {
    ECMap xm(xv.data(), batch, in), wm(wv.data(), in, out);
    EMap ym(y.data(), batch, out);
    ym.noalias() = xm * wm;
    for (int r = 0; r < batch; ++r)
      for (int c = 0; c < out; ++c) y[static_cast<size_t>(r) * out + c] += bv[static_cast<size_t>(c)];
  }

  std::vector<Var> ins{x, w, b};
  if (!any_requires(ins)) return push(std::move(y), false, nullptr);
  return push(std::move(y), true, [x, w, b, batch, in, out](Graph& g, const Tensor& go) {
    ECMap dy(go.data(), batch, out);
    ECMap xm(g.value(x).data(), batch, in), wm(g.value(w).data(), in, out);
    if (g.requires_grad(x)) {
      EMap dx(g.grad_buf(x).data(), batch, in);
      dx.noalias() += dy * wm.transpose();
    }
    if (g.requires_grad(w)) {
      EMap dw(g.grad_buf(w).data(), in, out);
      dw.noalias() += xm.transpose() * dy;
    }
    if (g.requires_grad(b)) {
      Tensor& db = g.grad_buf(b);
      for (int r = 0; r < batch; ++r)
        for (int c = 0; c < out; ++c) db[static_cast<size_t>(c)] += go[static_cast<size_t>(r) * out + c];
    }
  });
}

// ---------------------------------------------------------------------------
// conv2d via im2col + GEMM

namespace {

struct ConvDims {
  int batch, cin, h, w, f, kh, kw, stride, pad, ho, wo;
};

void im2col(const Tensor& x, const ConvDims& d, std::vector<double>& cols) {
  // cols: [batch*ho*wo, cin*kh*kw]
  const int ckk = d.cin * d.kh * d.kw;
  cols.assign(static_cast<size_t>(d.batch) * d.ho * d.wo * ckk, 0.0);
  const double* xp = x.data();
  for (int b = 0; b < d.batch; ++b) {
    for (int i = 0; i < d.ho; ++i) {
      for (int j = 0; j < d.wo; ++j) {
        double* row = cols.data() + (static_cast<size_t>(b) * d.ho * d.wo + static_cast<size_t>(i) * d.wo + j) * ckk;
        for (int c = 0; c < d.cin; ++c) {
          const double* plane = xp + (static_cast<size_t>(b) * d.cin + c) * d.h * d.w;
          for (int ki = 0; ki < d.kh; ++ki) {
            const int sr = i * d.stride + ki - d.pad;
            if (sr < 0 || sr >= d.h) continue;
            for (int kj = 0; kj < d.kw; ++kj) {
              const int sc = j * d.stride + kj - d.pad;
              if (sc < 0 || sc >= d.w) continue;
              row[(c * d.kh + ki) * d.kw + kj] = plane[static_cast<size_t>(sr) * d.w + sc];
            }
          }
        }
      }
    }
  }
}

}  // namespace

Var Graph::conv2d(Var x, Var k, int stride, int pad) {
  const Tensor& xv = value(x);
  const Tensor& kv = value(k);
  if (xv.rank() != 4 || kv.rank() != 4) throw DimensionError("conv2d: expected x [B,C,H,W] and K [F,C,kh,kw]");
  if (stride < 1) throw ContractError("conv2d: stride must be >= 1");
  if (pad < 0) throw ContractError("conv2d: pad must be >= 0");
  ConvDims d;
  d.batch = xv.dim(0);
  d.cin = xv.dim(1);
  d.h = xv.dim(2);
  d.w = xv.dim(3);
  d.f = kv.dim(0);
  d.kh = kv.dim(2);
  d.kw = kv.dim(3);
  d.stride = stride;
  d.pad = pad;
  if (kv.dim(1) != d.cin)
    throw DimensionError("conv2d: channel axis mismatch, input has " + std::to_string(d.cin) +
                         " channels but kernel expects " + std::to_string(kv.dim(1)));
  if (d.kh > d.h + 2 * pad || d.kw > d.w + 2 * pad)
    throw DimensionError("conv2d: kernel " + std::to_string(d.kh) + "x" + std::to_string(d.kw) +
                         " larger than padded input " + std::to_string(d.h + 2 * pad) + "x" +
                         std::to_string(d.w + 2 * pad));
  d.ho = (d.h + 2 * pad - d.kh) / stride + 1;
  d.wo = (d.w + 2 * pad - d.kw) / stride + 1;

  const int ckk = d.cin * d.kh * d.kw;
  const int rows = d.batch * d.ho * d.wo;
  auto cols = std::make_shared<std::vector<double>>();
  im2col(xv, d, *cols);

  // y2 [rows, f] = cols * K^T, then scatter to [B,F,Ho,Wo]
  std::vector<double> y2(static_cast<size_t>(rows) * d.f);
  {
    ECMap cm(cols->data(), rows, ckk), km(kv.data(), d.f, ckk);
    EMap ym(y2.data(), rows, d.f);
    ym.noalias() = cm * km.transpose();
  }
  Tensor y({d.batch, d.f, d.ho, d.wo});
  for (int b = 0; b < d.batch; ++b)
    for (int i = 0; i < d.ho; ++i)
      for (int j = 0; j < d.wo; ++j) {
        const double* src = y2.data() + (static_cast<size_t>(b) * d.ho * d.wo + static_cast<size_t>(i) * d.wo + j) * d.f;
        for (int f = 0; f < d.f; ++f)
          y[((static_cast<size_t>(b) * d.f + f) * d.ho + i) * d.wo + j] = src[f];
      }

  std::vector<Var> ins{x, k};
  if (!any_requires(ins)) return push(std::move(y), false, nullptr);
  return push(std::move(y), true, [x, k, d, cols, ckk, rows](Graph& g, const Tensor& go) {
    // gather grad back to [rows, f]
    std::vector<double> dy2(static_cast<size_t>(rows) * d.f);
    for (int b = 0; b < d.batch; ++b)
      for (int i = 0; i < d.ho; ++i)
        for (int j = 0; j < d.wo; ++j) {
          double* dst = dy2.data() + (static_cast<size_t>(b) * d.ho * d.wo + static_cast<size_t>(i) * d.wo + j) * d.f;
          for (int f = 0; f < d.f; ++f)
            dst[f] = go[((static_cast<size_t>(b) * d.f + f) * d.ho + i) * d.wo + j];
        }
    ECMap dym(dy2.data(), rows, d.f);
    if (g.requires_grad(k)) {
      EMap dk(g.grad_buf(k).data(), d.f, ckk);
      ECMap cm(cols->data(), rows, ckk);
      dk.noalias() += dym.transpose() * cm;
    }
    if (g.requires_grad(x)) {
      std::vector<double> dcols(static_cast<size_t>(rows) * ckk);
      {
        EMap dcm(dcols.data(), rows, ckk);
        ECMap km(g.value(k).data(), d.f, ckk);
        dcm.noalias() = dym * km;
      }
      Tensor& dx = g.grad_buf(x);
      for (int b = 0; b < d.batch; ++b)
        for (int i = 0; i < d.ho; ++i)
          for (int j = 0; j < d.wo; ++j) {
            const double* row =
                dcols.data() + (static_cast<size_t>(b) * d.ho * d.wo + static_cast<size_t>(i) * d.wo + j) * ckk;
            for (int c = 0; c < d.cin; ++c) {
              double* plane = dx.data() + (static_cast<size_t>(b) * d.cin + c) * d.h * d.w;
              for (int ki = 0; ki < d.kh; ++ki) {
                const int sr = i * d.stride + ki - d.pad;
                if (sr < 0 || sr >= d.h) continue;
                for (int kj = 0; kj < d.kw; ++kj) {
                  const int sc = j * d.stride + kj - d.pad;
                  if (sc < 0 || sc >= d.w) continue;
                  plane[static_cast<size_t>(sr) * d.w + sc] += row[(c * d.kh + ki) * d.kw + kj];
                }
              }
            }
          }
    }
  });
}

// ---------------------------------------------------------------------------
// pointwise

Var Graph::relu(Var x) {
  const Tensor& xv = value(x);
  Tensor y(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) y[i] = xv[i] > 0.0 ? xv[i] : 0.0;
  if (!requires_grad(x)) return push(std::move(y), false, nullptr);
  return push(std::move(y), true, [x](Graph& g, const Tensor& go) {
    const Tensor& xin = g.value(x);
    Tensor& dx = g.grad_buf(x);
    // subgradient at exactly 0 is 0
    for (std::size_t i = 0; i < xin.size(); ++i)
      if (xin[i] > 0.0) dx[i] += go[i];
  });
}

Var Graph::sigmoid(Var x) {
  const Tensor& xv = value(x);
  Tensor y(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) {
    const double v = xv[i];
    y[i] = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  }
  if (!requires_grad(x)) return push(std::move(y), false, nullptr);
  Var out = push(std::move(y), true, nullptr);
  Node& n = nodes_[static_cast<size_t>(out.id)];
  n.backward = [x, out](Graph& g, const Tensor& go) {
    const Tensor& yv = g.value(out);
    Tensor& dx = g.grad_buf(x);
    for (std::size_t i = 0; i < yv.size(); ++i) dx[i] += go[i] * yv[i] * (1.0 - yv[i]);
  };
  return out;
}

// ---------------------------------------------------------------------------
// concat

Var Graph::concat(const std::vector<Var>& xs, int axis) {
  if (xs.empty()) throw ContractError("concat: needs at least one input");
  const Tensor& first = value(xs[0]);
  const int rank = first.rank();
  if (axis < 0 || axis >= rank) throw DimensionError("concat: axis " + std::to_string(axis) + " out of range");
  std::vector<int> out_shape = first.shape();
  int axis_total = first.dim(axis);
  for (std::size_t i = 1; i < xs.size(); ++i) {
    const Tensor& t = value(xs[i]);
    if (t.rank() != rank) throw DimensionError("concat: rank mismatch at input " + std::to_string(i));
    for (int a = 0; a < rank; ++a) {
      if (a == axis) continue;
      if (t.dim(a) != first.dim(a))
        throw DimensionError("concat: input " + std::to_string(i) + " differs on non-concat axis " + std::to_string(a));
    }
    axis_total += t.dim(axis);
  }
  out_shape[static_cast<size_t>(axis)] = axis_total;

  std::size_t outer = 1, inner = 1;
  for (int a = 0; a < axis; ++a) outer *= static_cast<size_t>(first.dim(a));
  for (int a = axis + 1; a < rank; ++a) inner *= static_cast<size_t>(first.dim(a));

  Tensor y(out_shape);
  std::size_t offset = 0;  // in units of inner, along axis
  for (Var v : xs) {
    const Tensor& t = value(v);
    const std::size_t len = static_cast<size_t>(t.dim(axis)) * inner;
    for (std::size_t o = 0; o < outer; ++o)
      std::memcpy(y.data() + (o * axis_total * inner) + offset, t.data() + o * len, len * sizeof(double));
    offset += len;
  }

  if (!any_requires(xs)) return push(std::move(y), false, nullptr);
  auto inputs = xs;
  return push(std::move(y), true, [inputs, outer, inner, axis_total](Graph& g, const Tensor& go) {
    std::size_t offset = 0;
    for (Var v : inputs) {
      const Tensor& t = g.value(v);
      const std::size_t len = t.size() / outer;
      if (g.requires_grad(v)) {
        Tensor& dv = g.grad_buf(v);
        for (std::size_t o = 0; o < outer; ++o) {
          const double* src = go.data() + (o * static_cast<size_t>(axis_total) * inner) + offset;
          double* dst = dv.data() + o * len;
          for (std::size_t i = 0; i < len; ++i) dst[i] += src[i];
        }
      }
      offset += len;
    }
  });
}

// ---------------------------------------------------------------------------
// scale_mul and small utility ops

Var Graph::scale_mul(Var x, Var s) {
  const Tensor& xv = value(x);
  const Tensor& sv = value(s);
  if (sv.size() != 1) throw ContractError("scale_mul: s must be a scalar node");
  Tensor y(xv.shape());
  const double sc = sv[0];
  for (std::size_t i = 0; i < xv.size(); ++i) y[i] = sc * xv[i];
  std::vector<Var> ins{x, s};
  if (!any_requires(ins)) return push(std::move(y), false, nullptr);
  return push(std::move(y), true, [x, s](Graph& g, const Tensor& go) {
    const Tensor& xin = g.value(x);
    const double sc = g.value(s)[0];
    if (g.requires_grad(x)) {
      Tensor& dx = g.grad_buf(x);
      for (std::size_t i = 0; i < xin.size(); ++i) dx[i] += sc * go[i];
    }
    if (g.requires_grad(s)) {
      double acc = 0.0;
      for (std::size_t i = 0; i < xin.size(); ++i) acc += xin[i] * go[i];
      g.grad_buf(s)[0] += acc;
    }
  });
}

Var Graph::add(Var a, Var b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  if (!av.same_shape(bv)) throw DimensionError("add: shape mismatch");
  Tensor y(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) y[i] = av[i] + bv[i];
  std::vector<Var> ins{a, b};
  if (!any_requires(ins)) return push(std::move(y), false, nullptr);
  return push(std::move(y), true, [a, b](Graph& g, const Tensor& go) {
    for (Var v : {a, b}) {
      if (!g.requires_grad(v)) continue;
      Tensor& d = g.grad_buf(v);
      for (std::size_t i = 0; i < go.size(); ++i) d[i] += go[i];
    }
  });
}

Var Graph::mul(Var a, Var b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  if (!av.same_shape(bv)) throw DimensionError("mul: shape mismatch");
  Tensor y(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) y[i] = av[i] * bv[i];
  std::vector<Var> ins{a, b};
  if (!any_requires(ins)) return push(std::move(y), false, nullptr);
  return push(std::move(y), true, [a, b](Graph& g, const Tensor& go) {
    const Tensor& av2 = g.value(a);
    const Tensor& bv2 = g.value(b);
    if (g.requires_grad(a)) {
      Tensor& da = g.grad_buf(a);
      for (std::size_t i = 0; i < go.size(); ++i) da[i] += bv2[i] * go[i];
    }
    if (g.requires_grad(b)) {
      Tensor& db = g.grad_buf(b);
      for (std::size_t i = 0; i < go.size(); ++i) db[i] += av2[i] * go[i];
    }
  });
}

Var Graph::sum(Var x) {
  const Tensor& xv = value(x);
  double acc = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) acc += xv[i];
  if (!requires_grad(x)) return push(Tensor::scalar(acc), false, nullptr);
  return push(Tensor::scalar(acc), true, [x](Graph& g, const Tensor& go) {
    Tensor& dx = g.grad_buf(x);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += go[0];
  });
}

Var Graph::scale_const(Var x, double c) {
  const Tensor& xv = value(x);
  Tensor y(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) y[i] = c * xv[i];
  if (!requires_grad(x)) return push(std::move(y), false, nullptr);
  return push(std::move(y), true, [x, c](Graph& g, const Tensor& go) {
    Tensor& dx = g.grad_buf(x);
    for (std::size_t i = 0; i < go.size(); ++i) dx[i] += c * go[i];
  });
}

Var Graph::reshape(Var x, std::vector<int> shape) {
  const Tensor& xv = value(x);
  Tensor y(std::move(shape), xv.vec());
  if (!requires_grad(x)) return push(std::move(y), false, nullptr);
  return push(std::move(y), true, [x](Graph& g, const Tensor& go) {
    Tensor& dx = g.grad_buf(x);
    for (std::size_t i = 0; i < go.size(); ++i) dx[i] += go[i];
  });
}

Var Graph::slice_rows(Var x, int row0, int nrows) {
  const Tensor& xv = value(x);
  if (xv.rank() < 1) throw DimensionError("slice_rows: rank-0 input");
  const int total = xv.dim(0);
  if (row0 < 0 || nrows < 1 || row0 + nrows > total)
    throw ContractError("slice_rows: range [" + std::to_string(row0) + ", " + std::to_string(row0 + nrows) +
                        ") out of " + std::to_string(total) + " rows");
  const std::size_t stride = xv.size() / static_cast<size_t>(total);
  std::vector<int> shape = xv.shape();
  shape[0] = nrows;
  Tensor y(shape);
  std::memcpy(y.data(), xv.data() + static_cast<size_t>(row0) * stride, static_cast<size_t>(nrows) * stride * sizeof(double));
  if (!requires_grad(x)) return push(std::move(y), false, nullptr);
  return push(std::move(y), true, [x, row0, stride](Graph& g, const Tensor& go) {
    Tensor& dx = g.grad_buf(x);
    double* dst = dx.data() + static_cast<size_t>(row0) * stride;
    for (std::size_t i = 0; i < go.size(); ++i) dst[i] += go[i];
  });
}

Var Graph::pick(Var x, std::size_t flat_index) {
  const Tensor& xv = value(x);
  if (flat_index >= xv.size()) throw ContractError("pick: flat index out of range");
  Tensor y = Tensor::scalar(xv[flat_index]);
  if (!requires_grad(x)) return push(std::move(y), false, nullptr);
  return push(std::move(y), true, [x, flat_index](Graph& g, const Tensor& go) {
    g.grad_buf(x)[flat_index] += go[0];
  });
}

// ---------------------------------------------------------------------------
// maxpool2x2 (stride 2), ties to the smallest flat source index

Var Graph::maxpool2x2(Var x) {
  const Tensor& xv = value(x);
  if (xv.rank() != 4) throw DimensionError("maxpool2x2: expected [B,C,H,W]");
  const int batch = xv.dim(0), ch = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
  if (h < 2 || w < 2) throw DimensionError("maxpool2x2: spatial dims must be >= 2");
  const int ho = h / 2, wo = w / 2;
  Tensor y({batch, ch, ho, wo});
  auto arg = std::make_shared<std::vector<std::size_t>>(y.size());
  for (int b = 0; b < batch; ++b)
    for (int c = 0; c < ch; ++c) {
      const std::size_t plane = (static_cast<size_t>(b) * ch + c) * h * w;
      const std::size_t oplane = (static_cast<size_t>(b) * ch + c) * ho * wo;
      for (int i = 0; i < ho; ++i)
        for (int j = 0; j < wo; ++j) {
          double best = -1.0;
          std::size_t bi = 0;
          bool init = false;
          for (int di = 0; di < 2; ++di)
            for (int dj = 0; dj < 2; ++dj) {
              const std::size_t src = plane + static_cast<size_t>(2 * i + di) * w + (2 * j + dj);
              const double v = xv[src];
              if (!init || v > best) {
                best = v;
                bi = src;
                init = true;
              }
            }
          y[oplane + static_cast<size_t>(i) * wo + j] = best;
          (*arg)[oplane + static_cast<size_t>(i) * wo + j] = bi;
        }
    }
  if (!requires_grad(x)) return push(std::move(y), false, nullptr);
  return push(std::move(y), true, [x, arg](Graph& g, const Tensor& go) {
    Tensor& dx = g.grad_buf(x);
    for (std::size_t i = 0; i < go.size(); ++i) dx[(*arg)[i]] += go[i];
  });
}

// ---------------------------------------------------------------------------
// grad_check

double grad_check(const std::function<Var(Graph&, const std::vector<Var>&)>& op,
                  const std::vector<Tensor>& inputs, double eps) {
  if (eps <= 0.0) throw ContractError("grad_check: eps must be positive");

  auto eval = [&](const std::vector<Tensor>& ins) {
    Graph g;
    std::vector<Var> vars;
    vars.reserve(ins.size());
    for (const Tensor& t : ins) vars.push_back(g.leaf(t, false));
    Var out = op(g, vars);
    if (g.value(out).size() != 1) throw ContractError("grad_check: op must produce a scalar");
    const double v = g.value(out)[0];
    if (!std::isfinite(v)) throw NumericError("grad_check: non-finite forward value");
    return v;
  };

  // analytic gradients
  Graph g;
  std::vector<Var> vars;
  vars.reserve(inputs.size());
  for (const Tensor& t : inputs) vars.push_back(g.leaf(t, true));
  Var out = op(g, vars);
  if (g.value(out).size() != 1) throw ContractError("grad_check: op must produce a scalar");
  if (!std::isfinite(g.value(out)[0])) throw NumericError("grad_check: non-finite forward value");
  g.backward(out);

  double max_rel = 0.0;
  std::vector<Tensor> probe = inputs;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    // grad_buf allocates zeros for leaves off every path to the loss
    const Tensor& gbuf = g.grad_buf(vars[t]);
    for (std::size_t i = 0; i < inputs[t].size(); ++i) {
      const double keep = probe[t][i];
      probe[t][i] = keep + eps;
      const double fp = eval(probe);
      probe[t][i] = keep - eps;
      const double fm = eval(probe);
      probe[t][i] = keep;
      const double numeric = (fp - fm) / (2.0 * eps);
      if (!std::isfinite(numeric)) throw NumericError("grad_check: non-finite finite-difference value");
      const double a = gbuf[i];
      const double rel = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
      if (rel > max_rel) max_rel = rel;
    }
  }
  return max_rel;
}

}  // namespace pbpa
