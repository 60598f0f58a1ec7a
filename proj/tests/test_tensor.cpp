#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "pbpa/rng.hpp"
#include "pbpa/tensor.hpp"

using namespace pbpa;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

// Independent oracle: naive triple-loop matrix product.
Tensor matmul_oracle(const Tensor& x, const Tensor& w, const Tensor& b) {
  const int batch = x.dim(0), in = x.dim(1), out = w.dim(1);
  Tensor y({batch, out});
  for (int r = 0; r < batch; ++r)
    for (int c = 0; c < out; ++c) {
      double acc = b[static_cast<size_t>(c)];
      for (int k = 0; k < in; ++k)
        acc += x[static_cast<size_t>(r) * in + k] * w[static_cast<size_t>(k) * out + c];
      y[static_cast<size_t>(r) * out + c] = acc;
    }
  return y;
}

// Independent oracle: direct 6-loop convolution.
Tensor conv_oracle(const Tensor& x, const Tensor& k, int stride, int pad) {
  const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int F = k.dim(0), kh = k.dim(2), kw = k.dim(3);
  const int ho = (H + 2 * pad - kh) / stride + 1;
  const int wo = (W + 2 * pad - kw) / stride + 1;
  Tensor y({B, F, ho, wo});
  for (int b = 0; b < B; ++b)
    for (int f = 0; f < F; ++f)
      for (int i = 0; i < ho; ++i)
        for (int j = 0; j < wo; ++j) {
          double acc = 0.0;
          for (int c = 0; c < C; ++c)
            for (int ki = 0; ki < kh; ++ki)
              for (int kj = 0; kj < kw; ++kj) {
                const int sr = i * stride + ki - pad;
                const int sc = j * stride + kj - pad;
                if (sr < 0 || sr >= H || sc < 0 || sc >= W) continue;
                acc += x[((static_cast<size_t>(b) * C + c) * H + sr) * W + sc] *
                       k[((static_cast<size_t>(f) * C + c) * kh + ki) * kw + kj];
              }
          y[((static_cast<size_t>(b) * F + f) * ho + i) * wo + j] = acc;
        }
  return y;
}

}  // namespace

TEST_CASE("fc identity and zero weights") {
  Graph g;
  Var x = g.leaf(Tensor({1, 2}, {1, 2}));
  Var w_id = g.leaf(Tensor({2, 2}, {1, 0, 0, 1}));
  Var b0 = g.leaf(Tensor({2}, {0, 0}));
  Var y = g.fc(x, w_id, b0);
  CHECK(g.value(y)[0] == 1.0);
  CHECK(g.value(y)[1] == 2.0);

  Graph g2;
  Var x2 = g2.leaf(Tensor({1, 2}, {1, 2}));
  Var wz = g2.leaf(Tensor({2, 2}, {0, 0, 0, 0}));
  Var b2 = g2.leaf(Tensor({2}, {3, 4}));
  Var y2 = g2.fc(x2, wz, b2);
  CHECK(g2.value(y2)[0] == 3.0);
  CHECK(g2.value(y2)[1] == 4.0);
}

TEST_CASE("fc random case matches triple-loop oracle") {
  Rng rng(42);
  const Tensor x = random_tensor({2, 3}, rng);
  const Tensor w = random_tensor({3, 4}, rng);
  const Tensor b = random_tensor({4}, rng);
  Graph g;
  Var y = g.fc(g.leaf(x), g.leaf(w), g.leaf(b));
  const Tensor expect = matmul_oracle(x, w, b);
  REQUIRE(g.value(y).same_shape(expect));
  for (std::size_t i = 0; i < expect.size(); ++i)
    CHECK(g.value(y)[i] == doctest::Approx(expect[i]).epsilon(1e-12));
}

TEST_CASE("fc shape mismatch names the axis") {
  Graph g;
  Var x = g.leaf(Tensor({1, 3}));
  Var w = g.leaf(Tensor({2, 2}));
  Var b = g.leaf(Tensor({2}));
  CHECK_THROWS_AS(g.fc(x, w, b), DimensionError);
  CHECK_THROWS_WITH_AS(g.fc(x, w, b), doctest::Contains("inner axis"), DimensionError);
}

TEST_CASE("conv2d trivial cases") {
  // 3x3 ones * 3x3 ones kernel, no pad -> single 9
  Graph g;
  Var x = g.leaf(Tensor::full({1, 1, 3, 3}, 1.0));
  Var k = g.leaf(Tensor::full({1, 1, 3, 3}, 1.0));
  Var y = g.conv2d(x, k, 1, 0);
  REQUIRE(g.value(y).size() == 1);
  CHECK(g.value(y)[0] == 9.0);

  // identity 1x1 kernel
  Rng rng(7);
  const Tensor xr = random_tensor({2, 1, 4, 5}, rng);
  Graph g2;
  Var y2 = g2.conv2d(g2.leaf(xr), g2.leaf(Tensor({1, 1, 1, 1}, {1.0})), 1, 0);
  REQUIRE(g2.value(y2).same_shape(xr));
  CHECK(std::memcmp(g2.value(y2).data(), xr.data(), xr.size() * sizeof(double)) == 0);
}

TEST_CASE("conv2d random case matches 6-loop oracle") {
  Rng rng(11);
  const Tensor x = random_tensor({2, 3, 6, 7}, rng);
  const Tensor k = random_tensor({4, 3, 3, 3}, rng);
  for (auto [stride, pad] : {std::pair{1, 1}, std::pair{2, 0}, std::pair{2, 1}}) {
    Graph g;
    Var y = g.conv2d(g.leaf(x), g.leaf(k), stride, pad);
    const Tensor expect = conv_oracle(x, k, stride, pad);
    REQUIRE(g.value(y).same_shape(expect));
    for (std::size_t i = 0; i < expect.size(); ++i)
      CHECK(g.value(y)[i] == doctest::Approx(expect[i]).epsilon(1e-12));
  }
}

TEST_CASE("conv2d kernel larger than padded input") {
  Graph g;
  Var x = g.leaf(Tensor({1, 1, 2, 2}));
  Var k = g.leaf(Tensor({1, 1, 5, 5}));
  CHECK_THROWS_AS(g.conv2d(x, k, 1, 1), DimensionError);
}

TEST_CASE("pointwise relu and sigmoid") {
  Graph g;
  Var x = g.leaf(Tensor({3}, {-1.0, 0.0, 2.0}));
  Var y = g.relu(x);
  CHECK(g.value(y)[0] == 0.0);
  CHECK(g.value(y)[1] == 0.0);
  CHECK(g.value(y)[2] == 2.0);

  Var s = g.sigmoid(g.leaf(Tensor({1}, {0.0})));
  CHECK(g.value(s)[0] == doctest::Approx(0.5).epsilon(1e-15));

  // derivative at 0 is 0.25
  Graph g2;
  Var x2 = g2.leaf(Tensor({1}, {0.0}));
  Var y2 = g2.sum(g2.sigmoid(x2));
  g2.backward(y2);
  CHECK(g2.grad(x2)[0] == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("sigmoid matches high-precision reference on random vector") {
  Rng rng(5);
  const Tensor x = random_tensor({64}, rng, -6.0, 6.0);
  Graph g;
  Var y = g.sigmoid(g.leaf(x));
  for (std::size_t i = 0; i < x.size(); ++i) {
    // reference evaluated through the long-double exponential
    const long double ref = 1.0L / (1.0L + std::exp(static_cast<long double>(-x[i])));
    CHECK(std::abs(g.value(y)[i] - static_cast<double>(ref)) < 1e-15);
  }
}

TEST_CASE("concat forward, identity, and slice round-trip") {
  Graph g;
  Var a = g.leaf(Tensor({1}, {1.0}));
  Var b = g.leaf(Tensor({1}, {2.0}));
  Var y = g.concat({a, b}, 0);
  CHECK(g.value(y).shape() == std::vector<int>{2});
  CHECK(g.value(y)[0] == 1.0);
  CHECK(g.value(y)[1] == 2.0);

  // single input is the identity
  Var one = g.concat({a}, 0);
  CHECK(g.value(one).vec() == g.value(a).vec());

  // three random blocks: slicing the concat recovers each block exactly
  Rng rng(3);
  const Tensor t1 = random_tensor({2, 3}, rng), t2 = random_tensor({1, 3}, rng), t3 = random_tensor({4, 3}, rng);
  Graph g2;
  Var c = g2.concat({g2.leaf(t1), g2.leaf(t2), g2.leaf(t3)}, 0);
  Var s2 = g2.slice_rows(c, 2, 1);
  CHECK(std::memcmp(g2.value(s2).data(), t2.data(), t2.size() * sizeof(double)) == 0);
  Var s3 = g2.slice_rows(c, 3, 4);
  CHECK(std::memcmp(g2.value(s3).data(), t3.data(), t3.size() * sizeof(double)) == 0);
}

TEST_CASE("concat rejects mismatched non-concat axes") {
  Graph g;
  Var a = g.leaf(Tensor({2, 3}));
  Var b = g.leaf(Tensor({2, 4}));
  CHECK_THROWS_AS(g.concat({a, b}, 0), DimensionError);
}

TEST_CASE("concat routes gradients disjointly") {
  Rng rng(9);
  const Tensor t1 = random_tensor({2, 2}, rng), t2 = random_tensor({3, 2}, rng);
  Graph g;
  Var a = g.leaf(t1), b = g.leaf(t2);
  Var c = g.concat({a, b}, 0);
  // weight the two blocks differently so cross-contamination would show
  Tensor w(g.value(c).shape());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = (i < t1.size()) ? 1.0 : 10.0;
  Var loss = g.sum(g.mul(c, g.constant(w)));
  g.backward(loss);
  for (std::size_t i = 0; i < t1.size(); ++i) CHECK(g.grad(a)[i] == 1.0);
  for (std::size_t i = 0; i < t2.size(); ++i) CHECK(g.grad(b)[i] == 10.0);
}

TEST_CASE("scale_mul values and zero case") {
  Graph g;
  Var x = g.leaf(Tensor::full({2, 2}, 1.0));
  Var s = g.leaf(Tensor::scalar(0.5));
  Var y = g.scale_mul(x, s);
  for (std::size_t i = 0; i < 4; ++i) CHECK(g.value(y)[i] == 0.5);

  Graph g2;
  Var x2 = g2.leaf(Tensor({2}, {3.0, -4.0}));
  Var s2 = g2.leaf(Tensor::scalar(0.0));
  Var y2 = g2.scale_mul(x2, s2);
  CHECK(g2.value(y2)[0] == 0.0);
  CHECK(g2.value(y2)[1] == 0.0);
  Var loss = g2.sum(y2);
  g2.backward(loss);
  // grad to s equals sum(x * grad_out) with grad_out = 1
  CHECK(g2.grad(s2)[0] == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("scale_mul gradient vs finite differences") {
  Rng rng(13);
  const Tensor x = random_tensor({3, 2}, rng);
  const Tensor s = random_tensor({1}, rng);
  const double err = grad_check(
      [](Graph& g, const std::vector<Var>& vs) { return g.sum(g.scale_mul(vs[0], vs[1])); }, {x, s}, 1e-6);
  CHECK(err < 1e-6);
}

TEST_CASE("backward basics") {
  // loss = sum(x) -> grad ones
  Graph g;
  Var x = g.leaf(Tensor({4}, {1, 2, 3, 4}));
  Var loss = g.sum(x);
  g.backward(loss);
  for (int i = 0; i < 4; ++i) CHECK(g.grad(x)[static_cast<size_t>(i)] == 1.0);

  // loss = sum(x*x), x=[1,2] -> grad=[2,4]
  Graph g2;
  Var x2 = g2.leaf(Tensor({2}, {1, 2}));
  Var loss2 = g2.sum(g2.mul(x2, x2));
  g2.backward(loss2);
  CHECK(g2.grad(x2)[0] == 2.0);
  CHECK(g2.grad(x2)[1] == 4.0);
}

TEST_CASE("backward rejects non-scalar loss and repeat calls") {
  Graph g;
  Var x = g.leaf(Tensor({2}, {1, 2}));
  CHECK_THROWS_AS(g.backward(x), ContractError);

  Graph g2;
  Var x2 = g2.leaf(Tensor({2}, {1, 2}));
  Var loss = g2.sum(x2);
  g2.backward(loss);
  CHECK_THROWS_AS(g2.backward(loss), StateError);
  g2.reset();
  g2.backward(loss);  // allowed after reset
  CHECK(g2.grad(x2)[0] == 1.0);
}

TEST_CASE("grad_check on fc, sigmoid chain, relu away from kinks") {
  Rng rng(21);
  const Tensor x = random_tensor({2, 3}, rng);
  const Tensor w = random_tensor({3, 4}, rng);
  const Tensor b = random_tensor({4}, rng);
  const double fc_err = grad_check(
      [](Graph& g, const std::vector<Var>& vs) { return g.sum(g.fc(vs[0], vs[1], vs[2])); }, {x, w, b}, 1e-6);
  CHECK(fc_err < 1e-6);

  const double sig_err = grad_check(
      [](Graph& g, const std::vector<Var>& vs) { return g.sum(g.sigmoid(g.fc(vs[0], vs[1], vs[2]))); }, {x, w, b},
      1e-6);
  CHECK(sig_err < 1e-6);

  // relu probed away from 0: push inputs out of the kink neighborhood
  Tensor xr = random_tensor({4, 4}, rng);
  for (std::size_t i = 0; i < xr.size(); ++i)
    if (std::abs(xr[i]) < 1e-4) xr[i] = xr[i] < 0 ? -1e-4 : 1e-4;
  const double relu_err =
      grad_check([](Graph& g, const std::vector<Var>& vs) { return g.sum(g.relu(vs[0])); }, {xr}, 1e-6);
  CHECK(relu_err < 1e-6);
}

TEST_CASE("grad_check across all differentiable ops stays under 1e-5") {
  Rng rng(37);
  for (int rep = 0; rep < 3; ++rep) {
    const Tensor x = random_tensor({2, 2, 6, 6}, rng);
    const Tensor k = random_tensor({3, 2, 3, 3}, rng);
    const double conv_err = grad_check(
        [](Graph& g, const std::vector<Var>& vs) {
          return g.sum(g.sigmoid(g.conv2d(vs[0], vs[1], 1, 1)));
        },
        {x, k}, 1e-6);
    CHECK(conv_err < 1e-5);

    const Tensor a = random_tensor({3, 5}, rng), b2 = random_tensor({3, 5}, rng);
    const double mix_err = grad_check(
        [](Graph& g, const std::vector<Var>& vs) {
          Var c = g.concat({vs[0], vs[1]}, 1);
          return g.sum(g.mul(c, c));
        },
        {a, b2}, 1e-6);
    CHECK(mix_err < 1e-5);
  }
}

TEST_CASE("maxpool2x2 forward and gradient") {
  Graph g;
  Var x = g.leaf(Tensor({1, 1, 2, 4}, {1, 5, 2, 2, 3, 4, 2, 2}));
  Var y = g.maxpool2x2(x);
  REQUIRE(g.value(y).shape() == std::vector<int>{1, 1, 1, 2});
  CHECK(g.value(y)[0] == 5.0);
  CHECK(g.value(y)[1] == 2.0);  // tie in the second window -> first source
  Var loss = g.sum(y);
  g.backward(loss);
  CHECK(g.grad(x)[1] == 1.0);
  CHECK(g.grad(x)[2] == 1.0);  // smallest flat index of the tied 2s
  CHECK(g.grad(x)[3] == 0.0);
}

TEST_CASE("forward pass is bit-deterministic") {
  Rng rng(99);
  const Tensor x = random_tensor({2, 3, 8, 8}, rng);
  const Tensor k = random_tensor({4, 3, 3, 3}, rng);
  auto run = [&]() {
    Graph g;
    Var y = g.relu(g.conv2d(g.leaf(x), g.leaf(k), 1, 1));
    return g.value(y);
  };
  const Tensor y1 = run(), y2 = run();
  REQUIRE(y1.size() == y2.size());
  CHECK(std::memcmp(y1.data(), y2.data(), y1.size() * sizeof(double)) == 0);
}

TEST_CASE("full small pipeline gradients match finite differences") {
  Rng rng(51);
  const Tensor x = random_tensor({1, 2, 8, 8}, rng);
  const Tensor k = random_tensor({2, 2, 3, 3}, rng);
  const Tensor w = random_tensor({2 * 4 * 4, 3}, rng, -0.5, 0.5);
  const Tensor b = random_tensor({3}, rng);
  const double err = grad_check(
      [](Graph& g, const std::vector<Var>& vs) {
        Var h = g.maxpool2x2(g.relu(g.conv2d(vs[0], vs[1], 1, 1)));
        Var flat = g.reshape(h, {1, 2 * 4 * 4});
        return g.sum(g.sigmoid(g.fc(flat, vs[2], vs[3])));
      },
      {x, k, w, b}, 1e-6);
  CHECK(err < 1e-5);
}
