#include "pairlock/layers.hpp"

#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "pairlock/gradcheck.hpp"

using namespace pairlock;
using pairlock::testing::random_tensor;

namespace {

double dot(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.numel(); ++i) s += a.data[i] * b.data[i];
  return s;
}

constexpr double kLayerTol = 1e-5;

}  // namespace

TEST_CASE("conv2d forward examples") {
  // 1x1 identity kernel
  Rng rng(1);
  const Tensor x = random_tensor(rng, {1, 4, 5});
  const Tensor w({1, 1, 1, 1}, {1.0});
  const Tensor b({1}, {0.0});
  const Tensor y = conv2d_forward(x, w, b, 1, 0);
  CHECK(y.data == x.data);

  // all-ones 3x3 kernel, pad 1, constant-1 input: center value 9
  Tensor x1({1, 5, 5});
  for (double& v : x1.data) v = 1.0;
  Tensor w1({1, 1, 3, 3});
  for (double& v : w1.data) v = 1.0;
  const Tensor y1 = conv2d_forward(x1, w1, b, 1, 1);
  CHECK(y1.shape == std::vector<int>{1, 5, 5});
  CHECK(y1.data[2 * 5 + 2] == doctest::Approx(9.0).epsilon(1e-15));
  CHECK(y1.data[0] == doctest::Approx(4.0).epsilon(1e-15));  // corner window
}

TEST_CASE("conv2d gradient check") {
  Rng rng(2);
  ParamSet ps;
  ps.add("x", random_tensor(rng, {2, 5, 6}));
  ps.add("w", random_tensor(rng, {3, 2, 3, 3}));
  ps.add("b", random_tensor(rng, {3}));
  const Tensor proj = random_tensor(rng, {3, 3, 3});  // stride 2, pad 1 output
  auto forward = [&] {
    return dot(conv2d_forward(ps.at("x").value, ps.at("w").value, ps.at("b").value, 2, 1), proj);
  };
  const ConvGrads g = conv2d_backward(ps.at("x").value, ps.at("w").value, 2, 1, proj);
  ps.at("x").grad = g.dx;
  ps.at("w").grad = g.dw;
  ps.at("b").grad = g.db;
  CHECK(gradient_check(forward, ps).max_rel_error <= kLayerTol);
}

TEST_CASE("transposed conv examples and gradient") {
  const Tensor w_id({1, 1, 1, 1}, {1.0});
  const Tensor b({1}, {0.0});
  Rng rng(3);
  const Tensor x = random_tensor(rng, {1, 3, 3});
  CHECK(transposed_conv2d_forward(x, w_id, b, 1).data == x.data);

  Tensor x1({1, 1, 1}, {2.5});
  Tensor w2({1, 1, 2, 2});
  for (double& v : w2.data) v = 1.0;
  const Tensor y = transposed_conv2d_forward(x1, w2, b, 2);
  CHECK(y.shape == std::vector<int>{1, 2, 2});
  for (double v : y.data) CHECK(v == doctest::Approx(2.5).epsilon(1e-15));

  ParamSet ps;
  ps.add("x", random_tensor(rng, {2, 3, 4}));
  ps.add("w", random_tensor(rng, {2, 3, 2, 2}));
  ps.add("b", random_tensor(rng, {3}));
  const Tensor proj = random_tensor(rng, {3, 6, 8});
  auto forward = [&] {
    return dot(transposed_conv2d_forward(ps.at("x").value, ps.at("w").value, ps.at("b").value, 2), proj);
  };
  const ConvGrads g = transposed_conv2d_backward(ps.at("x").value, ps.at("w").value, 2, proj);
  ps.at("x").grad = g.dx;
  ps.at("w").grad = g.dw;
  ps.at("b").grad = g.db;
  CHECK(gradient_check(forward, ps).max_rel_error <= kLayerTol);
}

TEST_CASE("transposed conv is the adjoint of conv") {
  // <conv(x), y> == <x, tconv(y)> with shared kernel (bias zero).
  Rng rng(4);
  const Tensor x = random_tensor(rng, {2, 6, 6});
  const Tensor w = random_tensor(rng, {3, 2, 3, 3});  // conv layout [C_out, C_in, kh, kw]
  const Tensor zero_b3({3}), zero_b2({2});
  const Tensor cx = conv2d_forward(x, w, zero_b3, 1, 0);  // [3,4,4]
  const Tensor y = random_tensor(rng, {3, 4, 4});
  // tconv wants [C_in, C_out, kh, kw] where its input has C_in channels
  Tensor wt({3, 2, 3, 3});
  for (int co = 0; co < 3; ++co)
    for (int ci = 0; ci < 2; ++ci)
      for (int k = 0; k < 9; ++k)
        wt.data[(static_cast<size_t>(co) * 2 + ci) * 9 + k] =
            w.data[(static_cast<size_t>(co) * 2 + ci) * 9 + k];
  const Tensor ty = transposed_conv2d_forward(y, wt, zero_b2, 1);
  CHECK(dot(cx, y) == doctest::Approx(dot(x, ty)).epsilon(1e-10));
}

TEST_CASE("max pool examples and gradient") {
  Tensor c({1, 4, 4});
  for (double& v : c.data) v = 3.0;
  const MaxPoolResult r = max_pool2d_forward(c, 2, 2);
  for (double v : r.y.data) CHECK(v == 3.0);

  Tensor x({1, 2, 2}, {1, 2, 3, 4});
  CHECK(max_pool2d_forward(x, 2, 2).y.data[0] == 4.0);

  Rng rng(5);
  ParamSet ps;
  ps.add("x", random_tensor(rng, {2, 6, 6}));
  const Tensor proj = random_tensor(rng, {2, 3, 3});
  auto forward = [&] { return dot(max_pool2d_forward(ps.at("x").value, 2, 2).y, proj); };
  const MaxPoolResult fwd = max_pool2d_forward(ps.at("x").value, 2, 2);
  ps.at("x").grad = max_pool2d_backward(ps.at("x").value, fwd, proj);
  CHECK(gradient_check(forward, ps).max_rel_error <= kLayerTol);
}

TEST_CASE("adaptive average pool") {
  Rng rng(6);
  const Tensor x = random_tensor(rng, {2, 5, 7});
  const Tensor same = adaptive_average_pool2d_forward(x, 5, 7);
  for (size_t i = 0; i < x.numel(); ++i)
    CHECK(same.data[i] == doctest::Approx(x.data[i]).epsilon(1e-15));

  Tensor ones({1, 4, 4});
  for (double& v : ones.data) v = 1.0;
  for (double v : adaptive_average_pool2d_forward(ones, 2, 2).data)
    CHECK(v == doctest::Approx(1.0).epsilon(1e-15));

  Tensor row({1, 1, 4}, {1, 2, 3, 4});
  const Tensor pooled = adaptive_average_pool2d_forward(row, 1, 2);
  CHECK(pooled.data[0] == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(pooled.data[1] == doctest::Approx(3.5).epsilon(1e-15));

  // global mean preserved when windows tile exactly
  const Tensor big = random_tensor(rng, {1, 8, 12});
  const Tensor small = adaptive_average_pool2d_forward(big, 4, 3);
  double m1 = 0, m2 = 0;
  for (double v : big.data) m1 += v;
  for (double v : small.data) m2 += v;
  CHECK(m1 / big.numel() == doctest::Approx(m2 / small.numel()).epsilon(1e-12));

  ParamSet ps;
  ps.add("x", random_tensor(rng, {2, 5, 7}));
  const Tensor proj = random_tensor(rng, {2, 3, 4});
  auto forward = [&] { return dot(adaptive_average_pool2d_forward(ps.at("x").value, 3, 4), proj); };
  ps.at("x").grad = adaptive_average_pool2d_backward({2, 5, 7}, proj);
  CHECK(gradient_check(forward, ps).max_rel_error <= kLayerTol);
}

TEST_CASE("fully connected") {
  Tensor x({3}, {1, 2, 3});
  Tensor id({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  Tensor zero({3});
  CHECK(fully_connected_forward(x, id, zero).data == x.data);

  Tensor zw({2, 3});
  Tensor b({2}, {5, -1});
  CHECK(fully_connected_forward(x, zw, b).data == b.data);

  Rng rng(7);
  ParamSet ps;
  ps.add("x", random_tensor(rng, {6}));
  ps.add("w", random_tensor(rng, {4, 6}));
  ps.add("b", random_tensor(rng, {4}));
  const Tensor proj = random_tensor(rng, {4});
  auto forward = [&] {
    return dot(fully_connected_forward(ps.at("x").value, ps.at("w").value, ps.at("b").value), proj);
  };
  const ConvGrads g = fully_connected_backward(ps.at("x").value, ps.at("w").value, proj);
  ps.at("x").grad = g.dx;
  ps.at("w").grad = g.dw;
  ps.at("b").grad = g.db;
  CHECK(gradient_check(forward, ps).max_rel_error <= kLayerTol);
}

TEST_CASE("activations") {
  Tensor x({3}, {-1, 0, 2});
  const Tensor r = relu_forward(x);
  CHECK(r.data == std::vector<double>{0, 0, 2});
  const Tensor s = sigmoid_forward(Tensor({1}, {0.0}));
  CHECK(s.data[0] == doctest::Approx(0.5).epsilon(1e-15));
  Rng rng(8);
  // +-30 keeps exp() away from the range where the quotient rounds to 1.0
  for (int i = 0; i < 1000; ++i) {
    const double v = sigmoid_forward(Tensor({1}, {rng.uniform(-30, 30)})).data[0];
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("dropout") {
  Rng rng(9);
  Tensor x({100});
  for (double& v : x.data) v = 1.0;
  CHECK(dropout_forward(x, 0.0, true, rng).y.data == x.data);
  CHECK(dropout_forward(x, 0.5, false, rng).y.data == x.data);

  // inverted scaling keeps the expectation at 1
  double sum = 0.0;
  const int draws = 1000;
  for (int i = 0; i < draws; ++i) {
    const DropoutResult r = dropout_forward(x, 0.5, true, rng);
    for (double v : r.y.data) sum += v;
  }
  CHECK(sum / (draws * 100.0) == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("softmax cross entropy") {
  Tensor eq({3}, {0.7, 0.7, 0.7});
  Tensor t({3}, {0, 1, 0});
  const SoftmaxXentResult r = softmax_cross_entropy(eq, t);
  CHECK(r.loss == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  for (double p : r.probs.data) CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  Tensor conf({3}, {30, -30, -30});
  Tensor t0({3}, {1, 0, 0});
  CHECK(softmax_cross_entropy(conf, t0).loss == doctest::Approx(0.0).epsilon(1e-12));

  Rng rng(10);
  for (int i = 0; i < 100; ++i) {
    Tensor logits({4});
    for (double& v : logits.data) v = rng.uniform(-100, 100);
    Tensor target({4});
    target.data[rng.below(4)] = 1.0;
    const SoftmaxXentResult res = softmax_cross_entropy(logits, target);
    double s = 0.0;
    for (double p : res.probs.data) {
      CHECK(p > 0.0);
      s += p;
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    for (size_t j = 0; j < 4; ++j)
      CHECK(res.dlogits.data[j] == doctest::Approx(res.probs.data[j] - target.data[j]).epsilon(1e-12));
  }

  // gradient against finite differences
  ParamSet ps;
  ps.add("logits", random_tensor(rng, {3}, -2, 2));
  Tensor tgt({3}, {0, 0, 1});
  auto forward = [&] { return softmax_cross_entropy(ps.at("logits").value, tgt).loss; };
  ps.at("logits").grad = softmax_cross_entropy(ps.at("logits").value, tgt).dlogits;
  CHECK(gradient_check(forward, ps).max_rel_error <= kLayerTol);
}

TEST_CASE("frobenius loss") {
  Rng rng(11);
  const Tensor t = random_tensor(rng, {2, 3});
  CHECK(frobenius_loss(t, t).loss == 0.0);
  for (double v : frobenius_loss(t, t).dpred.data) CHECK(v == 0.0);

  Tensor ones({2, 2, 1});
  for (double& v : ones.data) v = 1.0;
  CHECK(frobenius_loss(ones, Tensor({2, 2, 1})).loss == doctest::Approx(2.0).epsilon(1e-12));

  ParamSet ps;
  ps.add("pred", random_tensor(rng, {3, 4}));
  const Tensor target = random_tensor(rng, {3, 4});
  auto forward = [&] { return frobenius_loss(ps.at("pred").value, target).loss; };
  ps.at("pred").grad = frobenius_loss(ps.at("pred").value, target).dpred;
  CHECK(gradient_check(forward, ps).max_rel_error <= kLayerTol);
}

TEST_CASE("upsample and bilinear resize gradients") {
  Rng rng(12);
  ParamSet ps;
  ps.add("x", random_tensor(rng, {2, 3, 4}));
  const Tensor proj_up = random_tensor(rng, {2, 6, 8});
  auto fwd_up = [&] { return dot(upsample_nearest2_forward(ps.at("x").value), proj_up); };
  ps.at("x").grad = upsample_nearest2_backward({2, 3, 4}, proj_up);
  CHECK(gradient_check(fwd_up, ps).max_rel_error <= kLayerTol);

  ParamSet ps2;
  ps2.add("x", random_tensor(rng, {2, 4, 5}));
  const Tensor proj_rs = random_tensor(rng, {2, 7, 9});
  auto fwd_rs = [&] { return dot(resize_bilinear_forward(ps2.at("x").value, 7, 9), proj_rs); };
  ps2.at("x").grad = resize_bilinear_backward({2, 4, 5}, proj_rs);
  CHECK(gradient_check(fwd_rs, ps2).max_rel_error <= kLayerTol);

  // identity when dims already match
  const Tensor x = random_tensor(rng, {1, 3, 3});
  CHECK(resize_bilinear_forward(x, 3, 3).data == x.data);
}
