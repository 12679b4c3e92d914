#include <cmath>
#include <numeric>

#include "doctest.h"
#include "error.hpp"
#include "gradcheck.hpp"
#include "ops.hpp"

using namespace slc;

namespace {

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Internal;  // "did not throw" shows up as a mismatch
}

// Straight nested loops with the same summation order as the kernel: bias,
// then channels, then the 3x3 taps row by row.
Tensor naive_conv(const Tensor& x, const Tensor& k, const Tensor& b) {
  const std::size_t ci_n = x.dim(0), h = x.dim(1), w = x.dim(2), co_n = k.dim(0);
  Tensor out({co_n, h - 2, w - 2});
  for (std::size_t co = 0; co < co_n; ++co)
    for (std::size_t y = 0; y + 2 < h; ++y)
      for (std::size_t xx = 0; xx + 2 < w; ++xx) {
        double s = b[co];
        for (std::size_t ci = 0; ci < ci_n; ++ci)
          for (std::size_t ky = 0; ky < 3; ++ky)
            for (std::size_t kx = 0; kx < 3; ++kx)
              s += static_cast<double>(k[((co * ci_n + ci) * 3 + ky) * 3 + kx]) *
                   x.at(ci, y + ky, xx + kx);
        out.at(co, y, xx) = static_cast<float>(s);
      }
  return out;
}

}  // namespace

TEST_CASE("conv2d shapes follow valid-convolution arithmetic") {
  SeededRng rng(1);
  const Tensor k = random_tensor({2, 3, 3, 3}, rng);
  const Tensor b({2});
  for (std::size_t h : {3, 4, 7, 10})
    for (std::size_t w : {3, 5, 8}) {
      const Tensor out = ops::conv2d(Tensor({3, h, w}, 0.5f), k, b);
      CHECK(out.shape() == Shape{2, h - 2, w - 2});
    }
}

TEST_CASE("conv2d 3x256x256 with 32 kernels gives 32x254x254") {
  SeededRng rng(2);
  const Tensor x = random_tensor({3, 256, 256}, rng, 0.0, 1.0);
  const Tensor k = random_tensor({32, 3, 3, 3}, rng);
  CHECK(ops::conv2d(x, k, Tensor({32})).shape() == Shape{32, 254, 254});
}

TEST_CASE("conv2d small oracles") {
  const Tensor ones({1, 3, 3}, 1.0f);
  CHECK(ops::conv2d(ones, Tensor({1, 1, 3, 3}, 1.0f), Tensor({1}))[0] == 9.0f);
  CHECK(ops::conv2d(ones, Tensor({1, 1, 3, 3}), Tensor::from({-2.5f}))[0] == -2.5f);
}

TEST_CASE("conv2d matches the naive loop bit for bit") {
  SeededRng rng(3);
  const Tensor x = random_tensor({4, 13, 11}, rng);
  const Tensor k = random_tensor({5, 4, 3, 3}, rng);
  const Tensor b = random_tensor({5}, rng);
  CHECK(bit_identical(ops::conv2d(x, k, b), naive_conv(x, k, b)));
}

TEST_CASE("conv2d rejects bad shapes") {
  CHECK(code_of([] { ops::conv2d(Tensor({1, 2, 5}), Tensor({1, 1, 3, 3}), Tensor({1})); }) ==
        ErrorCode::Shape);
  CHECK(code_of([] { ops::conv2d(Tensor({2, 5, 5}), Tensor({1, 1, 3, 3}), Tensor({1})); }) ==
        ErrorCode::Shape);
  try {
    ops::conv2d(Tensor({2, 5, 5}), Tensor({1, 1, 3, 3}), Tensor({1}));
  } catch (const Error& e) {
    // The message names both the expected and the actual dims.
    const std::string m = e.what();
    CHECK(m.find("[1x2x3x3]") != std::string::npos);
    CHECK(m.find("[1x1x3x3]") != std::string::npos);
  }
}

TEST_CASE("maxpool2d") {
  SUBCASE("model 1 shape 64x510x510 -> 64x255x255") {
    CHECK(ops::maxpool2d(Tensor({64, 510, 510})).output.shape() == Shape{64, 255, 255});
  }
  SUBCASE("2x2 oracle") {
    const auto r = ops::maxpool2d(Tensor({1, 2, 2}, {1, 2, 3, 4}));
    CHECK(r.output[0] == 4.0f);
    CHECK(r.argmax[0] == 3);
  }
  SUBCASE("constant input") {
    const auto r = ops::maxpool2d(Tensor({2, 6, 6}, 1.5f));
    for (float v : r.output.data()) CHECK(v == 1.5f);
    // Ties route to the first element of each window.
    CHECK(r.argmax[0] == 0);
    CHECK(r.argmax[1] == 2);
  }
  SUBCASE("odd trailing row and column dropped") {
    CHECK(ops::maxpool2d(Tensor({1, 253, 253})).output.shape() == Shape{1, 126, 126});
    CHECK(ops::maxpool2d(Tensor({1, 5, 4})).output.shape() == Shape{1, 2, 2});
  }
  SUBCASE("only window 2 stride 2") {
    CHECK(code_of([] { ops::maxpool2d(Tensor({1, 6, 6}), 3, 3); }) == ErrorCode::Unsupported);
    CHECK(code_of([] { ops::maxpool2d(Tensor({1, 6, 6}), 2, 1); }) == ErrorCode::Unsupported);
  }
  SUBCASE("gradient goes to the winner only") {
    const Tensor x({1, 2, 2}, {1, 5, 5, 2});
    const auto r = ops::maxpool2d(x);
    const Tensor g = ops::maxpool2d_backward(x.shape(), r.argmax, Tensor({1, 1, 1}, 3.0f));
    CHECK(g == Tensor({1, 2, 2}, {0, 3, 0, 0}));
  }
}

TEST_CASE("dense") {
  SUBCASE("hand matvec") {
    const Tensor out = ops::dense(Tensor::from({1, 2}), Tensor({2, 2}, {1, 1, 0, 1}),
                                  Tensor::from({0, 1}));
    CHECK(out == Tensor::from({3, 3}));
  }
  SUBCASE("identity") {
    const Tensor x = Tensor::from({0.25f, -3, 7, 1e-3f});
    Tensor eye({4, 4});
    for (std::size_t i = 0; i < 4; ++i) eye[i * 4 + i] = 1.0f;
    CHECK(ops::dense(x, eye, Tensor({4})) == x);
  }
  SUBCASE("1,016,064 inputs to 64 outputs") {
    const Tensor x({1016064}, 0.001f);
    const Tensor w({64, 1016064}, 0.001f);
    CHECK(ops::dense(x, w, Tensor({64})).shape() == Shape{64});
  }
  SUBCASE("dim mismatch") {
    CHECK(code_of([] { ops::dense(Tensor({3}), Tensor({2, 4}), Tensor({2})); }) ==
          ErrorCode::Shape);
  }
}

TEST_CASE("relu") {
  CHECK(ops::relu(Tensor::from({-1, 0, 2})) == Tensor::from({0, 0, 2}));
  CHECK(ops::relu(Tensor::from({-1, -5, -0.5f})) == Tensor::from({0, 0, 0}));
  const Tensor g = ops::relu_backward(Tensor::from({3, -3, 0}), Tensor::from({1, 1, 1}));
  CHECK(g == Tensor::from({1, 0, 0}));

  // Central differences away from the kink agree exactly.
  for (double x0 : {3.0, -3.0}) {
    const double h = 0.125;
    const double fd = (std::max(0.0, x0 + h) - std::max(0.0, x0 - h)) / (2 * h);
    CHECK(fd == (x0 > 0 ? 1.0 : 0.0));
  }
}

TEST_CASE("softmax") {
  const Tensor z = ops::softmax(Tensor({8}));
  for (float v : z.data()) CHECK(v == doctest::Approx(0.125).epsilon(1e-7));

  const Tensor p = ops::softmax(Tensor::from({1, 2}));
  CHECK(p[0] == doctest::Approx(0.26894).epsilon(1e-4));
  CHECK(p[1] == doctest::Approx(0.73106).epsilon(1e-4));

  SeededRng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor x = random_tensor({8}, rng, -30, 30);
    const Tensor a = ops::softmax(x);
    double s = 0.0;
    for (float v : a.data()) {
      CHECK(v > 0.0f);
      CHECK(v <= 1.0f);
      s += v;
    }
    // Strictly inside (0, 1) while the logit spread stays within f32 reach.
    const Tensor narrow = ops::softmax(random_tensor({8}, rng, -5, 5));
    for (float v : narrow.data()) {
      CHECK(v > 0.0f);
      CHECK(v < 1.0f);
    }
    CHECK(std::abs(s - 1.0) <= 1e-6);
    const float c = static_cast<float>(rng.uniform(-100, 100));
    for (float& v : x.data()) v += c;
    const Tensor b = ops::softmax(x);
    CHECK(std::max_element(a.data().begin(), a.data().end()) - a.data().begin() ==
          std::max_element(b.data().begin(), b.data().end()) - b.data().begin());
  }
  // Large logits do not overflow.
  CHECK(ops::softmax(Tensor::from({1000, 1000})).all_finite());
}

TEST_CASE("categorical cross-entropy uses the per-class binary form") {
  const double l = ops::categorical_cross_entropy(Tensor::from({0.5f, 0.5f}),
                                                  Tensor::from({1, 0}));
  CHECK(l == doctest::Approx(0.6931).epsilon(1e-4));

  const Tensor y = Tensor::from({0, 0, 1, 0, 0, 0, 0, 0});
  CHECK(ops::categorical_cross_entropy(y, y) <= 10 * 1e-7 * 8);
  CHECK(ops::categorical_cross_entropy(y, y) >= 0.0);

  const Tensor p = Tensor::from({0.1f, 0.2f, 0.3f, 0.4f});
  const Tensor t = Tensor::from({0, 0, 1, 0});
  const Tensor pp = Tensor::from({0.4f, 0.3f, 0.1f, 0.2f});
  const Tensor tp = Tensor::from({0, 1, 0, 0});
  CHECK(ops::categorical_cross_entropy(p, t) ==
        doctest::Approx(ops::categorical_cross_entropy(pp, tp)).epsilon(1e-12));

  CHECK(code_of([] {
          ops::categorical_cross_entropy(Tensor::from({0.5f, 0.5f}), Tensor::from({1, 1}));
        }) == ErrorCode::Validation);
  CHECK(code_of([] {
          ops::categorical_cross_entropy(Tensor::from({0.5f, 0.5f}), Tensor::from({0, 0}));
        }) == ErrorCode::Validation);
}

TEST_CASE("flatten and concat") {
  CHECK(ops::flatten(Tensor({64, 126, 126})).shape() == Shape{1016064});
  const Tensor a = ops::flatten(Tensor({64, 126, 126}));
  CHECK(ops::concat(a, a).shape() == Shape{2032128});
  CHECK(ops::concat(Tensor::from({1}), Tensor::from({2, 3})) == Tensor::from({1, 2, 3}));
  const auto [ga, gb] = ops::concat_backward(Tensor::from({4, 5, 6}), 1);
  CHECK(ga == Tensor::from({4}));
  CHECK(gb == Tensor::from({5, 6}));
  const Tensor x({2, 2, 3}, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11});
  const Tensor f = ops::flatten(x);
  for (std::size_t i = 0; i < 12; ++i) CHECK(f[i] == static_cast<float>(i));
}

TEST_CASE("xavier uniform") {
  SeededRng rng(5);
  const Tensor t = ops::xavier_uniform({1000}, 3, 3, rng);
  for (float v : t.data()) {
    CHECK(v >= -1.0f);
    CHECK(v <= 1.0f);
  }

  SeededRng r1(6), r2(6);
  CHECK(bit_identical(ops::xavier_uniform({10, 10}, 4, 7, r1), ops::xavier_uniform({10, 10}, 4, 7, r2)));

  // 10,000 draws with fan_in + fan_out = 600: mean within 3 sigma of 0.
  SeededRng r3(7);
  const Tensor big = ops::xavier_uniform({10000}, 300, 300, r3);
  const double b = std::sqrt(6.0 / 600.0);
  double mean = 0.0;
  for (float v : big.data()) mean += v;
  mean /= 10000.0;
  const double sigma = b / std::sqrt(3.0) / std::sqrt(10000.0);
  CHECK(std::abs(mean) < 3 * sigma);

  CHECK(code_of([&] { ops::xavier_uniform({2}, 0, 3, r3); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { ops::xavier_uniform({2}, 3, 0, r3); }) == ErrorCode::InvalidArgument);
}

// --- gradient checks -------------------------------------------------------

TEST_CASE("gradient check: conv2d on 1x6x6") {
  SeededRng rng(10);
  const std::vector<Tensor> in = {random_tensor({1, 6, 6}, rng), random_tensor({2, 1, 3, 3}, rng),
                                  random_tensor({2}, rng)};
  const Tensor wout = random_tensor({2, 4, 4}, rng);
  auto f = [&](const std::vector<Tensor>& v) { return project(ops::conv2d(v[0], v[1], v[2]), wout); };
  auto g = [&](const std::vector<Tensor>& v) {
    auto r = ops::conv2d_grads(v[0], v[1], wout);
    return std::vector<Tensor>{r.input, r.kernels, r.bias};
  };
  const auto rep = gradient_check(f, g, in, 1e-3, 1e-2);
  CHECK(rep.passed);
  CHECK(rep.max_rel_error < 1e-2);
}

TEST_CASE("gradient check: dense on an 8-vector") {
  SeededRng rng(11);
  const std::vector<Tensor> in = {random_tensor({8}, rng), random_tensor({5, 8}, rng),
                                  random_tensor({5}, rng)};
  const Tensor wout = random_tensor({5}, rng);
  auto f = [&](const std::vector<Tensor>& v) { return project(ops::dense(v[0], v[1], v[2]), wout); };
  auto g = [&](const std::vector<Tensor>& v) {
    auto r = ops::dense_grads(v[0], v[1], wout);
    return std::vector<Tensor>{r.input, r.weights, r.bias};
  };
  const auto rep = gradient_check(f, g, in, 1e-3, 1e-3);
  CHECK(rep.max_rel_error < 1e-3);
}

TEST_CASE("gradient check: relu away from zero is exact") {
  const std::vector<Tensor> in = {Tensor::from({0.75f, -0.5f, 1.25f, -2.0f})};
  const Tensor wout = Tensor::from({0.5f, 0.25f, -1.0f, 2.0f});
  auto f = [&](const std::vector<Tensor>& v) { return project(ops::relu(v[0]), wout); };
  auto g = [&](const std::vector<Tensor>& v) {
    return std::vector<Tensor>{ops::relu_backward(v[0], wout)};
  };
  const auto rep = gradient_check(f, g, in, 0.125, 1e-12);
  CHECK(rep.max_rel_error == 0.0);
}

TEST_CASE("property: ops are pure") {
  SeededRng rng(12);
  const Tensor x = random_tensor({3, 9, 9}, rng);
  const Tensor k = random_tensor({4, 3, 3, 3}, rng);
  const Tensor b = random_tensor({4}, rng);
  CHECK(bit_identical(ops::conv2d(x, k, b), ops::conv2d(x, k, b)));
  const Tensor g = random_tensor({4, 7, 7}, rng);
  const auto g1 = ops::conv2d_grads(x, k, g);
  const auto g2 = ops::conv2d_grads(x, k, g);
  CHECK(bit_identical(g1.input, g2.input));
  CHECK(bit_identical(g1.kernels, g2.kernels));
  const auto p1 = ops::maxpool2d(x), p2 = ops::maxpool2d(x);
  CHECK(bit_identical(p1.output, p2.output));
  CHECK(p1.argmax == p2.argmax);
}

TEST_CASE("property: finite outputs on finite inputs") {
  SeededRng rng(13);
  for (int t = 0; t < 20; ++t) {
    const Tensor x = random_tensor({2, 8, 8}, rng, -50, 50);
    const Tensor k = random_tensor({3, 2, 3, 3}, rng, -5, 5);
    CHECK(ops::conv2d(x, k, Tensor({3})).all_finite());
    CHECK(ops::softmax(ops::flatten(x)).all_finite());
    CHECK(ops::sigmoid(x).all_finite());
    const Tensor p = ops::softmax(random_tensor({8}, rng, -80, 80));
    Tensor y({8});
    y[static_cast<std::size_t>(rng.below(8))] = 1.0f;
    CHECK(std::isfinite(ops::categorical_cross_entropy(p, y)));
    CHECK(ops::categorical_cross_entropy_backward(p, y).all_finite());
  }
}

TEST_CASE("tensor invariants") {
  CHECK(code_of([] { Tensor({2, 0}); }) == ErrorCode::Shape);
  CHECK(code_of([] { Tensor({2, 2}, std::vector<float>(3)); }) == ErrorCode::Shape);
  Tensor t({2, 3});
  CHECK_FALSE(t.has_grad());
  CHECK(t.grad().size() == 6);
  CHECK(t.has_grad());
  CHECK(t.reshaped({3, 2}).shape() == Shape{3, 2});
  CHECK(code_of([&] { (void)t.reshaped({4, 2}); }) == ErrorCode::Shape);
}

TEST_CASE("seeded rng is reproducible and platform-independent") {
  SeededRng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  // First output of the reference splitmix64 started from state 0.
  CHECK(splitmix64(0) == 0xE220A8397B1DCDAFull);
  CHECK(SeededRng(0).next_u64() == 0xE220A8397B1DCDAFull);
  SeededRng c(1);
  for (int i = 0; i < 1000; ++i) {
    const double u = c.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(c.below(7) < 7);
  }
  const SeededRng d(9);
  CHECK(d.derive(1).seed() != d.derive(2).seed());
  CHECK(d.derive(1).seed() == SeededRng(9).derive(1).seed());
}
