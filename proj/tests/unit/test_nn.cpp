#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <map>

#include "shapenergy/checkpoint.hpp"
#include "shapenergy/nn.hpp"
#include "shapenergy/rng.hpp"

using namespace shapenergy;
using namespace shapenergy::nn;

namespace {

Tensor random_batch(const ModelSpec& spec, std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> dims{n};
  dims.insert(dims.end(), spec.input_shape.begin(), spec.input_shape.end());
  Tensor t(dims);
  Xoshiro256 rng(seed);
  for (double& v : t.values) v = rng.uniform(-1.0, 1.0);
  return t;
}

std::vector<double> random_targets(std::size_t n, std::uint64_t seed) {
  Xoshiro256 rng(seed);
  std::vector<double> y(n);
  for (double& v : y) v = rng.uniform(-1.0, 1.0);
  return y;
}

// Glorot init plus small random biases so no unit sits exactly on a ReLU kink.
std::vector<double> jittered_params(const ModelSpec& spec, std::uint64_t seed) {
  ModelState s = init(spec, seed);
  Xoshiro256 rng(seed ^ 0x5a5a);
  for (double& p : s.params) p += rng.uniform(-0.1, 0.1);
  return s.params;
}

double numeric_norm_error(const ModelSpec& spec, std::vector<double> params, const Tensor& x,
                          const std::vector<double>& y) {
  Network net(spec);
  std::vector<double> g(params.size());
  net.loss_and_gradient(params, x, y, g);
  const double h = 1e-5;
  double diff = 0.0;
  double na = 0.0;
  double nn = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double p0 = params[i];
    params[i] = p0 + h;
    const double up = loss_mse(net.forward(params, x).values, y);
    params[i] = p0 - h;
    const double dn = loss_mse(net.forward(params, x).values, y);
    params[i] = p0;
    const double num = (up - dn) / (2 * h);
    diff += (g[i] - num) * (g[i] - num);
    na += g[i] * g[i];
    nn += num * num;
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nn), 1e-12});
}

}  // namespace

TEST(Nn, DnnParameterCounts) {
  const std::map<std::size_t, std::size_t> table{{2, 7},    {4, 19},    {8, 43},     {16, 91},   {32, 187},
                                                 {64, 379}, {128, 763}, {256, 1531}, {512, 3067}};
  for (auto [n, count] : table) {
    EXPECT_EQ(param_count(build_dnn(n)), count) << n;
    EXPECT_EQ(count, 6 * n - 5);
  }
  EXPECT_THROW(build_dnn(1), SpecError);
}

TEST(Nn, CnnParameterCountMatchesClosedForm) {
  auto closed = [](std::size_t n, std::size_t F, std::size_t k, std::size_t p) {
    return (k * k * F + F) + (n - 1) * (k * k * F * F + F) + ((30 / p) * (48 / p) * F + 1);
  };
  EXPECT_EQ(param_count(build_cnn(2)), 779u);
  EXPECT_EQ(param_count(build_cnn(32)), 1919u);
  for (std::size_t n : {1u, 2u, 4u, 8u, 16u, 32u})
    for (std::size_t F : {1u, 2u, 4u})
      for (std::size_t p : {1u, 2u, 3u}) {
        EXPECT_EQ(param_count(build_cnn(n, {F, 3, p})), closed(n, F, 3, p));
      }
  EXPECT_EQ(param_count(build_cnn(1, {1, 1, 30})), 4u);
  EXPECT_THROW(build_cnn(0), SpecError);
  EXPECT_THROW(build_cnn(2, {2, 3, 0}), SpecError);
  EXPECT_THROW(build_cnn(2, {2, 3, 31}), SpecError);
  EXPECT_THROW(build_cnn(2, {2, 4, 2}), SpecError);
}

TEST(Nn, ZeroParamsGiveZeroOutput) {
  for (const ModelSpec& spec : {build_dnn(8), build_cnn(2)}) {
    const std::vector<double> zeros(param_count(spec), 0.0);
    Network net(spec);
    for (double v : net.forward(zeros, random_batch(spec, 3, 1)).values) EXPECT_EQ(v, 0.0);
  }
}

TEST(Nn, DenseForwardByHand) {
  const ModelSpec spec{"dnn", {1}, {LayerSpec::dense(1, 1)}};
  Network net(spec);
  const std::vector<double> p{2.0, 1.0};
  EXPECT_EQ(net.forward(p, Tensor({1, 1}, {3.0})).values[0], 7.0);
}

TEST(Nn, ConvForwardTapOrder) {
  // A centred impulse through a 3x3 kernel reproduces the flipped kernel.
  const ModelSpec spec{"cnn", {1, 3, 3}, {LayerSpec::conv2d(1, 1, 3), LayerSpec::flatten(), LayerSpec::dense(9, 1)}};
  Network net(spec);
  std::vector<double> p(param_count(spec), 0.0);
  for (std::size_t k = 0; k < 9; ++k) p[k] = static_cast<double>(k + 1);
  Tensor x({1, 1, 3, 3});
  x.values[4] = 1.0;
  // Dense weights start after 9 taps and 1 bias.
  p[10 + 0] = 1.0;  // output (0,0) sees tap (2,2)
  EXPECT_EQ(net.forward(p, x).values[0], 9.0);
  p[10 + 0] = 0.0;
  p[10 + 4] = 1.0;  // centre sees centre tap
  EXPECT_EQ(net.forward(p, x).values[0], 5.0);
}

TEST(Nn, MaxPoolPicksWindowMaximum) {
  const ModelSpec spec{"cnn", {1, 2, 4}, {LayerSpec::maxpool(2), LayerSpec::flatten(), LayerSpec::dense(2, 1)}};
  Network net(spec);
  const Tensor x({1, 1, 2, 4}, {1, 5, -2, 0, 3, 2, 7, -1});
  EXPECT_EQ(net.forward(std::vector<double>{1.0, 10.0, 0.0}, x).values[0], 5.0 + 70.0);
}

TEST(Nn, LossExamples) {
  EXPECT_EQ(loss_mse(std::vector<double>{1, 2}, std::vector<double>{1, 2}), 0.0);
  EXPECT_EQ(loss_mse(std::vector<double>{0, 0}, std::vector<double>{1, 3}), 5.0);
  EXPECT_THROW(loss_mse(std::vector<double>{0}, std::vector<double>{1, 3}), ShapeError);
}

TEST(Nn, AdamByHand) {
  std::vector<double> p{0.0};
  AdamState a(1);
  const std::vector<double> g{1.0};
  adam_step(p, a, g, 1e-3);
  EXPECT_NEAR(p[0], -9.99999990e-4, 1e-15);
  adam_step(p, a, g, 1e-3);
  EXPECT_NEAR(p[0], -2 * 9.99999990e-4, 1e-15);
  EXPECT_EQ(a.t, 2u);
  const std::vector<double> bad{std::nan("")};
  EXPECT_THROW(adam_step(p, a, bad, 1e-3), NumericError);
}

TEST(Nn, GradientMatchesFiniteDifferences) {
  for (const ModelSpec& spec : {build_dnn(2), build_dnn(8), build_cnn(1, {2, 3, 2, 6, 8}), build_cnn(3, {2, 3, 3, 6, 9})}) {
    for (std::uint64_t seed : {1u, 2u}) {
      const Tensor x = random_batch(spec, 4, seed);
      const auto y = random_targets(4, seed + 7);
      EXPECT_LT(numeric_norm_error(spec, jittered_params(spec, seed), x, y), 1e-6) << spec.family << seed;
    }
  }
}

TEST(Nn, OutputBiasGradient) {
  const ModelSpec spec = build_dnn(4);
  const auto params = jittered_params(spec, 3);
  const Tensor x = random_batch(spec, 5, 3);
  const auto y = random_targets(5, 4);
  Network net(spec);
  std::vector<double> g(params.size());
  const double loss = net.loss_and_gradient(params, x, y, g);
  const auto pred = net.forward(params, x).values;
  double expect = 0.0;
  for (std::size_t i = 0; i < 5; ++i) expect += 2.0 * (pred[i] - y[i]) / 5.0;
  EXPECT_NEAR(g.back(), expect, 1e-12);
  EXPECT_NEAR(loss, loss_mse(pred, y), 1e-15);
}

TEST(Nn, ZeroBiasDnnIsPositivelyHomogeneous) {
  const ModelSpec spec = build_dnn(8);
  const ModelState s = init(spec, 4);
  Tensor x = random_batch(spec, 6, 4);
  const auto a = forward(s, x).values;
  for (double& v : x.values) v *= 3.0;
  const auto b = forward(s, x).values;
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(b[i], 3.0 * a[i], 1e-12);
}

TEST(Nn, InitBoundsAndDeterminism) {
  for (const ModelSpec& spec : {build_dnn(16), build_cnn(4)}) {
    const ModelState s = init(spec, 11);
    EXPECT_EQ(s.params, init(spec, 11).params);
    EXPECT_NE(s.params, init(spec, 12).params);
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
      const LayerSpec& l = spec.layers[i];
      if (l.param_count() == 0) continue;
      const double r = l.kind == LayerKind::conv2d ? static_cast<double>(l.kernel * l.kernel) : 1.0;
      const double bound = std::sqrt(6.0 / (r * static_cast<double>(l.in + l.out)));
      for (std::size_t k = 0; k < l.weight_count(); ++k) EXPECT_LE(std::abs(s.params[s.offsets[i] + k]), bound);
      for (std::size_t k = 0; k < l.bias_count(); ++k) EXPECT_EQ(s.params[s.offsets[i] + l.weight_count() + k], 0.0);
    }
  }
}

TEST(Nn, ShapeErrors) {
  const ModelSpec spec = build_dnn(4);
  Network net(spec);
  const std::vector<double> p(param_count(spec), 0.0);
  EXPECT_THROW(net.forward(p, Tensor({2, 5})), ShapeError);
  EXPECT_THROW(net.forward(std::vector<double>(3), Tensor({2, 4})), ShapeError);
  EXPECT_THROW(net.forward(p, Tensor({0, 4})), ShapeError);
  const ModelSpec broken{"dnn", {4}, {LayerSpec::dense(3, 1)}};
  EXPECT_THROW(activation_shapes(broken), SpecError);
  const ModelSpec wide{"dnn", {4}, {LayerSpec::dense(4, 2)}};
  EXPECT_THROW(activation_shapes(wide), SpecError);
}

TEST(Nn, CheckpointRoundTripIsBitExact) {
  const auto dir = std::filesystem::path(::testing::TempDir()) / "shapenergy_ckpt";
  std::filesystem::remove_all(dir);
  Checkpoint ck{init(build_cnn(2), 8), Normalizer{1.25e6, 3.3e4}, json{{"note", "x"}}};
  ck.state.params[0] = 0.1;  // not exactly representable
  save_checkpoint(ck, dir);
  const Checkpoint back = load_checkpoint(dir);
  EXPECT_EQ(back.state.spec, ck.state.spec);
  EXPECT_EQ(back.state.params, ck.state.params);
  EXPECT_EQ(back.state.seed, 8u);
  EXPECT_EQ(back.normalizer.mean, ck.normalizer.mean);
  EXPECT_EQ(back.extra["note"], "x");

  std::string bin = read_file(dir / "params.bin");
  bin[5] ^= 1;
  write_file(dir / "params.bin", bin);
  EXPECT_THROW(load_checkpoint(dir), LoadError);
}
