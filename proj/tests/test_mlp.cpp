#include "cnlcu/mlp.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace cnlcu;

TEST_CASE("uniform logits cost log k") {
  for (int k : {2, 10, 100}) {
    Matrix z = Matrix::Constant(3, k, 0.7);
    const std::vector<int> y{0, k / 2, k - 1};
    for (double l : cross_entropy(z, y)) CHECK(l == doctest::Approx(std::log(k)).epsilon(1e-14));
  }
}

TEST_CASE("cross-entropy against a long double oracle") {
  Matrix z(3, 4);
  z << 1.5, -2.0, 0.25, 3.0,
       800.0, 799.0, -800.0, 0.0,
       -1e-3, 2e-3, 0.0, 5.0;
  const std::vector<int> y{2, 1, 3};
  const auto got = cross_entropy(z, y);
  for (int i = 0; i < 3; ++i) {
    long double m = z.row(i).maxCoeff();
    long double s = 0.0L;
    for (int j = 0; j < 4; ++j) s += std::exp(static_cast<long double>(z(i, j)) - m);
    const long double expected = m + std::log(s) - static_cast<long double>(z(i, y[i]));
    CHECK(std::abs(got[i] - static_cast<double>(expected)) <= 1e-10);
    CHECK(got[i] >= 0.0);
  }
}

TEST_CASE("forward shape checks") {
  const auto net = init_mlp(3, 4, 2, 1);
  CHECK(net.parameter_count() == 3 * 4 + 4 + 4 * 2 + 2);
  Matrix x = Matrix::Zero(2, 5);
  CHECK_THROWS_AS(forward_losses(net, x, std::vector{0, 1}), std::invalid_argument);
  Matrix ok = Matrix::Zero(2, 3);
  CHECK_THROWS_AS(forward_losses(net, ok, std::vector{0}), std::invalid_argument);
  CHECK(forward_losses(net, ok, std::vector{0, 1}).size() == 2);
}

TEST_CASE("analytic gradient matches central differences") {
  // d=1, h=2, k=2: ten parameters.
  auto net = init_mlp(1, 2, 2, 7);
  REQUIRE(net.parameter_count() == 10);
  auto flat = flatten_parameters(net);
  // Nudge biases off zero and keep pre-activations away from the kink.
  flat[2] = 0.3;
  flat[3] = -0.2;
  flat[8] = 0.1;
  assign_parameters(net, flat);

  Matrix x(3, 1);
  x << 0.9, -0.4, 0.35;
  const std::vector<int> y{1, 0, 1};
  const auto grad = loss_gradient(net, x, y);

  auto mean_loss = [&](const std::vector<double>& p) {
    auto probe = net;
    assign_parameters(probe, p);
    const auto l = forward_losses(probe, x, y);
    return (l[0] + l[1] + l[2]) / 3.0;
  };
  const double h = 1e-5;
  for (std::size_t i = 0; i < flat.size(); ++i) {
    auto plus = flat, minus = flat;
    plus[i] += h;
    minus[i] -= h;
    const double numeric = (mean_loss(plus) - mean_loss(minus)) / (2.0 * h);
    const double denom = std::max({std::abs(numeric), std::abs(grad[i]), 1e-8});
    CAPTURE(i);
    CHECK(std::abs(numeric - grad[i]) / denom <= 1e-4);
  }
}

TEST_CASE("flatten and assign round-trip") {
  auto net = init_mlp(4, 3, 5, 2);
  const auto flat = flatten_parameters(net);
  auto other = init_mlp(4, 3, 5, 99);
  CHECK(flatten_parameters(other) != flat);
  assign_parameters(other, flat);
  CHECK(flatten_parameters(other) == flat);
  CHECK_THROWS_AS(assign_parameters(other, std::vector<double>(3)), std::invalid_argument);
}

TEST_CASE("Adam updates") {
  Matrix x(4, 2);
  x << 0.1, 0.9, 0.8, 0.2, 0.3, 0.3, 0.95, 0.6;
  const std::vector<int> y{0, 1, 0, 1};

  SUBCASE("zero learning rate leaves parameters unchanged") {
    auto net = init_mlp(2, 8, 2, 3);
    const auto before = flatten_parameters(net);
    OptimizerConfig opt;
    opt.learning_rate = 0.0;
    backward_update(net, x, y, opt);
    CHECK(flatten_parameters(net) == before);
    CHECK(net.step == 1);
  }

  SUBCASE("a small step reduces the batch loss") {
    auto net = init_mlp(2, 8, 2, 3);
    auto mean = [&](const MlpState& m) {
      const auto l = forward_losses(m, x, y);
      return (l[0] + l[1] + l[2] + l[3]) / 4.0;
    };
    const double before = mean(net);
    OptimizerConfig opt;
    opt.learning_rate = 1e-3;
    backward_update(net, x, y, opt);
    CHECK(mean(net) < before);
    opt.learning_rate = 1e-2;
    for (int i = 0; i < 300; ++i) backward_update(net, x, y, opt);
    CHECK(mean(net) < 0.5 * before);
  }

  SUBCASE("non-finite input is rejected") {
    auto net = init_mlp(2, 8, 2, 3);
    Matrix bad = x;
    bad(0, 0) = std::nan("");
    CHECK_THROWS_AS(backward_update(net, bad, y, OptimizerConfig{}), std::runtime_error);
  }
}

TEST_CASE("initialisation depends on the seed only") {
  CHECK(flatten_parameters(init_mlp(5, 6, 3, 1)) == flatten_parameters(init_mlp(5, 6, 3, 1)));
  CHECK(flatten_parameters(init_mlp(5, 6, 3, 1)) != flatten_parameters(init_mlp(5, 6, 3, 2)));
  const auto net = init_mlp(5, 6, 3, 1);
  const double limit = std::sqrt(6.0 / (5 + 6));
  CHECK(net.w1.cwiseAbs().maxCoeff() <= limit);
  CHECK(net.b1.isZero());
}

TEST_CASE("predict breaks ties towards the lowest class") {
  auto net = init_mlp(2, 3, 4, 1);
  auto flat = flatten_parameters(net);
  std::fill(flat.begin(), flat.end(), 0.0);
  assign_parameters(net, flat);
  net.b2 << 0.0, 1.0, 1.0, 0.5;
  Matrix x = Matrix::Zero(2, 2);
  CHECK(predict(net, x) == std::vector{1, 1});
}

TEST_CASE("optimizer config validation") {
  OptimizerConfig opt;
  opt.validate();
  opt.batch_size = 0;
  CHECK_THROWS_AS(opt.validate(), std::invalid_argument);
  opt = {};
  opt.beta1 = 1.0;
  CHECK_THROWS_AS(opt.validate(), std::invalid_argument);
}
