#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rdnet/adam.hpp"
#include "rdnet/ops.hpp"
#include "rdnet/rng.hpp"

using namespace rdnet;

TEST_CASE("zero gradient leaves parameters unchanged") {
  std::vector<Tensor> params{Tensor::from_data({3}, {1.f, -2.f, 0.5f}, true)};
  params[0].zero_grad();
  AdamState st;
  adam_step(params, st, 1e-2);
  CHECK(params[0].data() == std::vector<float>{1.f, -2.f, 0.5f});
}

TEST_CASE("first step moves each entry by -lr * sign(g), bias-corrected") {
  // Hand derivation for step 1: m_hat = g, v_hat = g^2, so the update is
  // -lr * g / (|g| + eps) = -lr * sign(g) up to eps.
  std::vector<Tensor> params{Tensor::from_data({3}, {0.f, 0.f, 0.f}, true)};
  params[0].grad() = {2.f, -0.001f, 0.f};
  AdamState st;
  const double lr = 0.1;
  adam_step(params, st, lr);
  CHECK(params[0].data()[0] == doctest::Approx(-lr).epsilon(1e-5));
  CHECK(params[0].data()[1] == doctest::Approx(lr).epsilon(1e-4));
  CHECK(params[0].data()[2] == doctest::Approx(0.0));
}

TEST_CASE("two steps match a scalar hand computation") {
  // x0=1, g=x each step, lr=0.1, default betas. Step 1: g=1 -> x1 ~ 0.9.
  double m = 0, v = 0, x = 1.0;
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8, lr = 0.1;
  std::vector<Tensor> params{Tensor::from_data({1}, {1.f}, true)};
  AdamState st;
  for (int t = 1; t <= 2; ++t) {
    const double g = x;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    x -= lr * (m / (1 - std::pow(b1, t))) / (std::sqrt(v / (1 - std::pow(b2, t))) + eps);

    params[0].zero_grad();
    params[0].grad()[0] = params[0].data()[0];
    adam_step(params, st, lr);
    CHECK(params[0].data()[0] == doctest::Approx(x).epsilon(1e-5));
  }
}

TEST_CASE("adam drives a quadratic to its minimum") {
  std::vector<Tensor> params{Tensor::from_data({2}, {3.f, -4.f}, true)};
  AdamState st;
  for (int t = 0; t < 2000; ++t) {
    params[0].zero_grad();
    for (int i = 0; i < 2; ++i) params[0].grad()[i] = 2.f * params[0].data()[i];
    adam_step(params, st, 1e-2);
  }
  CHECK(std::abs(params[0].data()[0]) < 1e-3f);
  CHECK(std::abs(params[0].data()[1]) < 1e-3f);
}

TEST_CASE("identical seeds give bitwise-identical trajectories") {
  auto run = [] {
    Rng rng(11);
    std::vector<Tensor> params{Tensor::from_data({4}, {0.1f, 0.2f, 0.3f, 0.4f}, true)};
    AdamState st;
    for (int t = 0; t < 50; ++t) {
      params[0].zero_grad();
      for (int i = 0; i < 4; ++i)
        params[0].grad()[i] = float(rng.uniform(-1, 1)) + params[0].data()[i];
      adam_step(params, st, 3e-3);
    }
    return params[0].data();
  };
  CHECK(run() == run());
}

TEST_CASE("missing gradients and mismatched state are rejected") {
  std::vector<Tensor> params{Tensor::from_data({2}, {1.f, 2.f}, true)};
  AdamState st;
  CHECK_THROWS_AS(adam_step(params, st, 1e-3), DataError);  // no grad buffer

  params[0].zero_grad();
  adam_step(params, st, 1e-3);
  std::vector<Tensor> other{Tensor::from_data({3}, {1.f, 2.f, 3.f}, true)};
  other[0].zero_grad();
  CHECK_THROWS_AS(adam_step(other, st, 1e-3), DataError);  // state shaped for params
}
