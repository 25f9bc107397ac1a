#include <doctest.h>

#include <cmath>
#include <random>

#include "dcrnn/optim.hpp"

using namespace dcrnn;

TEST_CASE("adam_step: zero gradient and zero lr leave values unchanged") {
  ParamTensor p("p", DenseMatrix(2, 2, 3.5));
  adam_step({&p}, AdamConfig{0.01});
  CHECK(p.value(0, 0) == 3.5);
  CHECK(p.step_count == 1);

  p.grad.fill(1.0);
  adam_step({&p}, AdamConfig{0.0});
  CHECK(p.value(0, 0) == 3.5);
}

TEST_CASE("adam_step: first update magnitude is ~lr regardless of gradient scale") {
  const double lr = 0.01;
  for (double g : {0.001, 1.0, 1000.0}) {
    ParamTensor p("p", DenseMatrix(1, 1, 0.0));
    p.grad(0, 0) = g;
    adam_step({&p}, AdamConfig{lr});
    CHECK(std::abs(std::abs(p.value(0, 0)) - lr) < 1e-6);
    CHECK(p.value(0, 0) < 0.0);  // moves against the gradient
  }
}

TEST_CASE("adam_step: non-finite gradient names the parameter") {
  ParamTensor p("theta_r", DenseMatrix(1, 1));
  p.grad(0, 0) = std::nan("");
  CHECK_THROWS_WITH_AS(adam_step({&p}, AdamConfig{}), doctest::Contains("theta_r"), Error);
}

TEST_CASE("adam_step: moments stay finite and v nonnegative") {
  std::mt19937_64 rng(51);
  ParamTensor p("p", DenseMatrix(4, 4));
  std::uniform_real_distribution<double> uni(-2.0, 2.0);
  for (int step = 0; step < 50; ++step) {
    for (std::size_t i = 0; i < p.grad.size(); ++i) p.grad.data()[i] = uni(rng);
    adam_step({&p}, AdamConfig{0.01});
  }
  CHECK(p.m.all_finite());
  CHECK(p.v.all_finite());
  for (std::size_t i = 0; i < p.v.size(); ++i) CHECK(p.v.data()[i] >= 0.0);
  CHECK(p.step_count == 50);
}

TEST_CASE("lr_schedule follows the step decay") {
  CHECK(lr_schedule(0, 1e-2, 20, 10, 0.1) == doctest::Approx(1e-2));
  CHECK(lr_schedule(19, 1e-2, 20, 10, 0.1) == doctest::Approx(1e-2));
  CHECK(lr_schedule(20, 1e-2, 20, 10, 0.1) == doctest::Approx(1e-3));
  CHECK(lr_schedule(29, 1e-2, 20, 10, 0.1) == doctest::Approx(1e-3));
  CHECK(lr_schedule(30, 1e-2, 20, 10, 0.1) == doctest::Approx(1e-4));
  CHECK(lr_schedule(55, 1e-2, 20, 10, 0.1) == doctest::Approx(1e-6));
  // factor 1 keeps the rate constant
  CHECK(lr_schedule(100, 5e-3, 20, 10, 1.0) == doctest::Approx(5e-3));
  CHECK_THROWS_AS(lr_schedule(0, 1e-2, 0, 0, 0.1), Error);
}

TEST_CASE("init_params: determinism, bias zeros, bound") {
  const ParamTensor a = init_params("a", 10, 7, 99);
  const ParamTensor b = init_params("a", 10, 7, 99);
  CHECK(max_abs_diff(a.value, b.value) == 0.0);
  const ParamTensor c = init_params("a", 10, 7, 100);
  CHECK(max_abs_diff(a.value, c.value) > 0.0);

  const ParamTensor bias = init_params("bias", 1, 8, 99, InitScheme::zeros);
  CHECK(max_abs(bias.value) == 0.0);

  const ParamTensor big = init_params("big", 100, 100, 7);
  const double bound = std::sqrt(6.0 / 200.0);
  CHECK(max_abs(big.value) <= bound);
  CHECK(max_abs(big.value) > 0.5 * bound);  // actually fills the range
}

TEST_CASE("clip_grad_norm rescales only above the threshold") {
  ParamTensor p("p", DenseMatrix(2, 1));
  p.grad(0, 0) = 3.0;
  p.grad(1, 0) = 4.0;  // norm 5
  clip_grad_norm({&p}, 10.0);
  CHECK(p.grad(0, 0) == 3.0);
  clip_grad_norm({&p}, 1.0);
  CHECK(global_grad_norm({&p}) == doctest::Approx(1.0));
  CHECK(p.grad(0, 0) == doctest::Approx(0.6));
}
