#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "vafnet/errors.hpp"
#include "vafnet/optim.hpp"
#include "vafnet/vaf.hpp"

using namespace vafnet;
using vafnet::testing::rel_error;

namespace {

VafParams make(ActivationKind g, std::vector<double> alpha, std::vector<double> alpha0,
               std::vector<double> beta, double beta0) {
  return {g, std::move(alpha), std::move(alpha0), std::move(beta), beta0};
}

// Central differences of z with respect to every parameter and the input.
struct FdVaf {
  double d_a;
  std::vector<double> d_params;  // alpha, alpha0, beta, beta0
};

FdVaf fd_vaf(VafParams p, double a, double h = 1e-5) {
  FdVaf out;
  out.d_a = (vaf_eval(p, a + h) - vaf_eval(p, a - h)) / (2 * h);
  auto poke = [&](double& slot) {
    const double keep = slot;
    slot = keep + h;
    const double up = vaf_eval(p, a);
    slot = keep - h;
    const double down = vaf_eval(p, a);
    slot = keep;
    out.d_params.push_back((up - down) / (2 * h));
  };
  for (auto& v : p.alpha) poke(v);
  for (auto& v : p.alpha0) poke(v);
  for (auto& v : p.beta) poke(v);
  poke(p.beta0);
  return out;
}

std::vector<double> flat(const VafGrad& g) {
  std::vector<double> out = g.d_alpha;
  out.insert(out.end(), g.d_alpha0.begin(), g.d_alpha0.end());
  out.insert(out.end(), g.d_beta.begin(), g.d_beta.end());
  out.push_back(g.d_beta0);
  return out;
}

}  // namespace

TEST_CASE("relu pair realizes absolute value") {
  auto p = make(ActivationKind::ReLU, {1, -1}, {0, 0}, {1, 1}, 0);
  CHECK(vaf_forward(p, -2.0).z == 2.0);
  CHECK(vaf_forward(p, 3.5).z == 3.5);
}

TEST_CASE("zero output weights give the bias") {
  auto p = make(ActivationKind::Tanh, {0.3, -2, 1}, {1, 2, 3}, {0, 0, 0}, -4.25);
  CHECK(vaf_forward(p, 17.0).z == -4.25);
  CHECK(vaf_eval(p, -3.0) == -4.25);
}

TEST_CASE("single tanh unit") {
  auto p = make(ActivationKind::Tanh, {1}, {0}, {1}, 0);
  CHECK(vaf_forward(p, 0.5).z == doctest::Approx(0.46211715726000974).epsilon(1e-15));
}

TEST_CASE("backward of a linear composition") {
  auto p = make(ActivationKind::Identity, {2}, {0}, {3}, 0);
  auto fwd = vaf_forward(p, 5.0);
  auto bwd = vaf_backward(p, 5.0, fwd.cache, 1.0);
  CHECK(bwd.d_a == 6.0);
  CHECK(bwd.grad.d_beta == std::vector<double>{10.0});
  CHECK(bwd.grad.d_alpha == std::vector<double>{15.0});
  CHECK(bwd.grad.d_alpha0 == std::vector<double>{3.0});
  CHECK(bwd.grad.d_beta0 == 1.0);
}

TEST_CASE("zero upstream gives zero gradients") {
  Rng rng(1);
  auto p = init_vaf_random(4, ActivationKind::Sigmoid, rng);
  auto fwd = vaf_forward(p, 0.3);
  auto bwd = vaf_backward(p, 0.3, fwd.cache, 0.0);
  CHECK(bwd.d_a == 0.0);
  CHECK(bwd.grad == VafGrad::zeros_like(p));
}

TEST_CASE("cache of the wrong length is a shape error") {
  Rng rng(1);
  auto p = init_vaf_random(3, ActivationKind::Tanh, rng);
  std::vector<double> cache(2, 0.0);
  CHECK_THROWS_AS(vaf_backward(p, 0.1, cache, 1.0), ShapeError);
  p.beta.pop_back();
  CHECK_THROWS_AS(validate(p), ShapeError);
}

TEST_CASE("backward matches finite differences") {
  SUBCASE("tanh k=5 at 0.7") {
    Rng rng(42);
    auto p = init_vaf_random(5, ActivationKind::Tanh, rng);
    auto fwd = vaf_forward(p, 0.7);
    auto bwd = vaf_backward(p, 0.7, fwd.cache, 1.0);
    auto fd = fd_vaf(p, 0.7);
    CHECK(rel_error(bwd.d_a, fd.d_a) < 1e-6);
    auto g = flat(bwd.grad);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(rel_error(g[i], fd.d_params[i]) < 1e-6);
  }
  SUBCASE("random cases for every g") {
    std::mt19937_64 draw(9);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    std::uniform_int_distribution<std::size_t> kdist(1, 8);
    for (auto g : kAllActivations) {
      CAPTURE(to_string(g));
      int done = 0;
      Rng rng(100 + static_cast<int>(g));
      while (done < 100) {
        auto p = init_vaf_random(kdist(draw), g, rng);
        p.beta0 = u(draw);
        const double a = u(draw);
        auto fwd = vaf_forward(p, a);
        if (g == ActivationKind::ReLU) {
          bool near_kink = false;
          for (double h : fwd.cache) near_kink |= std::abs(h) < 1e-4;
          if (near_kink) continue;
        }
        const double upstream = u(draw);
        auto bwd = vaf_backward(p, a, fwd.cache, upstream);
        auto fd = fd_vaf(p, a);
        REQUIRE(rel_error(bwd.d_a, upstream * fd.d_a) < 1e-6);
        auto grad = flat(bwd.grad);
        for (std::size_t i = 0; i < grad.size(); ++i)
          REQUIRE(rel_error(grad[i], upstream * fd.d_params[i]) < 1e-6);
        ++done;
      }
    }
  }
}

TEST_CASE("accumulating backward sums gradients") {
  Rng rng(5);
  auto p = init_vaf_random(3, ActivationKind::Tanh, rng);
  auto total = VafGrad::zeros_like(p);
  auto expected = VafGrad::zeros_like(p);
  for (double a : {-1.0, 0.25, 2.0}) {
    double d_a = vaf_backward_accumulate(p, a, 0.5, total);
    auto one = vaf_backward(p, a, vaf_forward(p, a).cache, 0.5);
    expected.accumulate(one.grad);
    CHECK(d_a == one.d_a);
  }
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(total.d_alpha[j] == doctest::Approx(expected.d_alpha[j]).epsilon(1e-14));
    CHECK(total.d_beta[j] == doctest::Approx(expected.d_beta[j]).epsilon(1e-14));
  }
}

TEST_CASE("random initialization") {
  Rng a(77), b(77);
  CHECK(init_vaf_random(6, ActivationKind::ReLU, a) == init_vaf_random(6, ActivationKind::ReLU, b));

  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    auto p = init_vaf_random(3, ActivationKind::Tanh, rng);
    REQUIRE(p.k() == 3);
    CHECK(p.beta0 == 0.0);
    for (const auto* v : {&p.alpha, &p.alpha0, &p.beta}) {
      REQUIRE(v->size() == 3);
      for (double x : *v) CHECK(std::abs(x) <= 1.2248);
    }
  }

  Rng big(8);
  auto p = init_vaf_random(10000, ActivationKind::Tanh, big);
  double mean = 0.0;
  for (double x : p.alpha) mean += x;
  CHECK(std::abs(mean / 10000.0) < 0.05);
}

TEST_CASE("specific initialization") {
  const double grid_max = 5.0;
  SUBCASE("relu embeds relu") {
    Rng rng(1);
    auto p = init_vaf_specific(3, ActivationKind::ReLU, ActivationKind::ReLU, rng);
    CHECK(max_grid_error(p, ActivationKind::ReLU) <= 1e-3);
  }
  SUBCASE("tanh embeds tanh") {
    Rng rng(1);
    auto p = init_vaf_specific(3, ActivationKind::Tanh, ActivationKind::Tanh, rng);
    CHECK(max_grid_error(p, ActivationKind::Tanh) <= 1e-3);
  }
  SUBCASE("tanh basis fitted to relu") {
    Rng rng(1);
    auto p = init_vaf_specific(9, ActivationKind::Tanh, ActivationKind::ReLU, rng);
    const double err = max_grid_error(p, ActivationKind::ReLU);
    CHECK(err < 0.05 * (1 + grid_max));
    // Residual of the least-squares fit on the fixed spread, recorded once.
    CHECK(err == doctest::Approx(0.13867663577550537).epsilon(1e-9));
  }
  SUBCASE("zero noise is an exact embedding") {
    Rng rng(1);
    std::mt19937_64 draw(2);
    std::uniform_real_distribution<double> u(-100.0, 100.0);
    for (auto g : kAllActivations) {
      auto p = init_vaf_specific(4, g, g, rng, 0.0);
      for (int i = 0; i < 200; ++i) {
        double a = u(draw);
        CHECK(std::abs(vaf_eval(p, a) - act(g, a)) <= 1e-12);
      }
    }
  }
  SUBCASE("too little capacity is reported") {
    Rng rng(1);
    try {
      init_vaf_specific(3, ActivationKind::Identity, ActivationKind::ReLU, rng);
      FAIL("expected ApproximationError");
    } catch (const ApproximationError& e) {
      CHECK(e.max_error() > 0.05 * (1 + grid_max));
    }
  }
}

TEST_CASE("extra parameter counts") {
  std::vector<VafLayerShape> two = {{25, 3}, {10, 3}};
  CHECK(parameter_count(true, two) == 20);
  std::vector<VafLayerShape> one = {{50, 3}};
  CHECK(parameter_count(false, one) == 500);
  std::vector<VafLayerShape> wide = {{100, 3}, {50, 3}};
  CHECK(parameter_count(true, wide) == 20);
  CHECK(parameter_count(false, wide) == 1500);
}

TEST_CASE("a single VAF approximates |a|") {
  // 201 samples on [-2, 2], mean squared error, full-batch Adam.
  Rng rng(0);
  auto p = init_vaf_random(15, ActivationKind::Tanh, rng);
  const std::size_t n = 201;
  std::vector<double> xs(n);
  for (std::size_t i = 0; i < n; ++i) xs[i] = -2.0 + 4.0 * static_cast<double>(i) / (n - 1);

  auto flat_params = [&] {
    std::vector<double> v = p.alpha;
    v.insert(v.end(), p.alpha0.begin(), p.alpha0.end());
    v.insert(v.end(), p.beta.begin(), p.beta.end());
    v.push_back(p.beta0);
    return v;
  };
  auto unflat = [&](const std::vector<double>& v) {
    const std::size_t k = p.k();
    std::copy(v.begin(), v.begin() + k, p.alpha.begin());
    std::copy(v.begin() + k, v.begin() + 2 * k, p.alpha0.begin());
    std::copy(v.begin() + 2 * k, v.begin() + 3 * k, p.beta.begin());
    p.beta0 = v.back();
  };
  auto mse = [&] {
    double acc = 0.0;
    for (double x : xs) acc += std::pow(vaf_eval(p, x) - std::abs(x), 2);
    return acc / n;
  };

  OptimizerState opt = Adam{};
  std::get<Adam>(opt).lr = 0.01;
  std::size_t it = 0;
  for (; it < 5000 && mse() >= 1e-3; ++it) {
    auto g = VafGrad::zeros_like(p);
    for (double x : xs) vaf_backward_accumulate(p, x, 2.0 * (vaf_eval(p, x) - std::abs(x)) / n, g);
    auto params = flat_params();
    step(opt, params, flat(g));
    unflat(params);
  }
  CHECK(mse() < 1e-3);
  MESSAGE("iterations: " << it);
}
