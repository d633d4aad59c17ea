#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "vafnet/architectures.hpp"
#include "vafnet/errors.hpp"
#include "vafnet/network.hpp"

using namespace vafnet;
using namespace vafnet::testing;

namespace {

// Copy of `net` with every VAF layer replaced by Fixed(kind).
Network with_fixed(const Network& net, ActivationKind kind) {
  std::vector<Layer> layers(net.layers().begin(), net.layers().end());
  for (auto& l : layers)
    if (std::holds_alternative<VafLayer>(l)) l = FixedLayer{kind};
  return Network(net.input_dim(), std::move(layers));
}

// Copy of `net` with shared VAF layers unrolled into per-neuron copies.
Network unshared(const Network& net) {
  std::vector<Layer> layers(net.layers().begin(), net.layers().end());
  for (auto& l : layers)
    if (auto* v = std::get_if<VafLayer>(&l); v && v->shared) {
      v->params.assign(v->width, v->params[0]);
      v->shared = false;
    }
  return Network(net.input_dim(), std::move(layers));
}

}  // namespace

TEST_CASE("forward examples") {
  Network dot(2, {DenseLayer{Matrix{{1, 1}}, {0}}});
  CHECK(predict(dot, Matrix{{3, 4}}) == Matrix{{7}});

  Network relu(1, {DenseLayer{Matrix{{1}}, {0}}, FixedLayer{ActivationKind::ReLU}});
  CHECK(predict(relu, Matrix{{-5}}) == Matrix{{0}});
}

TEST_CASE("construction validates shapes") {
  CHECK_THROWS_AS(Network(2, {DenseLayer{Matrix{{1, 1}}, {0}}, DenseLayer{Matrix{{1, 1}}, {0}}}),
                  ShapeError);
  CHECK_THROWS_AS(Network(2, {FixedLayer{ActivationKind::ReLU}}), ShapeError);
  std::vector<LayerSpec> broken = {DenseSpec{3, 4}, DenseSpec{5, 1}};
  CHECK_THROWS_AS(build(broken, InitMode::random(), 1), InputError);
}

TEST_CASE("forward shape errors name the layer") {
  Network net(2, {DenseLayer{Matrix{{1, 1}}, {0}}});
  try {
    predict(net, Matrix{{1, 2, 3}});
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    CHECK(std::string(e.what()).find("layer 0") != std::string::npos);
  }
}

TEST_CASE("sum of squares loss") {
  Matrix y{{1, 0}};
  CHECK(loss_sse(y, y) == 0.0);
  CHECK(loss_sse(y, Matrix{{0, 1}}) == 1.0);
  std::mt19937_64 rng(4);
  auto a = random_matrix(4, 3, rng), b = random_matrix(4, 3, rng);
  CHECK(std::abs(loss_sse(a, b) - scalar_sse(a, b)) <= 1e-12);
  CHECK_THROWS_AS(loss_sse(a, Matrix(3, 3)), ShapeError);
}

TEST_CASE("backward simple cases") {
  std::vector<LayerSpec> spec = {DenseSpec{3, 4}, VafSpec{3, ActivationKind::Tanh},
                                 DenseSpec{4, 2}};
  auto net = build(spec, InitMode::random(), 2);
  std::mt19937_64 rng(1);
  auto x = random_matrix(5, 3, rng);
  auto fwd = forward(net, x);
  auto zero = backward(net, fwd.tape, Matrix(5, 2));
  for (double g : zero.flatten()) CHECK(g == 0.0);

  Network lin(2, {DenseLayer{Matrix{{0.5, -1.0}}, {0.25}}});
  Matrix xi{{2.0, 3.0}};
  Matrix t{{1.0}};
  auto f = forward(lin, xi);
  const double resid = f.output(0, 0) - 1.0;
  auto g = backward(lin, f.tape, loss_sse_grad(f.output, t)).flatten();
  CHECK(g[0] == doctest::Approx(resid * 2.0));
  CHECK(g[1] == doctest::Approx(resid * 3.0));
  CHECK(g[2] == doctest::Approx(resid));
}

TEST_CASE("gradients match finite differences on every standard layout") {
  std::mt19937_64 rng(21);
  for (bool shared : {true, false})
    for (auto g : {ActivationKind::Tanh, ActivationKind::ReLU})
      for (const auto& arch : standard_architectures(true)) {
        auto small = reduced(arch, 5);
        CAPTURE(small.name());
        CAPTURE(shared);
        CAPTURE(to_string(g));
        auto spec = make_layers(small, 3, 2, {g, shared});
        auto net = build(spec, InitMode::random(), rng());
        auto x = batch_off_kinks(net, 4, rng);
        auto t = random_matrix(4, 2, rng);
        auto check = check_gradient(net, x, t);
        CHECK(check.worst < 1e-5);
      }
}

TEST_CASE("fixed activation layers also pass the gradient check") {
  std::mt19937_64 rng(5);
  for (auto kind : kAllActivations) {
    auto spec = make_layers(parse_architecture("net_6_4"), 3, 2, {}, kind);
    auto net = build(spec, InitMode::random(), 9);
    auto x = batch_off_kinks(net, 5, rng);
    auto t = random_matrix(5, 2, rng);
    CHECK(check_gradient(net, x, t).worst < 1e-5);
  }
}

TEST_CASE("shared gradient is the sum over replicated copies") {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 10; ++trial) {
    auto spec = make_layers(parse_architecture("vnet3_6_4"), 3, 2, {ActivationKind::Tanh, true});
    auto net = build(spec, InitMode::random(), rng());
    auto oracle = unshared(net);
    auto x = random_matrix(7, 3, rng);
    auto t = random_matrix(7, 2, rng);
    auto shared_grad = backward(net, forward(net, x).tape, loss_sse_grad(predict(net, x), t));
    auto fo = forward(oracle, x);
    auto copies = backward(oracle, fo.tape, loss_sse_grad(fo.output, t));
    for (std::size_t i = 0; i < net.layers().size(); ++i) {
      const auto* sg = std::get_if<VafLayerGrad>(&shared_grad.layers[i]);
      if (!sg) continue;
      const auto& og = std::get<VafLayerGrad>(copies.layers[i]);
      auto sum = VafGrad::zeros_like(std::get<VafLayer>(net.layers()[i]).params[0]);
      for (const auto& g : og.params) sum.accumulate(g);
      REQUIRE(sg->params.size() == 1);
      for (std::size_t j = 0; j < sum.d_alpha.size(); ++j) {
        CHECK(std::abs(sum.d_alpha[j] - sg->params[0].d_alpha[j]) <= 1e-10);
        CHECK(std::abs(sum.d_alpha0[j] - sg->params[0].d_alpha0[j]) <= 1e-10);
        CHECK(std::abs(sum.d_beta[j] - sg->params[0].d_beta[j]) <= 1e-10);
      }
      CHECK(std::abs(sum.d_beta0 - sg->params[0].d_beta0) <= 1e-10);
    }
  }
}

TEST_CASE("exactly embedded relu changes nothing") {
  std::mt19937_64 rng(8);
  auto spec = make_layers(parse_architecture("vnet3_25_10"), 4, 3, {ActivationKind::ReLU, true});
  Network vaf = build(spec, InitMode::random(), 3);
  std::vector<Layer> layers(vaf.layers().begin(), vaf.layers().end());
  for (auto& l : layers)
    if (auto* v = std::get_if<VafLayer>(&l)) {
      Rng unused(0);
      v->params[0] = init_vaf_specific(3, ActivationKind::ReLU, ActivationKind::ReLU, unused, 0.0);
    }
  Network embedded(4, layers);
  Network plain = with_fixed(embedded, ActivationKind::ReLU);
  for (int b = 0; b < 100; ++b) {
    auto x = random_matrix(8, 4, rng, -3.0, 3.0);
    auto y1 = predict(embedded, x), y2 = predict(plain, x);
    for (std::size_t i = 0; i < y1.size(); ++i)
      REQUIRE(std::abs(y1.data()[i] - y2.data()[i]) <= 1e-12);
  }
}

TEST_CASE("specific relu init behaves like a relu network") {
  std::mt19937_64 rng(12);
  auto spec = make_layers(parse_architecture("vnet3_10_5"), 3, 2, {ActivationKind::ReLU, true});
  auto net = build(spec, InitMode::specific(ActivationKind::ReLU), 4);
  auto plain = with_fixed(net, ActivationKind::ReLU);
  for (int b = 0; b < 20; ++b) {
    auto x = random_matrix(6, 3, rng, -2.0, 2.0);
    auto y1 = predict(net, x), y2 = predict(plain, x);
    for (std::size_t i = 0; i < y1.size(); ++i)
      CHECK(std::abs(y1.data()[i] - y2.data()[i]) <= 1e-3);
  }
}

TEST_CASE("parameter vector handling") {
  std::vector<LayerSpec> spec = {DenseSpec{13, 25}, VafSpec{3, ActivationKind::Tanh, true},
                                 DenseSpec{25, 3}};
  auto net = build(spec, InitMode::random(), 1);
  CHECK(net.parameter_count() == 438);
  CHECK(net.flatten_params().size() == 438);

  std::mt19937_64 rng(2);
  auto x = random_matrix(4, 13, rng);
  const auto before = predict(net, x);
  net.apply_update(std::vector<double>(438, 0.0));
  CHECK(predict(net, x) == before);

  const auto original = net.flatten_params();
  std::vector<double> delta(438);
  std::uniform_real_distribution<double> u(-1e-3, 1e-3);
  for (auto& d : delta) d = u(rng);
  net.apply_update(delta);
  for (auto& d : delta) d = -d;
  net.apply_update(delta);
  const auto after = net.flatten_params();
  for (std::size_t i = 0; i < after.size(); ++i) CHECK(std::abs(after[i] - original[i]) <= 1e-15);

  CHECK_THROWS_AS(net.apply_update(std::vector<double>(437, 0.0)), ShapeError);
  CHECK_THROWS_AS(net.set_params(std::vector<double>(439, 0.0)), ShapeError);
}

TEST_CASE("build is deterministic and forward is repeatable") {
  auto spec = make_layers(parse_architecture("vnet3_10"), 3, 2);
  auto a = build(spec, InitMode::random(), 17);
  auto b = build(spec, InitMode::random(), 17);
  CHECK(a.flatten_params() == b.flatten_params());
  CHECK(a.specs() == b.specs());
  std::mt19937_64 rng(3);
  auto x = random_matrix(9, 3, rng);
  CHECK(predict(a, x) == predict(a, x));
  CHECK(forward(a, x).output == predict(b, x));
}

TEST_CASE("stale or foreign tapes are rejected") {
  auto spec = make_layers(parse_architecture("vnet3_5"), 2, 1);
  auto net = build(spec, InitMode::random(), 1);
  Matrix x{{0.1, 0.2}};
  auto fwd = forward(net, x);
  auto other = net;
  CHECK_THROWS_AS(backward(other, fwd.tape, Matrix{{1.0}}), TapeError);
  net.apply_update(std::vector<double>(net.parameter_count(), 0.0));
  CHECK_THROWS_AS(backward(net, fwd.tape, Matrix{{1.0}}), TapeError);
  auto fresh = forward(net, x);
  CHECK_NOTHROW(backward(net, fresh.tape, Matrix{{1.0}}));
  CHECK_THROWS_AS(backward(net, fresh.tape, Matrix{{1.0, 2.0}}), ShapeError);
}
