#pragma once

// Independent reference computations used only by the tests.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <random>
#include <variant>
#include <vector>

#include "vafnet/architectures.hpp"
#include "vafnet/network.hpp"

namespace vafnet::testing {

inline double rel_error(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

inline Matrix naive_matmul(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
      out(i, j) = acc;
    }
  return out;
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                            double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (auto& x : m.data()) x = u(rng);
  return m;
}

// Plain double loop over 1/2 (y - t)^2.
inline double scalar_sse(const Matrix& y, const Matrix& t) {
  double acc = 0.0;
  for (std::size_t i = 0; i < y.rows(); ++i)
    for (std::size_t j = 0; j < y.cols(); ++j) acc += 0.5 * (y(i, j) - t(i, j)) * (y(i, j) - t(i, j));
  return acc;
}

// Central differences of loss_sse(net(x), t) over every flattened parameter.
inline std::vector<double> fd_gradient(const Network& net, const Matrix& x, const Matrix& t,
                                       double h = 1e-5) {
  Network probe = net;
  const auto base = probe.flatten_params();
  std::vector<double> grad(base.size());
  auto params = base;
  for (std::size_t i = 0; i < base.size(); ++i) {
    params[i] = base[i] + h;
    probe.set_params(params);
    const double up = scalar_sse(predict(probe, x), t);
    params[i] = base[i] - h;
    probe.set_params(params);
    const double down = scalar_sse(predict(probe, x), t);
    params[i] = base[i];
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

inline std::vector<double> analytic_gradient(const Network& net, const Matrix& x, const Matrix& t) {
  auto fwd = forward(net, x);
  return backward(net, fwd.tape, loss_sse_grad(fwd.output, t)).flatten();
}

// Smallest |pre-activation| that sits on a ReLU kink anywhere in the network
// for this batch: fixed ReLU inputs and VAF hidden units with g = ReLU.
inline double min_kink_distance(const Network& net, const Matrix& x) {
  double closest = INFINITY;
  auto tape = forward(net, x).tape;
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    const auto& in = tape.inputs[i];
    if (const auto* f = std::get_if<FixedLayer>(&net.layers()[i])) {
      if (f->kind != ActivationKind::ReLU) continue;
      for (double v : in.data()) closest = std::min(closest, std::abs(v));
    } else if (const auto* v = std::get_if<VafLayer>(&net.layers()[i])) {
      for (std::size_t n = 0; n < in.rows(); ++n)
        for (std::size_t j = 0; j < in.cols(); ++j) {
          const auto& p = v->for_neuron(j);
          if (p.g != ActivationKind::ReLU) continue;
          for (std::size_t u = 0; u < p.k(); ++u)
            closest = std::min(closest, std::abs(p.alpha[u] * in(n, j) + p.alpha0[u]));
        }
    }
  }
  return closest;
}

struct GradCheck {
  double worst = 0.0;
  std::size_t worst_index = 0;
  std::size_t count = 0;
};

inline GradCheck check_gradient(const Network& net, const Matrix& x, const Matrix& t) {
  const auto analytic = analytic_gradient(net, x, t);
  const auto numeric = fd_gradient(net, x, t);
  GradCheck out;
  out.count = analytic.size();
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double e = rel_error(analytic[i], numeric[i]);
    if (e > out.worst) {
      out.worst = e;
      out.worst_index = i;
    }
  }
  return out;
}

// Same layout with every width scaled so the widest layer has `cap` neurons
// (at least 2 each), keeping the gradient check cheap.
inline Architecture reduced(Architecture arch, std::size_t cap) {
  const std::size_t widest = *std::max_element(arch.hidden.begin(), arch.hidden.end());
  for (auto& w : arch.hidden) {
    const double scaled = static_cast<double>(w) * static_cast<double>(cap) / static_cast<double>(widest);
    w = std::max<std::size_t>(2, static_cast<std::size_t>(std::lround(scaled)));
  }
  return arch;
}

// Draws a batch, redrawing while any ReLU kink lies within `margin`.
inline Matrix batch_off_kinks(const Network& net, std::size_t rows, std::mt19937_64& rng,
                              double margin = 1e-4) {
  for (;;) {
    auto x = random_matrix(rows, net.input_dim(), rng);
    if (min_kink_distance(net, x) > margin) return x;
  }
}

}  // namespace vafnet::testing
