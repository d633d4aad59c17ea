#include "vafnet/optim.hpp"

#include <algorithm>
#include <cmath>

#include "vafnet/errors.hpp"

namespace vafnet {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void ensure_size(std::vector<double>& v, std::size_t n, double fill) {
  if (v.empty()) v.assign(n, fill);
  if (v.size() != n) {
    throw ShapeError("optimizer state sized for " + std::to_string(v.size()) +
                     " parameters, got " + std::to_string(n));
  }
}

double sign(double x) { return (x > 0.0) - (x < 0.0); }

}  // namespace

void step(OptimizerState& state, std::span<double> params, std::span<const double> grads) {
  if (params.size() != grads.size()) {
    throw ShapeError("optimizer step: " + std::to_string(params.size()) + " params vs " +
                     std::to_string(grads.size()) + " gradients");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      throw DivergenceError("non-finite gradient at parameter " + std::to_string(i), i);
    }
  }
  const std::size_t n = params.size();
  std::visit(overloaded{
                 [&](Sgd& s) {
                   for (std::size_t i = 0; i < n; ++i) params[i] -= s.lr * grads[i];
                 },
                 [&](Adam& s) {
                   ensure_size(s.m, n, 0.0);
                   ensure_size(s.v, n, 0.0);
                   ++s.t;
                   const double t = static_cast<double>(s.t);
                   const double c1 = 1.0 - std::pow(s.beta1, t);
                   const double c2 = 1.0 - std::pow(s.beta2, t);
                   for (std::size_t i = 0; i < n; ++i) {
                     const double g = grads[i];
                     s.m[i] = s.beta1 * s.m[i] + (1.0 - s.beta1) * g;
                     s.v[i] = s.beta2 * s.v[i] + (1.0 - s.beta2) * g * g;
                     params[i] -= s.lr * (s.m[i] / c1) / (std::sqrt(s.v[i] / c2) + s.eps);
                   }
                 },
                 [&](RmsProp& s) {
                   ensure_size(s.s, n, 0.0);
                   for (std::size_t i = 0; i < n; ++i) {
                     const double g = grads[i];
                     s.s[i] = s.rho * s.s[i] + (1.0 - s.rho) * g * g;
                     params[i] -= s.lr * g / std::sqrt(s.s[i] + s.eps);
                   }
                 },
                 [&](Rprop& s) {
                   ensure_size(s.step, n, s.step_init);
                   ensure_size(s.prev_grad, n, 0.0);
                   for (std::size_t i = 0; i < n; ++i) {
                     double g = grads[i];
                     const double agreement = g * s.prev_grad[i];
                     if (agreement > 0.0) {
                       s.step[i] = std::min(s.step[i] * s.eta_plus, s.step_max);
                     } else if (agreement < 0.0) {
                       s.step[i] = std::max(s.step[i] * s.eta_minus, s.step_min);
                       g = 0.0;
                     }
                     s.step[i] = std::clamp(s.step[i], s.step_min, s.step_max);
                     params[i] -= sign(g) * s.step[i];
                     s.prev_grad[i] = g;
                   }
                 },
             },
             state);
}

std::string optimizer_name(const OptimizerState& state) {
  return std::visit(overloaded{
                        [](const Sgd&) { return std::string("sgd"); },
                        [](const Adam&) { return std::string("adam"); },
                        [](const RmsProp&) { return std::string("rmsprop"); },
                        [](const Rprop&) { return std::string("rprop"); },
                    },
                    state);
}

OptimizerState make_optimizer(std::string_view name, double lr) {
  if (name == "sgd") return Sgd{lr};
  if (name == "adam") {
    Adam a;
    a.lr = lr;
    return a;
  }
  if (name == "rmsprop") {
    RmsProp r;
    r.lr = lr;
    return r;
  }
  if (name == "rprop") return Rprop{};
  throw InputError("unknown optimizer '" + std::string(name) +
                   "' (expected sgd, adam, rmsprop or rprop)");
}

OptimizerState reset(const OptimizerState& state) {
  return std::visit(overloaded{
                        [](const Sgd& s) -> OptimizerState { return s; },
                        [](const Adam& s) -> OptimizerState {
                          return Adam{s.lr, s.beta1, s.beta2, s.eps, {}, {}, 0};
                        },
                        [](const RmsProp& s) -> OptimizerState {
                          return RmsProp{s.lr, s.rho, s.eps, {}};
                        },
                        [](const Rprop& s) -> OptimizerState {
                          return Rprop{s.eta_plus, s.eta_minus, s.step_init, s.step_min,
                                       s.step_max, {}, {}};
                        },
                    },
                    state);
}

}  // namespace vafnet
