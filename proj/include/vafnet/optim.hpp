#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace vafnet {

struct Sgd {
  double lr = 0.01;
};

struct Adam {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;
};

// With a constant learning rate RMSProp ends in a +-lr/2 oscillation around
// a minimum; the default keeps that below 1e-6 on small quadratics.
struct RmsProp {
  double lr = 0.0005;
  double rho = 0.9;
  double eps = 1e-8;
  std::vector<double> s;
};

// iRprop-: on a gradient sign change the step shrinks and that update is
// skipped; otherwise the parameter moves by -sign(g) * step.
struct Rprop {
  double eta_plus = 1.01;
  double eta_minus = 0.5;
  double step_init = 0.01;
  double step_min = 1e-6;
  double step_max = 50.0;
  std::vector<double> step;
  std::vector<double> prev_grad;
};

using OptimizerState = std::variant<Sgd, Adam, RmsProp, Rprop>;

// Updates params in place. Per-parameter state is sized on the first call.
// Throws DivergenceError naming the first non-finite gradient component and
// ShapeError when lengths disagree.
void step(OptimizerState& state, std::span<double> params, std::span<const double> grads);

std::string optimizer_name(const OptimizerState& state);

// "sgd", "adam", "rmsprop" or "rprop" with default hyperparameters; `lr` is
// ignored by rprop.
OptimizerState make_optimizer(std::string_view name, double lr);

// Fresh copy of the hyperparameters with all accumulated state cleared.
OptimizerState reset(const OptimizerState& state);

// Full-batch RProp below this many training examples, mini-batch RMSProp
// otherwise.
inline constexpr std::size_t kFullBatchThreshold = 5000;
inline constexpr std::size_t kDefaultMiniBatch = 64;

}  // namespace vafnet
