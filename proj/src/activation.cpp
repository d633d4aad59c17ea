#include "vafnet/activation.hpp"

#include <cmath>

#include "vafnet/errors.hpp"

namespace vafnet {

double act(ActivationKind kind, double x) {
  switch (kind) {
    case ActivationKind::Identity:
      return x;
    case ActivationKind::ReLU:
      return x > 0.0 ? x : 0.0;
    case ActivationKind::Tanh:
      return std::tanh(x);
    case ActivationKind::Sigmoid:
      // Split on sign so exp never overflows.
      if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
      {
        const double e = std::exp(x);
        return e / (1.0 + e);
      }
  }
  return x;
}

double act_deriv(ActivationKind kind, double x) {
  switch (kind) {
    case ActivationKind::Identity:
      return 1.0;
    case ActivationKind::ReLU:
      return x > 0.0 ? 1.0 : 0.0;
    case ActivationKind::Tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case ActivationKind::Sigmoid: {
      const double s = act(ActivationKind::Sigmoid, x);
      return s * (1.0 - s);
    }
  }
  return 1.0;
}

std::string to_string(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::Identity:
      return "identity";
    case ActivationKind::ReLU:
      return "relu";
    case ActivationKind::Tanh:
      return "tanh";
    case ActivationKind::Sigmoid:
      return "sigmoid";
  }
  return "identity";
}

ActivationKind parse_activation(std::string_view name) {
  for (auto kind : kAllActivations) {
    if (to_string(kind) == name) return kind;
  }
  throw InputError("unknown activation '" + std::string(name) +
                   "' (expected identity, relu, tanh or sigmoid)");
}

}  // namespace vafnet
