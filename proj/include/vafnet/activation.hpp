#pragma once

#include <array>
#include <string>
#include <string_view>

namespace vafnet {

enum class ActivationKind { Identity, ReLU, Tanh, Sigmoid };

inline constexpr std::array<ActivationKind, 4> kAllActivations = {
    ActivationKind::Identity, ActivationKind::ReLU, ActivationKind::Tanh,
    ActivationKind::Sigmoid};

double act(ActivationKind kind, double x);

// Exact derivative. ReLU'(0) is taken as 0.
double act_deriv(ActivationKind kind, double x);

// Lowercase names: "identity", "relu", "tanh", "sigmoid".
std::string to_string(ActivationKind kind);
ActivationKind parse_activation(std::string_view name);

}  // namespace vafnet
