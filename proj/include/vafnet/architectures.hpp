#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "vafnet/network.hpp"

namespace vafnet {

// A named fully-connected model family: "net_25_10" is two hidden layers of
// 25 and 10 neurons with fixed activations, "vnet3_25_10" the same topology
// with a 3-unit VAF after every hidden layer.
struct Architecture {
  std::vector<std::size_t> hidden;
  bool vaf = false;
  std::size_t k = 3;

  std::string name() const;
  bool operator==(const Architecture&) const = default;
};

Architecture parse_architecture(std::string_view name);

// The ten hidden-layer layouts used for the fully-connected experiments,
// ordered by size: 10, 25, 50, 100, (25,10), (50,10), (100,10), (50,25),
// (100,25), (100,50).
std::vector<Architecture> standard_architectures(bool vaf, std::size_t k = 3);

struct VafOptions {
  ActivationKind g = ActivationKind::ReLU;
  bool shared = true;
};

// Dense(in->m1), act, ..., Dense(->out), Fixed(identity). For VAF
// architectures each hidden activation is a VAF layer; otherwise it is
// Fixed(`fixed`).
std::vector<LayerSpec> make_layers(const Architecture& arch, std::size_t input_dim,
                                   std::size_t output_dim, VafOptions vaf = {},
                                   ActivationKind fixed = ActivationKind::ReLU);

}  // namespace vafnet
