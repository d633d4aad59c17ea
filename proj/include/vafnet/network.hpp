#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "vafnet/activation.hpp"
#include "vafnet/matrix.hpp"
#include "vafnet/vaf.hpp"

namespace vafnet {

struct DenseSpec {
  std::size_t in;
  std::size_t out;
  bool operator==(const DenseSpec&) const = default;
};

struct FixedSpec {
  ActivationKind kind;
  bool operator==(const FixedSpec&) const = default;
};

struct VafSpec {
  std::size_t k;
  ActivationKind g;
  bool shared = true;
  bool operator==(const VafSpec&) const = default;
};

using LayerSpec = std::variant<DenseSpec, FixedSpec, VafSpec>;

// Affine map a = W z + b; W is out x in.
struct DenseLayer {
  Matrix weights;
  std::vector<double> bias;
};

struct FixedLayer {
  ActivationKind kind;
};

// Elementwise VAF over `width` neurons. A shared layer holds exactly one
// VafParams; a non-shared layer holds one per neuron.
struct VafLayer {
  std::size_t width;
  bool shared;
  std::vector<VafParams> params;

  const VafParams& for_neuron(std::size_t i) const { return shared ? params[0] : params[i]; }
};

using Layer = std::variant<DenseLayer, FixedLayer, VafLayer>;

class Network {
 public:
  // Validates shapes: dense layers must chain, VAF widths must match the
  // running dimension, and the last dense layer fixes output_dim.
  Network(std::size_t input_dim, std::vector<Layer> layers);

  Network(const Network& other);
  Network& operator=(const Network& other);
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  std::size_t input_dim() const { return input_dim_; }
  std::size_t output_dim() const { return output_dim_; }
  std::span<const Layer> layers() const { return layers_; }
  std::vector<LayerSpec> specs() const;

  // Any mutable access invalidates tapes recorded earlier.
  Layer& mutable_layer(std::size_t i);

  std::size_t parameter_count() const;

  // Layer order; within a dense layer W row-major then b; within a VAF
  // layer, per VafParams: alpha, alpha0, beta, beta0.
  std::vector<double> flatten_params() const;
  void set_params(std::span<const double> values);
  // params += delta
  void apply_update(std::span<const double> delta);

  std::uint64_t id() const { return id_; }
  std::uint64_t revision() const { return revision_; }

 private:
  template <typename F>
  void visit_params(F&& f);
  template <typename F>
  void visit_params(F&& f) const;

  std::size_t input_dim_;
  std::size_t output_dim_ = 0;
  std::vector<Layer> layers_;
  std::uint64_t id_;
  std::uint64_t revision_ = 0;
};

// Everything backward needs from one forward call.
struct Tape {
  std::uint64_t network_id = 0;
  std::uint64_t revision = 0;
  // inputs[i] is the input to layer i.
  std::vector<Matrix> inputs;
};

struct ForwardResult {
  Matrix output;
  Tape tape;
};

ForwardResult forward(const Network& net, const Matrix& x);
// Forward without recording a tape.
Matrix predict(const Network& net, const Matrix& x);

struct DenseGrad {
  Matrix d_weights;
  std::vector<double> d_bias;
};

struct VafLayerGrad {
  std::vector<VafGrad> params;
};

// Fixed layers have no parameters and hold std::monostate.
using LayerGrad = std::variant<std::monostate, DenseGrad, VafLayerGrad>;

// Mirrors a Network layer-for-layer. Shared VAF layers hold one gradient,
// summed over neurons and batch.
struct GradientSet {
  std::vector<LayerGrad> layers;

  // Same ordering as Network::flatten_params.
  std::vector<double> flatten() const;
};

GradientSet backward(const Network& net, const Tape& tape, const Matrix& d_output);

// E = 1/2 * sum (y - t)^2, no averaging.
double loss_sse(const Matrix& y, const Matrix& t);
// dE/dY = Y - T
Matrix loss_sse_grad(const Matrix& y, const Matrix& t);

struct InitMode {
  enum class Kind { Random, Specific };
  Kind kind = Kind::Random;
  ActivationKind target = ActivationKind::ReLU;

  static InitMode random() { return {}; }
  static InitMode specific(ActivationKind target) { return {Kind::Specific, target}; }
};

// Dense layers: uniform on +-sqrt(6/(in+out)), zero bias. VAF layers:
// init_vaf_random or init_vaf_specific. Deterministic in `seed`.
Network build(std::span<const LayerSpec> spec, InitMode init, std::uint64_t seed);

}  // namespace vafnet
