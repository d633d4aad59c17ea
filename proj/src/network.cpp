#include "vafnet/network.hpp"

#include <atomic>
#include <cmath>
#include <string>

#include "vafnet/errors.hpp"

namespace vafnet {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::uint64_t next_network_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

std::string layer_label(std::size_t i) { return "layer " + std::to_string(i); }

void check_finite_dims(std::size_t value, const std::string& what) {
  if (value == 0) throw ShapeError(what + " must be >= 1");
}

}  // namespace

Network::Network(std::size_t input_dim, std::vector<Layer> layers)
    : input_dim_(input_dim), layers_(std::move(layers)), id_(next_network_id()) {
  check_finite_dims(input_dim_, "input_dim");
  std::size_t dim = input_dim_;
  bool have_dense = false;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    std::visit(overloaded{
                   [&](const DenseLayer& d) {
                     if (d.weights.cols() != dim) {
                       throw ShapeError(layer_label(i) + ": dense input " +
                                        std::to_string(d.weights.cols()) +
                                        " does not chain with dimension " + std::to_string(dim));
                     }
                     if (d.bias.size() != d.weights.rows()) {
                       throw ShapeError(layer_label(i) + ": bias length " +
                                        std::to_string(d.bias.size()) + " != output " +
                                        std::to_string(d.weights.rows()));
                     }
                     dim = d.weights.rows();
                     have_dense = true;
                   },
                   [&](const FixedLayer&) {},
                   [&](const VafLayer& v) {
                     if (v.width != dim) {
                       throw ShapeError(layer_label(i) + ": VAF width " +
                                        std::to_string(v.width) + " != dimension " +
                                        std::to_string(dim));
                     }
                     const std::size_t expected = v.shared ? 1 : v.width;
                     if (v.params.size() != expected) {
                       throw ShapeError(layer_label(i) + ": expected " +
                                        std::to_string(expected) + " VAF parameter sets, got " +
                                        std::to_string(v.params.size()));
                     }
                     for (const auto& p : v.params) validate(p);
                   },
               },
               layers_[i]);
  }
  if (!have_dense) throw ShapeError("network needs at least one dense layer");
  output_dim_ = dim;
}

Network::Network(const Network& other)
    : input_dim_(other.input_dim_),
      output_dim_(other.output_dim_),
      layers_(other.layers_),
      id_(next_network_id()),
      revision_(0) {}

Network& Network::operator=(const Network& other) {
  if (this != &other) {
    input_dim_ = other.input_dim_;
    output_dim_ = other.output_dim_;
    layers_ = other.layers_;
    id_ = next_network_id();
    revision_ = 0;
  }
  return *this;
}

std::vector<LayerSpec> Network::specs() const {
  std::vector<LayerSpec> out;
  out.reserve(layers_.size());
  for (const auto& layer : layers_) {
    out.push_back(std::visit(
        overloaded{
            [](const DenseLayer& d) -> LayerSpec {
              return DenseSpec{d.weights.cols(), d.weights.rows()};
            },
            [](const FixedLayer& f) -> LayerSpec { return FixedSpec{f.kind}; },
            [](const VafLayer& v) -> LayerSpec {
              return VafSpec{v.params.front().k(), v.params.front().g, v.shared};
            },
        },
        layer));
  }
  return out;
}

Layer& Network::mutable_layer(std::size_t i) {
  ++revision_;
  return layers_.at(i);
}

template <typename F>
void Network::visit_params(F&& f) {
  for (auto& layer : layers_) {
    if (auto* d = std::get_if<DenseLayer>(&layer)) {
      for (auto& w : d->weights.data()) f(w);
      for (auto& b : d->bias) f(b);
    } else if (auto* v = std::get_if<VafLayer>(&layer)) {
      for (auto& p : v->params) {
        for (auto& x : p.alpha) f(x);
        for (auto& x : p.alpha0) f(x);
        for (auto& x : p.beta) f(x);
        f(p.beta0);
      }
    }
  }
}

template <typename F>
void Network::visit_params(F&& f) const {
  const_cast<Network*>(this)->visit_params([&](double& x) { f(static_cast<const double&>(x)); });
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  visit_params([&](const double&) { ++n; });
  return n;
}

std::vector<double> Network::flatten_params() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  visit_params([&](const double& x) { out.push_back(x); });
  return out;
}

void Network::set_params(std::span<const double> values) {
  if (values.size() != parameter_count()) {
    throw ShapeError("set_params: got " + std::to_string(values.size()) + " values for " +
                     std::to_string(parameter_count()) + " parameters");
  }
  std::size_t i = 0;
  visit_params([&](double& x) { x = values[i++]; });
  ++revision_;
}

void Network::apply_update(std::span<const double> delta) {
  if (delta.size() != parameter_count()) {
    throw ShapeError("apply_update: delta length " + std::to_string(delta.size()) + " != " +
                     std::to_string(parameter_count()) + " parameters");
  }
  std::size_t i = 0;
  visit_params([&](double& x) { x += delta[i++]; });
  ++revision_;
}

namespace {

Matrix dense_forward(const DenseLayer& d, const Matrix& x) {
  Matrix a = matmul_transposed(x, d.weights);
  for (std::size_t n = 0; n < a.rows(); ++n) {
    auto r = a.row(n);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += d.bias[j];
  }
  return a;
}

Matrix vaf_layer_forward(const VafLayer& v, const Matrix& x) {
  Matrix z(x.rows(), x.cols());
  for (std::size_t n = 0; n < x.rows(); ++n)
    for (std::size_t i = 0; i < x.cols(); ++i) z(n, i) = vaf_eval(v.for_neuron(i), x(n, i));
  return z;
}

Matrix layer_forward(const Layer& layer, const Matrix& x, std::size_t index) {
  return std::visit(
      overloaded{
          [&](const DenseLayer& d) {
            if (x.cols() != d.weights.cols()) {
              throw ShapeError(layer_label(index) + ": input has " + std::to_string(x.cols()) +
                               " columns, dense layer expects " +
                               std::to_string(d.weights.cols()));
            }
            return dense_forward(d, x);
          },
          [&](const FixedLayer& f) {
            return elementwise(x, [kind = f.kind](double v) { return act(kind, v); });
          },
          [&](const VafLayer& v) {
            if (x.cols() != v.width) {
              throw ShapeError(layer_label(index) + ": input has " + std::to_string(x.cols()) +
                               " columns, VAF layer width is " + std::to_string(v.width));
            }
            return vaf_layer_forward(v, x);
          },
      },
      layer);
}

void check_input(const Network& net, const Matrix& x) {
  if (x.cols() != net.input_dim()) {
    throw ShapeError("layer 0: input has " + std::to_string(x.cols()) +
                     " columns, network expects " + std::to_string(net.input_dim()));
  }
}

}  // namespace

ForwardResult forward(const Network& net, const Matrix& x) {
  check_input(net, x);
  Tape tape{net.id(), net.revision(), {}};
  tape.inputs.reserve(net.layers().size());
  Matrix current = x;
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    Matrix next = layer_forward(net.layers()[i], current, i);
    tape.inputs.push_back(std::move(current));
    current = std::move(next);
  }
  return {std::move(current), std::move(tape)};
}

Matrix predict(const Network& net, const Matrix& x) {
  check_input(net, x);
  Matrix current = x;
  for (std::size_t i = 0; i < net.layers().size(); ++i)
    current = layer_forward(net.layers()[i], current, i);
  return current;
}

GradientSet backward(const Network& net, const Tape& tape, const Matrix& d_output) {
  if (tape.network_id != net.id() || tape.revision != net.revision()) {
    throw TapeError("tape was recorded for a different network state");
  }
  if (tape.inputs.size() != net.layers().size()) {
    throw TapeError("tape has " + std::to_string(tape.inputs.size()) + " entries for " +
                    std::to_string(net.layers().size()) + " layers");
  }
  const std::size_t batch = tape.inputs.front().rows();
  if (d_output.rows() != batch || d_output.cols() != net.output_dim()) {
    throw ShapeError("backward: upstream gradient " + d_output.shape_string() +
                     " does not match output " + std::to_string(batch) + "x" +
                     std::to_string(net.output_dim()));
  }

  GradientSet grads;
  grads.layers.resize(net.layers().size());
  Matrix upstream = d_output;
  for (std::size_t i = net.layers().size(); i-- > 0;) {
    const Matrix& input = tape.inputs[i];
    std::visit(overloaded{
                   [&](const DenseLayer& d) {
                     // dW = dA^T X, db = column sums of dA, dX = dA W
                     DenseGrad g{matmul(transpose(upstream), input),
                                 std::vector<double>(d.bias.size(), 0.0)};
                     const Matrix col = row_sum(upstream);
                     std::copy(col.data().begin(), col.data().end(), g.d_bias.begin());
                     if (i > 0) upstream = matmul(upstream, d.weights);
                     grads.layers[i] = std::move(g);
                   },
                   [&](const FixedLayer& f) {
                     auto u = upstream.data();
                     auto x = input.data();
                     for (std::size_t e = 0; e < u.size(); ++e) u[e] *= act_deriv(f.kind, x[e]);
                     grads.layers[i] = std::monostate{};
                   },
                   [&](const VafLayer& v) {
                     VafLayerGrad g;
                     g.params.reserve(v.params.size());
                     for (const auto& p : v.params) g.params.push_back(VafGrad::zeros_like(p));
                     for (std::size_t n = 0; n < batch; ++n) {
                       for (std::size_t j = 0; j < v.width; ++j) {
                         const std::size_t slot = v.shared ? 0 : j;
                         upstream(n, j) = vaf_backward_accumulate(v.params[slot], input(n, j),
                                                                  upstream(n, j), g.params[slot]);
                       }
                     }
                     grads.layers[i] = std::move(g);
                   },
               },
               net.layers()[i]);
  }
  return grads;
}

std::vector<double> GradientSet::flatten() const {
  std::vector<double> out;
  for (const auto& layer : layers) {
    if (const auto* d = std::get_if<DenseGrad>(&layer)) {
      out.insert(out.end(), d->d_weights.data().begin(), d->d_weights.data().end());
      out.insert(out.end(), d->d_bias.begin(), d->d_bias.end());
    } else if (const auto* v = std::get_if<VafLayerGrad>(&layer)) {
      for (const auto& g : v->params) {
        out.insert(out.end(), g.d_alpha.begin(), g.d_alpha.end());
        out.insert(out.end(), g.d_alpha0.begin(), g.d_alpha0.end());
        out.insert(out.end(), g.d_beta.begin(), g.d_beta.end());
        out.push_back(g.d_beta0);
      }
    }
  }
  return out;
}

double loss_sse(const Matrix& y, const Matrix& t) {
  if (y.rows() != t.rows() || y.cols() != t.cols()) {
    throw ShapeError("loss_sse: shape mismatch " + y.shape_string() + " vs " + t.shape_string());
  }
  double acc = 0.0;
  auto a = y.data();
  auto b = t.data();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return 0.5 * acc;
}

Matrix loss_sse_grad(const Matrix& y, const Matrix& t) { return sub(y, t); }

Network build(std::span<const LayerSpec> spec, InitMode init, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Layer> layers;
  layers.reserve(spec.size());
  std::size_t input_dim = 0;
  std::size_t dim = 0;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    std::visit(
        overloaded{
            [&](const DenseSpec& d) {
              if (d.in == 0 || d.out == 0)
                throw InputError(layer_label(i) + ": dense dimensions must be >= 1");
              if (input_dim == 0) {
                input_dim = d.in;
                dim = d.in;
              }
              if (d.in != dim) {
                throw InputError(layer_label(i) + ": dense input " + std::to_string(d.in) +
                                 " does not chain with previous output " + std::to_string(dim));
              }
              const double r = std::sqrt(6.0 / static_cast<double>(d.in + d.out));
              std::uniform_real_distribution<double> u(-r, r);
              Matrix w(d.out, d.in);
              for (auto& x : w.data()) x = u(rng);
              layers.emplace_back(DenseLayer{std::move(w), std::vector<double>(d.out, 0.0)});
              dim = d.out;
            },
            [&](const FixedSpec& f) {
              if (input_dim == 0) throw InputError("network must start with a dense layer");
              layers.emplace_back(FixedLayer{f.kind});
            },
            [&](const VafSpec& v) {
              if (input_dim == 0) throw InputError("network must start with a dense layer");
              if (v.k == 0) throw InputError(layer_label(i) + ": VAF k must be >= 1");
              VafLayer layer{dim, v.shared, {}};
              const std::size_t count = v.shared ? 1 : dim;
              for (std::size_t n = 0; n < count; ++n) {
                layer.params.push_back(init.kind == InitMode::Kind::Random
                                           ? init_vaf_random(v.k, v.g, rng)
                                           : init_vaf_specific(v.k, v.g, init.target, rng));
              }
              layers.emplace_back(std::move(layer));
            },
        },
        spec[i]);
  }
  if (input_dim == 0) throw InputError("network spec has no dense layer");
  return Network(input_dim, std::move(layers));
}

}  // namespace vafnet
