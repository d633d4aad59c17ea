#include "vafnet/architectures.hpp"

#include <charconv>

#include "vafnet/errors.hpp"

namespace vafnet {
namespace {

std::size_t parse_count(std::string_view text, std::string_view full) {
  std::size_t value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end || value == 0) {
    throw InputError("bad architecture name '" + std::string(full) +
                     "' (expected e.g. net_25_10 or vnet3_25)");
  }
  return value;
}

}  // namespace

std::string Architecture::name() const {
  std::string out = vaf ? "vnet" + std::to_string(k) : "net";
  for (auto m : hidden) out += "_" + std::to_string(m);
  return out;
}

Architecture parse_architecture(std::string_view name) {
  Architecture arch;
  const auto first = name.find('_');
  if (first == std::string_view::npos)
    throw InputError("bad architecture name '" + std::string(name) + "': no hidden layers");
  const auto head = name.substr(0, first);
  if (head == "net") {
    arch.vaf = false;
  } else if (head.starts_with("vnet") && head.size() > 4) {
    arch.vaf = true;
    arch.k = parse_count(head.substr(4), name);
  } else {
    throw InputError("bad architecture name '" + std::string(name) +
                     "' (expected prefix net or vnet<k>)");
  }
  auto rest = name.substr(first + 1);
  while (true) {
    const auto next = rest.find('_');
    arch.hidden.push_back(parse_count(rest.substr(0, next), name));
    if (next == std::string_view::npos) break;
    rest = rest.substr(next + 1);
  }
  return arch;
}

std::vector<Architecture> standard_architectures(bool vaf, std::size_t k) {
  const std::vector<std::vector<std::size_t>> layouts = {
      {10}, {25}, {50}, {100}, {25, 10}, {50, 10}, {100, 10}, {50, 25}, {100, 25}, {100, 50}};
  std::vector<Architecture> out;
  for (const auto& h : layouts) out.push_back({h, vaf, k});
  return out;
}

std::vector<LayerSpec> make_layers(const Architecture& arch, std::size_t input_dim,
                                   std::size_t output_dim, VafOptions vaf, ActivationKind fixed) {
  std::vector<LayerSpec> layers;
  std::size_t dim = input_dim;
  for (auto m : arch.hidden) {
    layers.emplace_back(DenseSpec{dim, m});
    if (arch.vaf) {
      layers.emplace_back(VafSpec{arch.k, vaf.g, vaf.shared});
    } else {
      layers.emplace_back(FixedSpec{fixed});
    }
    dim = m;
  }
  layers.emplace_back(DenseSpec{dim, output_dim});
  layers.emplace_back(FixedSpec{ActivationKind::Identity});
  return layers;
}

}  // namespace vafnet
