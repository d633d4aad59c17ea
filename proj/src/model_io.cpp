#include "vafnet/model_io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

#include "vafnet/errors.hpp"

namespace vafnet {
namespace {

using nlohmann::json;

json vaf_to_json(const VafParams& p) {
  return json{{"k", p.k()},         {"g", to_string(p.g)}, {"alpha", p.alpha},
              {"alpha0", p.alpha0}, {"beta", p.beta},      {"beta0", p.beta0}};
}

VafParams vaf_from_json(const json& j) {
  VafParams p{parse_activation(j.at("g").get<std::string>()),
              j.at("alpha").get<std::vector<double>>(), j.at("alpha0").get<std::vector<double>>(),
              j.at("beta").get<std::vector<double>>(), j.at("beta0").get<double>()};
  if (j.at("k").get<std::size_t>() != p.k()) throw InputError("VAF 'k' disagrees with alpha length");
  validate(p);
  return p;
}

json layer_to_json(const Layer& layer) {
  if (const auto* d = std::get_if<DenseLayer>(&layer)) {
    json rows = json::array();
    for (std::size_t r = 0; r < d->weights.rows(); ++r) {
      auto row = d->weights.row(r);
      rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    return json{{"type", "dense"},
                {"in", d->weights.cols()},
                {"out", d->weights.rows()},
                {"weights", rows},
                {"bias", d->bias}};
  }
  if (const auto* f = std::get_if<FixedLayer>(&layer)) {
    return json{{"type", "fixed"}, {"activation", to_string(f->kind)}};
  }
  const auto& v = std::get<VafLayer>(layer);
  json params = json::array();
  for (const auto& p : v.params) params.push_back(vaf_to_json(p));
  return json{{"type", "vaf"},
              {"width", v.width},
              {"shared", v.shared},
              {"k", v.params.front().k()},
              {"g", to_string(v.params.front().g)},
              {"params", params}};
}

Layer layer_from_json(const json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "dense") {
    const auto in = j.at("in").get<std::size_t>();
    const auto out = j.at("out").get<std::size_t>();
    std::vector<double> data;
    data.reserve(in * out);
    const auto& rows = j.at("weights");
    if (rows.size() != out) throw InputError("dense layer weights have wrong row count");
    for (const auto& row : rows) {
      auto values = row.get<std::vector<double>>();
      if (values.size() != in) throw InputError("dense layer weights have wrong column count");
      data.insert(data.end(), values.begin(), values.end());
    }
    return DenseLayer{Matrix(out, in, std::move(data)), j.at("bias").get<std::vector<double>>()};
  }
  if (type == "fixed") return FixedLayer{parse_activation(j.at("activation").get<std::string>())};
  if (type == "vaf") {
    VafLayer v{j.at("width").get<std::size_t>(), j.at("shared").get<bool>(), {}};
    for (const auto& p : j.at("params")) v.params.push_back(vaf_from_json(p));
    return v;
  }
  throw InputError("unknown layer type '" + type + "'");
}

}  // namespace

std::string model_to_string(const Network& net) {
  json layers = json::array();
  for (const auto& layer : net.layers()) layers.push_back(layer_to_json(layer));
  json doc{{"format", "vafnet-model"},
           {"version", kModelFormatVersion},
           {"input_dim", net.input_dim()},
           {"output_dim", net.output_dim()},
           {"layers", layers}};
  return doc.dump(1) + "\n";
}

Network model_from_string(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != "vafnet-model")
      throw InputError("not a vafnet model file");
    const int version = doc.at("version").get<int>();
    if (version != kModelFormatVersion)
      throw InputError("unsupported model version " + std::to_string(version));
    std::vector<Layer> layers;
    for (const auto& l : doc.at("layers")) layers.push_back(layer_from_json(l));
    Network net(doc.at("input_dim").get<std::size_t>(), std::move(layers));
    if (net.output_dim() != doc.at("output_dim").get<std::size_t>())
      throw InputError("model output_dim disagrees with its layers");
    return net;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed model file: ") + e.what());
  } catch (const ShapeError& e) {
    throw InputError(std::string("inconsistent model file: ") + e.what());
  }
}

void save_model(const Network& net, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write model file " + path.string());
  out << model_to_string(net);
}

Network load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read model file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return model_from_string(ss.str());
}

}  // namespace vafnet
