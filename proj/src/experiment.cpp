#include "vafnet/experiment.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "vafnet/errors.hpp"
#include "vafnet/format.hpp"
#include "vafnet/model_io.hpp"

namespace vafnet {
namespace {

using nlohmann::json;

void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed,
                    const std::string& where) {
  if (!obj.is_object()) throw InputError("config: '" + where + "' must be an object");
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw InputError("config: unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const json& obj, const char* key, T& into) {
  if (obj.contains(key)) into = obj.at(key).get<T>();
}

std::vector<std::string> string_list(const json& v) {
  if (v.is_string()) return {v.get<std::string>()};
  return v.get<std::vector<std::string>>();
}

std::filesystem::path open_out_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  return out;
}

std::size_t parse_size(std::string_view text, const std::string& what) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw InputError("bad " + what + " '" + std::string(text) + "'");
  return v;
}

double parse_real(std::string_view text, const std::string& what) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw InputError("bad " + what + " '" + std::string(text) + "'");
  return v;
}

InitMode parse_init(const std::string& name) {
  if (name == "random") return InitMode::random();
  return InitMode::specific(parse_activation(name));
}

}  // namespace

ExperimentConfig config_from_json_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  try {
    reject_unknown(doc,
                   {"dataset", "model", "optimizer", "folds", "max_epochs", "patience", "seed",
                    "jobs", "out", "select_on_validation", "split"},
                   "config");
    if (doc.contains("dataset")) {
      const auto& d = doc.at("dataset");
      reject_unknown(d, {"path", "target", "task", "header", "classes", "normalize"}, "dataset");
      read(d, "path", cfg.dataset.path);
      if (d.contains("target")) {
        const auto& t = d.at("target");
        cfg.dataset.schema.target_columns =
            t.is_array() ? t.get<std::vector<long>>() : std::vector<long>{t.get<long>()};
      }
      if (d.contains("task")) cfg.dataset.schema.task = parse_task(d.at("task").get<std::string>());
      read(d, "header", cfg.dataset.schema.header);
      if (d.contains("classes"))
        cfg.dataset.schema.classes = d.at("classes").get<std::vector<std::string>>();
      read(d, "normalize", cfg.dataset.normalize);
    }
    if (doc.contains("model")) {
      const auto& m = doc.at("model");
      reject_unknown(m, {"archs", "g", "shared", "inits", "fixed"}, "model");
      if (m.contains("archs")) cfg.model.archs = string_list(m.at("archs"));
      if (m.contains("g")) cfg.model.g = parse_activation(m.at("g").get<std::string>());
      read(m, "shared", cfg.model.shared);
      if (m.contains("inits")) cfg.model.inits = string_list(m.at("inits"));
      if (m.contains("fixed")) cfg.model.fixed = parse_activation(m.at("fixed").get<std::string>());
    }
    if (doc.contains("optimizer")) {
      const auto& o = doc.at("optimizer");
      reject_unknown(o, {"kind", "lrs", "batch_size"}, "optimizer");
      read(o, "kind", cfg.optimizer.kind);
      if (o.contains("lrs")) {
        const auto& l = o.at("lrs");
        cfg.optimizer.lrs = l.is_array() ? l.get<std::vector<double>>()
                                         : std::vector<double>{l.get<double>()};
      }
      read(o, "batch_size", cfg.optimizer.batch_size);
    }
    read(doc, "folds", cfg.folds);
    read(doc, "max_epochs", cfg.max_epochs);
    read(doc, "patience", cfg.patience);
    read(doc, "seed", cfg.seed);
    read(doc, "jobs", cfg.jobs);
    if (doc.contains("out")) cfg.out = doc.at("out").get<std::string>();
    read(doc, "select_on_validation", cfg.select_on_validation);
    read(doc, "split", cfg.split);
  } catch (const json::exception& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  return cfg;
}

std::string config_to_json_text(const ExperimentConfig& cfg) {
  json dataset{{"path", cfg.dataset.path},
               {"target", cfg.dataset.schema.target_columns},
               {"task", to_string(cfg.dataset.schema.task)},
               {"header", cfg.dataset.schema.header},
               {"normalize", cfg.dataset.normalize}};
  if (cfg.dataset.schema.classes) dataset["classes"] = *cfg.dataset.schema.classes;
  json doc{{"dataset", dataset},
           {"model",
            {{"archs", cfg.model.archs},
             {"g", to_string(cfg.model.g)},
             {"shared", cfg.model.shared},
             {"inits", cfg.model.inits},
             {"fixed", to_string(cfg.model.fixed)}}},
           {"optimizer",
            {{"kind", cfg.optimizer.kind},
             {"lrs", learning_rates(cfg.optimizer)},
             {"batch_size", cfg.optimizer.batch_size}}},
           {"folds", cfg.folds},
           {"max_epochs", cfg.max_epochs},
           {"patience", cfg.patience},
           {"seed", cfg.seed},
           {"select_on_validation", cfg.select_on_validation},
           {"split", cfg.split}};
  return doc.dump(2) + "\n";
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return config_from_json_text(ss.str());
}

Dataset load_dataset(const DatasetConfig& cfg, std::uint64_t seed) {
  if (cfg.path.empty()) throw InputError("no dataset given (use --dataset)");
  Dataset ds = [&] {
    if (!cfg.path.starts_with("synth:")) return load_csv(cfg.path, cfg.schema);
    std::vector<std::string> parts;
    std::stringstream ss(cfg.path.substr(6));
    for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
    if (parts.empty()) throw InputError("bad synthetic dataset '" + cfg.path + "'");
    const std::size_t n = parts.size() > 1 ? parse_size(parts[1], "sample count") : 200;
    const std::uint64_t synth_seed = mix_seed(seed, {0x73796e7468});
    if (parts[0] == "two-gaussians" || parts[0] == "xor-clusters") {
      return synth_classification(parse_synth_classification(parts[0]), n, synth_seed);
    }
    const double noise = parts.size() > 2 ? parse_real(parts[2], "noise level") : 0.0;
    return synth_regression(parse_synth_regression(parts[0]), n, noise, synth_seed);
  }();
  return cfg.normalize ? normalize(ds) : ds;
}

std::vector<double> learning_rates(const OptimizerConfig& cfg) {
  if (!cfg.lrs.empty()) return cfg.lrs;
  std::vector<double> out;
  for (const auto& v : equispaced(0.0001, 0.1, 10)) out.push_back(std::get<double>(v));
  return out;
}

std::string resolve_optimizer(const OptimizerConfig& cfg, std::size_t n) {
  if (cfg.kind != "auto") {
    make_optimizer(cfg.kind, 0.0);  // validates the name
    return cfg.kind;
  }
  return n < kFullBatchThreshold ? "rprop" : "rmsprop";
}

std::vector<ModelFamily> model_families(const ExperimentConfig& cfg, std::size_t n) {
  const std::string opt = resolve_optimizer(cfg.optimizer, n);
  std::optional<HyperAxis> lr_axis;
  if (opt != "rprop") {
    HyperAxis axis{"lr", {}};
    for (double lr : learning_rates(cfg.optimizer)) axis.values.emplace_back(lr);
    lr_axis = std::move(axis);
  }

  HyperAxis standard{"arch", {}};
  HyperAxis vaf{"arch", {}};
  for (const auto& name : cfg.model.archs) {
    const auto arch = parse_architecture(name);
    (arch.vaf ? vaf : standard).values.emplace_back(arch.name());
  }
  if (standard.values.empty() && vaf.values.empty()) throw InputError("no architectures given");

  std::vector<ModelFamily> out;
  if (!standard.values.empty()) {
    ModelFamily f{"standard", {{standard}}};
    if (lr_axis) f.grid.axes.push_back(*lr_axis);
    out.push_back(std::move(f));
  }
  if (!vaf.values.empty()) {
    if (cfg.model.inits.empty()) throw InputError("VAF architectures need at least one init");
    std::set<std::string> seen;
    for (const auto& init : cfg.model.inits) {
      parse_init(init);
      if (!seen.insert(init).second) continue;
      ModelFamily f{"vaf-" + init, {{vaf, HyperAxis{"init", {init}}}}};
      if (lr_axis) f.grid.axes.push_back(*lr_axis);
      out.push_back(std::move(f));
    }
  }
  return out;
}

ModelFactory make_factory(const ExperimentConfig& cfg, std::size_t n) {
  const std::string opt = resolve_optimizer(cfg.optimizer, n);
  const bool full_batch = opt == "rprop";
  return [cfg, opt, full_batch](const HyperPoint& point, const Dataset& train_set,
                                std::uint64_t seed) {
    const auto arch = parse_architecture(point.text("arch"));
    const auto layers = make_layers(arch, train_set.input_dim(), train_set.output_dim(),
                                    {cfg.model.g, cfg.model.shared}, cfg.model.fixed);
    const InitMode init = point.has("init") ? parse_init(point.text("init")) : InitMode::random();
    TrainConfig tc;
    tc.max_epochs = cfg.max_epochs;
    tc.patience = cfg.patience;
    tc.optimizer = make_optimizer(opt, point.has("lr") ? point.number("lr") : 0.0);
    tc.batch_size = full_batch ? 0 : cfg.optimizer.batch_size;
    tc.seed = mix_seed(seed, {0x747261696e});
    return ModelSetup{build(layers, init, mix_seed(seed, {0x696e6974})), tc};
  };
}

std::vector<FamilyReport> run_kfold(const ExperimentConfig& cfg, const Dataset& ds) {
  const auto factory = make_factory(cfg, ds.size());
  KFoldOptions options;
  options.select_on_validation = cfg.select_on_validation;
  options.jobs = cfg.jobs;
  std::vector<FamilyReport> out;
  for (const auto& family : model_families(cfg, ds.size())) {
    out.push_back({family.name, kfold(ds, factory, family.grid, cfg.folds, cfg.seed, options)});
  }
  return out;
}

std::string format_family_table(const std::string& dataset_name,
                                const std::vector<FamilyReport>& reports) {
  std::ostringstream out;
  out << "dataset";
  for (const auto& r : reports) out << " | " << r.name;
  out << '\n' << dataset_name;
  for (const auto& r : reports) out << " | " << format_cell(r.report);
  out << '\n';
  return out.str();
}

void cmd_train(const ExperimentConfig& cfg, std::ostream& log) {
  const Dataset ds = load_dataset(cfg.dataset, cfg.seed);
  const bool classification = ds.task == TaskKind::Classification;
  const auto parts = split(ds, cfg.split, mix_seed(cfg.seed, {0x73706c6974}), classification);
  if (parts.size() != 3) throw InputError("train needs a train/validation/test split");

  if (cfg.model.archs.empty()) throw InputError("no architecture given (use --model)");
  ExperimentConfig single = cfg;
  single.model.archs = {cfg.model.archs.front()};
  const auto families = model_families(single, ds.size());
  const auto point = families.front().grid.points().front();
  const auto setup = make_factory(single, ds.size())(point, parts[0], cfg.seed);
  const auto result = train(setup.net, parts[0], parts[1], setup.config);

  const auto dir = open_out_dir(cfg.out);
  save_model(result.best, dir / "model.json");
  {
    auto out = open_output(dir / "trace.csv");
    write_trace_csv(result.trace, out);
  }
  const Matrix y = predict(result.best, parts[2].x);
  const double test_metric =
      classification ? metric_accuracy(y, parts[2].t)
                     : metric_rmse(denormalize_targets(parts[2], y),
                                   denormalize_targets(parts[2], parts[2].t));
  std::ostringstream summary;
  summary << "model " << point.to_string() << " optimizer " << optimizer_name(setup.config.optimizer)
          << " epochs " << result.trace.epochs() << " best_epoch " << result.trace.best_epoch
          << " final_errorT " << format_real(result.trace.error_train.back()) << " final_errorV "
          << format_real(result.trace.error_val.back()) << " best_errorV "
          << format_real(result.trace.best_val_error) << " test_"
          << (classification ? "accuracy " : "rmse ") << format_real(test_metric) << '\n';
  {
    auto out = open_output(dir / "summary.txt");
    out << summary.str();
  }
  log << summary.str();
}

void cmd_kfold(const ExperimentConfig& cfg, std::ostream& log) {
  const Dataset ds = load_dataset(cfg.dataset, cfg.seed);
  const auto reports = run_kfold(cfg, ds);
  const auto dir = open_out_dir(cfg.out);
  {
    auto out = open_output(dir / "config.json");
    out << config_to_json_text(cfg);
  }
  std::ostringstream text;
  for (const auto& r : reports) {
    auto csv = open_output(dir / ("cv_" + r.name + ".csv"));
    write_cv_csv(r.report, csv);
    auto scores = open_output(dir / ("cv_" + r.name + "_scores.csv"));
    write_cv_scores_csv(r.report, scores);
    text << format_cv_table(r.report, r.name) << '\n';
  }
  const std::string name = cfg.dataset.path.starts_with("synth:")
                               ? cfg.dataset.path
                               : std::filesystem::path(cfg.dataset.path).stem().string();
  text << format_family_table(name, reports);
  if (reports.size() > 1 && reports.front().name == "standard") {
    for (std::size_t i = 1; i < reports.size(); ++i) {
      const auto c = compare(reports[i].report, reports.front().report);
      text << reports[i].name << " vs standard: mean difference " << format_real(c.mean_difference)
           << ", better in " << c.a_better << " folds, worse in " << c.b_better << ", tied in "
           << c.ties << '\n';
    }
  }
  auto out = open_output(dir / "report.txt");
  out << text.str();
  log << text.str();
}

void write_vaf_curve(const Network& net, std::size_t layer, double lo, double hi,
                     std::size_t samples, std::ostream& out) {
  if (layer >= net.layers().size())
    throw InputError("layer " + std::to_string(layer) + " does not exist (model has " +
                     std::to_string(net.layers().size()) + " layers)");
  const auto* vaf = std::get_if<VafLayer>(&net.layers()[layer]);
  if (!vaf) throw InputError("layer " + std::to_string(layer) + " is not a VAF layer");
  if (samples == 0) throw InputError("samples must be >= 1");
  if (!(lo <= hi)) throw InputError("curve range must satisfy lo <= hi");

  out << 'a';
  if (vaf->shared) {
    out << ",z";
  } else {
    for (std::size_t i = 0; i < vaf->width; ++i) out << ",z" << (i + 1);
  }
  out << '\n';
  for (std::size_t s = 0; s < samples; ++s) {
    const double a = samples == 1 ? lo
                                  : lo + (hi - lo) * static_cast<double>(s) /
                                             static_cast<double>(samples - 1);
    out << format_real(a);
    for (const auto& p : vaf->params) out << ',' << format_real(vaf_eval(p, a));
    out << '\n';
  }
}

void cmd_vaf_curve(const CurveRequest& req, std::ostream& log) {
  const Network net = load_model(req.model);
  if (req.out.empty()) {
    write_vaf_curve(net, req.layer, req.lo, req.hi, req.samples, log);
    return;
  }
  std::ostringstream buffer;
  write_vaf_curve(net, req.layer, req.lo, req.hi, req.samples, buffer);
  if (req.out.has_parent_path()) open_out_dir(req.out.parent_path());
  auto out = open_output(req.out);
  out << buffer.str();
}

std::string describe_parameters(const Network& net) {
  std::ostringstream out;
  std::size_t dense = 0;
  std::size_t vaf_total = 0;
  std::size_t hidden_neurons = 0;
  std::vector<VafLayerShape> shapes;
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    const auto& layer = net.layers()[i];
    out << "layer " << i << ": ";
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      const std::size_t n = d->weights.size() + d->bias.size();
      dense += n;
      out << "dense " << d->weights.cols() << " -> " << d->weights.rows() << ", " << n
          << " parameters\n";
    } else if (const auto* f = std::get_if<FixedLayer>(&layer)) {
      out << "fixed " << to_string(f->kind) << '\n';
    } else {
      const auto& v = std::get<VafLayer>(layer);
      const VafLayerShape shape{v.width, v.params.front().k()};
      const std::size_t n = parameter_count(v.shared, std::span(&shape, 1));
      vaf_total += n;
      hidden_neurons += v.width;
      shapes.push_back(shape);
      out << "vaf k=" << shape.k << " g=" << to_string(v.params.front().g) << " width "
          << v.width << (v.shared ? " shared" : " per-neuron") << ", " << n << " parameters\n";
    }
  }
  out << "dense parameters: " << dense << '\n';
  out << "vaf parameters: " << vaf_total << '\n';
  if (!shapes.empty()) {
    out << "vaf parameters if shared (L*(3k+1), L=" << shapes.size()
        << "): " << parameter_count(true, shapes) << '\n';
    out << "vaf parameters if per-neuron (N*(3k+1), N=" << hidden_neurons
        << "): " << parameter_count(false, shapes) << '\n';
  }
  out << "total parameters: " << net.parameter_count() << '\n';
  return out.str();
}

void cmd_inspect(const InspectRequest& req, std::ostream& log) {
  if (!req.model_file.empty()) {
    const Network net = load_model(req.model_file);
    log << "model file: " << req.model_file.string() << " (" << net.input_dim() << " -> "
        << net.output_dim() << ")\n";
    log << describe_parameters(net);
    return;
  }
  if (req.arch.empty()) throw InputError("inspect needs --model-file or --model");
  if (req.input_dim == 0 || req.output_dim == 0)
    throw InputError("inspect --model needs --input-dim and --output-dim");
  const auto arch = parse_architecture(req.arch);
  const auto layers = make_layers(arch, req.input_dim, req.output_dim,
                                  {ActivationKind::ReLU, req.shared}, ActivationKind::ReLU);
  const Network net = build(layers, InitMode::random(), 0);
  log << "architecture: " << arch.name() << " (" << req.input_dim << " -> " << req.output_dim
      << ")\n";
  log << describe_parameters(net);
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const DivergenceError*>(&e)) return 2;
  return 1;
}

}  // namespace vafnet
