// vafnet: train and cross-validate feed-forward networks with variable
// activation functions.

#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vafnet/errors.hpp"
#include "vafnet/experiment.hpp"

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

// Flag values; anything left unset keeps the config-file (or default) value.
struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  std::optional<std::string> out;
  std::optional<std::string> dataset;
  std::optional<std::string> model;
  std::optional<std::string> target;
  std::optional<std::string> task;
  std::optional<bool> header;
  std::optional<bool> normalize;
  std::optional<std::string> g;
  std::optional<bool> shared;
  std::optional<std::string> init;
  std::optional<std::string> fixed;
  std::optional<std::string> optimizer;
  std::optional<std::string> lr;
  std::optional<std::size_t> batch_size;
  std::optional<std::size_t> max_epochs;
  std::optional<std::size_t> patience;
  std::optional<std::size_t> folds;
  std::optional<bool> select_on_validation;
};

void add_experiment_options(CLI::App& cmd, Overrides& o) {
  cmd.add_option("--config", o.config, "JSON experiment config");
  cmd.add_option("--seed", o.seed, "random seed");
  cmd.add_option("--jobs", o.jobs, "worker threads for k-fold runs");
  cmd.add_option("--out", o.out, "output directory");
  cmd.add_option("--dataset", o.dataset, "CSV path or synth:<kind>[:N[:noise]]");
  cmd.add_option("--model", o.model, "comma-separated architectures, e.g. net_10,vnet3_10");
  cmd.add_option("--target", o.target, "comma-separated target column indices (negative from end)");
  cmd.add_option("--task", o.task, "classification or regression");
  cmd.add_flag("--header,!--no-header", o.header, "skip the first CSV line");
  cmd.add_flag("--normalize,!--no-normalize", o.normalize, "z-score features (and regression targets)");
  cmd.add_option("--g", o.g, "VAF hidden activation");
  cmd.add_flag("--shared,!--no-shared", o.shared, "share one VAF per layer");
  cmd.add_option("--init", o.init, "comma-separated VAF inits: random or an activation name");
  cmd.add_option("--fixed", o.fixed, "activation of standard networks");
  cmd.add_option("--optimizer", o.optimizer, "auto, sgd, adam, rmsprop or rprop");
  cmd.add_option("--lr", o.lr, "comma-separated learning rates");
  cmd.add_option("--batch-size", o.batch_size, "mini-batch size");
  cmd.add_option("--max-epochs", o.max_epochs, "epoch budget");
  cmd.add_option("--patience", o.patience, "early-stopping patience");
  cmd.add_option("--folds", o.folds, "K for cross-validation");
  cmd.add_flag("--select-on-validation", o.select_on_validation,
               "pick grid points on the validation set instead of the test fold");
}

vafnet::ExperimentConfig resolve(const Overrides& o) {
  vafnet::ExperimentConfig cfg = o.config.empty() ? vafnet::ExperimentConfig{}
                                                  : vafnet::load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.jobs) cfg.jobs = *o.jobs;
  if (o.out) cfg.out = *o.out;
  if (o.dataset) cfg.dataset.path = *o.dataset;
  if (o.model) cfg.model.archs = split_list(*o.model);
  if (o.target) {
    cfg.dataset.schema.target_columns.clear();
    for (const auto& t : split_list(*o.target)) {
      try {
        cfg.dataset.schema.target_columns.push_back(std::stol(t));
      } catch (const std::exception&) {
        throw vafnet::InputError("bad --target value '" + t + "'");
      }
    }
  }
  if (o.task) cfg.dataset.schema.task = vafnet::parse_task(*o.task);
  if (o.header) cfg.dataset.schema.header = *o.header;
  if (o.normalize) cfg.dataset.normalize = *o.normalize;
  if (o.g) cfg.model.g = vafnet::parse_activation(*o.g);
  if (o.shared) cfg.model.shared = *o.shared;
  if (o.init) cfg.model.inits = split_list(*o.init);
  if (o.fixed) cfg.model.fixed = vafnet::parse_activation(*o.fixed);
  if (o.optimizer) cfg.optimizer.kind = *o.optimizer;
  if (o.lr) {
    cfg.optimizer.lrs.clear();
    for (const auto& v : split_list(*o.lr)) {
      try {
        cfg.optimizer.lrs.push_back(std::stod(v));
      } catch (const std::exception&) {
        throw vafnet::InputError("bad --lr value '" + v + "'");
      }
    }
  }
  if (o.batch_size) cfg.optimizer.batch_size = *o.batch_size;
  if (o.max_epochs) cfg.max_epochs = *o.max_epochs;
  if (o.patience) cfg.patience = *o.patience;
  if (o.folds) cfg.folds = *o.folds;
  if (o.select_on_validation) cfg.select_on_validation = *o.select_on_validation;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Feed-forward networks with variable activation functions"};
  app.require_subcommand(1);

  Overrides train_opts;
  auto* train = app.add_subcommand("train", "train one model with early stopping");
  add_experiment_options(*train, train_opts);

  Overrides kfold_opts;
  auto* kfold = app.add_subcommand("kfold", "K-fold cross-validation with grid search");
  add_experiment_options(*kfold, kfold_opts);

  vafnet::CurveRequest curve;
  std::string curve_out;
  auto* vaf_curve = app.add_subcommand("vaf-curve", "export a learned VAF as CSV");
  vaf_curve->add_option("--model-file", curve.model, "model JSON")->required();
  vaf_curve->add_option("--layer", curve.layer, "layer index (0-based)")->required();
  vaf_curve->add_option("--lo", curve.lo, "range start");
  vaf_curve->add_option("--hi", curve.hi, "range end");
  vaf_curve->add_option("--samples", curve.samples, "number of samples");
  vaf_curve->add_option("--out", curve_out, "output CSV (default stdout)");

  vafnet::InspectRequest inspect;
  auto* inspect_cmd = app.add_subcommand("inspect", "print parameter counts");
  inspect_cmd->add_option("--model-file", inspect.model_file, "model JSON");
  inspect_cmd->add_option("--model", inspect.arch, "architecture name");
  inspect_cmd->add_option("--input-dim", inspect.input_dim, "input dimension");
  inspect_cmd->add_option("--output-dim", inspect.output_dim, "output dimension");
  inspect_cmd->add_flag("--shared,!--no-shared", inspect.shared, "shared VAF layers");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (train->parsed()) {
      vafnet::cmd_train(resolve(train_opts), std::cout);
    } else if (kfold->parsed()) {
      vafnet::cmd_kfold(resolve(kfold_opts), std::cout);
    } else if (vaf_curve->parsed()) {
      curve.out = curve_out;
      vafnet::cmd_vaf_curve(curve, std::cout);
    } else if (inspect_cmd->parsed()) {
      vafnet::cmd_inspect(inspect, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "vafnet: " << e.what() << '\n';
    return vafnet::exit_code_for(e);
  }
  return 0;
}
