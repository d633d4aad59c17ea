#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "vafnet/architectures.hpp"
#include "vafnet/data.hpp"
#include "vafnet/eval.hpp"

namespace vafnet {

struct DatasetConfig {
  // A CSV path, or "synth:<kind>[:N[:noise]]" for the built-in generators
  // (linear, sin, abs, two-gaussians, xor-clusters).
  std::string path;
  CsvSchema schema;
  bool normalize = true;
};

struct ModelConfig {
  // Architecture names such as net_10 or vnet3_25_10.
  std::vector<std::string> archs = {"net_10", "vnet3_10"};
  ActivationKind g = ActivationKind::ReLU;
  bool shared = true;
  // VAF initializations: "random" or an activation name for specific init.
  std::vector<std::string> inits = {"random"};
  // Activation of the standard (non-VAF) networks.
  ActivationKind fixed = ActivationKind::ReLU;
};

struct OptimizerConfig {
  // "auto" picks full-batch rprop below 5000 examples and mini-batch
  // rmsprop otherwise.
  std::string kind = "auto";
  std::vector<double> lrs;  // empty means 10 equispaced values on [1e-4, 0.1]
  std::size_t batch_size = kDefaultMiniBatch;
};

struct ExperimentConfig {
  DatasetConfig dataset;
  ModelConfig model;
  OptimizerConfig optimizer;
  std::size_t folds = 10;
  std::size_t max_epochs = 300;
  std::size_t patience = kDefaultPatience;
  std::uint64_t seed = 1;
  std::size_t jobs = 1;
  std::filesystem::path out = "vafnet-out";
  bool select_on_validation = false;
  // train command only: train / validation / test fractions
  std::vector<double> split = {0.6, 0.2, 0.2};
};

// Reads a JSON config; unknown keys are rejected.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig config_from_json_text(const std::string& text);
// Leaves out `jobs` and `out`, which do not change results, so reruns into
// another directory or with another thread count produce the same text.
std::string config_to_json_text(const ExperimentConfig& cfg);

Dataset load_dataset(const DatasetConfig& cfg, std::uint64_t seed);

// Resolved optimizer kind ("rprop", "rmsprop", ...) for a dataset of n rows.
std::string resolve_optimizer(const OptimizerConfig& cfg, std::size_t n);
std::vector<double> learning_rates(const OptimizerConfig& cfg);

// One family of models compared in a K-fold run: the standard networks, or
// the VAF networks under one initialization.
struct ModelFamily {
  std::string name;  // "standard", "vaf-random", "vaf-relu", ...
  HyperGrid grid;
};

std::vector<ModelFamily> model_families(const ExperimentConfig& cfg, std::size_t n);
ModelFactory make_factory(const ExperimentConfig& cfg, std::size_t n);

struct FamilyReport {
  std::string name;
  CvReport report;
};

// Runs every family over the same folds.
std::vector<FamilyReport> run_kfold(const ExperimentConfig& cfg, const Dataset& ds);

// Side-by-side "mean ± std (best arch)" row, one column per family.
std::string format_family_table(const std::string& dataset_name,
                                const std::vector<FamilyReport>& reports);

// Commands write their artifacts under cfg.out and a short log to `log`.
// They throw on failure; see exit_code_for.
void cmd_train(const ExperimentConfig& cfg, std::ostream& log);
void cmd_kfold(const ExperimentConfig& cfg, std::ostream& log);

struct CurveRequest {
  std::filesystem::path model;
  std::size_t layer = 0;
  double lo = -3.0;
  double hi = 3.0;
  std::size_t samples = 101;
  // Empty means write to the log stream.
  std::filesystem::path out;
};

// a,z for a shared layer; a,z1,...,zN for a per-neuron layer.
void cmd_vaf_curve(const CurveRequest& req, std::ostream& log);
void write_vaf_curve(const Network& net, std::size_t layer, double lo, double hi,
                     std::size_t samples, std::ostream& out);

struct InspectRequest {
  std::filesystem::path model_file;  // if set, inspect this model
  std::string arch;                  // otherwise build this architecture
  std::size_t input_dim = 0;
  std::size_t output_dim = 0;
  bool shared = true;
};

void cmd_inspect(const InspectRequest& req, std::ostream& log);
std::string describe_parameters(const Network& net);

// 0 success, 1 user error, 2 numeric divergence.
int exit_code_for(const std::exception& e);

}  // namespace vafnet
