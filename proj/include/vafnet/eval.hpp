#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "vafnet/data.hpp"
#include "vafnet/network.hpp"
#include "vafnet/train.hpp"

namespace vafnet {

double metric_rmse(const Matrix& y, const Matrix& t);
// Fraction of rows whose argmax agrees; ties resolve to the lowest index.
double metric_accuracy(const Matrix& y, const Matrix& t);

using HyperValue = std::variant<double, std::string>;

std::string to_string(const HyperValue& v);

struct HyperAxis {
  std::string name;
  std::vector<HyperValue> values;
};

struct HyperPoint {
  std::vector<std::pair<std::string, HyperValue>> values;

  const HyperValue& at(std::string_view name) const;
  bool has(std::string_view name) const;
  double number(std::string_view name) const;
  const std::string& text(std::string_view name) const;
  // "arch=net_10 lr=0.001"
  std::string to_string() const;

  bool operator==(const HyperPoint&) const = default;
};

// Cartesian product in lexicographic order: the first axis varies slowest.
struct HyperGrid {
  std::vector<HyperAxis> axes;

  std::vector<HyperPoint> points() const;
  std::size_t size() const;
};

// n equispaced values on [lo, hi].
std::vector<HyperValue> equispaced(double lo, double hi, std::size_t n);

// What the factory hands back for one grid point.
struct ModelSetup {
  Network net;
  TrainConfig config;
};

// Builds the untrained model and its training configuration for a grid
// point. `seed` is unique per (fold, point).
using ModelFactory =
    std::function<ModelSetup(const HyperPoint&, const Dataset& train_set, std::uint64_t seed)>;

struct KFoldOptions {
  // Fraction of the non-test remainder used for training; the rest is the
  // validation set used for early stopping.
  double inner_train_fraction = 0.75;
  // Select grid points on the validation metric instead of the test metric.
  bool select_on_validation = false;
  std::size_t jobs = 1;
};

struct PointScore {
  double test_metric;
  double val_metric;
  std::size_t epochs;
  std::size_t best_epoch;
  bool diverged = false;
};

struct FoldResult {
  std::size_t test_size;
  double best_metric;
  std::size_t best_point;
  std::vector<PointScore> scores;
};

struct Summary {
  double mean;
  double std;  // sample standard deviation (K - 1)
};

Summary summarize(const std::vector<double>& values);

struct CvReport {
  std::size_t k;
  std::string metric;  // "rmse" or "accuracy"
  bool higher_is_better;
  std::vector<HyperPoint> points;
  std::vector<FoldResult> folds;
  Summary aggregate;

  std::vector<double> fold_metrics() const;
  // Most frequently selected value of `axis` (ties go to grid order).
  std::string most_selected(std::string_view axis) const;
};

// Test-fold row indices. Classification folds are stratified; fold sizes
// differ by at most one.
std::vector<std::vector<std::size_t>> fold_partition(const Dataset& ds, std::size_t k,
                                                     std::uint64_t seed);

CvReport kfold(const Dataset& ds, const ModelFactory& factory, const HyperGrid& grid,
               std::size_t k, std::uint64_t seed, const KFoldOptions& options = {});

struct Comparison {
  std::vector<double> differences;  // a - b per fold
  double mean_difference;
  std::size_t a_better;
  std::size_t b_better;
  std::size_t ties;
};

// Paired per-fold comparison; "better" follows the reports' metric direction.
Comparison compare(const CvReport& a, const CvReport& b);

// fold,metric,hyperparams (plus mean and std rows)
void write_cv_csv(const CvReport& report, std::ostream& out);
// fold,point,hyperparams,test_metric,val_metric,epochs,best_epoch,diverged
void write_cv_scores_csv(const CvReport& report, std::ostream& out);
// Per-fold listing followed by "mean ± std (best arch)".
std::string format_cv_table(const CvReport& report, std::string_view title);
// "0.9552 ± 0.0371 (vnet3_50)"
std::string format_cell(const CvReport& report, std::string_view axis = "arch");

}  // namespace vafnet
