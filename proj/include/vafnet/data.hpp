#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vafnet/matrix.hpp"

namespace vafnet {

enum class TaskKind { Regression, Classification };

std::string to_string(TaskKind task);
TaskKind parse_task(std::string_view name);

struct ColumnStats {
  double mean = 0.0;
  double std = 0.0;  // population std; 0 marks a constant column
  bool operator==(const ColumnStats&) const = default;
};

// Features X (N x d) and targets T (N x c). Classification targets are one-hot
// rows over `classes`. Empty normalization vectors mean "raw".
struct Dataset {
  Matrix x;
  Matrix t;
  TaskKind task = TaskKind::Regression;
  std::vector<std::string> classes;
  std::vector<ColumnStats> feature_norm;
  std::vector<ColumnStats> target_norm;

  std::size_t size() const { return x.rows(); }
  std::size_t input_dim() const { return x.cols(); }
  std::size_t output_dim() const { return t.cols(); }
  // Class index per row (argmax of the one-hot target).
  std::vector<std::size_t> labels() const;
};

struct CsvSchema {
  // Column indices holding targets; negative values count from the end, so
  // -1 is the last column.
  std::vector<long> target_columns = {-1};
  TaskKind task = TaskKind::Classification;
  bool header = false;
  // If set, labels outside this list are rejected; otherwise classes are
  // collected from the file (numeric labels sorted numerically).
  std::optional<std::vector<std::string>> classes;
};

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema);
Dataset parse_csv(std::string_view text, const CsvSchema& schema);

std::vector<ColumnStats> column_stats(const Matrix& m);
Matrix apply_stats(const Matrix& m, std::span<const ColumnStats> stats);
Matrix invert_stats(const Matrix& m, std::span<const ColumnStats> stats);

// Z-scores every feature column, and the targets of a regression set.
// Constant columns map to 0.
Dataset normalize(const Dataset& ds);
Dataset denormalize(const Dataset& ds);
// Maps network outputs back to raw target units; identity if `ds` carries
// no target normalization.
Matrix denormalize_targets(const Dataset& ds, const Matrix& y);

Dataset subset(const Dataset& ds, std::span<const std::size_t> indices);

// Deterministic shuffled order of row indices. With `stratify`, classes are
// interleaved so that any contiguous slice is close to class-proportional.
std::vector<std::size_t> shuffled_order(const Dataset& ds, std::uint64_t seed, bool stratify);

// Splits into parts of the given fractions (must sum to 1). Part sizes use
// largest-remainder rounding.
std::vector<Dataset> split(const Dataset& ds, std::span<const double> fractions,
                           std::uint64_t seed, bool stratify);
std::vector<std::size_t> split_sizes(std::size_t n, std::span<const double> fractions);

enum class SynthRegression { Linear, Sin, Abs };
enum class SynthClassification { TwoGaussians, XorClusters };

SynthRegression parse_synth_regression(std::string_view name);
SynthClassification parse_synth_classification(std::string_view name);

// Inputs on an equispaced grid: linear t = 2x + 1 on [-1, 1];
// sin t = sin(x) on [-pi, pi]; abs t = |x| on [-2, 2]. Gaussian noise of
// `noise_std` is added to t.
Dataset synth_regression(SynthRegression kind, std::size_t n, double noise_std,
                         std::uint64_t seed);

// two-gaussians: unit-variance 2-D blobs centred at (+-separation/2, 0).
// xor-clusters: four blobs (sd 0.5) at (+-2, +-2), label = signs differ.
Dataset synth_classification(SynthClassification kind, std::size_t n, std::uint64_t seed,
                             double separation = 10.0);

}  // namespace vafnet
