#include "vafnet/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>

#include "vafnet/errors.hpp"
#include "vafnet/rng.hpp"

namespace vafnet {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::optional<double> parse_double(std::string_view s) {
  if (s.starts_with('+')) s.remove_prefix(1);
  double value = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (s.empty() || ec != std::errc{} || ptr != end) return std::nullopt;
  return value;
}

std::vector<std::string> ordered_classes(const std::vector<std::string>& labels) {
  std::vector<std::string> uniq(labels);
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  const bool numeric = std::all_of(uniq.begin(), uniq.end(),
                                   [](const std::string& s) { return parse_double(s).has_value(); });
  if (numeric) {
    std::stable_sort(uniq.begin(), uniq.end(), [](const std::string& a, const std::string& b) {
      return *parse_double(a) < *parse_double(b);
    });
  }
  return uniq;
}

double grid(double lo, double hi, std::size_t i, std::size_t n) {
  if (n == 1) return 0.5 * (lo + hi);
  return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
}

Matrix one_hot(std::span<const std::size_t> labels, std::size_t classes) {
  Matrix t(labels.size(), classes);
  for (std::size_t n = 0; n < labels.size(); ++n) t(n, labels[n]) = 1.0;
  return t;
}

}  // namespace

std::string to_string(TaskKind task) {
  return task == TaskKind::Regression ? "regression" : "classification";
}

TaskKind parse_task(std::string_view name) {
  if (name == "regression") return TaskKind::Regression;
  if (name == "classification") return TaskKind::Classification;
  throw InputError("unknown task '" + std::string(name) +
                   "' (expected regression or classification)");
}

std::vector<std::size_t> Dataset::labels() const {
  std::vector<std::size_t> out(t.rows());
  for (std::size_t n = 0; n < t.rows(); ++n) {
    auto row = t.row(n);
    out[n] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

Dataset parse_csv(std::string_view text, const CsvSchema& schema) {
  if (schema.target_columns.empty()) throw InputError("CSV schema needs a target column");
  if (schema.task == TaskKind::Classification && schema.target_columns.size() != 1)
    throw InputError("classification takes exactly one target column");

  std::vector<double> features;
  std::vector<double> targets;
  std::vector<std::string> labels;
  std::vector<std::size_t> label_lines;
  std::size_t width = 0;
  std::vector<bool> is_target;
  std::size_t rows = 0;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const auto line = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (line_no == 1 && schema.header) continue;
    if (line.empty()) continue;

    const auto fields = split_fields(line);
    if (width == 0) {
      width = fields.size();
      is_target.assign(width, false);
      for (long c : schema.target_columns) {
        const long idx = c < 0 ? static_cast<long>(width) + c : c;
        if (idx < 0 || idx >= static_cast<long>(width))
          throw ParseError("target column " + std::to_string(c) + " out of range for " +
                               std::to_string(width) + " columns",
                           line_no);
        is_target[static_cast<std::size_t>(idx)] = true;
      }
      if (static_cast<std::size_t>(std::count(is_target.begin(), is_target.end(), true)) == width)
        throw ParseError("no feature columns left after removing targets", line_no);
    } else if (fields.size() != width) {
      throw ParseError("expected " + std::to_string(width) + " fields, found " +
                           std::to_string(fields.size()),
                       line_no);
    }

    for (std::size_t c = 0; c < width; ++c) {
      if (is_target[c] && schema.task == TaskKind::Classification) {
        if (fields[c].empty()) throw ParseError("empty class label", line_no);
        labels.emplace_back(fields[c]);
        label_lines.push_back(line_no);
        continue;
      }
      const auto value = parse_double(fields[c]);
      if (!value) {
        throw ParseError("column " + std::to_string(c + 1) + ": '" + std::string(fields[c]) +
                             "' is not numeric",
                         line_no);
      }
      (is_target[c] ? targets : features).push_back(*value);
    }
    ++rows;
  }
  if (rows == 0) throw InputError("CSV contains no data rows");

  const std::size_t n_targets = static_cast<std::size_t>(std::count(is_target.begin(), is_target.end(), true));
  Dataset ds{Matrix(rows, width - n_targets, std::move(features)), Matrix(1, 1), schema.task,
             {}, {}, {}};
  if (schema.task == TaskKind::Regression) {
    ds.t = Matrix(rows, n_targets, std::move(targets));
    return ds;
  }

  ds.classes = schema.classes ? *schema.classes : ordered_classes(labels);
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < ds.classes.size(); ++i) index.emplace(ds.classes[i], i);
  std::vector<std::size_t> encoded(rows);
  for (std::size_t n = 0; n < rows; ++n) {
    auto it = index.find(labels[n]);
    if (it == index.end()) throw ParseError("unknown class label '" + labels[n] + "'", label_lines[n]);
    encoded[n] = it->second;
  }
  ds.t = one_hot(encoded, ds.classes.size());
  return ds;
}

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open dataset file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_csv(ss.str(), schema);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

std::vector<ColumnStats> column_stats(const Matrix& m) {
  std::vector<ColumnStats> out(m.cols());
  const double n = static_cast<double>(m.rows());
  for (std::size_t c = 0; c < m.cols(); ++c) {
    double sum = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) sum += m(r, c);
    const double mean = sum / n;
    double var = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) var += (m(r, c) - mean) * (m(r, c) - mean);
    out[c] = {mean, std::sqrt(var / n)};
  }
  return out;
}

Matrix apply_stats(const Matrix& m, std::span<const ColumnStats> stats) {
  if (stats.size() != m.cols()) throw ShapeError("normalization stats do not match columns");
  Matrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c)
      out(r, c) = stats[c].std > 0.0 ? (m(r, c) - stats[c].mean) / stats[c].std : 0.0;
  return out;
}

Matrix invert_stats(const Matrix& m, std::span<const ColumnStats> stats) {
  if (stats.size() != m.cols()) throw ShapeError("normalization stats do not match columns");
  Matrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c)
      out(r, c) = m(r, c) * stats[c].std + stats[c].mean;
  return out;
}

Dataset normalize(const Dataset& ds) {
  Dataset out = denormalize(ds);
  out.feature_norm = column_stats(out.x);
  out.x = apply_stats(out.x, out.feature_norm);
  if (out.task == TaskKind::Regression) {
    out.target_norm = column_stats(out.t);
    out.t = apply_stats(out.t, out.target_norm);
  }
  return out;
}

Dataset denormalize(const Dataset& ds) {
  Dataset out = ds;
  if (!out.feature_norm.empty()) out.x = invert_stats(out.x, out.feature_norm);
  if (!out.target_norm.empty()) out.t = invert_stats(out.t, out.target_norm);
  out.feature_norm.clear();
  out.target_norm.clear();
  return out;
}

Matrix denormalize_targets(const Dataset& ds, const Matrix& y) {
  return ds.target_norm.empty() ? y : invert_stats(y, ds.target_norm);
}

Dataset subset(const Dataset& ds, std::span<const std::size_t> indices) {
  if (indices.empty()) throw InputError("empty dataset subset");
  Dataset out{select_rows(ds.x, indices), select_rows(ds.t, indices), ds.task, ds.classes,
              ds.feature_norm, ds.target_norm};
  return out;
}

std::vector<std::size_t> shuffled_order(const Dataset& ds, std::uint64_t seed, bool stratify) {
  Rng rng(seed);
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (!stratify || ds.task != TaskKind::Classification) {
    std::shuffle(order.begin(), order.end(), rng);
    return order;
  }
  const auto labels = ds.labels();
  std::vector<std::vector<std::size_t>> by_class(ds.output_dim());
  for (std::size_t n = 0; n < labels.size(); ++n) by_class[labels[n]].push_back(n);
  struct Keyed {
    double key;
    std::size_t cls;
    std::size_t index;
  };
  std::vector<Keyed> keyed;
  keyed.reserve(ds.size());
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& members = by_class[c];
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t i = 0; i < members.size(); ++i) {
      keyed.push_back({(static_cast<double>(i) + 0.5) / static_cast<double>(members.size()), c,
                       members[i]});
    }
  }
  std::stable_sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
    return a.key != b.key ? a.key < b.key : a.cls < b.cls;
  });
  for (std::size_t i = 0; i < keyed.size(); ++i) order[i] = keyed[i].index;
  return order;
}

std::vector<std::size_t> split_sizes(std::size_t n, std::span<const double> fractions) {
  if (fractions.empty()) throw InputError("split needs at least one fraction");
  double total = 0.0;
  for (double f : fractions) {
    if (!(f >= 0.0)) throw InputError("split fractions must be non-negative");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw InputError("split fractions sum to " + std::to_string(total) + ", expected 1");

  std::vector<std::size_t> sizes(fractions.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    const double exact = fractions[i] * static_cast<double>(n);
    sizes[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    assigned += sizes[i];
    remainders.emplace_back(exact - static_cast<double>(sizes[i]), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++sizes[remainders[i % remainders.size()].second];
  return sizes;
}

std::vector<Dataset> split(const Dataset& ds, std::span<const double> fractions,
                           std::uint64_t seed, bool stratify) {
  const auto sizes = split_sizes(ds.size(), fractions);
  const auto order = shuffled_order(ds, seed, stratify);
  std::vector<Dataset> parts;
  std::size_t offset = 0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] == 0) throw InputError("split part " + std::to_string(i) + " would be empty");
    std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(offset),
                                 order.begin() + static_cast<std::ptrdiff_t>(offset + sizes[i]));
    std::sort(idx.begin(), idx.end());
    parts.push_back(subset(ds, idx));
    offset += sizes[i];
  }
  return parts;
}

SynthRegression parse_synth_regression(std::string_view name) {
  if (name == "linear") return SynthRegression::Linear;
  if (name == "sin") return SynthRegression::Sin;
  if (name == "abs") return SynthRegression::Abs;
  throw InputError("unknown synthetic regression kind '" + std::string(name) + "'");
}

SynthClassification parse_synth_classification(std::string_view name) {
  if (name == "two-gaussians") return SynthClassification::TwoGaussians;
  if (name == "xor-clusters") return SynthClassification::XorClusters;
  throw InputError("unknown synthetic classification kind '" + std::string(name) + "'");
}

Dataset synth_regression(SynthRegression kind, std::size_t n, double noise_std,
                         std::uint64_t seed) {
  if (n < 4) throw InputError("synthetic datasets need at least 4 samples");
  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  Matrix x(n, 1);
  Matrix t(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    double xi = 0.0;
    double ti = 0.0;
    switch (kind) {
      case SynthRegression::Linear:
        xi = grid(-1.0, 1.0, i, n);
        ti = 2.0 * xi + 1.0;
        break;
      case SynthRegression::Sin:
        xi = grid(-std::numbers::pi, std::numbers::pi, i, n);
        ti = std::sin(xi);
        break;
      case SynthRegression::Abs:
        xi = grid(-2.0, 2.0, i, n);
        ti = std::abs(xi);
        break;
    }
    x(i, 0) = xi;
    t(i, 0) = noise_std > 0.0 ? ti + noise_std * noise(rng) : ti;
  }
  return Dataset{std::move(x), std::move(t), TaskKind::Regression, {}, {}, {}};
}

Dataset synth_classification(SynthClassification kind, std::size_t n, std::uint64_t seed,
                             double separation) {
  if (n < 4) throw InputError("synthetic datasets need at least 4 samples");
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix x(n, 2);
  std::vector<std::size_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (kind == SynthClassification::TwoGaussians) {
      labels[i] = i % 2;
      const double cx = labels[i] == 0 ? -0.5 * separation : 0.5 * separation;
      x(i, 0) = cx + gauss(rng);
      x(i, 1) = gauss(rng);
    } else {
      const std::size_t cluster = i % 4;
      const double sx = (cluster & 1) ? 2.0 : -2.0;
      const double sy = (cluster & 2) ? 2.0 : -2.0;
      labels[i] = (sx > 0) != (sy > 0) ? 1 : 0;
      x(i, 0) = sx + 0.5 * gauss(rng);
      x(i, 1) = sy + 0.5 * gauss(rng);
    }
  }
  return Dataset{std::move(x), one_hot(labels, 2), TaskKind::Classification, {"0", "1"}, {}, {}};
}

}  // namespace vafnet
