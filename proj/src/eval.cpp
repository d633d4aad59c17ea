#include "vafnet/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>

#include "vafnet/errors.hpp"
#include "vafnet/format.hpp"
#include "vafnet/rng.hpp"

namespace vafnet {
namespace {

void require_same_shape(const Matrix& y, const Matrix& t, const char* what) {
  if (y.rows() != t.rows() || y.cols() != t.cols()) {
    throw ShapeError(std::string(what) + ": shape mismatch " + y.shape_string() + " vs " +
                     t.shape_string());
  }
}

std::size_t argmax(std::span<const double> row) {
  return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

double score(const Dataset& ds, const Network& net, const Dataset& part) {
  const Matrix y = predict(net, part.x);
  if (ds.task == TaskKind::Classification) return metric_accuracy(y, part.t);
  return metric_rmse(denormalize_targets(part, y), denormalize_targets(part, part.t));
}

// Runs task(i) for i in [0, n) on up to `jobs` threads. Exceptions are
// collected and the one from the lowest index is rethrown.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& task) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min(std::max<std::size_t>(jobs, 1), n);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

bool better(double candidate, double incumbent, bool higher_is_better) {
  if (std::isnan(candidate)) return false;
  if (std::isnan(incumbent)) return true;
  return higher_is_better ? candidate > incumbent : candidate < incumbent;
}

void check_classes_present(const Dataset& part, std::size_t fold) {
  std::vector<bool> seen(part.output_dim(), false);
  for (auto l : part.labels()) seen[l] = true;
  for (std::size_t c = 0; c < seen.size(); ++c) {
    if (!seen[c]) {
      throw StratificationError("fold " + std::to_string(fold + 1) + ": class '" +
                                (c < part.classes.size() ? part.classes[c] : std::to_string(c)) +
                                "' is absent from the training partition");
    }
  }
}

}  // namespace

double metric_rmse(const Matrix& y, const Matrix& t) {
  require_same_shape(y, t, "metric_rmse");
  double acc = 0.0;
  auto a = y.data();
  auto b = t.data();
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(acc / static_cast<double>(a.size()));
}

double metric_accuracy(const Matrix& y, const Matrix& t) {
  require_same_shape(y, t, "metric_accuracy");
  std::size_t hits = 0;
  for (std::size_t n = 0; n < y.rows(); ++n) hits += argmax(y.row(n)) == argmax(t.row(n));
  return static_cast<double>(hits) / static_cast<double>(y.rows());
}

std::string to_string(const HyperValue& v) {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", std::get<double>(v));
  return buf;
}

const HyperValue& HyperPoint::at(std::string_view name) const {
  for (const auto& [key, value] : values)
    if (key == name) return value;
  throw InputError("grid point has no '" + std::string(name) + "' axis");
}

bool HyperPoint::has(std::string_view name) const {
  return std::any_of(values.begin(), values.end(), [&](const auto& kv) { return kv.first == name; });
}

double HyperPoint::number(std::string_view name) const {
  const auto& v = at(name);
  if (const auto* d = std::get_if<double>(&v)) return *d;
  throw InputError("grid axis '" + std::string(name) + "' is not numeric");
}

const std::string& HyperPoint::text(std::string_view name) const {
  const auto& v = at(name);
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  throw InputError("grid axis '" + std::string(name) + "' is not text");
}

std::string HyperPoint::to_string() const {
  std::string out;
  for (const auto& [key, value] : values) {
    if (!out.empty()) out += ' ';
    out += key + "=" + vafnet::to_string(value);
  }
  return out;
}

std::size_t HyperGrid::size() const {
  std::size_t n = 1;
  for (const auto& axis : axes) n *= axis.values.size();
  return n;
}

std::vector<HyperPoint> HyperGrid::points() const {
  for (const auto& axis : axes)
    if (axis.values.empty()) throw InputError("grid axis '" + axis.name + "' has no values");
  std::vector<HyperPoint> out;
  const std::size_t total = size();
  out.reserve(total);
  for (std::size_t flat = 0; flat < total; ++flat) {
    HyperPoint p;
    std::size_t rem = flat;
    std::size_t stride = total;
    for (const auto& axis : axes) {
      stride /= axis.values.size();
      p.values.emplace_back(axis.name, axis.values[rem / stride]);
      rem %= stride;
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<HyperValue> equispaced(double lo, double hi, std::size_t n) {
  std::vector<HyperValue> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.emplace_back(n == 1 ? lo
                            : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  return out;
}

Summary summarize(const std::vector<double>& values) {
  if (values.empty()) return {std::nan(""), std::nan("")};
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

std::vector<double> CvReport::fold_metrics() const {
  std::vector<double> out;
  for (const auto& f : folds) out.push_back(f.best_metric);
  return out;
}

std::string CvReport::most_selected(std::string_view axis) const {
  std::map<std::string, std::size_t> counts;
  for (const auto& f : folds) {
    const auto& p = points[f.best_point];
    if (p.has(axis)) ++counts[to_string(p.at(axis))];
  }
  std::string best;
  std::size_t best_count = 0;
  for (const auto& p : points) {
    if (!p.has(axis)) continue;
    const auto name = to_string(p.at(axis));
    if (counts[name] > best_count) {
      best = name;
      best_count = counts[name];
    }
  }
  return best;
}

std::vector<std::vector<std::size_t>> fold_partition(const Dataset& ds, std::size_t k,
                                                     std::uint64_t seed) {
  if (k < 2) throw InputError("K-fold needs K >= 2");
  if (ds.size() < k)
    throw InputError("dataset has " + std::to_string(ds.size()) + " rows, fewer than K=" +
                     std::to_string(k));
  Rng rng(seed);
  std::vector<std::vector<std::size_t>> folds(k);
  std::vector<std::vector<std::size_t>> groups;
  if (ds.task == TaskKind::Classification) {
    groups.resize(ds.output_dim());
    const auto labels = ds.labels();
    for (std::size_t n = 0; n < labels.size(); ++n) groups[labels[n]].push_back(n);
  } else {
    groups.emplace_back(ds.size());
    std::iota(groups[0].begin(), groups[0].end(), std::size_t{0});
  }
  // Dealing each shuffled class round-robin, continuing where the previous
  // class stopped, keeps both fold sizes and per-class counts within one.
  std::size_t offset = 0;
  for (auto& g : groups) {
    std::shuffle(g.begin(), g.end(), rng);
    for (std::size_t i = 0; i < g.size(); ++i) folds[(offset + i) % k].push_back(g[i]);
    offset += g.size();
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

CvReport kfold(const Dataset& ds, const ModelFactory& factory, const HyperGrid& grid,
               std::size_t k, std::uint64_t seed, const KFoldOptions& options) {
  const bool classification = ds.task == TaskKind::Classification;
  CvReport report{k, classification ? "accuracy" : "rmse", classification, grid.points(), {}, {}};
  const auto folds = fold_partition(ds, k, mix_seed(seed, {0x666f6c64}));
  const std::size_t n_points = report.points.size();

  struct FoldData {
    Dataset train;
    Dataset val;
    Dataset test;
  };
  std::vector<FoldData> parts;
  parts.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<std::size_t> rest;
    for (std::size_t j = 0; j < k; ++j)
      if (j != i) rest.insert(rest.end(), folds[j].begin(), folds[j].end());
    std::sort(rest.begin(), rest.end());
    const Dataset remainder = subset(ds, rest);
    const double fractions[] = {options.inner_train_fraction, 1.0 - options.inner_train_fraction};
    auto inner = split(remainder, fractions, mix_seed(seed, {0x696e6e, i}), classification);
    if (classification) check_classes_present(inner[0], i);
    parts.push_back({std::move(inner[0]), std::move(inner[1]), subset(ds, folds[i])});
  }

  std::vector<PointScore> scores(k * n_points);
  parallel_for(k * n_points, options.jobs, [&](std::size_t task) {
    const std::size_t fold = task / n_points;
    const std::size_t point = task % n_points;
    const auto& fd = parts[fold];
    auto setup = factory(report.points[point], fd.train, mix_seed(seed, {fold, point}));
    try {
      auto result = train(setup.net, fd.train, fd.val, setup.config);
      scores[task] = {score(ds, result.best, fd.test), score(ds, result.best, fd.val),
                      result.trace.epochs(), result.trace.best_epoch, false};
    } catch (const DivergenceError& e) {
      scores[task] = {std::nan(""), std::nan(""), e.where(), 0, true};
    }
  });

  for (std::size_t i = 0; i < k; ++i) {
    FoldResult fr{parts[i].test.size(), std::nan(""), 0, {}};
    fr.scores.assign(scores.begin() + static_cast<std::ptrdiff_t>(i * n_points),
                     scores.begin() + static_cast<std::ptrdiff_t>((i + 1) * n_points));
    double incumbent = std::nan("");
    bool found = false;
    for (std::size_t p = 0; p < n_points; ++p) {
      const auto& s = fr.scores[p];
      const double criterion = options.select_on_validation ? s.val_metric : s.test_metric;
      if (!s.diverged && better(criterion, incumbent, report.higher_is_better)) {
        incumbent = criterion;
        fr.best_point = p;
        fr.best_metric = s.test_metric;
        found = true;
      }
    }
    if (!found)
      throw DivergenceError("fold " + std::to_string(i + 1) + ": every grid point diverged", i);
    report.folds.push_back(std::move(fr));
  }
  report.aggregate = summarize(report.fold_metrics());
  return report;
}

Comparison compare(const CvReport& a, const CvReport& b) {
  if (a.k != b.k || a.folds.size() != b.folds.size())
    throw InputError("cannot compare reports with K=" + std::to_string(a.k) + " and K=" +
                     std::to_string(b.k));
  if (a.metric != b.metric)
    throw InputError("cannot compare " + a.metric + " with " + b.metric);
  Comparison c{{}, 0.0, 0, 0, 0};
  for (std::size_t i = 0; i < a.folds.size(); ++i) {
    const double d = a.folds[i].best_metric - b.folds[i].best_metric;
    c.differences.push_back(d);
    if (d == 0.0) {
      ++c.ties;
    } else if ((d > 0.0) == a.higher_is_better) {
      ++c.a_better;
    } else {
      ++c.b_better;
    }
  }
  c.mean_difference =
      std::accumulate(c.differences.begin(), c.differences.end(), 0.0) /
      static_cast<double>(c.differences.size());
  return c;
}

void write_cv_csv(const CvReport& report, std::ostream& out) {
  out << "fold," << report.metric << ",hyperparams\n";
  for (std::size_t i = 0; i < report.folds.size(); ++i) {
    const auto& f = report.folds[i];
    out << (i + 1) << ',' << format_real(f.best_metric) << ','
        << report.points[f.best_point].to_string() << '\n';
  }
  out << "mean," << format_real(report.aggregate.mean) << ",\n";
  out << "std," << format_real(report.aggregate.std) << ",\n";
}

void write_cv_scores_csv(const CvReport& report, std::ostream& out) {
  out << "fold,point,hyperparams,test_metric,val_metric,epochs,best_epoch,diverged\n";
  for (std::size_t i = 0; i < report.folds.size(); ++i) {
    for (std::size_t p = 0; p < report.points.size(); ++p) {
      const auto& s = report.folds[i].scores[p];
      out << (i + 1) << ',' << (p + 1) << ',' << report.points[p].to_string() << ','
          << format_real(s.test_metric) << ',' << format_real(s.val_metric) << ',' << s.epochs
          << ',' << s.best_epoch << ',' << (s.diverged ? 1 : 0) << '\n';
    }
  }
}

std::string format_cell(const CvReport& report, std::string_view axis) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f ± %.4f", report.aggregate.mean, report.aggregate.std);
  std::string out = buf;
  const auto best = report.most_selected(axis);
  if (!best.empty()) out += " (" + best + ")";
  return out;
}

std::string format_cv_table(const CvReport& report, std::string_view title) {
  std::ostringstream out;
  out << title << ": " << report.k << "-fold cross-validation, " << report.metric << " ("
      << (report.higher_is_better ? "higher" : "lower") << " is better)\n";
  out << "fold  " << report.metric << "  hyperparameters\n";
  for (std::size_t i = 0; i < report.folds.size(); ++i) {
    const auto& f = report.folds[i];
    char buf[64];
    std::snprintf(buf, sizeof buf, "%4zu  %.6f  ", i + 1, f.best_metric);
    out << buf << report.points[f.best_point].to_string() << '\n';
  }
  out << "mean ± std: " << format_cell(report) << '\n';
  return out.str();
}

}  // namespace vafnet
