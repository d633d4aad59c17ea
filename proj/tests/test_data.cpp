#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "doctest.h"
#include "vafnet/data.hpp"
#include "vafnet/errors.hpp"

using namespace vafnet;

namespace {

// Row ids survive splits through a feature column holding the row index.
Dataset indexed(std::size_t n, std::size_t classes) {
  std::string text;
  for (std::size_t i = 0; i < n; ++i)
    text += std::to_string(i) + "," + std::to_string(i % classes) + "\n";
  return parse_csv(text, CsvSchema{});
}

std::vector<std::size_t> ids(const Dataset& ds) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < ds.size(); ++i) out.push_back(static_cast<std::size_t>(ds.x(i, 0)));
  return out;
}

int parse_error_line(std::string_view text, const CsvSchema& schema = {}) {
  try {
    parse_csv(text, schema);
  } catch (const ParseError& e) {
    return static_cast<int>(e.line());
  }
  return -1;
}

}  // namespace

TEST_CASE("three row classification file") {
  auto ds = parse_csv("1,2,A\n3,4,B\n5,6,A\n", CsvSchema{});
  CHECK(ds.x == Matrix{{1, 2}, {3, 4}, {5, 6}});
  CHECK(ds.t == Matrix{{1, 0}, {0, 1}, {1, 0}});
  CHECK(ds.classes == std::vector<std::string>{"A", "B"});
  CHECK(ds.labels() == std::vector<std::size_t>{0, 1, 0});
  CHECK(ds.task == TaskKind::Classification);
}

TEST_CASE("header line is skipped") {
  CsvSchema schema;
  schema.header = true;
  auto ds = parse_csv("x1,x2,y\n1,2,A\n3,4,B\n", schema);
  CHECK(ds.size() == 2);
}

TEST_CASE("regression targets and column selection") {
  CsvSchema schema;
  schema.task = TaskKind::Regression;
  schema.target_columns = {0};
  auto ds = parse_csv("0.5,1,2\n1.5,3,4\n", schema);
  CHECK(ds.t == Matrix{{0.5}, {1.5}});
  CHECK(ds.x == Matrix{{1, 2}, {3, 4}});
}

TEST_CASE("numeric labels sort numerically") {
  auto ds = parse_csv("0,10\n0,9\n0,2\n", CsvSchema{});
  CHECK(ds.classes == std::vector<std::string>{"2", "9", "10"});
}

TEST_CASE("wine") {
  CsvSchema schema;
  schema.target_columns = {0};
  auto ds = load_csv(std::string(VAFNET_DATA_DIR) + "/wine.csv", schema);
  CHECK(ds.size() == 178);
  CHECK(ds.input_dim() == 13);
  CHECK(ds.output_dim() == 3);
  CHECK(ds.classes == std::vector<std::string>{"1", "2", "3"});
}

TEST_CASE("parse errors carry line numbers") {
  CHECK(parse_error_line("1,2,A\n3,B\n") == 2);
  CHECK(parse_error_line("1,2,A\n3,4,B\n5,x,A\n") == 3);
  CHECK(parse_error_line("h1,h2,y\n1,2,A\n1,2\n", CsvSchema{.header = true}) == 3);
  CsvSchema known;
  known.classes = std::vector<std::string>{"A", "B"};
  CHECK(parse_error_line("1,2,A\n1,2,C\n", known) == 2);
  CHECK_THROWS_AS(load_csv("/no/such/file.csv", CsvSchema{}), InputError);
  try {
    load_csv("/no/such/file.csv", CsvSchema{});
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("/no/such/file.csv") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_csv("", CsvSchema{}), InputError);
}

TEST_CASE("normalization") {
  CsvSchema schema;
  schema.task = TaskKind::Regression;
  auto constant = normalize(parse_csv("2,1\n2,2\n2,3\n", schema));
  for (std::size_t i = 0; i < 3; ++i) CHECK(constant.x(i, 0) == 0.0);

  auto two = normalize(parse_csv("0,5\n10,7\n", schema));
  CHECK(two.x(0, 0) == -1.0);
  CHECK(two.x(1, 0) == 1.0);
  CHECK(two.t(0, 0) == -1.0);

  auto raw = synth_regression(SynthRegression::Sin, 50, 0.3, 4);
  auto round = denormalize(normalize(raw));
  for (std::size_t i = 0; i < raw.x.size(); ++i) CHECK(std::abs(round.x.data()[i] - raw.x.data()[i]) <= 1e-12);
  for (std::size_t i = 0; i < raw.t.size(); ++i) CHECK(std::abs(round.t.data()[i] - raw.t.data()[i]) <= 1e-12);

  auto norm = normalize(raw);
  auto back = denormalize_targets(norm, norm.t);
  for (std::size_t i = 0; i < raw.t.size(); ++i) CHECK(std::abs(back.data()[i] - raw.t.data()[i]) <= 1e-12);

  auto cls = normalize(synth_classification(SynthClassification::XorClusters, 40, 1));
  CHECK(cls.target_norm.empty());
  for (std::size_t i = 0; i < cls.size(); ++i) {
    double sum = 0.0;
    int ones = 0;
    for (double v : cls.t.row(i)) {
      sum += v;
      ones += v == 1.0;
      CHECK((v == 0.0 || v == 1.0));
    }
    CHECK(sum == 1.0);
    CHECK(ones == 1);
  }
}

TEST_CASE("splitting") {
  std::vector<double> fr = {0.6, 0.2, 0.2};
  CHECK(split_sizes(100, fr) == std::vector<std::size_t>{60, 20, 20});
  CHECK(split_sizes(7, fr) == std::vector<std::size_t>{4, 2, 1});

  auto ds = indexed(100, 3);
  for (bool stratify : {false, true}) {
    auto parts = split(ds, fr, 5, stratify);
    REQUIRE(parts.size() == 3);
    CHECK(parts[0].size() == 60);
    std::multiset<std::size_t> seen;
    for (const auto& p : parts)
      for (auto i : ids(p)) seen.insert(i);
    CHECK(seen.size() == 100);
    CHECK(std::set<std::size_t>(seen.begin(), seen.end()).size() == 100);

    auto again = split(ds, fr, 5, stratify);
    CHECK(ids(again[1]) == ids(parts[1]));
    CHECK(ids(split(ds, fr, 6, stratify)[0]) != ids(parts[0]));
  }

  auto parts = split(ds, fr, 5, true);
  std::vector<std::size_t> counts(3, 0);
  for (auto label : parts[0].labels()) ++counts[label];
  for (std::size_t c = 0; c < 3; ++c) CHECK(std::abs(static_cast<double>(counts[c]) - 20.0) <= 1.0);

  std::vector<double> bad = {0.5, 0.4};
  CHECK_THROWS_AS(split(ds, bad, 1, false), InputError);
}

TEST_CASE("synthetic generators") {
  auto lin = synth_regression(SynthRegression::Linear, 11, 0.0, 1);
  CHECK(lin.x(0, 0) == -1.0);
  CHECK(lin.x(10, 0) == 1.0);
  for (std::size_t i = 0; i < lin.size(); ++i) CHECK(lin.t(i, 0) == 2.0 * lin.x(i, 0) + 1.0);

  auto sin = synth_regression(SynthRegression::Sin, 201, 0.0, 1);
  CHECK(sin.x(0, 0) == doctest::Approx(-std::numbers::pi));
  for (std::size_t i = 0; i < sin.size(); ++i) CHECK(std::abs(sin.t(i, 0) - std::sin(sin.x(i, 0))) <= 1e-15);

  auto abs = synth_regression(SynthRegression::Abs, 5, 0.0, 1);
  CHECK(abs.t == Matrix{{2}, {1}, {0}, {1}, {2}});

  auto noisy1 = synth_regression(SynthRegression::Sin, 50, 0.1, 3);
  auto noisy2 = synth_regression(SynthRegression::Sin, 50, 0.1, 3);
  CHECK(noisy1.t == noisy2.t);

  auto blobs = synth_classification(SynthClassification::TwoGaussians, 200, 2);
  CHECK(blobs.size() == 200);
  CHECK(blobs.input_dim() == 2);
  std::size_t correct = 0;
  auto labels = blobs.labels();
  for (std::size_t i = 0; i < blobs.size(); ++i) correct += (blobs.x(i, 0) > 0) == (labels[i] == 1);
  CHECK((correct == 200 || correct == 0));

  auto xor_set = synth_classification(SynthClassification::XorClusters, 100, 2);
  auto xl = xor_set.labels();
  for (std::size_t i = 0; i < xor_set.size(); ++i)
    CHECK(xl[i] == static_cast<std::size_t>((xor_set.x(i, 0) > 0) != (xor_set.x(i, 1) > 0)));

  CHECK_THROWS_AS(synth_regression(SynthRegression::Linear, 3, 0.0, 1), InputError);
  CHECK(parse_synth_regression("abs") == SynthRegression::Abs);
  CHECK(parse_synth_classification("xor-clusters") == SynthClassification::XorClusters);
  CHECK_THROWS_AS(parse_synth_regression("cubic"), InputError);
}
