#include "vafnet/vaf.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vafnet/errors.hpp"

namespace vafnet {
namespace {

constexpr double kGridLo = -5.0;
constexpr double kGridHi = 5.0;
constexpr std::size_t kFitPoints = 201;
constexpr double kSpreadLo = -4.0;
constexpr double kSpreadHi = 4.0;

double grid_point(double lo, double hi, std::size_t i, std::size_t n) {
  if (n == 1) return 0.5 * (lo + hi);
  return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
}

// Solves the symmetric system in place by Gaussian elimination with partial
// pivoting. `m` is n x (n+1), augmented with the right-hand side.
std::vector<double> solve_augmented(std::vector<std::vector<double>> m) {
  const std::size_t n = m.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
    std::swap(m[col], m[pivot]);
    const double diag = m[col][col];
    if (diag == 0.0) continue;
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = m[r][col] / diag;
      if (f == 0.0) continue;
      for (std::size_t c = col; c <= n; ++c) m[r][c] -= f * m[col][c];
    }
  }
  std::vector<double> x(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    double acc = m[i][n];
    for (std::size_t c = i + 1; c < n; ++c) acc -= m[i][c] * x[c];
    x[i] = m[i][i] == 0.0 ? 0.0 : acc / m[i][i];
  }
  return x;
}

VafParams exact_embedding(std::size_t k, ActivationKind g, Rng& rng, double noise) {
  VafParams p{g, std::vector<double>(k, 0.0), std::vector<double>(k, 0.0),
              std::vector<double>(k, 0.0), 0.0};
  p.alpha[0] = 1.0;
  p.beta[0] = 1.0;
  if (noise > 0.0) {
    std::uniform_real_distribution<double> u(-noise, noise);
    // Unit 0 carries the embedding untouched; the idle units get distinct
    // small weights so they don't receive identical gradients.
    for (std::size_t j = 1; j < k; ++j) {
      p.alpha[j] = u(rng);
      p.alpha0[j] = u(rng);
      p.beta[j] = u(rng);
    }
  }
  return p;
}

VafParams least_squares_fit(std::size_t k, ActivationKind g, ActivationKind target) {
  VafParams p{g, std::vector<double>(k, 1.0), std::vector<double>(k, 0.0),
              std::vector<double>(k, 0.0), 0.0};
  for (std::size_t j = 0; j < k; ++j) p.alpha0[j] = grid_point(kSpreadLo, kSpreadHi, j, k);

  // Normal equations for [beta; beta0] against the design matrix whose
  // columns are g(a + alpha0[j]) and a constant.
  const std::size_t n = k + 1;
  std::vector<std::vector<double>> normal(n, std::vector<double>(n + 1, 0.0));
  std::vector<double> row(n);
  for (std::size_t i = 0; i < kFitPoints; ++i) {
    const double a = grid_point(kGridLo, kGridHi, i, kFitPoints);
    for (std::size_t j = 0; j < k; ++j) row[j] = act(g, p.alpha[j] * a + p.alpha0[j]);
    row[k] = 1.0;
    const double y = act(target, a);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < n; ++c) normal[r][c] += row[r] * row[c];
      normal[r][n] += row[r] * y;
    }
  }
  // Tiny ridge keeps rank-deficient designs (e.g. g = identity) solvable; the
  // residual check below still rejects them.
  double trace = 0.0;
  for (std::size_t r = 0; r < n; ++r) trace += normal[r][r];
  for (std::size_t r = 0; r < n; ++r) normal[r][r] += 1e-12 * trace / static_cast<double>(n);

  const auto x = solve_augmented(std::move(normal));
  std::copy(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(k), p.beta.begin());
  p.beta0 = x[k];
  return p;
}

}  // namespace

VafGrad VafGrad::zeros_like(const VafParams& p) {
  return VafGrad{std::vector<double>(p.k(), 0.0), std::vector<double>(p.k(), 0.0),
                 std::vector<double>(p.k(), 0.0), 0.0};
}

void VafGrad::accumulate(const VafGrad& other) {
  if (other.d_alpha.size() != d_alpha.size()) {
    throw ShapeError("VafGrad::accumulate: k mismatch " + std::to_string(d_alpha.size()) +
                     " vs " + std::to_string(other.d_alpha.size()));
  }
  for (std::size_t j = 0; j < d_alpha.size(); ++j) {
    d_alpha[j] += other.d_alpha[j];
    d_alpha0[j] += other.d_alpha0[j];
    d_beta[j] += other.d_beta[j];
  }
  d_beta0 += other.d_beta0;
}

void validate(const VafParams& p) {
  if (p.k() == 0) throw ShapeError("VAF must have k >= 1 hidden units");
  if (p.alpha0.size() != p.k() || p.beta.size() != p.k()) {
    throw ShapeError("VAF parameter arrays disagree: alpha=" + std::to_string(p.alpha.size()) +
                     " alpha0=" + std::to_string(p.alpha0.size()) +
                     " beta=" + std::to_string(p.beta.size()));
  }
}

VafForward vaf_forward(const VafParams& p, double a) {
  VafForward out{p.beta0, std::vector<double>(p.k())};
  for (std::size_t j = 0; j < p.k(); ++j) {
    out.cache[j] = p.alpha[j] * a + p.alpha0[j];
    out.z += p.beta[j] * act(p.g, out.cache[j]);
  }
  return out;
}

double vaf_eval(const VafParams& p, double a) {
  double z = p.beta0;
  for (std::size_t j = 0; j < p.k(); ++j) z += p.beta[j] * act(p.g, p.alpha[j] * a + p.alpha0[j]);
  return z;
}

VafBackward vaf_backward(const VafParams& p, double a, std::span<const double> cache,
                         double upstream) {
  if (cache.size() != p.k()) {
    throw ShapeError("vaf_backward: cache length " + std::to_string(cache.size()) +
                     " != k " + std::to_string(p.k()));
  }
  VafBackward out{0.0, VafGrad::zeros_like(p)};
  out.grad.d_beta0 = upstream;
  for (std::size_t j = 0; j < p.k(); ++j) {
    const double h = cache[j];
    const double dh = upstream * p.beta[j] * act_deriv(p.g, h);
    out.grad.d_beta[j] = upstream * act(p.g, h);
    out.grad.d_alpha[j] = dh * a;
    out.grad.d_alpha0[j] = dh;
    out.d_a += dh * p.alpha[j];
  }
  return out;
}

double vaf_backward_accumulate(const VafParams& p, double a, double upstream, VafGrad& grad) {
  double d_a = 0.0;
  grad.d_beta0 += upstream;
  for (std::size_t j = 0; j < p.k(); ++j) {
    const double h = p.alpha[j] * a + p.alpha0[j];
    const double dh = upstream * p.beta[j] * act_deriv(p.g, h);
    grad.d_beta[j] += upstream * act(p.g, h);
    grad.d_alpha[j] += dh * a;
    grad.d_alpha0[j] += dh;
    d_a += dh * p.alpha[j];
  }
  return d_a;
}

VafParams init_vaf_random(std::size_t k, ActivationKind g, Rng& rng) {
  if (k == 0) throw InputError("VAF needs k >= 1 hidden units");
  const double r = std::sqrt(6.0 / (1.0 + static_cast<double>(k)));
  std::uniform_real_distribution<double> u(-r, r);
  VafParams p{g, std::vector<double>(k), std::vector<double>(k), std::vector<double>(k), 0.0};
  for (auto& v : p.alpha) v = u(rng);
  for (auto& v : p.alpha0) v = u(rng);
  for (auto& v : p.beta) v = u(rng);
  return p;
}

double max_grid_error(const VafParams& p, ActivationKind target, double lo, double hi,
                      std::size_t samples) {
  double worst = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double a = grid_point(lo, hi, i, samples);
    worst = std::max(worst, std::abs(vaf_eval(p, a) - act(target, a)));
  }
  return worst;
}

VafParams init_vaf_specific(std::size_t k, ActivationKind g, ActivationKind target, Rng& rng,
                            double noise) {
  if (k == 0) throw InputError("VAF needs k >= 1 hidden units");
  VafParams p = g == target ? exact_embedding(k, g, rng, noise) : least_squares_fit(k, g, target);

  double target_max = 0.0;
  constexpr std::size_t kCheckPoints = 1001;
  for (std::size_t i = 0; i < kCheckPoints; ++i)
    target_max = std::max(target_max,
                          std::abs(act(target, grid_point(kGridLo, kGridHi, i, kCheckPoints))));
  const double tolerance = 0.05 * (1.0 + target_max);
  const double err = max_grid_error(p, target, kGridLo, kGridHi, kCheckPoints);
  if (!(err <= tolerance)) {
    throw ApproximationError("VAF with k=" + std::to_string(k) + ", g=" + to_string(g) +
                                 " cannot approximate " + to_string(target) +
                                 ": max grid error " + std::to_string(err) +
                                 " exceeds tolerance " + std::to_string(tolerance),
                             err);
  }
  return p;
}

std::size_t parameter_count(bool shared, std::span<const VafLayerShape> layers) {
  std::size_t total = 0;
  for (const auto& layer : layers) {
    const std::size_t per_vaf = 3 * layer.k + 1;
    total += shared ? per_vaf : layer.neurons * per_vaf;
  }
  return total;
}

}  // namespace vafnet
