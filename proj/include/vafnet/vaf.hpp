#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "vafnet/activation.hpp"
#include "vafnet/rng.hpp"

namespace vafnet {

// Parameters of one variable activation function, a 1-k-1 subnetwork
//
//   z(a) = sum_j beta[j] * g(alpha[j] * a + alpha0[j]) + beta0
//
// alpha, alpha0 and beta all have length k >= 1, so a VAF owns 3k+1 values.
struct VafParams {
  ActivationKind g = ActivationKind::ReLU;
  std::vector<double> alpha;
  std::vector<double> alpha0;
  std::vector<double> beta;
  double beta0 = 0.0;

  std::size_t k() const { return alpha.size(); }
  std::size_t size() const { return 3 * k() + 1; }

  bool operator==(const VafParams&) const = default;
};

struct VafGrad {
  std::vector<double> d_alpha;
  std::vector<double> d_alpha0;
  std::vector<double> d_beta;
  double d_beta0 = 0.0;

  static VafGrad zeros_like(const VafParams& p);

  void accumulate(const VafGrad& other);
  bool operator==(const VafGrad&) const = default;
};

// Throws ShapeError when the three arrays disagree in length or k == 0.
void validate(const VafParams& p);

struct VafForward {
  double z;
  // Hidden pre-activations alpha[j]*a + alpha0[j].
  std::vector<double> cache;
};

VafForward vaf_forward(const VafParams& p, double a);

// Scalar evaluation without the cache, for curve export and batched loops.
double vaf_eval(const VafParams& p, double a);

struct VafBackward {
  double d_a;
  VafGrad grad;
};

VafBackward vaf_backward(const VafParams& p, double a, std::span<const double> cache,
                         double upstream);

// Same as vaf_backward but adds into an existing gradient; returns d_a.
double vaf_backward_accumulate(const VafParams& p, double a, double upstream, VafGrad& grad);

// Uniform on [-r, r] with r = sqrt(6 / (1 + k)) for alpha, alpha0 and beta;
// beta0 = 0.
VafParams init_vaf_random(std::size_t k, ActivationKind g, Rng& rng);

inline constexpr double kSpecificInitNoise = 1e-3;

// Initializes a VAF that approximates `target`. When g == target the first
// hidden unit embeds it exactly and the remaining units get uniform noise of
// magnitude `noise`; otherwise beta and beta0 come from a least-squares fit on
// [-5, 5]. Throws ApproximationError if the grid error exceeds
// 0.05 * (1 + max|target|).
VafParams init_vaf_specific(std::size_t k, ActivationKind g, ActivationKind target, Rng& rng,
                            double noise = kSpecificInitNoise);

// Max |vaf(a) - target(a)| over `samples` equispaced points in [lo, hi].
double max_grid_error(const VafParams& p, ActivationKind target, double lo = -5.0,
                      double hi = 5.0, std::size_t samples = 1001);

struct VafLayerShape {
  std::size_t neurons;
  std::size_t k;
};

// Extra parameters introduced by VAF layers: sum of neurons*(3k+1), or
// sum of (3k+1) when each layer shares a single VAF.
std::size_t parameter_count(bool shared, std::span<const VafLayerShape> layers);

}  // namespace vafnet
