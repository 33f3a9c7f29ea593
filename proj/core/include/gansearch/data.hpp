#pragma once

#include "gansearch/types.hpp"

#include <random>
#include <vector>

namespace gansearch {

struct GaussianStats;  // metrics.hpp

/// Synthetic 2-D target: an isotropic Gaussian mixture with uniform weights,
/// either M modes on a circle or a side x side grid. The same object serves as
/// the reference classifier for the IS analogue.
struct TargetDistribution {
  enum class Kind { Ring, Grid };

  Kind kind = Kind::Ring;
  int modes = 8;
  double radius = 2.0;   // ring only
  double spacing = 1.0;  // grid only
  double sigma = 0.05;
  std::vector<Eigen::Vector2d> centers;

  static TargetDistribution ring(int modes = 8, double radius = 2.0,
                                 double sigma = 0.05);
  static TargetDistribution grid(int side = 5, double spacing = 1.0,
                                 double sigma = 0.05);

  Batch sample(int n, std::mt19937_64& rng) const;

  /// Exact first two moments of the mixture (mean and covariance).
  Eigen::Vector2d exact_mean() const;
  Eigen::Matrix2d exact_cov() const;

  double min_center_distance() const;
};

using ReferenceMixture = TargetDistribution;

Batch sample_real(const TargetDistribution& dist, int n, std::mt19937_64& rng);

struct NoiseSource {
  int dim = 8;
};

/// n x dim standard normal draws.
Batch sample_noise(const NoiseSource& src, int n, std::mt19937_64& rng);

}  // namespace gansearch
