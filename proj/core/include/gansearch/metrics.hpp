#pragma once

#include "gansearch/data.hpp"
#include "gansearch/supernet.hpp"

#include <limits>
#include <span>
#include <vector>

namespace gansearch {

struct GaussianStats {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  long n = 0;
};

/// Sample mean and unbiased covariance, symmetrized. Requires n >= 3.
GaussianStats gaussian_fit(const Batch& samples);

/// Exact moments of the target mixture, for use as the real-data reference.
GaussianStats analytic_stats(const TargetDistribution& dist);

/// Fréchet distance between two Gaussians: |mu_a - mu_b|^2 +
/// Tr(Sa + Sb - 2 (Sa Sb)^(1/2)), via the 2x2 closed form. Tiny negative
/// eigenvalues from sampling noise are clamped to zero (counted, not fatal).
double frechet_distance(const GaussianStats& a, const GaussianStats& b);

/// Times the Fréchet computation clamped a negative sqrt argument.
long metrics_clamp_count();

/// IS analogue: exp of the mean KL between per-sample mode responsibilities
/// under `ref` and their marginal. Always in [1, M]. Requires n >= 100.
double is_like_score(const Batch& samples, const ReferenceMixture& ref);

enum class ObjectiveId { FidLike, InvIs, Size };

const char* to_string(ObjectiveId id);

/// Per-individual minimization objectives. A collapsed individual carries
/// +inf sentinels in fid_like and inv_is (size is kept).
struct ObjectiveVector {
  double fid_like = std::numeric_limits<double>::infinity();
  double inv_is = std::numeric_limits<double>::infinity();
  double size = 0.0;
  bool collapsed = false;

  double get(ObjectiveId id) const {
    switch (id) {
      case ObjectiveId::FidLike: return fid_like;
      case ObjectiveId::InvIs: return inv_is;
      case ObjectiveId::Size: return size;
    }
    return 0.0;
  }

  static ObjectiveVector collapsed_sentinel(double size) {
    ObjectiveVector v;
    v.size = size;
    v.collapsed = true;
    return v;
  }
};

/// Objectives for a batch of generated samples; anything non-finite marks the
/// vector collapsed.
ObjectiveVector compute_objectives(const Batch& generated,
                                   const ReferenceMixture& ref,
                                   const GaussianStats& data_stats, long size);

/// Draw n_eval noise samples through the generator and score them. The rng is
/// taken by value: a fixed stream gives every individual identical noise.
ObjectiveVector evaluate_individual(const NetView& gen,
                                    const ReferenceMixture& ref,
                                    const GaussianStats& data_stats, int n_eval,
                                    std::mt19937_64 rng);

/// Number of modes holding at least min_fraction of the samples within
/// radius_sigmas * sigma of their center.
int mode_coverage(const Batch& samples, const TargetDistribution& dist,
                  double min_fraction = 0.01, double radius_sigmas = 3.0);

}  // namespace gansearch
