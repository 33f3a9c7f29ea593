#include "gansearch/metrics.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>

namespace gansearch {

namespace {
std::atomic<long> g_clamp_count{0};
}

long metrics_clamp_count() { return g_clamp_count.load(); }

const char* to_string(ObjectiveId id) {
  switch (id) {
    case ObjectiveId::FidLike: return "fid_like";
    case ObjectiveId::InvIs: return "inv_is";
    case ObjectiveId::Size: return "size";
  }
  return "?";
}

GaussianStats gaussian_fit(const Batch& samples) {
  if (samples.rows() < 3)
    throw std::invalid_argument("gaussian_fit: need at least 3 samples");
  if (samples.cols() != 2)
    throw std::invalid_argument("gaussian_fit: expected 2-D samples");
  GaussianStats s;
  s.n = samples.rows();
  s.mean = samples.colwise().mean().transpose();
  Eigen::MatrixXd centered = samples.rowwise() - s.mean.transpose();
  Eigen::Matrix2d cov =
      centered.transpose() * centered / static_cast<double>(s.n - 1);
  s.cov = 0.5 * (cov + cov.transpose());
  return s;
}

GaussianStats analytic_stats(const TargetDistribution& dist) {
  GaussianStats s;
  s.mean = dist.exact_mean();
  s.cov = dist.exact_cov();
  s.n = 0;  // exact, not estimated
  return s;
}

double frechet_distance(const GaussianStats& a, const GaussianStats& b) {
  const double mean_term = (a.mean - b.mean).squaredNorm();
  // Tr((Sa Sb)^(1/2)) for 2x2 PSD factors: sqrt(tr(Sa Sb) + 2 sqrt(det Sa det Sb))
  const double tr_prod = (a.cov * b.cov).trace();
  double det_prod = a.cov.determinant() * b.cov.determinant();
  if (det_prod < 0.0) {
    g_clamp_count.fetch_add(1);
    det_prod = 0.0;
  }
  double inner = tr_prod + 2.0 * std::sqrt(det_prod);
  if (inner < 0.0) {
    g_clamp_count.fetch_add(1);
    inner = 0.0;
  }
  const double tr_sqrt = std::sqrt(inner);
  const double fd = mean_term + a.cov.trace() + b.cov.trace() - 2.0 * tr_sqrt;
  return fd < 0.0 ? 0.0 : fd;
}

double is_like_score(const Batch& samples, const ReferenceMixture& ref) {
  const auto n = samples.rows();
  if (n < 100)
    throw std::invalid_argument("is_like_score: need at least 100 samples");
  const auto m = static_cast<Eigen::Index>(ref.centers.size());
  const double inv_two_sigma2 = 1.0 / (2.0 * ref.sigma * ref.sigma);

  // Responsibilities p(y|x) under the mixture (uniform weights, shared sigma).
  Eigen::MatrixXd resp(n, m);
  Eigen::VectorXd logits(m);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < m; ++k) {
      const double dx = samples(i, 0) - ref.centers[static_cast<std::size_t>(k)].x();
      const double dy = samples(i, 1) - ref.centers[static_cast<std::size_t>(k)].y();
      logits(k) = -(dx * dx + dy * dy) * inv_two_sigma2;
    }
    const double mx = logits.maxCoeff();
    Eigen::VectorXd p = (logits.array() - mx).exp();
    resp.row(i) = p / p.sum();
  }

  const Eigen::VectorXd marginal = resp.colwise().mean();
  double mean_kl = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double kl = 0.0;
    for (Eigen::Index k = 0; k < m; ++k) {
      const double p = resp(i, k);
      if (p <= 0.0) continue;
      kl += p * std::log(p / marginal(k));
    }
    mean_kl += kl;
  }
  mean_kl /= static_cast<double>(n);
  const double score = std::exp(mean_kl);
  return std::min(std::max(score, 1.0), static_cast<double>(m));
}

ObjectiveVector compute_objectives(const Batch& generated,
                                   const ReferenceMixture& ref,
                                   const GaussianStats& data_stats, long size) {
  if (!generated.allFinite())
    return ObjectiveVector::collapsed_sentinel(static_cast<double>(size));
  ObjectiveVector v;
  v.size = static_cast<double>(size);
  v.fid_like = frechet_distance(gaussian_fit(generated), data_stats);
  v.inv_is = 1.0 / is_like_score(generated, ref);
  v.collapsed = !std::isfinite(v.fid_like) || !std::isfinite(v.inv_is);
  if (v.collapsed) return ObjectiveVector::collapsed_sentinel(v.size);
  return v;
}

ObjectiveVector evaluate_individual(const NetView& gen,
                                    const ReferenceMixture& ref,
                                    const GaussianStats& data_stats, int n_eval,
                                    std::mt19937_64 rng) {
  const NoiseSource noise{gen.space->input_dim};
  const Batch z = sample_noise(noise, n_eval, rng);
  const Batch samples = forward(gen, z);
  return compute_objectives(samples, ref, data_stats,
                            param_count(*gen.genome, *gen.space));
}

int mode_coverage(const Batch& samples, const TargetDistribution& dist,
                  double min_fraction, double radius_sigmas) {
  const double r = radius_sigmas * dist.sigma;
  const double need = min_fraction * static_cast<double>(samples.rows());
  int covered = 0;
  for (const auto& c : dist.centers) {
    long hits = 0;
    for (Eigen::Index i = 0; i < samples.rows(); ++i) {
      const double dx = samples(i, 0) - c.x();
      const double dy = samples(i, 1) - c.y();
      if (dx * dx + dy * dy <= r * r) ++hits;
    }
    if (static_cast<double>(hits) >= need) ++covered;
  }
  return covered;
}

}  // namespace gansearch
