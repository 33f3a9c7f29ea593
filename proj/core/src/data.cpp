#include "gansearch/data.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace gansearch {

TargetDistribution TargetDistribution::ring(int modes, double radius,
                                            double sigma) {
  if (modes < 2) throw std::invalid_argument("ring: need at least 2 modes");
  TargetDistribution d;
  d.kind = Kind::Ring;
  d.modes = modes;
  d.radius = radius;
  d.sigma = sigma;
  for (int k = 0; k < modes; ++k) {
    const double t = 2.0 * std::numbers::pi * k / modes;
    d.centers.emplace_back(radius * std::cos(t), radius * std::sin(t));
  }
  if (d.min_center_distance() < 6.0 * sigma)
    throw std::invalid_argument("ring: modes closer than 6 sigma");
  return d;
}

TargetDistribution TargetDistribution::grid(int side, double spacing,
                                            double sigma) {
  if (side < 2) throw std::invalid_argument("grid: need side >= 2");
  TargetDistribution d;
  d.kind = Kind::Grid;
  d.modes = side * side;
  d.spacing = spacing;
  d.sigma = sigma;
  const double off = spacing * (side - 1) / 2.0;
  for (int i = 0; i < side; ++i)
    for (int j = 0; j < side; ++j)
      d.centers.emplace_back(i * spacing - off, j * spacing - off);
  if (d.min_center_distance() < 6.0 * sigma)
    throw std::invalid_argument("grid: modes closer than 6 sigma");
  return d;
}

double TargetDistribution::min_center_distance() const {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < centers.size(); ++i)
    for (std::size_t j = i + 1; j < centers.size(); ++j)
      best = std::min(best, (centers[i] - centers[j]).norm());
  return best;
}

Batch TargetDistribution::sample(int n, std::mt19937_64& rng) const {
  if (n < 1) throw std::invalid_argument("sample: n < 1");
  std::uniform_int_distribution<std::size_t> pick(0, centers.size() - 1);
  std::normal_distribution<double> jitter(0.0, sigma);
  Batch out(n, 2);
  for (int i = 0; i < n; ++i) {
    const auto& c = centers[pick(rng)];
    out(i, 0) = c.x() + jitter(rng);
    out(i, 1) = c.y() + jitter(rng);
  }
  return out;
}

Eigen::Vector2d TargetDistribution::exact_mean() const {
  Eigen::Vector2d m = Eigen::Vector2d::Zero();
  for (const auto& c : centers) m += c;
  return m / static_cast<double>(centers.size());
}

Eigen::Matrix2d TargetDistribution::exact_cov() const {
  const Eigen::Vector2d mu = exact_mean();
  Eigen::Matrix2d cov = sigma * sigma * Eigen::Matrix2d::Identity();
  for (const auto& c : centers) {
    const Eigen::Vector2d d = c - mu;
    cov += d * d.transpose() / static_cast<double>(centers.size());
  }
  return cov;
}

Batch sample_real(const TargetDistribution& dist, int n, std::mt19937_64& rng) {
  return dist.sample(n, rng);
}

Batch sample_noise(const NoiseSource& src, int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Batch out(n, src.dim);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < src.dim; ++j) out(i, j) = normal(rng);
  return out;
}

}  // namespace gansearch
