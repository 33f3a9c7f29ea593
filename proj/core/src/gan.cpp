#include "gansearch/gan.hpp"

#include <cmath>
#include <stdexcept>

namespace gansearch {

namespace {

constexpr double kLogClamp = 1e-12;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double clamped_log(double x) { return std::log(std::max(x, kLogClamp)); }

}  // namespace

const char* to_string(LossKind k) {
  return k == LossKind::Hinge ? "hinge" : "minimax";
}

LossKind loss_kind_from_string(std::string_view s) {
  if (s == "hinge") return LossKind::Hinge;
  if (s == "minimax") return LossKind::Minimax;
  throw std::invalid_argument("unknown loss kind: " + std::string(s));
}

double d_loss(LossKind kind, const Vector& d_real, const Vector& d_fake) {
  const double nr = static_cast<double>(d_real.size());
  const double nf = static_cast<double>(d_fake.size());
  if (kind == LossKind::Hinge) {
    double acc = 0.0;
    for (auto i = 0; i < d_real.size(); ++i)
      acc += std::max(0.0, 1.0 - d_real(i)) / nr;
    for (auto i = 0; i < d_fake.size(); ++i)
      acc += std::max(0.0, 1.0 + d_fake(i)) / nf;
    return acc;
  }
  double acc = 0.0;
  for (auto i = 0; i < d_real.size(); ++i)
    acc -= clamped_log(sigmoid(d_real(i))) / nr;
  for (auto i = 0; i < d_fake.size(); ++i)
    acc -= clamped_log(1.0 - sigmoid(d_fake(i))) / nf;
  return acc;
}

double g_loss(LossKind kind, const Vector& d_fake) {
  const double n = static_cast<double>(d_fake.size());
  if (kind == LossKind::Hinge) return -d_fake.mean();
  double acc = 0.0;
  for (auto i = 0; i < d_fake.size(); ++i)
    acc += clamped_log(1.0 - sigmoid(d_fake(i))) / n;
  return acc;
}

std::pair<Vector, Vector> d_loss_grad(LossKind kind, const Vector& d_real,
                                      const Vector& d_fake) {
  const double nr = static_cast<double>(d_real.size());
  const double nf = static_cast<double>(d_fake.size());
  Vector gr(d_real.size()), gf(d_fake.size());
  if (kind == LossKind::Hinge) {
    for (auto i = 0; i < d_real.size(); ++i)
      gr(i) = d_real(i) < 1.0 ? -1.0 / nr : 0.0;
    for (auto i = 0; i < d_fake.size(); ++i)
      gf(i) = d_fake(i) > -1.0 ? 1.0 / nf : 0.0;
  } else {
    for (auto i = 0; i < d_real.size(); ++i)
      gr(i) = -(1.0 - sigmoid(d_real(i))) / nr;
    for (auto i = 0; i < d_fake.size(); ++i) gf(i) = sigmoid(d_fake(i)) / nf;
  }
  return {std::move(gr), std::move(gf)};
}

Vector g_loss_grad(LossKind kind, const Vector& d_fake) {
  const double n = static_cast<double>(d_fake.size());
  Vector g(d_fake.size());
  if (kind == LossKind::Hinge) {
    g.setConstant(-1.0 / n);
  } else {
    for (auto i = 0; i < d_fake.size(); ++i) g(i) = -sigmoid(d_fake(i)) / n;
  }
  return g;
}

namespace {

void accumulate(GradMap& into, const GradMap& from) {
  for (const auto& [key, g] : from) {
    auto it = into.find(key);
    if (it == into.end()) {
      into.emplace(key, g);
    } else {
      it->second.w += g.w;
      it->second.b += g.b;
    }
  }
}

}  // namespace

StepResult gan_train_batch(GanPair& pair, const Batch& real,
                           const NoiseSource& noise, std::mt19937_64& rng,
                           const TrainParams& tp) {
  StepResult res;
  const int n_fake = static_cast<int>(real.rows());

  // Discriminator step; the generated samples are produced without a tape,
  // so no gradient reaches the generator here.
  const Batch z_d = sample_noise(noise, n_fake, rng);
  const Batch fake = forward(pair.gen, z_d);
  Tape t_real, t_fake;
  const Vector s_real = forward(pair.dis, real, &t_real).col(0);
  const Vector s_fake = forward(pair.dis, fake, &t_fake).col(0);
  const double ld = d_loss(pair.loss, s_real, s_fake);
  // hinge clamping can hide NaN scores, so gate on the scores themselves
  if (std::isfinite(ld) && s_real.allFinite() && s_fake.allFinite()) {
    auto [gr, gf] = d_loss_grad(pair.loss, s_real, s_fake);
    BackwardResult br = backward(pair.dis, t_real, gr);
    BackwardResult bf = backward(pair.dis, t_fake, gf);
    accumulate(br.grads, bf.grads);
    adam_step(*pair.dis.store, br.grads, tp.adam_d);
  } else {
    res.finite = false;
  }

  // Generator step through the updated discriminator.
  const Batch z_g = sample_noise(noise, pair.batch_g, rng);
  Tape t_gen, t_dis;
  const Batch x_g = forward(pair.gen, z_g, &t_gen);
  const Vector s_g = forward(pair.dis, x_g, &t_dis).col(0);
  const double lg = g_loss(pair.loss, s_g);
  if (std::isfinite(lg) && s_g.allFinite()) {
    const Vector gg = g_loss_grad(pair.loss, s_g);
    BackwardResult through_d = backward(pair.dis, t_dis, gg);
    BackwardResult bg = backward(pair.gen, t_gen, through_d.input_grad);
    adam_step(*pair.gen.store, bg.grads, tp.adam_g);
  } else {
    res.finite = false;
  }

  // Post-update losses on the same batches.
  const Batch fake2 = forward(pair.gen, z_d);
  if (!fake2.allFinite()) res.finite = false;
  res.d_loss = d_loss(pair.loss, forward(pair.dis, real).col(0),
                      forward(pair.dis, fake2).col(0));
  res.g_loss = g_loss(pair.loss, forward(pair.dis, forward(pair.gen, z_g)).col(0));
  if (!std::isfinite(res.d_loss) || !std::isfinite(res.g_loss))
    res.finite = false;
  return res;
}

}  // namespace gansearch
