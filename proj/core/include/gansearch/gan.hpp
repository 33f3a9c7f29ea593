#pragma once

#include "gansearch/data.hpp"
#include "gansearch/supernet.hpp"

namespace gansearch {

enum class LossKind { Minimax, Hinge };

const char* to_string(LossKind k);
LossKind loss_kind_from_string(std::string_view s);

// Scores are raw discriminator outputs; the minimax losses apply the logistic
// inside, with log arguments clamped at 1e-12.
double d_loss(LossKind kind, const Vector& d_real, const Vector& d_fake);
double g_loss(LossKind kind, const Vector& d_fake);

// Gradients of the mean losses with respect to the raw scores.
std::pair<Vector, Vector> d_loss_grad(LossKind kind, const Vector& d_real,
                                      const Vector& d_fake);
Vector g_loss_grad(LossKind kind, const Vector& d_fake);

struct GanPair {
  NetView gen;
  NetView dis;
  LossKind loss = LossKind::Hinge;
  int batch_g = 40;
  int batch_d = 80;  // half real, half generated
};

struct TrainParams {
  AdamParams adam_g;
  AdamParams adam_d;
};

struct StepResult {
  double d_loss = 0.0;
  double g_loss = 0.0;
  bool finite = true;  // false marks a collapsed step; weights were not updated
};

/// One adversarial step: update D on `real` plus an equal count of generated
/// samples (gradient-stopped into G), then update G on batch_g noise draws
/// through the current D. Returns the losses re-evaluated after both updates.
/// A non-finite loss skips the corresponding update and flags the result.
StepResult gan_train_batch(GanPair& pair, const Batch& real,
                           const NoiseSource& noise, std::mt19937_64& rng,
                           const TrainParams& tp);

}  // namespace gansearch
