#pragma once

#include <utility>

#include "aclr/model.hpp"
#include "aclr/tensor.hpp"

namespace aclr {

/// Gradients smaller than this are treated as zero: no perturbation.
inline constexpr double kGradFloor = 1e-12;

/// Outcome of one fast-gradient step on an event vector.
struct Perturbation {
  Vector noise;      // epsilon * grad / ||grad||, or zero under the floor
  double epsilon = 0.0;
  double grad_norm = 0.0;
};

/// o_adv = o + epsilon * grad / ||grad||. The gradient is a fixed input
/// here, not a function of o; callers obtain it from a backward pass and
/// treat it as stopped. ||o_adv - o|| == epsilon whenever the gradient
/// clears the floor.
std::pair<Vector, Perturbation> fgv_perturb(const Vector& o,
                                            const Vector& grad, double epsilon);

/// Adversarial cross-entropy of one target event in train mode.
/// Runs backward on the clean CE to read d(CE)/d(o), builds the perturbed
/// vector as a constant offset of o, and returns
/// 0.5 * (CE(o) + CE(o_adv)) along with the recorded o_adv. `o` must be
/// recorded; the call consumes the tape's gradient state.
struct AdversarialCe {
  Tensor loss;
  Tensor o_adv;
  Perturbation perturbation;
};

AdversarialCe adversarial_ce(const Tensor& o, int label,
                             const TapedParams& params, double epsilon);

}  // namespace aclr
