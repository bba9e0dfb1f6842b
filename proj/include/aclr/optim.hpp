#pragma once

#include "aclr/tensor.hpp"

namespace aclr {

/// Per-parameter Adam accumulators. `step` counts completed updates and
/// drives bias correction.
struct AdamState {
  Matrix m;
  Matrix v;
  long step = 0;
};

AdamState make_adam_state(const Matrix& param);

/// One Adam update, in place. Bias-corrected first and second moments;
/// weight decay, when positive, is decoupled from the gradient (applied
/// directly to the parameter, scaled by lr).
void adam_step(Matrix& param, const Matrix& grad, AdamState& state, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8,
               double weight_decay = 0.0);

}  // namespace aclr
