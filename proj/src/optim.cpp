#include "aclr/optim.hpp"

#include <cmath>
#include <string>

namespace aclr {

AdamState make_adam_state(const Matrix& param) {
  AdamState s;
  s.m = Matrix::Zero(param.rows(), param.cols());
  s.v = Matrix::Zero(param.rows(), param.cols());
  return s;
}

void adam_step(Matrix& param, const Matrix& grad, AdamState& state, double lr,
               double beta1, double beta2, double eps, double weight_decay) {
  auto same = [&](const Matrix& m) {
    return m.rows() == param.rows() && m.cols() == param.cols();
  };
  if (!same(grad) || !same(state.m) || !same(state.v)) {
    throw DimensionError("adam_step: param " +
                         std::to_string(param.rows()) + "x" +
                         std::to_string(param.cols()) +
                         " disagrees with grad or state shape");
  }
  if (!(lr > 0.0) || !(beta1 >= 0.0 && beta1 < 1.0) ||
      !(beta2 >= 0.0 && beta2 < 1.0) || !(eps > 0.0) || weight_decay < 0.0) {
    throw ContractError("adam_step: hyperparameters out of range");
  }
  if (!grad.allFinite()) {
    throw ContractError("adam_step: gradient has NaN or Inf entries");
  }

  state.step += 1;
  state.m = beta1 * state.m + (1.0 - beta1) * grad;
  state.v = beta2 * state.v + (1.0 - beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  const Matrix mhat = state.m / c1;
  const Matrix vhat = state.v / c2;
  Matrix update = mhat.array() / (vhat.array().sqrt() + eps);
  if (weight_decay > 0.0) update += weight_decay * param;
  param -= lr * update;
}

}  // namespace aclr
