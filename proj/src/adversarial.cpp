#include "aclr/adversarial.hpp"

#include <string>

namespace aclr {

std::pair<Vector, Perturbation> fgv_perturb(const Vector& o,
                                            const Vector& grad,
                                            double epsilon) {
  if (o.size() != grad.size()) {
    throw ContractError("fgv_perturb: o has length " +
                        std::to_string(o.size()) + ", grad has " +
                        std::to_string(grad.size()));
  }
  if (!(epsilon > 0.0)) {
    throw ContractError("fgv_perturb: epsilon must be positive");
  }
  Perturbation p;
  p.epsilon = epsilon;
  p.grad_norm = grad.norm();
  if (p.grad_norm < kGradFloor) {
    p.noise = Vector::Zero(o.size());
    return {o, p};
  }
  p.noise = (epsilon / p.grad_norm) * grad;
  return {o + p.noise, p};
}

AdversarialCe adversarial_ce(const Tensor& o, int label,
                             const TapedParams& params, double epsilon) {
  if (!o.recorded()) {
    throw ContractError("adversarial_ce: o must be recorded on a tape");
  }
  Tape& tape = *o.tape;

  // Clean pass. The backward here only serves to read d(CE)/d(o); the
  // final loss's own backward recomputes everything from a clean slate.
  Tensor logits = add(matmul(o, params.w_c), params.b_c);
  Tensor ce = softmax_ce(logits, label);
  tape.backward(ce);
  const Vector g = tape.grad(o).transpose();

  auto [o_adv_value, perturbation] = fgv_perturb(o.value.transpose(), g,
                                                 epsilon);
  (void)o_adv_value;

  // The noise enters as a constant: gradients flow through o into both CE
  // terms, but not through the perturbation direction itself.
  Tensor o_adv = add(o, constant(Matrix(perturbation.noise.transpose())));
  Tensor logits_adv = add(matmul(o_adv, params.w_c), params.b_c);
  Tensor ce_adv = softmax_ce(logits_adv, label);

  AdversarialCe out;
  out.loss = scale(add(ce, ce_adv), 0.5);
  out.o_adv = o_adv;
  out.perturbation = perturbation;
  return out;
}

}  // namespace aclr
