#include "aclr/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace aclr {

namespace {

std::string shape_of(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_finite(const Matrix& m, const char* who) {
  if (!m.allFinite()) {
    throw ContractError(std::string(who) + ": NaN or Inf entry rejected");
  }
}

/// Operand view captured by backward closures. Recorded operands are read
/// through the tape; constants hold their own copy.
struct OpArg {
  int node = -1;
  Matrix held;

  const Matrix& value(const Tape& t) const {
    return node >= 0 ? t.value(node) : held;
  }

  template <class Expr>
  void add_grad(Tape& t, const Expr& g) const {
    if (node >= 0) t.grad_mut(node) += g;
  }

  bool recorded() const { return node >= 0; }
};

/// Resolves the single tape shared by the recorded operands (nullptr when
/// all are constants) and builds their OpArg views.
Tape* resolve_tape(std::initializer_list<const Tensor*> operands,
                   const char* who) {
  Tape* tape = nullptr;
  for (const Tensor* t : operands) {
    if (!t->recorded()) continue;
    if (tape != nullptr && tape != t->tape) {
      throw ContractError(std::string(who) +
                          ": operands recorded on different tapes");
    }
    tape = t->tape;
  }
  return tape;
}

OpArg arg_of(const Tensor& t) {
  if (t.recorded()) return OpArg{t.node, Matrix()};
  return OpArg{-1, t.value};
}

Tensor finish(Tape* tape, Matrix value, std::vector<int> inputs,
              Tape::BackwardFn backward) {
  if (tape == nullptr) return Tensor{std::move(value)};
  return tape->emit(std::move(value), std::move(inputs), std::move(backward));
}

std::vector<int> recorded_inputs(std::initializer_list<const Tensor*> ts) {
  std::vector<int> ids;
  for (const Tensor* t : ts) {
    if (t->recorded()) ids.push_back(t->node);
  }
  return ids;
}

/// Sum of a column in descending value order. Canonical order makes the
/// result independent of how the entries were arranged in the matrix.
double ordered_column_sum(std::vector<double>& buf) {
  std::sort(buf.begin(), buf.end(), std::greater<double>());
  double s = 0.0;
  for (double v : buf) s += v;
  return s;
}

}  // namespace

double Tensor::scalar() const {
  if (rows() != 1 || cols() != 1) {
    throw DimensionError("Tensor::scalar: tensor is " + shape_of(value) +
                         ", expected 1x1");
  }
  return value(0, 0);
}

Tensor constant(Matrix value) {
  require_finite(value, "constant");
  return Tensor{std::move(value)};
}

Tensor constant(double value) {
  Matrix m(1, 1);
  m(0, 0) = value;
  return constant(std::move(m));
}

Tensor Tape::leaf(Matrix value) {
  require_finite(value, "Tape::leaf");
  return emit(std::move(value), {}, nullptr);
}

Tensor Tape::emit(Matrix value, std::vector<int> inputs, BackwardFn backward) {
  for (int in : inputs) check(in);
  const int id = static_cast<int>(nodes_.size());
  Node node;
  node.value = std::move(value);
  node.inputs = std::move(inputs);
  node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Tensor{nodes_.back().value, this, id};
}

int Tape::check(int node) const {
  if (node < 0 || node >= static_cast<int>(nodes_.size())) {
    throw IndexError("Tape: node handle " + std::to_string(node) +
                     " out of range (tape has " + std::to_string(nodes_.size()) +
                     " nodes)");
  }
  return node;
}

const Matrix& Tape::value(int node) const { return nodes_[check(node)].value; }

Matrix& Tape::fresh_grad(int node) {
  Node& n = nodes_[static_cast<std::size_t>(check(node))];
  if (n.stamp != pass_) {
    if (n.grad.rows() != n.value.rows() || n.grad.cols() != n.value.cols()) {
      n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
    } else {
      n.grad.setZero();
    }
    n.stamp = pass_;
  }
  return n.grad;
}

const Matrix& Tape::grad(int node) { return fresh_grad(node); }

const Matrix& Tape::grad(const Tensor& t) {
  if (!t.recorded() || t.tape != this) {
    throw ContractError("Tape::grad: tensor is not recorded on this tape");
  }
  return grad(t.node);
}

Matrix& Tape::grad_mut(int node) { return fresh_grad(node); }

void Tape::zero_grad() { ++pass_; }

void Tape::backward(const Tensor& seed) {
  if (!seed.recorded() || seed.tape != this) {
    throw ContractError("Tape::backward: seed is not recorded on this tape");
  }
  if (seed.value.rows() != 1 || seed.value.cols() != 1) {
    throw DimensionError("Tape::backward: seed is " + shape_of(seed.value) +
                         ", expected 1x1");
  }
  zero_grad();

  // Mark the seed's ancestors; everything else reads as zero gradient.
  std::vector<char> reach(nodes_.size(), 0);
  std::vector<int> stack{seed.node};
  reach[seed.node] = 1;
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    for (int in : nodes_[id].inputs) {
      if (!reach[in]) {
        reach[in] = 1;
        stack.push_back(in);
      }
    }
  }

  grad_mut(seed.node)(0, 0) = 1.0;
  for (int id = seed.node; id >= 0; --id) {
    if (reach[id] && nodes_[id].backward) nodes_[id].backward(*this);
  }
}

void backward(Tape& tape, const Tensor& seed) { tape.backward(seed); }

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions disagree: " +
                         shape_of(a.value) + " * " + shape_of(b.value));
  }
  Tape* tape = resolve_tape({&a, &b}, "matmul");
  Matrix value = a.value * b.value;
  const OpArg va = arg_of(a), vb = arg_of(b);
  const int out = static_cast<int>(tape ? tape->size() : 0);
  return finish(tape, std::move(value), recorded_inputs({&a, &b}),
                [va, vb, out](Tape& t) {
                  const Matrix& g = t.grad(out);
                  va.add_grad(t, g * vb.value(t).transpose());
                  vb.add_grad(t, va.value(t).transpose() * g);
                });
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("add: shapes disagree: " + shape_of(a.value) +
                         " vs " + shape_of(b.value));
  }
  Tape* tape = resolve_tape({&a, &b}, "add");
  const OpArg va = arg_of(a), vb = arg_of(b);
  const int out = static_cast<int>(tape ? tape->size() : 0);
  return finish(tape, a.value + b.value, recorded_inputs({&a, &b}),
                [va, vb, out](Tape& t) {
                  const Matrix& g = t.grad(out);
                  va.add_grad(t, g);
                  vb.add_grad(t, g);
                });
}

Tensor scale(const Tensor& a, double c) {
  if (!std::isfinite(c)) throw ContractError("scale: factor must be finite");
  Tape* tape = resolve_tape({&a}, "scale");
  const OpArg va = arg_of(a);
  const int out = static_cast<int>(tape ? tape->size() : 0);
  return finish(tape, c * a.value, recorded_inputs({&a}),
                [va, c, out](Tape& t) { va.add_grad(t, c * t.grad(out)); });
}

Tensor cmul(const Tensor& a, const Matrix& mask) {
  if (a.rows() != mask.rows() || a.cols() != mask.cols()) {
    throw DimensionError("cmul: shapes disagree: " + shape_of(a.value) +
                         " vs " + shape_of(mask));
  }
  require_finite(mask, "cmul");
  Tape* tape = resolve_tape({&a}, "cmul");
  const OpArg va = arg_of(a);
  const int out = static_cast<int>(tape ? tape->size() : 0);
  return finish(tape, a.value.cwiseProduct(mask), recorded_inputs({&a}),
                [va, mask, out](Tape& t) {
                  va.add_grad(t, t.grad(out).cwiseProduct(mask));
                });
}

Tensor relu(const Tensor& x) {
  Tape* tape = resolve_tape({&x}, "relu");
  const OpArg vx = arg_of(x);
  const int out = static_cast<int>(tape ? tape->size() : 0);
  return finish(tape, x.value.cwiseMax(0.0), recorded_inputs({&x}),
                [vx, out](Tape& t) {
                  const Matrix& xv = vx.value(t);
                  // Strict mask: d relu(0) = 0.
                  vx.add_grad(t, (xv.array() > 0.0)
                                     .select(t.grad(out), Matrix::Zero(
                                                              xv.rows(),
                                                              xv.cols())));
                });
}

Tensor mean_rows(const Tensor& x) {
  if (x.rows() < 1) {
    throw DimensionError("mean_rows: input has no rows");
  }
  Tape* tape = resolve_tape({&x}, "mean_rows");
  const Eigen::Index n = x.rows(), d = x.cols();
  Matrix value(1, d);
  std::vector<double> buf(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      buf[static_cast<std::size_t>(i)] = x.value(i, j);
    }
    value(0, j) = ordered_column_sum(buf) / static_cast<double>(n);
  }
  const OpArg vx = arg_of(x);
  const int out = static_cast<int>(tape ? tape->size() : 0);
  return finish(tape, std::move(value), recorded_inputs({&x}),
                [vx, n, out](Tape& t) {
                  const Matrix& g = t.grad(out);
                  vx.add_grad(t, (Matrix::Ones(n, 1) * g) /
                                     static_cast<double>(n));
                });
}

Tensor concat_cols(const Tensor& x, const Tensor& y) {
  if (x.rows() != y.rows()) {
    throw DimensionError("concat_cols: row counts disagree: " +
                         shape_of(x.value) + " vs " + shape_of(y.value));
  }
  Tape* tape = resolve_tape({&x, &y}, "concat_cols");
  Matrix value(x.rows(), x.cols() + y.cols());
  value << x.value, y.value;
  const OpArg vx = arg_of(x), vy = arg_of(y);
  const Eigen::Index cx = x.cols(), cy = y.cols();
  const int out = static_cast<int>(tape ? tape->size() : 0);
  return finish(tape, std::move(value), recorded_inputs({&x, &y}),
                [vx, vy, cx, cy, out](Tape& t) {
                  const Matrix& g = t.grad(out);
                  vx.add_grad(t, g.leftCols(cx));
                  vy.add_grad(t, g.rightCols(cy));
                });
}

namespace {

/// Flattens a row or column vector tensor value to a column vector view.
Vector as_vector(const Matrix& m, const char* who) {
  if (m.rows() != 1 && m.cols() != 1) {
    throw DimensionError(std::string(who) + ": operand is " + shape_of(m) +
                         ", expected a vector");
  }
  if (m.rows() == 1) return m.transpose();
  return m;
}

/// Reshapes a column vector back into the orientation of `like`.
Matrix like_shape(const Vector& v, const Matrix& like) {
  if (like.rows() == 1) return v.transpose();
  return v;
}

}  // namespace

Tensor cosine_sim(const Tensor& u, const Tensor& v) {
  const Vector uv = as_vector(u.value, "cosine_sim");
  const Vector vv = as_vector(v.value, "cosine_sim");
  if (uv.size() != vv.size()) {
    throw DimensionError("cosine_sim: lengths disagree: " +
                         std::to_string(uv.size()) + " vs " +
                         std::to_string(vv.size()));
  }
  const double nu = uv.norm(), nv = vv.norm();
  if (nu < 1e-12 || nv < 1e-12) {
    throw DegenerateVectorError(
        "cosine_sim: vector norm below 1e-12 (norms " + std::to_string(nu) +
        ", " + std::to_string(nv) + ")");
  }
  const Vector uh = uv / nu, vh = vv / nv;
  const double c = uh.dot(vh);
  Tape* tape = resolve_tape({&u, &v}, "cosine_sim");
  const OpArg au = arg_of(u), av = arg_of(v);
  const int out = static_cast<int>(tape ? tape->size() : 0);
  Matrix value(1, 1);
  value(0, 0) = c;
  return finish(tape, std::move(value), recorded_inputs({&u, &v}),
                [au, av, uh, vh, nu, nv, c, out](Tape& t) {
                  const double g = t.grad(out)(0, 0);
                  au.add_grad(t, like_shape(Vector((g / nu) * (vh - c * uh)),
                                            au.value(t)));
                  av.add_grad(t, like_shape(Vector((g / nv) * (uh - c * vh)),
                                            av.value(t)));
                });
}

Tensor softmax_ce(const Tensor& logits, int label) {
  if (logits.rows() != 1 || logits.cols() < 2) {
    throw DimensionError("softmax_ce: logits are " + shape_of(logits.value) +
                         ", expected 1xK with K >= 2");
  }
  const int k = static_cast<int>(logits.cols());
  if (label < 0 || label >= k) {
    throw IndexError("softmax_ce: label " + std::to_string(label) +
                     " out of range for " + std::to_string(k) + " classes");
  }
  const Eigen::RowVectorXd z = logits.value.row(0);
  const double zmax = z.maxCoeff();
  const Eigen::RowVectorXd ez = (z.array() - zmax).exp();
  const double total = ez.sum();
  const double loss = std::log(total) - (z(label) - zmax);
  const Eigen::RowVectorXd probs = ez / total;

  Tape* tape = resolve_tape({&logits}, "softmax_ce");
  const OpArg vz = arg_of(logits);
  const int out = static_cast<int>(tape ? tape->size() : 0);
  Matrix value(1, 1);
  value(0, 0) = loss;
  return finish(tape, std::move(value), recorded_inputs({&logits}),
                [vz, probs, label, out](Tape& t) {
                  const double g = t.grad(out)(0, 0);
                  Eigen::RowVectorXd d = probs;
                  d(label) -= 1.0;
                  vz.add_grad(t, g * d);
                });
}

Tensor sum(const std::vector<Tensor>& xs) {
  if (xs.empty()) throw ContractError("sum: empty operand list");
  const Eigen::Index r = xs.front().rows(), c = xs.front().cols();
  Tape* tape = nullptr;
  std::vector<int> inputs;
  std::vector<OpArg> args;
  args.reserve(xs.size());
  Matrix value = Matrix::Zero(r, c);
  for (const Tensor& x : xs) {
    if (x.rows() != r || x.cols() != c) {
      throw DimensionError("sum: shapes disagree: " + shape_of(xs[0].value) +
                           " vs " + shape_of(x.value));
    }
    Tape* xt = resolve_tape({&x}, "sum");
    if (xt != nullptr) {
      if (tape != nullptr && tape != xt) {
        throw ContractError("sum: operands recorded on different tapes");
      }
      tape = xt;
      inputs.push_back(x.node);
    }
    args.push_back(arg_of(x));
    value += x.value;
  }
  const int out = static_cast<int>(tape ? tape->size() : 0);
  return finish(tape, std::move(value), std::move(inputs),
                [args, out](Tape& t) {
                  const Matrix& g = t.grad(out);
                  for (const OpArg& a : args) a.add_grad(t, g);
                });
}

Tensor logsumexp(const std::vector<Tensor>& xs) {
  if (xs.empty()) throw ContractError("logsumexp: empty operand list");
  Tape* tape = nullptr;
  std::vector<int> inputs;
  std::vector<OpArg> args;
  Eigen::VectorXd vals(static_cast<Eigen::Index>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].rows() != 1 || xs[i].cols() != 1) {
      throw DimensionError("logsumexp: operand " + std::to_string(i) +
                           " is " + shape_of(xs[i].value) + ", expected 1x1");
    }
    Tape* xt = resolve_tape({&xs[i]}, "logsumexp");
    if (xt != nullptr) {
      if (tape != nullptr && tape != xt) {
        throw ContractError("logsumexp: operands recorded on different tapes");
      }
      tape = xt;
      inputs.push_back(xs[i].node);
    }
    args.push_back(arg_of(xs[i]));
    vals(static_cast<Eigen::Index>(i)) = xs[i].value(0, 0);
  }
  const double m = vals.maxCoeff();
  const Eigen::VectorXd ev = (vals.array() - m).exp();
  const double total = ev.sum();
  const double lse = m + std::log(total);
  const Eigen::VectorXd w = ev / total;  // softmax weights; sum to 1

  const int out = static_cast<int>(tape ? tape->size() : 0);
  Matrix value(1, 1);
  value(0, 0) = lse;
  return finish(tape, std::move(value), std::move(inputs),
                [args, w, out](Tape& t) {
                  const double g = t.grad(out)(0, 0);
                  Matrix gi(1, 1);
                  for (std::size_t i = 0; i < args.size(); ++i) {
                    gi(0, 0) = g * w(static_cast<Eigen::Index>(i));
                    args[i].add_grad(t, gi);
                  }
                });
}

}  // namespace aclr
