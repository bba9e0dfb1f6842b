#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "aclr/errors.hpp"

namespace aclr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class Tape;

/// A dense 64-bit matrix, optionally recorded on a Tape so its gradient can
/// be read after a backward pass. Tensors are value-like: every operation
/// returns a fresh one and never mutates its operands.
struct Tensor {
  Matrix value;
  Tape* tape = nullptr;
  int node = -1;

  bool recorded() const { return tape != nullptr && node >= 0; }
  Eigen::Index rows() const { return value.rows(); }
  Eigen::Index cols() const { return value.cols(); }

  /// Value of a 1x1 tensor.
  double scalar() const;
};

/// Wraps a matrix as an unrecorded constant. Gradients never flow into it.
/// NaN or Inf entries are rejected here, at construction.
Tensor constant(Matrix value);
Tensor constant(double value);

/// Records operations in execution order. Every operand of a node precedes
/// it on the tape, so a single reverse sweep propagates all gradients.
/// A tape serves one forward/backward round and is not thread-safe.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&)>;

  /// Registers a differentiable input (parameter or data matrix).
  Tensor leaf(Matrix value);

  /// Appends an op result. `inputs` are the recorded operand handles; the
  /// closure adds the node's contribution to its inputs' gradients.
  Tensor emit(Matrix value, std::vector<int> inputs, BackwardFn backward);

  const Matrix& value(int node) const;

  /// Gradient from the most recent backward pass. Nodes the seed did not
  /// reach read as zero. (Clearing is lazy, via a per-pass stamp, so a
  /// backward over a small subgraph does not pay for the whole tape.)
  const Matrix& grad(int node);
  const Matrix& grad(const Tensor& t);
  Matrix& grad_mut(int node);

  /// Reverse sweep from a scalar seed node. Clears every gradient first,
  /// seeds d(seed)/d(seed) = 1, then visits the seed's ancestors in reverse
  /// order. Nodes the seed does not depend on keep a zero gradient, so the
  /// result is well-defined no matter what else the tape holds.
  void backward(const Tensor& seed);

  void zero_grad();
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::uint64_t stamp = 0;  // pass that last touched grad
    std::vector<int> inputs;
    BackwardFn backward;
  };

  int check(int node) const;
  Matrix& fresh_grad(int node);

  std::vector<Node> nodes_;
  std::uint64_t pass_ = 1;
};

/// Free convenience form of Tape::backward.
void backward(Tape& tape, const Tensor& seed);

// --- differentiable operations --------------------------------------------
//
// Every op accepts any mix of recorded and constant operands. Recorded
// operands must share one tape; the result is recorded on it (or is a
// constant when no operand is recorded). Shape violations raise
// DimensionError naming the offending shapes.

/// C = A * B.
Tensor matmul(const Tensor& a, const Tensor& b);

/// Elementwise sum; shapes must match.
Tensor add(const Tensor& a, const Tensor& b);

/// c * A for a plain double c.
Tensor scale(const Tensor& a, double c);

/// Elementwise product with a constant mask (dropout and friends).
Tensor cmul(const Tensor& a, const Matrix& mask);

/// max(x, 0). Subgradient at 0 is 0: only entries strictly above zero pass
/// gradient.
Tensor relu(const Tensor& x);

/// Column means, returned as a 1 x d row. The reduction sums each column in
/// descending value order, so the output is a function of the column
/// multiset alone: permuting rows leaves the result bit-identical.
Tensor mean_rows(const Tensor& x);

/// [X | Y]: horizontal concatenation, equal row counts.
Tensor concat_cols(const Tensor& x, const Tensor& y);

/// Cosine similarity of two vectors (row or column, equal length), as 1x1.
/// A numerically zero vector raises DegenerateVectorError.
Tensor cosine_sim(const Tensor& u, const Tensor& v);

/// Cross-entropy of a 1xK logit row against an integer label, as 1x1.
/// Uses the max-subtraction form; backward is softmax minus one-hot.
Tensor softmax_ce(const Tensor& logits, int label);

/// Sum of equally shaped tensors, left to right. Nonempty.
Tensor sum(const std::vector<Tensor>& xs);

/// log(sum(exp(x_i))) over 1x1 tensors, stabilized by max subtraction.
Tensor logsumexp(const std::vector<Tensor>& xs);

}  // namespace aclr
