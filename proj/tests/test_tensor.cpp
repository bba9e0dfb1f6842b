#include <cmath>
#include <vector>

#include "doctest.h"

#include "aclr/tensor.hpp"
#include "testutil.hpp"

using aclr::Matrix;
using aclr::Tape;
using aclr::Tensor;

TEST_SUITE("tensor") {

TEST_CASE("matmul forward and backward against hand adjoints") {
  Matrix av(2, 3), bv(3, 2);
  av << 1, 2, 3, 4, 5, 6;
  bv << 7, 8, 9, 10, 11, 12;

  Tape tape;
  Tensor a = tape.leaf(av);
  Tensor b = tape.leaf(bv);
  Tensor c = aclr::matmul(a, b);
  CHECK(c.value(0, 0) == doctest::Approx(58.0));
  CHECK(c.value(1, 1) == doctest::Approx(154.0));

  // Scalarize with a fixed weighting so every entry of C contributes.
  Matrix wv(2, 2);
  wv << 1, -2, 3, 0.5;
  Tensor loss =
      aclr::matmul(aclr::mean_rows(aclr::cmul(c, wv)),
                   aclr::constant(Matrix::Ones(2, 1)));
  tape.backward(loss);

  // dL/dC = W / 2 (mean over 2 rows, then summed columns).
  const Matrix gc = wv / 2.0;
  const Matrix ga = gc * bv.transpose();
  const Matrix gb = av.transpose() * gc;
  CHECK((tape.grad(a) - ga).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((tape.grad(b) - gb).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("finite differences across the whole op set") {
  aclr::Rng rng(11);
  Matrix x(3, 4), w(4, 3), u(1, 5), v(1, 5);
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = rng.normal();
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = rng.normal();
  for (Eigen::Index j = 0; j < 5; ++j) u(0, j) = rng.normal() + 0.5;
  for (Eigen::Index j = 0; j < 5; ++j) v(0, j) = rng.normal() - 0.25;

  Matrix mask = Matrix::Ones(3, 3);
  mask(1, 1) = 0.0;
  mask(2, 0) = 2.0;

  auto build = [&mask](Tape&, const std::vector<Tensor>& leaves) {
    const Tensor& x = leaves[0];
    const Tensor& w = leaves[1];
    const Tensor& u = leaves[2];
    const Tensor& v = leaves[3];
    Tensor h = aclr::relu(aclr::matmul(x, w));
    h = aclr::cmul(h, mask);
    Tensor pooled = aclr::mean_rows(aclr::concat_cols(h, aclr::scale(h, -0.5)));
    Tensor ce = aclr::softmax_ce(pooled, 2);
    Tensor cos = aclr::cosine_sim(u, v);
    Tensor lse = aclr::logsumexp({cos, aclr::scale(cos, 2.0), ce});
    return aclr::sum({aclr::add(ce, cos), lse, aclr::scale(ce, 0.3)});
  };

  auto res = testutil::check_gradients({x, w, u, v}, build);
  CHECK(res.entries == 3 * 4 + 4 * 3 + 5 + 5);
  CHECK(res.max_rel_err < 1e-6);
}

TEST_CASE("mean_rows is bit-identical under row permutation") {
  aclr::Rng rng(5);
  Matrix m(7, 5);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rng.normal() * 3.0;

  std::vector<int> perm{3, 0, 6, 1, 5, 2, 4};
  Matrix shuffled(7, 5);
  for (int i = 0; i < 7; ++i) shuffled.row(i) = m.row(perm[i]);

  const Matrix a = aclr::mean_rows(aclr::constant(m)).value;
  const Matrix b = aclr::mean_rows(aclr::constant(shuffled)).value;
  for (Eigen::Index j = 0; j < 5; ++j) {
    CHECK(a(0, j) == b(0, j));  // exact, not approximate
  }
}

TEST_CASE("relu passes no gradient at exactly zero") {
  Matrix xv(1, 3);
  xv << -1.0, 0.0, 2.0;
  Tape tape;
  Tensor x = tape.leaf(xv);
  Tensor loss =
      aclr::matmul(aclr::relu(x), aclr::constant(Matrix::Ones(3, 1)));
  tape.backward(loss);
  const Matrix g = tape.grad(x);
  CHECK(g(0, 0) == 0.0);
  CHECK(g(0, 1) == 0.0);
  CHECK(g(0, 2) == 1.0);
}

TEST_CASE("softmax_ce closed form and gradient") {
  Matrix z(1, 2);
  z << 2.0, 1.0;
  Tape tape;
  Tensor logits = tape.leaf(z);
  Tensor ce = aclr::softmax_ce(logits, 0);
  CHECK(ce.scalar() == doctest::Approx(std::log(1.0 + std::exp(-1.0))));

  tape.backward(ce);
  const double p0 = 1.0 / (1.0 + std::exp(-1.0));
  const Matrix g = tape.grad(logits);
  CHECK(g(0, 0) == doctest::Approx(p0 - 1.0));
  CHECK(g(0, 1) == doctest::Approx(1.0 - p0));

  CHECK_THROWS_AS(aclr::softmax_ce(logits, 2), aclr::IndexError);
  CHECK_THROWS_AS(aclr::softmax_ce(aclr::constant(1.0), 0),
                  aclr::DimensionError);
}

TEST_CASE("logsumexp is stable for large inputs and exact for one input") {
  Tensor big = aclr::logsumexp({aclr::constant(1000.0), aclr::constant(1001.0)});
  CHECK(std::isfinite(big.scalar()));
  CHECK(big.scalar() ==
        doctest::Approx(1001.0 + std::log(1.0 + std::exp(-1.0))));

  Tensor one = aclr::logsumexp({aclr::constant(3.25)});
  CHECK(one.scalar() == 3.25);  // exact: lse of one element is the element
}

TEST_CASE("cosine similarity value and degenerate operands") {
  Matrix u(1, 2), v(1, 2);
  u << 1.0, 0.0;
  v << 0.6, 0.8;
  CHECK(aclr::cosine_sim(aclr::constant(u), aclr::constant(v)).scalar() ==
        doctest::Approx(0.6));

  Matrix zero = Matrix::Zero(1, 2);
  CHECK_THROWS_AS(aclr::cosine_sim(aclr::constant(zero), aclr::constant(v)),
                  aclr::DegenerateVectorError);
  Matrix w(1, 3);
  w << 1, 2, 3;
  CHECK_THROWS_AS(aclr::cosine_sim(aclr::constant(u), aclr::constant(w)),
                  aclr::DimensionError);
}

TEST_CASE("backward validates its seed") {
  Tape tape;
  Tensor m = tape.leaf(Matrix::Ones(2, 2));
  CHECK_THROWS_AS(tape.backward(m), aclr::DimensionError);  // not 1x1
  CHECK_THROWS_AS(tape.backward(aclr::constant(1.0)), aclr::ContractError);

  Tape other;
  Tensor s = other.leaf(Matrix::Ones(1, 1));
  CHECK_THROWS_AS(tape.backward(s), aclr::ContractError);
  CHECK_THROWS_AS(aclr::add(m, s), aclr::ContractError);  // mixed tapes
}

TEST_CASE("successive backward passes do not leak gradients") {
  Tape tape;
  Tensor x = tape.leaf(Matrix::Constant(1, 1, 2.0));
  Tensor y = tape.leaf(Matrix::Constant(1, 1, 5.0));
  Tensor loss1 = aclr::scale(x, 3.0);
  Tensor loss2 = aclr::scale(aclr::add(x, y), 10.0);

  tape.backward(loss1);
  CHECK(tape.grad(x)(0, 0) == 3.0);
  CHECK(tape.grad(y)(0, 0) == 0.0);  // unreached reads as zero

  tape.backward(loss2);
  CHECK(tape.grad(x)(0, 0) == 10.0);  // not 13: prior pass cleared
  CHECK(tape.grad(y)(0, 0) == 10.0);
}

TEST_CASE("per-branch backward reads gradients of that branch only") {
  // The training loop runs one backward per target event on a shared tape;
  // each pass must see exactly its own subgraph.
  Tape tape;
  Tensor w = tape.leaf(Matrix::Constant(1, 1, 1.5));
  Tensor a = aclr::scale(w, 2.0);
  Tensor b = aclr::scale(w, -4.0);
  tape.backward(a);
  CHECK(tape.grad(w)(0, 0) == 2.0);
  tape.backward(b);
  CHECK(tape.grad(w)(0, 0) == -4.0);
}

TEST_CASE("constants reject non-finite entries, scalar() checks shape") {
  Matrix bad(1, 1);
  bad << std::nan("");
  CHECK_THROWS_AS(aclr::constant(bad), aclr::ContractError);

  Tensor wide = aclr::constant(Matrix::Ones(1, 2));
  CHECK_THROWS_AS(wide.scalar(), aclr::DimensionError);

  CHECK_THROWS_AS(aclr::sum({}), aclr::ContractError);
  CHECK_THROWS_AS(aclr::logsumexp({}), aclr::ContractError);
}

TEST_CASE("shape mismatches are rejected with DimensionError") {
  Tensor a = aclr::constant(Matrix::Ones(2, 3));
  Tensor b = aclr::constant(Matrix::Ones(2, 2));
  CHECK_THROWS_AS(aclr::matmul(a, b), aclr::DimensionError);
  CHECK_THROWS_AS(aclr::add(a, b), aclr::DimensionError);
  CHECK_THROWS_AS(aclr::cmul(a, Matrix::Ones(3, 3)), aclr::DimensionError);
  CHECK_THROWS_AS(aclr::concat_cols(a, aclr::constant(Matrix::Ones(3, 1))),
                  aclr::DimensionError);
  CHECK_THROWS_AS(aclr::sum({a, b}), aclr::DimensionError);
}

TEST_CASE("ops on constants stay off the tape") {
  Tensor c = aclr::add(aclr::constant(1.0), aclr::constant(2.0));
  CHECK_FALSE(c.recorded());
  CHECK(c.scalar() == 3.0);
}

}  // TEST_SUITE
