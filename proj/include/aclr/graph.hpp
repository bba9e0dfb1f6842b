#pragma once

#include "aclr/data.hpp"
#include "aclr/tensor.hpp"

namespace aclr {

enum class Direction { top_down, bottom_up };

/// Propagation structure of one event. `a` is binary with a unit diagonal;
/// `a_hat` is the symmetric normalization D^{-1/2} A D^{-1/2} with
/// D = diag(row sums of A). Row/column i corresponds to event.posts[i].
struct Adjacency {
  int n = 0;
  Direction direction = Direction::top_down;
  Matrix a;
  Matrix a_hat;
};

/// Builds A for the event's reply tree. top_down puts an edge from parent
/// to child on the child's row (a[child][parent] feeds the child from the
/// parent under left-multiplication by A); bottom_up is its transpose.
Adjacency build_adjacency(const Event& event, Direction direction);

/// D^{-1/2} A D^{-1/2} for a binary matrix with unit diagonal. Rejects
/// non-square input, entries outside {0, 1}, and missing self-loops.
Matrix normalize_adjacency(const Matrix& a);

}  // namespace aclr
