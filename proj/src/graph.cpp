#include "aclr/graph.hpp"

#include <cmath>
#include <map>
#include <string>

namespace aclr {

Matrix normalize_adjacency(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw DimensionError("normalize_adjacency: matrix is " +
                         std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + ", expected square");
  }
  const Eigen::Index n = a.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (a(i, j) != 0.0 && a(i, j) != 1.0) {
        throw ContractError("normalize_adjacency: entry (" +
                            std::to_string(i) + "," + std::to_string(j) +
                            ") is " + std::to_string(a(i, j)) +
                            ", expected 0 or 1");
      }
    }
    if (a(i, i) != 1.0) {
      throw ContractError("normalize_adjacency: missing self-loop at row " +
                          std::to_string(i));
    }
  }
  Vector inv_sqrt_deg(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    // Row sums are >= 1 thanks to the self-loop check above.
    inv_sqrt_deg(i) = 1.0 / std::sqrt(a.row(i).sum());
  }
  Matrix out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      out(i, j) = a(i, j) * inv_sqrt_deg(i) * inv_sqrt_deg(j);
    }
  }
  return out;
}

Adjacency build_adjacency(const Event& event, Direction direction) {
  validate_event(event);
  const Eigen::Index n = static_cast<Eigen::Index>(event.posts.size());
  std::map<std::string, Eigen::Index> index;
  for (Eigen::Index i = 0; i < n; ++i) index.emplace(event.posts[i].id, i);

  Matrix a = Matrix::Identity(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Post& p = event.posts[static_cast<std::size_t>(i)];
    if (!p.parent.has_value()) continue;
    const Eigen::Index j = index.at(*p.parent);
    if (direction == Direction::top_down) {
      a(i, j) = 1.0;  // child row aggregates its parent
    } else {
      a(j, i) = 1.0;  // parent row aggregates its children
    }
  }

  Adjacency adj;
  adj.n = static_cast<int>(n);
  adj.direction = direction;
  adj.a = a;
  adj.a_hat = normalize_adjacency(a);
  return adj;
}

}  // namespace aclr
