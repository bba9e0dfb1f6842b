// Helpers shared by the unit tests: a central-difference gradient checker,
// relative-error math, scratch directories, and tiny dataset builders.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "aclr/data.hpp"
#include "aclr/rng.hpp"
#include "aclr/tensor.hpp"

namespace testutil {

inline double rel_err(double analytic, double numeric) {
  const double denom =
      std::max({std::fabs(analytic), std::fabs(numeric), 1e-6});
  return std::fabs(analytic - numeric) / denom;
}

struct GradCheck {
  double max_rel_err = 0.0;
  long entries = 0;
};

/// Central-difference check of d(build)/d(leaf) for every entry of every
/// leaf. `build` must be a pure function of the leaf tensors it is handed.
inline GradCheck check_gradients(
    const std::vector<aclr::Matrix>& leaf_values,
    const std::function<aclr::Tensor(aclr::Tape&,
                                     const std::vector<aclr::Tensor>&)>& build,
    double h = 1e-5) {
  auto eval = [&](const std::vector<aclr::Matrix>& values) {
    aclr::Tape tape;
    std::vector<aclr::Tensor> leaves;
    leaves.reserve(values.size());
    for (const aclr::Matrix& v : values) leaves.push_back(tape.leaf(v));
    return build(tape, leaves).scalar();
  };

  // Analytic pass.
  aclr::Tape tape;
  std::vector<aclr::Tensor> leaves;
  leaves.reserve(leaf_values.size());
  for (const aclr::Matrix& v : leaf_values) leaves.push_back(tape.leaf(v));
  const aclr::Tensor loss = build(tape, leaves);
  tape.backward(loss);
  std::vector<aclr::Matrix> grads;
  grads.reserve(leaves.size());
  for (const aclr::Tensor& leaf : leaves) grads.push_back(tape.grad(leaf));

  GradCheck result;
  std::vector<aclr::Matrix> bumped = leaf_values;
  for (std::size_t i = 0; i < leaf_values.size(); ++i) {
    for (Eigen::Index r = 0; r < leaf_values[i].rows(); ++r) {
      for (Eigen::Index c = 0; c < leaf_values[i].cols(); ++c) {
        const double saved = bumped[i](r, c);
        bumped[i](r, c) = saved + h;
        const double up = eval(bumped);
        bumped[i](r, c) = saved - h;
        const double down = eval(bumped);
        bumped[i](r, c) = saved;
        const double numeric = (up - down) / (2.0 * h);
        result.max_rel_err =
            std::max(result.max_rel_err, rel_err(grads[i](r, c), numeric));
        ++result.entries;
      }
    }
  }
  return result;
}

/// Fresh scratch directory under the system tmp dir, removed on destruction.
class ScratchDir {
 public:
  ScratchDir() {
    std::string tmpl =
        (std::filesystem::temp_directory_path() / "aclr_test_XXXXXX").string();
    if (!::mkdtemp(tmpl.data())) {
      throw std::runtime_error("mkdtemp failed");
    }
    path_ = tmpl;
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }

 private:
  std::filesystem::path path_;
};

inline aclr::Post make_post(std::string id, std::optional<std::string> parent,
                            double delay, std::string text) {
  aclr::Post p;
  p.id = std::move(id);
  p.parent = std::move(parent);
  p.delay_seconds = delay;
  p.text = std::move(text);
  return p;
}

/// Chain-free random tree: post i attaches to a uniformly chosen earlier
/// post, delays strictly increase.
inline aclr::Event random_tree_event(const std::string& id, int label,
                                     int n_posts, aclr::Rng& rng) {
  aclr::Event e;
  e.id = id;
  e.label = label;
  e.posts.push_back(make_post(id + "_p0", std::nullopt, 0.0, "root " + id));
  for (int i = 1; i < n_posts; ++i) {
    const int parent = static_cast<int>(rng.below(static_cast<std::uint64_t>(i)));
    e.posts.push_back(make_post(
        id + "_p" + std::to_string(i), e.posts[static_cast<std::size_t>(parent)].id,
        e.posts[static_cast<std::size_t>(parent)].delay_seconds + 10.0 +
            rng.uniform(0.0, 100.0),
        "reply " + std::to_string(i)));
  }
  aclr::canonicalize_posts(e);
  return e;
}

/// Labeled corpus of random trees with iid normal embeddings, one embedding
/// per post. Labels alternate so both classes are present.
inline aclr::Corpus random_corpus(const std::string& name, aclr::Role role,
                                  int n_events, int max_posts, int dim,
                                  std::uint64_t seed) {
  aclr::Rng rng(seed);
  aclr::Corpus corpus;
  corpus.dataset.name = name;
  corpus.dataset.role = role;
  corpus.table.dim = dim;
  for (int i = 0; i < n_events; ++i) {
    const int n_posts =
        1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_posts)));
    aclr::Event e = random_tree_event(name + "_e" + std::to_string(i), i % 2,
                                      n_posts, rng);
    for (const aclr::Post& p : e.posts) {
      aclr::Vector v(dim);
      for (int d = 0; d < dim; ++d) {
        v(d) = rng.normal() + (e.label == 1 ? 0.75 : -0.75);
      }
      corpus.table.vectors[p.id] = v;
    }
    corpus.dataset.events.push_back(std::move(e));
  }
  return corpus;
}

}  // namespace testutil
