#pragma once

#include <cstdint>

#include "aclr/data.hpp"

namespace aclr {

/// Generator knobs for a paired source/target benchmark. The target
/// distribution equals the source one rotated by theta_deg in the (0,1)
/// coordinate plane and shifted by delta_norm along axis 0, imitating a
/// topic/language gap that ruins a classifier trained only on the source
/// geometry while leaving within-class structure intact.
struct SynthConfig {
  int n_source = 800;
  int n_target = 100;
  int dim = 32;

  // Tree shape: offspring counts are Poisson with a per-depth mean chosen
  // so the expected tree size matches mean_posts under the depth cap.
  double mean_posts = 8.0;
  int max_depth = 5;
  /// Explicit Poisson fan-out mean; 0 derives it from mean_posts.
  double fanout = 0.0;

  /// Distance of each class mean from the origin along axis 0
  /// (non-rumor at +class_sep, rumor at -class_sep).
  double class_sep = 1.0;
  /// Rotation (degrees) applied to target embeddings in the (0,1) plane.
  double theta_deg = 30.0;
  /// Norm of the target translation along axis 0.
  double delta_norm = 1.0;
  /// Per-post noise standard deviation, per coordinate.
  double sigma = 1.0;

  std::uint64_t seed = 42;
};

void validate(const SynthConfig& cfg);

struct SynthBenchmark {
  Corpus source;
  Corpus target;
};

/// Deterministic in cfg.seed, byte for byte. Every event passes
/// validate_event; labels alternate so each dataset is balanced within 1.
SynthBenchmark generate_benchmark(const SynthConfig& cfg);

/// Expected tree size (root included) of the capped branching process:
/// sum of fanout^l for depth l = 0..max_depth.
double expected_tree_size(double fanout, int max_depth);

/// Inverse of expected_tree_size in fanout, by bisection.
double solve_fanout(double mean_posts, int max_depth);

}  // namespace aclr
