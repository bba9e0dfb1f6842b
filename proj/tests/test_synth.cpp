#include <cmath>

#include "doctest.h"

#include "aclr/synth.hpp"
#include "testutil.hpp"

using aclr::SynthConfig;
using aclr::Vector;

namespace {

SynthConfig small_config() {
  SynthConfig cfg;
  cfg.n_source = 30;
  cfg.n_target = 20;
  cfg.dim = 6;
  cfg.mean_posts = 4.0;
  cfg.seed = 5;
  return cfg;
}

/// Mean post embedding of one class across a corpus.
Vector class_mean(const aclr::Corpus& corpus, int label) {
  Vector sum = Vector::Zero(corpus.table.dim);
  long n = 0;
  for (const aclr::Event& e : corpus.dataset.events) {
    if (e.label != label) continue;
    for (const aclr::Post& p : e.posts) {
      sum += corpus.table.vectors.at(p.id);
      ++n;
    }
  }
  return sum / static_cast<double>(n);
}

}  // namespace

TEST_SUITE("synth") {

TEST_CASE("generation is deterministic byte for byte") {
  const SynthConfig cfg = small_config();
  const aclr::SynthBenchmark a = aclr::generate_benchmark(cfg);
  const aclr::SynthBenchmark b = aclr::generate_benchmark(cfg);
  CHECK(a.source.dataset == b.source.dataset);
  CHECK(a.target.dataset == b.target.dataset);
  REQUIRE(a.target.table.vectors.size() == b.target.table.vectors.size());
  for (const auto& [id, vec] : a.target.table.vectors) {
    CHECK((vec - b.target.table.vectors.at(id)).cwiseAbs().maxCoeff() == 0.0);
  }

  SynthConfig other = cfg;
  other.seed = cfg.seed + 1;
  const aclr::SynthBenchmark c = aclr::generate_benchmark(other);
  CHECK(a.source.dataset != c.source.dataset);
}

TEST_CASE("datasets are sized, balanced and fully embedded") {
  const SynthConfig cfg = small_config();
  const aclr::SynthBenchmark bench = aclr::generate_benchmark(cfg);
  CHECK(bench.source.dataset.events.size() == 30);
  CHECK(bench.target.dataset.events.size() == 20);
  CHECK(bench.source.dataset.role == aclr::Role::source);
  CHECK(bench.target.dataset.role == aclr::Role::target);
  CHECK_NOTHROW(aclr::validate_dataset(bench.source.dataset));
  CHECK_NOTHROW(aclr::validate_dataset(bench.target.dataset));

  for (const aclr::Corpus* corpus : {&bench.source, &bench.target}) {
    int rumors = 0;
    CHECK(corpus->table.dim == 6);
    for (const aclr::Event& e : corpus->dataset.events) {
      rumors += e.label;
      for (const aclr::Post& p : e.posts) {
        REQUIRE(corpus->table.vectors.count(p.id) == 1);
        CHECK(corpus->table.vectors.at(p.id).size() == 6);
        CHECK(p.text.has_value());
      }
    }
    const int n = static_cast<int>(corpus->dataset.events.size());
    CHECK(rumors == n / 2);  // labels alternate
  }
}

TEST_CASE("fanout solver inverts the expected tree size") {
  CHECK(aclr::expected_tree_size(0.0, 5) == 1.0);
  CHECK(aclr::expected_tree_size(1.0, 3) == 4.0);
  CHECK(aclr::solve_fanout(1.0, 5) == 0.0);
  for (double m : {2.0, 8.0, 30.0}) {
    const double f = aclr::solve_fanout(m, 5);
    CHECK(aclr::expected_tree_size(f, 5) == doctest::Approx(m).epsilon(1e-9));
  }
}

TEST_CASE("tree sizes track the requested mean") {
  SynthConfig cfg = small_config();
  cfg.n_source = 500;
  cfg.n_target = 2;
  cfg.mean_posts = 8.0;
  const aclr::SynthBenchmark bench = aclr::generate_benchmark(cfg);
  double total = 0.0;
  for (const aclr::Event& e : bench.source.dataset.events) {
    total += static_cast<double>(e.posts.size());
    CHECK(e.posts.size() >= 1);
  }
  const double mean = total / 500.0;
  CHECK(mean > 8.0 * 0.8);
  CHECK(mean < 8.0 * 1.2);
}

TEST_CASE("target embeddings live on the rotated, shifted class means") {
  SynthConfig cfg;
  cfg.n_source = 200;
  cfg.n_target = 200;
  cfg.dim = 8;
  cfg.mean_posts = 4.0;
  cfg.sigma = 1.0;
  cfg.class_sep = 1.0;
  cfg.theta_deg = 30.0;
  cfg.delta_norm = 1.0;
  cfg.seed = 9;
  const aclr::SynthBenchmark bench = aclr::generate_benchmark(cfg);

  const double c30 = std::cos(30.0 * M_PI / 180.0);  // 0.866...
  const double s30 = 0.5;
  const double tol = 0.15;

  const Vector s0 = class_mean(bench.source, 0);
  const Vector s1 = class_mean(bench.source, 1);
  CHECK(s0(0) == doctest::Approx(1.0).epsilon(tol));
  CHECK(s1(0) == doctest::Approx(-1.0).epsilon(tol));
  CHECK(std::abs(s0(1)) < tol);
  CHECK(std::abs(s1(1)) < tol);

  const Vector t0 = class_mean(bench.target, 0);
  const Vector t1 = class_mean(bench.target, 1);
  CHECK(std::abs(t0(0) - (c30 + 1.0)) < tol);
  CHECK(std::abs(t0(1) - s30) < tol);
  CHECK(std::abs(t1(0) - (1.0 - c30)) < tol);
  CHECK(std::abs(t1(1) + s30) < tol);
  // Off-plane coordinates carry no structure on either side.
  CHECK(std::abs(t0(5)) < tol);
  CHECK(std::abs(s1(4)) < tol);
}

TEST_CASE("config validation") {
  SynthConfig cfg = small_config();
  CHECK_NOTHROW(aclr::validate(cfg));
  cfg.mean_posts = 0.5;
  CHECK_THROWS_AS(aclr::validate(cfg), aclr::ConfigError);
  cfg = small_config();
  cfg.dim = 1;
  CHECK_THROWS_AS(aclr::validate(cfg), aclr::ConfigError);
  cfg = small_config();
  cfg.sigma = 0.0;
  CHECK_THROWS_AS(aclr::validate(cfg), aclr::ConfigError);
  cfg = small_config();
  cfg.n_source = 1;
  CHECK_THROWS_AS(aclr::validate(cfg), aclr::ConfigError);
  cfg = small_config();
  cfg.max_depth = 1;
  cfg.mean_posts = 18.0;  // a depth-1 tree cannot average 18 posts
  CHECK_THROWS_AS(aclr::validate(cfg), aclr::ConfigError);
}

}  // TEST_SUITE
