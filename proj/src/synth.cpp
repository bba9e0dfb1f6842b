#include "aclr/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "aclr/rng.hpp"

namespace aclr {

void validate(const SynthConfig& cfg) {
  if (cfg.n_source < 2 || cfg.n_target < 2) {
    throw ConfigError("SynthConfig: need at least 2 events per dataset");
  }
  if (cfg.dim < 2) throw ConfigError("SynthConfig: dim must be >= 2");
  if (!(cfg.mean_posts >= 1.0)) {
    throw ConfigError("SynthConfig: mean posts per tree must be >= 1");
  }
  if (cfg.max_depth < 1) throw ConfigError("SynthConfig: max_depth must be >= 1");
  if (cfg.fanout < 0.0) throw ConfigError("SynthConfig: fanout must be >= 0");
  if (!(cfg.sigma > 0.0)) throw ConfigError("SynthConfig: sigma must be > 0");
  if (cfg.class_sep < 0.0) {
    throw ConfigError("SynthConfig: class_sep must be >= 0");
  }
  if (cfg.delta_norm < 0.0) {
    throw ConfigError("SynthConfig: delta_norm must be >= 0");
  }
  if (cfg.mean_posts > expected_tree_size(16.0, cfg.max_depth)) {
    throw ConfigError("SynthConfig: mean_posts unreachable under max_depth");
  }
}

double expected_tree_size(double fanout, int max_depth) {
  double total = 0.0, level = 1.0;
  for (int l = 0; l <= max_depth; ++l) {
    total += level;
    level *= fanout;
  }
  return total;
}

double solve_fanout(double mean_posts, int max_depth) {
  if (mean_posts <= 1.0) return 0.0;
  double lo = 0.0, hi = 16.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (expected_tree_size(mid, max_depth) < mean_posts) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

namespace {

/// Poisson sample by inversion of the cdf; lambda is small here so the
/// linear walk is fine. Capped to keep pathological tails out of tests.
int poisson(double lambda, Rng& rng) {
  const double u = rng.uniform();
  double p = std::exp(-lambda);
  double cdf = p;
  int k = 0;
  while (u > cdf && k < 16) {
    ++k;
    p *= lambda / static_cast<double>(k);
    cdf += p;
  }
  return k;
}

std::string post_name(int event_idx, int post_idx) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "e%04d_p%03d", event_idx, post_idx);
  return buf;
}

struct NodeDraft {
  int parent = -1;  // index into the draft list
  int depth = 0;
  double delay = 0.0;
};

/// Branching process capped at max_depth, breadth-first. Child delays add
/// a positive waiting time to the parent's, so chronological order is
/// consistent with the tree.
std::vector<NodeDraft> grow_tree(double fanout, int max_depth, Rng& rng) {
  std::vector<NodeDraft> nodes;
  nodes.push_back(NodeDraft{});
  for (std::size_t i = 0; i < nodes.size() && nodes.size() < 512; ++i) {
    if (nodes[i].depth >= max_depth) continue;
    const int kids = poisson(fanout, rng);
    for (int c = 0; c < kids && nodes.size() < 512; ++c) {
      NodeDraft child;
      child.parent = static_cast<int>(i);
      child.depth = nodes[i].depth + 1;
      child.delay = nodes[i].delay + rng.uniform(30.0, 3600.0);
      nodes.push_back(child);
    }
  }
  return nodes;
}

std::string token_text(int dim, Rng& rng) {
  const int n = 3 + static_cast<int>(rng.below(6));
  std::string text;
  for (int i = 0; i < n; ++i) {
    if (i) text += " ";
    text += "tok" + std::to_string(rng.below(static_cast<std::uint64_t>(
                        std::max(2 * dim, 16))));
  }
  return text;
}

/// One dataset plus embeddings. Target-side transforms (rotation in the
/// (0,1) plane, then translation along axis 0) are applied per post vector.
Corpus generate_side(const SynthConfig& cfg, Role role, int n_events,
                     const std::string& name, std::uint64_t seed) {
  Rng rng(seed);
  const double fanout = cfg.fanout > 0.0
                            ? cfg.fanout
                            : solve_fanout(cfg.mean_posts, cfg.max_depth);
  const double theta = role == Role::target
                           ? cfg.theta_deg * 3.141592653589793238462643 / 180.0
                           : 0.0;
  const double cos_t = std::cos(theta), sin_t = std::sin(theta);
  const double shift = role == Role::target ? cfg.delta_norm : 0.0;

  Corpus corpus;
  corpus.dataset.name = name;
  corpus.dataset.role = role;
  corpus.table.dim = cfg.dim;

  for (int e = 0; e < n_events; ++e) {
    Event event;
    event.id = name + "_e" + std::to_string(e);
    event.label = e % 2;  // alternation keeps the classes balanced within 1
    const double mu0 = (event.label == 1 ? -1.0 : 1.0) * cfg.class_sep;

    const std::vector<NodeDraft> drafts = grow_tree(fanout, cfg.max_depth, rng);
    for (std::size_t i = 0; i < drafts.size(); ++i) {
      Post p;
      p.id = post_name(e, static_cast<int>(i));
      if (drafts[i].parent >= 0) {
        p.parent = post_name(e, drafts[i].parent);
        p.delay_seconds = drafts[i].delay;
      }
      p.text = token_text(cfg.dim, rng);
      event.posts.push_back(std::move(p));

      Vector v(cfg.dim);
      for (int j = 0; j < cfg.dim; ++j) v(j) = cfg.sigma * rng.normal();
      v(0) += mu0;
      if (role == Role::target) {
        const double x0 = v(0), x1 = v(1);
        v(0) = cos_t * x0 - sin_t * x1;
        v(1) = sin_t * x0 + cos_t * x1;
        v(0) += shift;
      }
      corpus.table.vectors.emplace(event.posts.back().id, std::move(v));
    }

    canonicalize_posts(event);
    validate_event(event);
    corpus.dataset.events.push_back(std::move(event));
  }
  return corpus;
}

}  // namespace

SynthBenchmark generate_benchmark(const SynthConfig& cfg) {
  validate(cfg);
  SynthBenchmark bench;
  bench.source = generate_side(cfg, Role::source, cfg.n_source, "src",
                               mix_seed(cfg.seed, 0x50ull));
  bench.target = generate_side(cfg, Role::target, cfg.n_target, "tgt",
                               mix_seed(cfg.seed, 0x7Aull));
  return bench;
}

}  // namespace aclr
