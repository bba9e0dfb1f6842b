#include "aclr/losses.hpp"

#include <map>
#include <string>
#include <utility>

namespace aclr {

void validate(const BatchReprs& batch) {
  if (batch.reprs.empty()) throw ContractError("BatchReprs: empty batch");
  if (batch.reprs.size() != batch.labels.size()) {
    throw ContractError("BatchReprs: " + std::to_string(batch.reprs.size()) +
                        " reprs vs " + std::to_string(batch.labels.size()) +
                        " labels");
  }
  const Eigen::Index d = batch.reprs.front().cols();
  for (std::size_t i = 0; i < batch.reprs.size(); ++i) {
    const Tensor& r = batch.reprs[i];
    if (r.rows() != 1 || r.cols() != d) {
      throw DimensionError("BatchReprs: repr " + std::to_string(i) + " is " +
                           std::to_string(r.rows()) + "x" +
                           std::to_string(r.cols()) + ", expected 1x" +
                           std::to_string(d));
    }
    if (r.value.norm() < 1e-12) {
      throw DegenerateVectorError("BatchReprs: repr " + std::to_string(i) +
                                  " has norm below 1e-12");
    }
    if (batch.labels[i] != 0 && batch.labels[i] != 1) {
      throw ContractError("BatchReprs: label " +
                          std::to_string(batch.labels[i]) + " at index " +
                          std::to_string(i));
    }
  }
}

Tensor ce_batch(const std::vector<Tensor>& logits,
                const std::vector<int>& labels) {
  if (logits.empty()) throw ContractError("ce_batch: empty batch");
  if (logits.size() != labels.size()) {
    throw ContractError("ce_batch: " + std::to_string(logits.size()) +
                        " logit rows vs " + std::to_string(labels.size()) +
                        " labels");
  }
  std::vector<Tensor> terms;
  terms.reserve(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    terms.push_back(softmax_ce(logits[i], labels[i]));
  }
  return scale(sum(terms), 1.0 / static_cast<double>(terms.size()));
}

namespace {

void check_tau(double tau) {
  if (!(tau > 0.0)) throw ContractError("scl: temperature must be positive");
}

/// Pairwise cosine/tau tensors with reuse: sim(i, j) is computed once and
/// shared between anchors when symmetric.
class SimCache {
 public:
  SimCache(const std::vector<Tensor>& a, const std::vector<Tensor>& b,
           double tau, bool symmetric)
      : a_(a), b_(b), inv_tau_(1.0 / tau), symmetric_(symmetric) {}

  const Tensor& get(std::size_t i, std::size_t j) {
    auto key = (symmetric_ && j < i) ? std::make_pair(j, i)
                                     : std::make_pair(i, j);
    auto it = cache_.find(key);
    if (it == cache_.end()) {
      Tensor s = scale(cosine_sim(a_[key.first], b_[key.second]), inv_tau_);
      it = cache_.emplace(key, std::move(s)).first;
    }
    return it->second;
  }

 private:
  const std::vector<Tensor>& a_;
  const std::vector<Tensor>& b_;
  double inv_tau_;
  bool symmetric_;
  std::map<std::pair<std::size_t, std::size_t>, Tensor> cache_;
};

}  // namespace

Tensor scl_source(const BatchReprs& batch, double tau) {
  validate(batch);
  check_tau(tau);
  if (batch.role != Role::source) {
    throw ContractError("scl_source: batch role must be source");
  }
  const std::size_t n = batch.reprs.size();
  if (n < 2) {
    throw ContractError("scl_source: need at least 2 elements, got " +
                        std::to_string(n));
  }

  SimCache sims(batch.reprs, batch.reprs, tau, true);
  std::vector<Tensor> anchor_terms;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Tensor> denom;
    std::vector<std::size_t> positives;
    for (std::size_t k = 0; k < n; ++k) {
      if (k == i) continue;
      denom.push_back(sims.get(i, k));
      if (batch.labels[k] == batch.labels[i]) positives.push_back(k);
    }
    if (positives.empty()) continue;  // positive-free anchor contributes 0
    Tensor neg_lse = scale(logsumexp(denom), -1.0);
    std::vector<Tensor> logprobs;
    logprobs.reserve(positives.size());
    for (std::size_t j : positives) {
      logprobs.push_back(add(sims.get(i, j), neg_lse));
    }
    anchor_terms.push_back(
        scale(sum(logprobs), 1.0 / static_cast<double>(positives.size())));
  }
  if (anchor_terms.empty()) return constant(0.0);
  return scale(sum(anchor_terms), -1.0 / static_cast<double>(n));
}

Tensor scl_target(const BatchReprs& target, const BatchReprs& source,
                  double tau) {
  validate(target);
  validate(source);
  check_tau(tau);
  if (target.role != Role::target || source.role != Role::source) {
    throw ContractError("scl_target: expected (target, source) batch roles");
  }
  if (target.reprs.front().cols() != source.reprs.front().cols()) {
    throw DimensionError("scl_target: repr widths disagree: " +
                         std::to_string(target.reprs.front().cols()) +
                         " vs " + std::to_string(source.reprs.front().cols()));
  }

  const std::size_t nt = target.reprs.size();
  const std::size_t ns = source.reprs.size();
  std::size_t class_count[2] = {0, 0};
  for (int y : source.labels) ++class_count[y];

  SimCache sims(target.reprs, source.reprs, tau, false);
  std::vector<Tensor> anchor_terms;
  for (std::size_t i = 0; i < nt; ++i) {
    const int y = target.labels[i];
    if (class_count[y] == 0) continue;  // no positive for this anchor
    std::vector<Tensor> denom;
    denom.reserve(ns);
    for (std::size_t k = 0; k < ns; ++k) denom.push_back(sims.get(i, k));
    Tensor neg_lse = scale(logsumexp(denom), -1.0);
    std::vector<Tensor> logprobs;
    for (std::size_t k = 0; k < ns; ++k) {
      if (source.labels[k] == y) {
        logprobs.push_back(add(sims.get(i, k), neg_lse));
      }
    }
    anchor_terms.push_back(
        scale(sum(logprobs), 1.0 / static_cast<double>(class_count[y])));
  }
  if (anchor_terms.empty()) return constant(0.0);
  return scale(sum(anchor_terms), -1.0 / static_cast<double>(nt));
}

Tensor joint_loss(const Tensor& ce, const Tensor& scl, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ContractError("joint_loss: alpha must lie in [0, 1], got " +
                        std::to_string(alpha));
  }
  if (ce.rows() != 1 || ce.cols() != 1 || scl.rows() != 1 || scl.cols() != 1) {
    throw DimensionError("joint_loss: both terms must be 1x1");
  }
  return add(scale(ce, 1.0 - alpha), scale(scl, alpha));
}

bool has_scl_positives(const std::vector<int>& labels) {
  std::size_t counts[2] = {0, 0};
  for (int y : labels) {
    if (y == 0 || y == 1) ++counts[y];
  }
  return counts[0] >= 2 || counts[1] >= 2;
}

bool has_scl_positives(const std::vector<int>& target_labels,
                       const std::vector<int>& source_labels) {
  bool source_has[2] = {false, false};
  for (int y : source_labels) {
    if (y == 0 || y == 1) source_has[y] = true;
  }
  for (int y : target_labels) {
    if ((y == 0 || y == 1) && source_has[y]) return true;
  }
  return false;
}

}  // namespace aclr
