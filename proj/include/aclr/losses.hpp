#pragma once

#include <vector>

#include "aclr/data.hpp"
#include "aclr/tensor.hpp"

namespace aclr {

/// Event representations of one mini-batch. reprs[i] is a 1 x d row with
/// positive norm; labels[i] in {0, 1}; role says which domain produced it.
struct BatchReprs {
  std::vector<Tensor> reprs;
  std::vector<int> labels;
  Role role = Role::source;
};

void validate(const BatchReprs& batch);

/// Mean cross-entropy over per-event logit rows.
Tensor ce_batch(const std::vector<Tensor>& logits,
                const std::vector<int>& labels);

/// Supervised contrastive loss inside the source batch. Anchor i is
/// contrasted against every other element; positives are the other
/// same-label elements. Anchors with no positive contribute zero, and the
/// average is over the full batch size regardless.
Tensor scl_source(const BatchReprs& batch, double tau);

/// Cross-domain form: target anchors against all source elements.
/// Positives are the source elements sharing the anchor's label; the
/// denominator sum runs over the whole source batch. Anchors with no
/// positive contribute zero; the average is over the full target count.
Tensor scl_target(const BatchReprs& target, const BatchReprs& source,
                  double tau);

/// (1 - alpha) * ce + alpha * scl. At alpha 0 or 1 the result equals the
/// surviving term exactly.
Tensor joint_loss(const Tensor& ce, const Tensor& scl, double alpha);

/// True when at least one anchor would have a positive, i.e. the batch
/// contributes a nonzero contrastive term.
bool has_scl_positives(const std::vector<int>& labels);
bool has_scl_positives(const std::vector<int>& target_labels,
                       const std::vector<int>& source_labels);

}  // namespace aclr
