#pragma once

#include <string>
#include <utility>
#include <vector>

#include "aclr/data.hpp"
#include "aclr/model.hpp"
#include "aclr/trainer.hpp"

namespace aclr {

/// Confusion counts for one class treated as the positive.
struct ClassCounts {
  long tp = 0;
  long fp = 0;
  long fn = 0;
  long tn = 0;
};

/// accuracy, per-class F1 and their unweighted mean. F1 of an empty class
/// (no predictions and no members) is 0 by convention.
struct Metrics {
  long n = 0;
  double accuracy = 0.0;
  double f1_rumor = 0.0;
  double f1_nonrumor = 0.0;
  double macro_f1 = 0.0;
  ClassCounts counts[2];  // indexed by class label
};

Metrics metrics_from_predictions(const std::vector<int>& predictions,
                                 const std::vector<int>& labels);

/// Argmax class of the logits; ties resolve to the lower index.
int predict(const ModelParams& params, const EncodedEvent& event);

Metrics evaluate(const ModelParams& params,
                 const std::vector<EncodedEvent>& events);
Metrics evaluate(const ModelParams& params, const Corpus& corpus);

/// Mean eval-mode cross-entropy; early stopping's tie-breaker.
double mean_ce(const ModelParams& params,
               const std::vector<EncodedEvent>& events);

/// Inverted k-fold plan: fold i supplies the TRAINING events, the other
/// k-1 folds are the test set. Train/test ids are disjoint and cover the
/// dataset in every fold.
struct CvFoldPlan {
  int fold = 0;
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
};

std::vector<CvFoldPlan> plan_inverted_cv(const Dataset& target, int k,
                                         std::uint64_t seed);

struct FoldResult {
  int fold = 0;
  long n_train = 0;
  long n_test = 0;
  Metrics metrics;
};

struct CvResult {
  int k = 0;
  std::vector<FoldResult> folds;
  Metrics mean;    // field-wise mean over folds (counts left zero)
  Metrics stddev;  // field-wise sample standard deviation (n-1)
};

/// Trains once per fold (fold i as the small training split) and evaluates
/// on the remaining folds. Per-fold seeds are derived from cfg.seed, so the
/// whole run is reproducible.
CvResult cross_validate(const Corpus& source, const Corpus& target,
                        const TrainConfig& cfg, int k = 5);

void write_cv_csv(const std::string& path, const CvResult& result);

/// Metrics over the corpus truncated at each checkpoint. Checkpoints must
/// share one kind and increase strictly; an infinite value means full data.
struct EarlyCurve {
  std::vector<std::pair<Checkpoint, Metrics>> points;
};

EarlyCurve early_detection_curve(const ModelParams& params,
                                 const Corpus& corpus,
                                 const std::vector<Checkpoint>& checkpoints);

void write_early_csv(const std::string& path, const EarlyCurve& curve);

/// 1, 5, 10, 20, 50, 100 posts, then no cutoff.
std::vector<Checkpoint> default_checkpoints();

/// Top-2 principal directions by power iteration with deflation
/// (tolerance 1e-9). Input rows are observations; centering is internal.
struct PcaResult {
  Vector pc1;
  Vector pc2;
  double var1 = 0.0;
  double var2 = 0.0;
};

PcaResult pca_top2(const Matrix& data);

/// Event-level representations plus their 2-D PCA projection for
/// visualization. With fewer than 3 events the projection is left empty.
struct FeatureRow {
  std::string id;
  int label = 0;
  Vector o;
  double pca_x = 0.0;
  double pca_y = 0.0;
};

struct FeatureExport {
  std::vector<FeatureRow> rows;
  bool pca_valid = false;
  PcaResult pca;
};

FeatureExport export_features(const ModelParams& params, const Corpus& corpus);

void write_features_csv(const std::string& path, const FeatureExport& fx);

}  // namespace aclr
