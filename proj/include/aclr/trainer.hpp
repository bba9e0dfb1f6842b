#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aclr/data.hpp"
#include "aclr/model.hpp"
#include "aclr/optim.hpp"

namespace aclr {

/// Ablation regimes. aclr = full method; clr drops the adversarial term;
/// ce_only trains both domains on plain CE; target_only / source_only are
/// the single-domain baselines; source_then_finetune pretrains on source
/// CE, then fine-tunes on target CE.
enum class Regime {
  aclr,
  clr,
  ce_only,
  target_only,
  source_only,
  source_then_finetune,
};

/// How source and target batches are paired into steps. nested follows the
/// double loop (every source batch under every target batch); zip walks
/// both lists in lockstep, cycling the shorter one.
enum class Pairing { nested, zip };

const char* to_string(Regime regime);
const char* to_string(Pairing pairing);

struct TrainConfig {
  double lr = 1e-4;
  double dropout = 0.2;
  double tau = 0.1;
  double alpha = 0.5;
  double epsilon = 1.5;
  int layers = 2;
  int batch_source = 32;
  int batch_target = 32;
  int max_epochs = 200;
  int patience = 10;
  std::uint64_t seed = 1;
  Regime regime = Regime::aclr;
  Pairing pairing = Pairing::nested;

  int d_hidden = 512;
  int d_out = 128;
  double val_fraction = 0.1;
  double weight_decay = 0.0;
  /// Also feed adversarial vectors as extra anchors of the cross-domain
  /// contrastive term. Off by default: the training algorithm names only
  /// the CE term for augmented samples.
  bool adv_in_scl = false;
};

void validate(const TrainConfig& cfg);

/// One row per optimizer step. loss_source / loss_target are NaN for
/// regimes that do not touch that side; val_macro_f1 is NaN except on each
/// epoch's closing step.
struct StepRecord {
  int epoch = 0;
  int step = 0;
  double loss_source = 0.0;
  double loss_target = 0.0;
  double loss = 0.0;
  double val_macro_f1 = 0.0;
};

struct TrainHistory {
  std::vector<StepRecord> steps;
  int best_epoch = 0;
  double best_val_f1 = 0.0;
  std::vector<std::string> warnings;
};

void write_history_csv(const std::string& path, const TrainHistory& history);

/// Deterministic shuffle keyed by (seed, epoch), cut into batches. A short
/// final batch survives only if it has >= 2 events and both classes;
/// otherwise it is merged into the previous batch (or kept as the sole
/// batch when there is no previous one). Returned values are indices into
/// dataset.events.
std::vector<std::vector<int>> make_batches(const Dataset& dataset,
                                           int batch_size, std::uint64_t seed,
                                           int epoch);

/// Index-level form used on pre-encoded subsets.
std::vector<std::vector<int>> make_batches(const std::vector<int>& labels,
                                           int batch_size, std::uint64_t seed,
                                           int epoch);

struct TrainResult {
  ModelParams params;
  TrainHistory history;
};

/// Paired mini-batch training. Per step: forward every event of one source
/// and one target batch, build L^s and L^t as (1-alpha)*CE + alpha*SCL
/// (CE adversarially augmented on the target side under the aclr regime),
/// and take one Adam step on (L^s + L^t) / 2. Early stopping watches
/// macro-F1 on a stratified 10% slice of the target training events (ties
/// broken by validation CE); the returned parameters are the best-epoch
/// snapshot, never a later one.
TrainResult train(const Corpus& source, const Corpus& target,
                  const TrainConfig& cfg);

}  // namespace aclr
