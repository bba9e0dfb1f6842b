#include "aclr/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <utility>

#include "aclr/adversarial.hpp"
#include "aclr/evaluate.hpp"
#include "aclr/format.hpp"
#include "aclr/losses.hpp"

namespace aclr {

const char* to_string(Regime regime) {
  switch (regime) {
    case Regime::aclr:
      return "aclr";
    case Regime::clr:
      return "clr";
    case Regime::ce_only:
      return "ce-only";
    case Regime::target_only:
      return "target-only";
    case Regime::source_only:
      return "source-only";
    case Regime::source_then_finetune:
      return "source-then-finetune";
  }
  return "unknown";
}

const char* to_string(Pairing pairing) {
  return pairing == Pairing::nested ? "nested" : "zip";
}

void validate(const TrainConfig& cfg) {
  if (!(cfg.lr > 0.0)) throw ConfigError("TrainConfig: lr must be positive");
  if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0)) {
    throw ConfigError("TrainConfig: dropout must lie in [0, 1)");
  }
  if (!(cfg.tau > 0.0)) throw ConfigError("TrainConfig: tau must be positive");
  if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) {
    throw ConfigError("TrainConfig: alpha must lie in [0, 1]");
  }
  if (!(cfg.epsilon > 0.0)) {
    throw ConfigError("TrainConfig: epsilon must be positive");
  }
  if (cfg.layers < 1) throw ConfigError("TrainConfig: layers must be >= 1");
  if (cfg.batch_source < 2 || cfg.batch_target < 2) {
    throw ConfigError("TrainConfig: batch sizes must be >= 2");
  }
  if (cfg.max_epochs < 1) {
    throw ConfigError("TrainConfig: max_epochs must be >= 1");
  }
  if (cfg.patience < 1) throw ConfigError("TrainConfig: patience must be >= 1");
  if (cfg.d_hidden < 1 || cfg.d_out < 1) {
    throw ConfigError("TrainConfig: hidden and output widths must be >= 1");
  }
  if (!(cfg.val_fraction >= 0.0 && cfg.val_fraction < 1.0)) {
    throw ConfigError("TrainConfig: val_fraction must lie in [0, 1)");
  }
  if (cfg.weight_decay < 0.0) {
    throw ConfigError("TrainConfig: weight_decay must be >= 0");
  }
}

std::vector<std::vector<int>> make_batches(const std::vector<int>& labels,
                                           int batch_size, std::uint64_t seed,
                                           int epoch) {
  const int n = static_cast<int>(labels.size());
  if (n < 2) {
    throw ContractError("make_batches: need at least 2 events, got " +
                        std::to_string(n));
  }
  if (batch_size < 2) {
    throw ContractError("make_batches: batch size must be >= 2, got " +
                        std::to_string(batch_size));
  }
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng rng(mix_seed(seed, static_cast<std::uint64_t>(epoch)));
  rng.shuffle(order);

  std::vector<std::vector<int>> batches;
  for (int start = 0; start < n; start += batch_size) {
    const int stop = std::min(n, start + batch_size);
    batches.emplace_back(order.begin() + start, order.begin() + stop);
  }

  if (batches.size() >= 2 &&
      static_cast<int>(batches.back().size()) < batch_size) {
    const auto& tail = batches.back();
    bool classes[2] = {false, false};
    for (int i : tail) classes[labels[static_cast<std::size_t>(i)]] = true;
    const bool keep = tail.size() >= 2 && classes[0] && classes[1];
    if (!keep) {
      auto& prev = batches[batches.size() - 2];
      prev.insert(prev.end(), tail.begin(), tail.end());
      batches.pop_back();
    }
  }
  return batches;
}

std::vector<std::vector<int>> make_batches(const Dataset& dataset,
                                           int batch_size, std::uint64_t seed,
                                           int epoch) {
  std::vector<int> labels;
  labels.reserve(dataset.events.size());
  for (const Event& e : dataset.events) {
    if (e.label != 0 && e.label != 1) {
      throw ContractError("make_batches: event " + e.id + " has label " +
                          std::to_string(e.label));
    }
    labels.push_back(e.label);
  }
  return make_batches(labels, batch_size, seed, epoch);
}

void write_history_csv(const std::string& path, const TrainHistory& history) {
  std::ofstream out(path);
  if (!out) throw LoadError("cannot open " + path + " for writing");
  out << "epoch,step,loss_source,loss_target,loss,val_macro_f1\n";
  for (const StepRecord& r : history.steps) {
    out << r.epoch << "," << r.step << "," << fmt_double(r.loss_source) << ","
        << fmt_double(r.loss_target) << "," << fmt_double(r.loss) << ","
        << fmt_double(r.val_macro_f1) << "\n";
  }
  if (!out) throw LoadError("failed writing " + path);
}

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr double kReprFloor = 1e-12;

std::vector<int> labels_of(const std::vector<EncodedEvent>& events) {
  std::vector<int> labels;
  labels.reserve(events.size());
  for (const EncodedEvent& e : events) labels.push_back(e.label);
  return labels;
}

/// Registers each distinct warning once.
struct WarningSink {
  TrainHistory* hist;
  std::set<std::string> seen;

  void warn(const std::string& msg) {
    if (!seen.insert(msg).second) return;
    hist->warnings.push_back(msg);
    std::cerr << "warning: " << msg << "\n";
  }
};

struct BatchForward {
  std::vector<Tensor> reprs;
  std::vector<Tensor> logits;
  std::vector<int> labels;
};

BatchForward forward_batch(const std::vector<EncodedEvent>& events,
                           const std::vector<int>& batch,
                           const TapedParams& tp, double dropout, Rng& rng,
                           Tape& tape) {
  BatchForward out;
  out.reprs.reserve(batch.size());
  out.logits.reserve(batch.size());
  out.labels.reserve(batch.size());
  for (int idx : batch) {
    const EncodedEvent& e = events[static_cast<std::size_t>(idx)];
    EventRepr r =
        forward(e.x, e.td, e.bu, tp, Mode::train, dropout, &rng, &tape);
    out.reprs.push_back(std::move(r.o));
    out.logits.push_back(std::move(r.logits));
    out.labels.push_back(e.label);
  }
  return out;
}

/// Drops representations too small for cosine similarity. Returns the kept
/// subset as a BatchReprs with the given role.
BatchReprs scl_eligible(const BatchForward& fwd, Role role, WarningSink& sink,
                        const char* side) {
  BatchReprs out;
  out.role = role;
  for (std::size_t i = 0; i < fwd.reprs.size(); ++i) {
    if (fwd.reprs[i].value.norm() < kReprFloor) {
      sink.warn(std::string(side) +
                " batch: representation with near-zero norm left out of the "
                "contrastive term");
      continue;
    }
    out.reprs.push_back(fwd.reprs[i]);
    out.labels.push_back(fwd.labels[i]);
  }
  return out;
}

/// All trainable matrices of a parameter set, in leaf-recording order.
std::vector<Matrix*> param_list(ModelParams& p) {
  std::vector<Matrix*> list;
  for (Matrix& w : p.w_td) list.push_back(&w);
  for (Matrix& w : p.w_bu) list.push_back(&w);
  list.push_back(&p.w_c);
  list.push_back(&p.b_c);
  return list;
}

std::vector<const Tensor*> leaf_list(const TapedParams& tp) {
  std::vector<const Tensor*> list;
  for (const Tensor& w : tp.w_td) list.push_back(&w);
  for (const Tensor& w : tp.w_bu) list.push_back(&w);
  list.push_back(&tp.w_c);
  list.push_back(&tp.b_c);
  return list;
}

struct PhaseSpec {
  const std::vector<EncodedEvent>* source = nullptr;
  const std::vector<EncodedEvent>* target = nullptr;
  double alpha = 0.0;
  bool adversarial = false;
  int tag = 0;  // decorrelates rng streams between phases
};

/// Runs one early-stopped training phase, mutating `params` to the
/// best-validation snapshot (final parameters when `val` is empty).
/// Returns the number of epochs run.
int run_phase(const PhaseSpec& spec, const TrainConfig& cfg,
              const std::vector<EncodedEvent>& val, ModelParams& params,
              TrainHistory& hist, int epoch_offset, WarningSink& sink) {
  std::vector<Matrix*> plist = param_list(params);
  std::vector<AdamState> states;
  states.reserve(plist.size());
  for (Matrix* m : plist) states.push_back(make_adam_state(*m));

  const std::vector<int> src_labels =
      spec.source ? labels_of(*spec.source) : std::vector<int>{};
  const std::vector<int> tgt_labels =
      spec.target ? labels_of(*spec.target) : std::vector<int>{};

  Rng drop_rng(mix_seed(cfg.seed, 0xD60ull + static_cast<std::uint64_t>(
                                                 spec.tag)));

  ModelParams best = params;
  double best_f1 = -1.0;
  double best_ce = std::numeric_limits<double>::infinity();
  int best_epoch = epoch_offset;
  int bad_epochs = 0;
  int step = hist.steps.empty() ? 0 : hist.steps.back().step;
  int epochs_run = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    epochs_run = epoch;
    std::vector<std::vector<int>> sb, tb;
    if (spec.source) {
      sb = make_batches(src_labels, cfg.batch_source,
                        mix_seed(cfg.seed, 0x50Cull + static_cast<std::uint64_t>(
                                               spec.tag)),
                        epoch);
    }
    if (spec.target) {
      tb = make_batches(tgt_labels, cfg.batch_target,
                        mix_seed(cfg.seed, 0x7A6ull + static_cast<std::uint64_t>(
                                               spec.tag)),
                        epoch);
    }

    // Batch pairing: (source batch, target batch) per optimizer step.
    std::vector<std::pair<int, int>> pairs;
    if (spec.source && spec.target) {
      if (cfg.pairing == Pairing::nested) {
        for (std::size_t t = 0; t < tb.size(); ++t) {
          for (std::size_t s = 0; s < sb.size(); ++s) {
            pairs.emplace_back(static_cast<int>(s), static_cast<int>(t));
          }
        }
      } else {
        const std::size_t m = std::max(sb.size(), tb.size());
        for (std::size_t i = 0; i < m; ++i) {
          pairs.emplace_back(static_cast<int>(i % sb.size()),
                             static_cast<int>(i % tb.size()));
        }
      }
    } else if (spec.source) {
      for (std::size_t s = 0; s < sb.size(); ++s) {
        pairs.emplace_back(static_cast<int>(s), -1);
      }
    } else {
      for (std::size_t t = 0; t < tb.size(); ++t) {
        pairs.emplace_back(-1, static_cast<int>(t));
      }
    }

    for (const auto& [si, ti] : pairs) {
      Tape tape;
      TapedParams tp = record_params(&tape, params);

      Tensor loss_s, loss_t;
      double ls = kNan, lt = kNan;
      BatchForward src_fwd, tgt_fwd;

      if (si >= 0) {
        src_fwd = forward_batch(*spec.source, sb[static_cast<std::size_t>(si)],
                                tp, cfg.dropout, drop_rng, tape);
        Tensor ce = ce_batch(src_fwd.logits, src_fwd.labels);
        Tensor scl = constant(0.0);
        if (spec.alpha > 0.0) {
          BatchReprs batch = scl_eligible(src_fwd, Role::source, sink, "source");
          if (batch.reprs.size() >= 2 && has_scl_positives(batch.labels)) {
            scl = scl_source(batch, cfg.tau);
          } else {
            sink.warn(
                "source batch has no contrastive positives; trained on CE "
                "alone");
          }
        }
        loss_s = joint_loss(ce, scl, spec.alpha);
        ls = loss_s.scalar();
      }

      if (ti >= 0) {
        tgt_fwd = forward_batch(*spec.target, tb[static_cast<std::size_t>(ti)],
                                tp, cfg.dropout, drop_rng, tape);
        std::vector<Tensor> ce_terms;
        std::vector<Tensor> adv_reprs;
        ce_terms.reserve(tgt_fwd.reprs.size());
        for (std::size_t j = 0; j < tgt_fwd.reprs.size(); ++j) {
          if (spec.adversarial) {
            AdversarialCe adv = adversarial_ce(tgt_fwd.reprs[j],
                                               tgt_fwd.labels[j], tp,
                                               cfg.epsilon);
            ce_terms.push_back(adv.loss);
            if (cfg.adv_in_scl) adv_reprs.push_back(adv.o_adv);
          } else {
            ce_terms.push_back(softmax_ce(tgt_fwd.logits[j], tgt_fwd.labels[j]));
          }
        }
        Tensor ce = scale(sum(ce_terms),
                          1.0 / static_cast<double>(ce_terms.size()));
        Tensor scl = constant(0.0);
        if (spec.alpha > 0.0 && si >= 0) {
          BatchReprs anchors = scl_eligible(tgt_fwd, Role::target, sink,
                                            "target");
          if (cfg.adv_in_scl) {
            for (std::size_t j = 0; j < adv_reprs.size(); ++j) {
              if (adv_reprs[j].value.norm() >= kReprFloor) {
                anchors.reprs.push_back(adv_reprs[j]);
                anchors.labels.push_back(tgt_fwd.labels[j]);
              }
            }
          }
          BatchReprs refs = scl_eligible(src_fwd, Role::source, sink, "source");
          if (!anchors.reprs.empty() && !refs.reprs.empty() &&
              has_scl_positives(anchors.labels, refs.labels)) {
            scl = scl_target(anchors, refs, cfg.tau);
          } else {
            sink.warn(
                "target batch has no cross-domain positives; trained on CE "
                "alone");
          }
        }
        loss_t = joint_loss(ce, scl, spec.alpha);
        lt = loss_t.scalar();
      }

      Tensor total;
      if (si >= 0 && ti >= 0) {
        total = scale(add(loss_s, loss_t), 0.5);
      } else if (si >= 0) {
        total = loss_s;
      } else {
        total = loss_t;
      }

      tape.backward(total);
      std::vector<const Tensor*> leaves = leaf_list(tp);
      for (std::size_t i = 0; i < plist.size(); ++i) {
        adam_step(*plist[i], tape.grad(*leaves[i]), states[i], cfg.lr, 0.9,
                  0.999, 1e-8, cfg.weight_decay);
      }

      StepRecord rec;
      rec.epoch = epoch_offset + epoch;
      rec.step = ++step;
      rec.loss_source = ls;
      rec.loss_target = lt;
      rec.loss = total.scalar();
      rec.val_macro_f1 = kNan;
      hist.steps.push_back(rec);
    }

    if (!val.empty()) {
      const Metrics m = evaluate(params, val);
      const double vce = mean_ce(params, val);
      if (!hist.steps.empty()) hist.steps.back().val_macro_f1 = m.macro_f1;
      const bool improved =
          m.macro_f1 > best_f1 || (m.macro_f1 == best_f1 && vce < best_ce);
      if (improved) {
        best_f1 = m.macro_f1;
        best_ce = vce;
        best_epoch = epoch_offset + epoch;
        best = params;
        bad_epochs = 0;
      } else if (++bad_epochs >= cfg.patience) {
        break;
      }
    }
  }

  if (!val.empty()) {
    params = best;
    hist.best_epoch = best_epoch;
    hist.best_val_f1 = best_f1;
  } else {
    hist.best_epoch = epoch_offset + epochs_run;
    hist.best_val_f1 = kNan;
  }
  return epochs_run;
}

/// Stratified validation slice: per class, round(val_fraction * count)
/// events, capped so at least one training event per class survives.
void split_validation(const std::vector<EncodedEvent>& all,
                      const TrainConfig& cfg,
                      std::vector<EncodedEvent>& train,
                      std::vector<EncodedEvent>& val) {
  std::vector<int> by_class[2];
  for (std::size_t i = 0; i < all.size(); ++i) {
    by_class[all[i].label].push_back(static_cast<int>(i));
  }
  Rng rng(mix_seed(cfg.seed, 0x7A1Dull));
  std::set<int> val_idx;
  for (int c = 0; c < 2; ++c) {
    rng.shuffle(by_class[c]);
    const long n_c = static_cast<long>(by_class[c].size());
    long take = std::llround(cfg.val_fraction * static_cast<double>(n_c));
    take = std::min(take, n_c - 1);
    for (long i = 0; i < take; ++i) {
      val_idx.insert(by_class[c][static_cast<std::size_t>(i)]);
    }
  }
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (val_idx.count(static_cast<int>(i))) {
      val.push_back(all[i]);
    } else {
      train.push_back(all[i]);
    }
  }
}

}  // namespace

TrainResult train(const Corpus& source, const Corpus& target,
                  const TrainConfig& cfg) {
  validate(cfg);
  const bool use_source = cfg.regime != Regime::target_only;

  if (source.table.dim != target.table.dim) {
    throw DimensionError("train: embedding dims disagree: source " +
                         std::to_string(source.table.dim) + ", target " +
                         std::to_string(target.table.dim));
  }

  std::vector<EncodedEvent> src_events;
  if (use_source) src_events = encode_corpus(source);
  std::vector<EncodedEvent> tgt_all = encode_corpus(target);

  // Validation always comes from the target side: that is where every
  // regime is ultimately judged, whether or not it trains there.
  std::vector<EncodedEvent> tgt_train, val;
  split_validation(tgt_all, cfg, tgt_train, val);

  ModelDims dims;
  dims.d_in = source.table.dim;
  dims.d_hidden = cfg.d_hidden;
  dims.d_out = cfg.d_out;
  dims.layers = cfg.layers;
  dims.classes = 2;
  ModelParams params = init_params(dims, mix_seed(cfg.seed, 0xA11ull));

  TrainResult result;
  WarningSink sink{&result.history, {}};

  const double alpha =
      (cfg.regime == Regime::aclr || cfg.regime == Regime::clr) ? cfg.alpha
                                                                : 0.0;

  switch (cfg.regime) {
    case Regime::aclr:
    case Regime::clr:
    case Regime::ce_only: {
      PhaseSpec spec{&src_events, &tgt_train, alpha,
                     cfg.regime == Regime::aclr, 0};
      run_phase(spec, cfg, val, params, result.history, 0, sink);
      break;
    }
    case Regime::target_only: {
      PhaseSpec spec{nullptr, &tgt_train, 0.0, false, 0};
      run_phase(spec, cfg, val, params, result.history, 0, sink);
      break;
    }
    case Regime::source_only: {
      PhaseSpec spec{&src_events, nullptr, 0.0, false, 0};
      run_phase(spec, cfg, val, params, result.history, 0, sink);
      break;
    }
    case Regime::source_then_finetune: {
      PhaseSpec pre{&src_events, nullptr, 0.0, false, 0};
      const int ran = run_phase(pre, cfg, val, params, result.history, 0, sink);
      PhaseSpec fine{nullptr, &tgt_train, 0.0, false, 1};
      run_phase(fine, cfg, val, params, result.history, ran, sink);
      break;
    }
  }

  result.params = std::move(params);
  return result;
}

}  // namespace aclr
