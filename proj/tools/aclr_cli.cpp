// Command-line front end: synthetic benchmark generation, training under
// the ablation regimes, inverted k-fold cross-validation, early-detection
// curves, feature export, and hyperparameter sweeps. Every run writes a
// manifest (resolved config + input hashes) before doing real work.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "aclr/data.hpp"
#include "aclr/evaluate.hpp"
#include "aclr/format.hpp"
#include "aclr/manifest.hpp"
#include "aclr/model.hpp"
#include "aclr/synth.hpp"
#include "aclr/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string resolve_out_dir(const std::string& flag_value,
                            const std::string& subcommand) {
  fs::path dir;
  if (!flag_value.empty()) {
    dir = flag_value;
  } else if (const char* env = std::getenv("ACLR_OUT_DIR")) {
    dir = fs::path(env) / subcommand;
  } else {
    dir = fs::path("aclr_out") / subcommand;
  }
  fs::create_directories(dir);
  return dir.string();
}

// ---- data plumbing --------------------------------------------------------

struct CorpusArgs {
  std::string events_path;
  std::string embeddings_path;
};

struct DataArgs {
  CorpusArgs source;
  CorpusArgs target;
  int hash_dim = 0;
};

void add_target_options(CLI::App* cmd, DataArgs& args) {
  cmd->add_option("--target-events", args.target.events_path,
                  "Target events JSONL")
      ->required();
  cmd->add_option("--target-embeddings", args.target.embeddings_path,
                  "Target embeddings JSONL");
  cmd->add_option("--hash-dim", args.hash_dim,
                  "Embed post text by hashed bag-of-words of this width "
                  "instead of reading embedding files");
}

void add_data_options(CLI::App* cmd, DataArgs& args) {
  cmd->add_option("--source-events", args.source.events_path,
                  "Source events JSONL")
      ->required();
  cmd->add_option("--source-embeddings", args.source.embeddings_path,
                  "Source embeddings JSONL");
  add_target_options(cmd, args);
}

aclr::Corpus load_corpus(const CorpusArgs& args, const std::string& name,
                         aclr::Role role, int hash_dim) {
  aclr::Corpus corpus;
  corpus.dataset = aclr::load_dataset(args.events_path, name, role);
  if (!args.embeddings_path.empty() && hash_dim > 0) {
    throw CLI::ValidationError(
        name, "give an embeddings file or --hash-dim, not both");
  }
  if (!args.embeddings_path.empty()) {
    corpus.table = aclr::load_embeddings(args.embeddings_path);
  } else if (hash_dim > 0) {
    corpus.table =
        aclr::build_table(corpus.dataset, aclr::HashingEmbedder{hash_dim});
  } else {
    throw CLI::ValidationError(
        name, "needs either an embeddings file or --hash-dim");
  }
  return corpus;
}

void hash_inputs(const DataArgs& args, bool with_source,
                 aclr::RunManifest& manifest) {
  auto put = [&](const std::string& path) {
    if (!path.empty()) {
      manifest.inputs.emplace_back(path, aclr::fnv1a64_file(path));
    }
  };
  if (with_source) {
    put(args.source.events_path);
    put(args.source.embeddings_path);
  }
  put(args.target.events_path);
  put(args.target.embeddings_path);
}

// ---- training config flags -------------------------------------------------

struct TrainFlags {
  aclr::TrainConfig cfg;
  std::string regime = "aclr";
  std::string pairing = "nested";
  CLI::Option* alpha_opt = nullptr;
  CLI::Option* epsilon_opt = nullptr;
};

void add_train_options(CLI::App* cmd, TrainFlags& tf) {
  aclr::TrainConfig& cfg = tf.cfg;
  cmd->add_option("--lr", cfg.lr, "Learning rate")->capture_default_str();
  cmd->add_option("--dropout", cfg.dropout, "Dropout after the first layer")
      ->capture_default_str();
  cmd->add_option("--tau", cfg.tau, "Contrastive temperature")
      ->capture_default_str();
  tf.alpha_opt = cmd->add_option("--alpha", cfg.alpha,
                                 "CE/SCL mixing weight (SCL share)")
                     ->capture_default_str();
  tf.epsilon_opt =
      cmd->add_option("--epsilon", cfg.epsilon, "Adversarial perturbation norm")
          ->capture_default_str();
  cmd->add_option("--layers", cfg.layers, "Graph layers per direction")
      ->capture_default_str();
  cmd->add_option("--batch-source", cfg.batch_source, "Source batch size")
      ->capture_default_str();
  cmd->add_option("--batch-target", cfg.batch_target, "Target batch size")
      ->capture_default_str();
  cmd->add_option("--max-epochs", cfg.max_epochs, "Epoch cap")
      ->capture_default_str();
  cmd->add_option("--patience", cfg.patience, "Early-stopping patience")
      ->capture_default_str();
  cmd->add_option("--seed", cfg.seed, "Run seed")->capture_default_str();
  cmd->add_option("--hidden", cfg.d_hidden, "Hidden width")
      ->capture_default_str();
  cmd->add_option("--out-dim", cfg.d_out, "Per-direction output width")
      ->capture_default_str();
  cmd->add_option("--val-fraction", cfg.val_fraction,
                  "Share of target training events held out for early "
                  "stopping")
      ->capture_default_str();
  cmd->add_option("--weight-decay", cfg.weight_decay,
                  "Decoupled weight decay")
      ->capture_default_str();
  cmd->add_flag("--adv-in-scl", cfg.adv_in_scl,
                "Feed adversarial vectors into the cross-domain contrastive "
                "term too");
  cmd->add_option("--regime", tf.regime,
                  "aclr | clr | ce-only | target-only | source-only | "
                  "source-then-finetune")
      ->capture_default_str();
  cmd->add_option("--pairing", tf.pairing, "nested | zip")
      ->capture_default_str();
}

aclr::Regime parse_regime(const std::string& s) {
  if (s == "aclr") return aclr::Regime::aclr;
  if (s == "clr") return aclr::Regime::clr;
  if (s == "ce-only") return aclr::Regime::ce_only;
  if (s == "target-only") return aclr::Regime::target_only;
  if (s == "source-only") return aclr::Regime::source_only;
  if (s == "source-then-finetune") return aclr::Regime::source_then_finetune;
  throw CLI::ValidationError("--regime", "unknown regime '" + s + "'");
}

aclr::Pairing parse_pairing(const std::string& s) {
  if (s == "nested") return aclr::Pairing::nested;
  if (s == "zip") return aclr::Pairing::zip;
  throw CLI::ValidationError("--pairing", "unknown pairing '" + s + "'");
}

/// Rejects flag combinations that contradict the regime: alpha is pinned to
/// 0 outside the contrastive regimes, epsilon only exists under aclr.
void finalize_train_config(TrainFlags& tf) {
  tf.cfg.regime = parse_regime(tf.regime);
  tf.cfg.pairing = parse_pairing(tf.pairing);
  const bool contrastive = tf.cfg.regime == aclr::Regime::aclr ||
                           tf.cfg.regime == aclr::Regime::clr;
  if (!contrastive && tf.alpha_opt->count() > 0 && tf.cfg.alpha != 0.0) {
    throw CLI::ValidationError(
        "--alpha", std::string("regime ") + aclr::to_string(tf.cfg.regime) +
                       " fixes alpha to 0");
  }
  if (tf.cfg.regime != aclr::Regime::aclr && tf.epsilon_opt->count() > 0) {
    throw CLI::ValidationError(
        "--epsilon", std::string("regime ") + aclr::to_string(tf.cfg.regime) +
                         " has no adversarial term");
  }
  aclr::validate(tf.cfg);
}

ordered_json train_config_json(const aclr::TrainConfig& cfg) {
  ordered_json j;
  j["regime"] = aclr::to_string(cfg.regime);
  j["pairing"] = aclr::to_string(cfg.pairing);
  j["lr"] = cfg.lr;
  j["dropout"] = cfg.dropout;
  j["tau"] = cfg.tau;
  j["alpha"] = cfg.alpha;
  j["epsilon"] = cfg.epsilon;
  j["layers"] = cfg.layers;
  j["batch_source"] = cfg.batch_source;
  j["batch_target"] = cfg.batch_target;
  j["max_epochs"] = cfg.max_epochs;
  j["patience"] = cfg.patience;
  j["seed"] = cfg.seed;
  j["hidden"] = cfg.d_hidden;
  j["out_dim"] = cfg.d_out;
  j["val_fraction"] = cfg.val_fraction;
  j["weight_decay"] = cfg.weight_decay;
  j["adv_in_scl"] = cfg.adv_in_scl;
  return j;
}

// ---- subcommand bodies ------------------------------------------------------

int run_synth(const aclr::SynthConfig& cfg, const std::string& out_flag) {
  const std::string dir = resolve_out_dir(out_flag, "synth");
  const std::string src_events = (fs::path(dir) / "source_events.jsonl").string();
  const std::string src_emb =
      (fs::path(dir) / "source_embeddings.jsonl").string();
  const std::string tgt_events = (fs::path(dir) / "target_events.jsonl").string();
  const std::string tgt_emb =
      (fs::path(dir) / "target_embeddings.jsonl").string();

  aclr::RunManifest manifest;
  manifest.subcommand = "synth";
  manifest.seed = cfg.seed;
  ordered_json j;
  j["n_source"] = cfg.n_source;
  j["n_target"] = cfg.n_target;
  j["dim"] = cfg.dim;
  j["mean_posts"] = cfg.mean_posts;
  j["max_depth"] = cfg.max_depth;
  j["fanout"] = cfg.fanout;
  j["class_sep"] = cfg.class_sep;
  j["theta_deg"] = cfg.theta_deg;
  j["delta_norm"] = cfg.delta_norm;
  j["sigma"] = cfg.sigma;
  j["seed"] = cfg.seed;
  manifest.config_json = j.dump();
  manifest.outputs = {src_events, src_emb, tgt_events, tgt_emb};
  aclr::write_manifest((fs::path(dir) / "manifest.json").string(), manifest);

  const aclr::SynthBenchmark bench = aclr::generate_benchmark(cfg);
  aclr::save_dataset(src_events, bench.source.dataset);
  aclr::save_embeddings(src_emb, bench.source.table);
  aclr::save_dataset(tgt_events, bench.target.dataset);
  aclr::save_embeddings(tgt_emb, bench.target.table);
  std::cout << "wrote " << dir << "\n";
  return 0;
}

int run_train(const DataArgs& data, TrainFlags& tf,
              const std::string& out_flag) {
  finalize_train_config(tf);
  const std::string dir = resolve_out_dir(out_flag, "train");
  const std::string history_path = (fs::path(dir) / "history.csv").string();
  const std::string model_path = (fs::path(dir) / "model.json").string();

  aclr::RunManifest manifest;
  manifest.subcommand = "train";
  manifest.seed = tf.cfg.seed;
  manifest.config_json = train_config_json(tf.cfg).dump();
  hash_inputs(data, true, manifest);
  manifest.outputs = {history_path, model_path};
  aclr::write_manifest((fs::path(dir) / "manifest.json").string(), manifest);

  const aclr::Corpus source =
      load_corpus(data.source, "source", aclr::Role::source, data.hash_dim);
  const aclr::Corpus target =
      load_corpus(data.target, "target", aclr::Role::target, data.hash_dim);
  const aclr::TrainResult result = aclr::train(source, target, tf.cfg);
  aclr::write_history_csv(history_path, result.history);
  aclr::save_model(model_path, result.params);
  std::cout << "best epoch " << result.history.best_epoch << ", wrote " << dir
            << "\n";
  return 0;
}

int run_cv(const DataArgs& data, TrainFlags& tf, int k,
           const std::string& out_flag) {
  finalize_train_config(tf);
  const std::string dir = resolve_out_dir(out_flag, "cv");
  const std::string metrics_path = (fs::path(dir) / "cv_metrics.csv").string();

  aclr::RunManifest manifest;
  manifest.subcommand = "cv";
  manifest.seed = tf.cfg.seed;
  ordered_json j = train_config_json(tf.cfg);
  j["k"] = k;
  manifest.config_json = j.dump();
  hash_inputs(data, true, manifest);
  manifest.outputs = {metrics_path};
  aclr::write_manifest((fs::path(dir) / "manifest.json").string(), manifest);

  const aclr::Corpus source =
      load_corpus(data.source, "source", aclr::Role::source, data.hash_dim);
  const aclr::Corpus target =
      load_corpus(data.target, "target", aclr::Role::target, data.hash_dim);
  const aclr::CvResult result = aclr::cross_validate(source, target, tf.cfg, k);
  aclr::write_cv_csv(metrics_path, result);
  std::cout << "mean macro-F1 " << aclr::fmt_double(result.mean.macro_f1)
            << ", wrote " << dir << "\n";
  return 0;
}

std::vector<aclr::Checkpoint> parse_checkpoints(const std::string& list,
                                                const std::string& kind) {
  aclr::Checkpoint::Kind k;
  if (kind == "posts") {
    k = aclr::Checkpoint::Kind::post_count;
  } else if (kind == "seconds") {
    k = aclr::Checkpoint::Kind::elapsed_seconds;
  } else {
    throw CLI::ValidationError("--kind", "expected posts or seconds");
  }
  std::vector<aclr::Checkpoint> cps;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    aclr::Checkpoint cp;
    cp.kind = k;
    if (item == "all") {
      cp.value = std::numeric_limits<double>::infinity();
    } else {
      try {
        cp.value = std::stod(item);
      } catch (const std::exception&) {
        throw CLI::ValidationError("--checkpoints",
                                   "cannot parse '" + item + "'");
      }
    }
    cps.push_back(cp);
  }
  if (cps.empty()) {
    throw CLI::ValidationError("--checkpoints", "empty checkpoint list");
  }
  return cps;
}

int run_early(const DataArgs& data, const std::string& model_path,
              const std::string& checkpoints, const std::string& kind,
              std::uint64_t seed, const std::string& out_flag) {
  const std::string dir = resolve_out_dir(out_flag, "early");
  const std::string curve_path = (fs::path(dir) / "early_curve.csv").string();

  aclr::RunManifest manifest;
  manifest.subcommand = "early";
  manifest.seed = seed;
  ordered_json j;
  j["model"] = model_path;
  j["checkpoints"] = checkpoints;
  j["kind"] = kind;
  manifest.config_json = j.dump();
  hash_inputs(data, false, manifest);
  manifest.inputs.emplace_back(model_path, aclr::fnv1a64_file(model_path));
  manifest.outputs = {curve_path};
  aclr::write_manifest((fs::path(dir) / "manifest.json").string(), manifest);

  const aclr::Corpus target =
      load_corpus(data.target, "target", aclr::Role::target, data.hash_dim);
  const aclr::ModelParams params = aclr::load_model(model_path);
  const aclr::EarlyCurve curve = aclr::early_detection_curve(
      params, target, parse_checkpoints(checkpoints, kind));
  aclr::write_early_csv(curve_path, curve);
  std::cout << "wrote " << curve_path << "\n";
  return 0;
}

int run_export(const DataArgs& data, const std::string& model_path,
               const std::string& out_flag) {
  const std::string dir = resolve_out_dir(out_flag, "export-features");
  const std::string features_path = (fs::path(dir) / "features.csv").string();

  aclr::RunManifest manifest;
  manifest.subcommand = "export-features";
  manifest.seed = 0;
  ordered_json j;
  j["model"] = model_path;
  manifest.config_json = j.dump();
  hash_inputs(data, false, manifest);
  manifest.inputs.emplace_back(model_path, aclr::fnv1a64_file(model_path));
  manifest.outputs = {features_path};
  aclr::write_manifest((fs::path(dir) / "manifest.json").string(), manifest);

  const aclr::Corpus target =
      load_corpus(data.target, "target", aclr::Role::target, data.hash_dim);
  const aclr::ModelParams params = aclr::load_model(model_path);
  const aclr::FeatureExport fx = aclr::export_features(params, target);
  aclr::write_features_csv(features_path, fx);
  std::cout << "wrote " << features_path << "\n";
  return 0;
}

// ---- sweep -----------------------------------------------------------------

std::vector<double> parse_grid(const std::string& list, const char* flag) {
  std::vector<double> grid;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      grid.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw CLI::ValidationError(flag, "cannot parse '" + item + "'");
    }
  }
  if (grid.empty()) throw CLI::ValidationError(flag, "empty grid");
  return grid;
}

/// Stratified train split of `fraction` of the events (at least one per
/// class); everything else is the test side.
std::pair<std::vector<std::string>, std::vector<std::string>> frac_split(
    const aclr::Dataset& target, double fraction, std::uint64_t seed) {
  std::vector<std::string> by_class[2];
  for (const aclr::Event& e : target.events) by_class[e.label].push_back(e.id);
  aclr::Rng rng(aclr::mix_seed(seed, 0xF6ACull));
  std::vector<std::string> train, test;
  for (int c = 0; c < 2; ++c) {
    auto& ids = by_class[c];
    rng.shuffle(ids);
    const long n = static_cast<long>(ids.size());
    long take = std::llround(fraction * static_cast<double>(n));
    take = std::max(1l, std::min(take, n - 1));
    for (long i = 0; i < n; ++i) {
      (i < take ? train : test).push_back(ids[static_cast<std::size_t>(i)]);
    }
  }
  return {train, test};
}

int run_sweep(const DataArgs& data, TrainFlags& tf, const std::string& eps_list,
              const std::string& alpha_list, const std::string& frac_list,
              int seeds, int k, const std::string& out_flag) {
  const int given = (eps_list.empty() ? 0 : 1) + (alpha_list.empty() ? 0 : 1) +
                    (frac_list.empty() ? 0 : 1);
  if (given != 1) {
    throw CLI::ValidationError(
        "sweep", "give exactly one of --epsilon, --alpha, --target-frac");
  }
  tf.cfg.regime = aclr::Regime::aclr;
  tf.cfg.pairing = parse_pairing(tf.pairing);
  aclr::validate(tf.cfg);

  std::string param;
  std::vector<double> grid;
  if (!eps_list.empty()) {
    param = "epsilon";
    grid = parse_grid(eps_list, "--epsilon");
  } else if (!alpha_list.empty()) {
    param = "alpha";
    grid = parse_grid(alpha_list, "--alpha");
  } else {
    param = "target_frac";
    grid = parse_grid(frac_list, "--target-frac");
  }
  if (seeds < 1) throw CLI::ValidationError("--seeds", "need at least 1 seed");

  const std::string dir = resolve_out_dir(out_flag, "sweep");
  const std::string sweep_path = (fs::path(dir) / "sweep.csv").string();

  aclr::RunManifest manifest;
  manifest.subcommand = "sweep";
  manifest.seed = tf.cfg.seed;
  ordered_json j = train_config_json(tf.cfg);
  j["param"] = param;
  {
    ordered_json g = ordered_json::array();
    for (double v : grid) g.push_back(v);
    j["grid"] = g;
  }
  j["seeds"] = seeds;
  j["k"] = k;
  manifest.config_json = j.dump();
  hash_inputs(data, true, manifest);
  manifest.outputs = {sweep_path};
  aclr::write_manifest((fs::path(dir) / "manifest.json").string(), manifest);

  const aclr::Corpus source =
      load_corpus(data.source, "source", aclr::Role::source, data.hash_dim);
  const aclr::Corpus target =
      load_corpus(data.target, "target", aclr::Role::target, data.hash_dim);

  std::ofstream out(sweep_path);
  if (!out) throw aclr::LoadError("cannot open " + sweep_path + " for writing");
  out << "param,value,seed,n_train,n_test,accuracy,macro_f1,f1_rumor,"
         "f1_nonrumor\n";

  for (double value : grid) {
    for (int s = 1; s <= seeds; ++s) {
      aclr::TrainConfig cfg = tf.cfg;
      cfg.seed = aclr::mix_seed(tf.cfg.seed, static_cast<std::uint64_t>(s));
      double frac = -1.0;
      if (param == "epsilon") {
        if (value < 0.0) {
          throw CLI::ValidationError("--epsilon", "values must be >= 0");
        }
        // epsilon 0 means no adversarial augmentation at all.
        if (value == 0.0) {
          cfg.regime = aclr::Regime::clr;
        } else {
          cfg.epsilon = value;
        }
      } else if (param == "alpha") {
        if (!(value >= 0.0 && value <= 1.0)) {
          throw CLI::ValidationError("--alpha", "values must lie in [0, 1]");
        }
        cfg.alpha = value;
      } else {
        if (!(value > 0.0 && value < 1.0)) {
          throw CLI::ValidationError("--target-frac",
                                     "values must lie in (0, 1)");
        }
        frac = value;
      }

      // One inverted split per seed: train on one fold (or the requested
      // fraction), evaluate on the rest.
      std::vector<std::string> train_ids, test_ids;
      if (frac > 0.0) {
        auto [tr, te] = frac_split(target.dataset, frac, cfg.seed);
        train_ids = std::move(tr);
        test_ids = std::move(te);
      } else {
        const auto plans = aclr::plan_inverted_cv(target.dataset, k, cfg.seed);
        train_ids = plans[0].train_ids;
        test_ids = plans[0].test_ids;
      }
      const aclr::Corpus train_corpus = aclr::subset(target, train_ids);
      const aclr::Corpus test_corpus = aclr::subset(target, test_ids);

      const aclr::TrainResult trained =
          aclr::train(source, train_corpus, cfg);
      const aclr::Metrics m = aclr::evaluate(trained.params, test_corpus);
      out << param << "," << aclr::fmt_double(value) << "," << s << ","
          << train_ids.size() << "," << test_ids.size() << ","
          << aclr::fmt_double(m.accuracy) << "," << aclr::fmt_double(m.macro_f1)
          << "," << aclr::fmt_double(m.f1_rumor) << ","
          << aclr::fmt_double(m.f1_nonrumor) << "\n";
    }
  }
  if (!out) throw aclr::LoadError("failed writing " + sweep_path);
  std::cout << "wrote " << sweep_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-resource rumor detection: bidirectional tree GCN with "
               "cross-domain contrastive and adversarial training"};
  app.set_version_flag("--version", aclr::kToolVersion);
  app.require_subcommand(1);

  std::string out_dir;
  app.add_option("--out", out_dir,
                 "Output directory (default: $ACLR_OUT_DIR/<subcommand> or "
                 "./aclr_out/<subcommand>)");

  // synth
  aclr::SynthConfig synth_cfg;
  CLI::App* synth = app.add_subcommand(
      "synth", "Generate a paired source/target benchmark");
  synth->add_option("--n-source", synth_cfg.n_source, "Source events")
      ->capture_default_str();
  synth->add_option("--n-target", synth_cfg.n_target, "Target events")
      ->capture_default_str();
  synth->add_option("--dim", synth_cfg.dim, "Embedding width")
      ->capture_default_str();
  synth->add_option("--mean-posts", synth_cfg.mean_posts,
                    "Expected posts per tree")
      ->capture_default_str();
  synth->add_option("--max-depth", synth_cfg.max_depth, "Tree depth cap")
      ->capture_default_str();
  synth->add_option("--fanout", synth_cfg.fanout,
                    "Poisson fan-out mean (0 = derive from --mean-posts)")
      ->capture_default_str();
  synth->add_option("--class-sep", synth_cfg.class_sep,
                    "Class mean offset along axis 0")
      ->capture_default_str();
  synth->add_option("--theta", synth_cfg.theta_deg,
                    "Target rotation, degrees")
      ->capture_default_str();
  synth->add_option("--delta", synth_cfg.delta_norm,
                    "Target translation norm")
      ->capture_default_str();
  synth->add_option("--sigma", synth_cfg.sigma, "Per-post noise stddev")
      ->capture_default_str();
  synth->add_option("--seed", synth_cfg.seed, "Generator seed")
      ->capture_default_str();

  // train
  DataArgs train_data;
  TrainFlags train_flags;
  CLI::App* train = app.add_subcommand("train", "Train one model");
  add_data_options(train, train_data);
  add_train_options(train, train_flags);

  // cv
  DataArgs cv_data;
  TrainFlags cv_flags;
  int cv_k = 5;
  CLI::App* cv = app.add_subcommand(
      "cv", "Inverted k-fold cross-validation (train on 1 fold, test on k-1)");
  add_data_options(cv, cv_data);
  add_train_options(cv, cv_flags);
  cv->add_option("--k", cv_k, "Fold count")->capture_default_str();

  // early
  DataArgs early_data;
  std::string early_model, early_checkpoints = "1,5,10,20,50,100,all";
  std::string early_kind = "posts";
  std::uint64_t early_seed = 1;
  CLI::App* early = app.add_subcommand(
      "early", "Early-detection curve for a trained model");
  add_target_options(early, early_data);
  early->add_option("--model", early_model, "Model checkpoint JSON")
      ->required();
  early->add_option("--checkpoints", early_checkpoints,
                    "Comma list of cutoffs; 'all' = no cutoff")
      ->capture_default_str();
  early->add_option("--kind", early_kind, "posts | seconds")
      ->capture_default_str();
  early->add_option("--seed", early_seed, "Recorded in the manifest")
      ->capture_default_str();

  // export-features
  DataArgs export_data;
  std::string export_model;
  CLI::App* exportf = app.add_subcommand(
      "export-features", "Event representations + 2-D projection as CSV");
  add_target_options(exportf, export_data);
  exportf->add_option("--model", export_model, "Model checkpoint JSON")
      ->required();

  // sweep
  DataArgs sweep_data;
  TrainFlags sweep_flags;
  std::string sweep_eps, sweep_alpha, sweep_frac;
  int sweep_seeds = 5;
  int sweep_k = 5;
  CLI::App* sweep = app.add_subcommand(
      "sweep", "Grid sweep over epsilon, alpha, or target training fraction");
  add_data_options(sweep, sweep_data);
  add_train_options(sweep, sweep_flags);
  // The sweep owns these grids; scalar --alpha/--epsilon from the shared
  // training flags are shadowed by removing them first.
  sweep->remove_option(sweep_flags.alpha_opt);
  sweep->remove_option(sweep_flags.epsilon_opt);
  sweep->add_option("--epsilon", sweep_eps, "Comma grid of epsilon values");
  sweep->add_option("--alpha", sweep_alpha, "Comma grid of alpha values");
  sweep->add_option("--target-frac", sweep_frac,
                    "Comma grid of target training fractions");
  sweep->add_option("--seeds", sweep_seeds, "Seeds per grid point")
      ->capture_default_str();
  sweep->add_option("--k", sweep_k, "Fold count for the per-seed split")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
    if (synth->parsed()) return run_synth(synth_cfg, out_dir);
    if (train->parsed()) return run_train(train_data, train_flags, out_dir);
    if (cv->parsed()) return run_cv(cv_data, cv_flags, cv_k, out_dir);
    if (early->parsed()) {
      return run_early(early_data, early_model, early_checkpoints, early_kind,
                       early_seed, out_dir);
    }
    if (exportf->parsed()) {
      return run_export(export_data, export_model, out_dir);
    }
    if (sweep->parsed()) {
      return run_sweep(sweep_data, sweep_flags, sweep_eps, sweep_alpha,
                       sweep_frac, sweep_seeds, sweep_k, out_dir);
    }
    std::cerr << "no subcommand\n";
    return 2;
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const aclr::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const aclr::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
