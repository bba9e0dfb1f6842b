#include "aclr/evaluate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>

#include "aclr/format.hpp"
#include "aclr/losses.hpp"

namespace aclr {

Metrics metrics_from_predictions(const std::vector<int>& predictions,
                                 const std::vector<int>& labels) {
  if (predictions.size() != labels.size()) {
    throw ContractError("metrics: " + std::to_string(predictions.size()) +
                        " predictions vs " + std::to_string(labels.size()) +
                        " labels");
  }
  if (predictions.empty()) throw ContractError("metrics: empty input");

  Metrics m;
  m.n = static_cast<long>(labels.size());
  long correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i], p = predictions[i];
    if (y != 0 && y != 1) {
      throw ContractError("metrics: label " + std::to_string(y) +
                          " at index " + std::to_string(i));
    }
    if (p != 0 && p != 1) {
      throw ContractError("metrics: prediction " + std::to_string(p) +
                          " at index " + std::to_string(i));
    }
    if (p == y) ++correct;
    for (int c = 0; c < 2; ++c) {
      ClassCounts& cc = m.counts[c];
      if (y == c && p == c) ++cc.tp;
      if (y != c && p == c) ++cc.fp;
      if (y == c && p != c) ++cc.fn;
      if (y != c && p != c) ++cc.tn;
    }
  }
  m.accuracy = static_cast<double>(correct) / static_cast<double>(m.n);
  auto f1 = [](const ClassCounts& cc) {
    const long denom = 2 * cc.tp + cc.fp + cc.fn;
    // 0/0 (class absent and never predicted) counts as 0 by convention.
    return denom == 0 ? 0.0
                      : 2.0 * static_cast<double>(cc.tp) /
                            static_cast<double>(denom);
  };
  m.f1_nonrumor = f1(m.counts[0]);
  m.f1_rumor = f1(m.counts[1]);
  m.macro_f1 = 0.5 * (m.f1_rumor + m.f1_nonrumor);
  return m;
}

int predict(const ModelParams& params, const EncodedEvent& event) {
  TapedParams tp = record_params(nullptr, params);
  EventRepr r = forward(event.x, event.td, event.bu, tp, Mode::eval, 0.0,
                        nullptr, nullptr);
  const Matrix& z = r.logits.value;
  int arg = 0;
  for (Eigen::Index j = 1; j < z.cols(); ++j) {
    if (z(0, j) > z(0, arg)) arg = static_cast<int>(j);  // ties keep the lower
  }
  return arg;
}

Metrics evaluate(const ModelParams& params,
                 const std::vector<EncodedEvent>& events) {
  if (events.empty()) throw ContractError("evaluate: no events");
  std::vector<int> preds, labels;
  preds.reserve(events.size());
  labels.reserve(events.size());
  for (const EncodedEvent& e : events) {
    preds.push_back(predict(params, e));
    labels.push_back(e.label);
  }
  return metrics_from_predictions(preds, labels);
}

Metrics evaluate(const ModelParams& params, const Corpus& corpus) {
  return evaluate(params, encode_corpus(corpus));
}

double mean_ce(const ModelParams& params,
               const std::vector<EncodedEvent>& events) {
  if (events.empty()) throw ContractError("mean_ce: no events");
  TapedParams tp = record_params(nullptr, params);
  double total = 0.0;
  for (const EncodedEvent& e : events) {
    EventRepr r =
        forward(e.x, e.td, e.bu, tp, Mode::eval, 0.0, nullptr, nullptr);
    total += softmax_ce(r.logits, e.label).scalar();
  }
  return total / static_cast<double>(events.size());
}

std::vector<CvFoldPlan> plan_inverted_cv(const Dataset& target, int k,
                                         std::uint64_t seed) {
  const FoldPlan folds = split_folds(target, k, seed);
  std::vector<CvFoldPlan> plans;
  plans.reserve(static_cast<std::size_t>(k));
  for (int f = 0; f < k; ++f) {
    CvFoldPlan p;
    p.fold = f;
    // Inverted protocol: the fold itself is the scarce TRAINING split.
    p.train_ids = folds.fold_ids(f);
    for (const Event& e : target.events) {
      if (folds.assignment.at(e.id) != f) p.test_ids.push_back(e.id);
    }
    plans.push_back(std::move(p));
  }
  return plans;
}

namespace {

/// Field-wise mean and sample standard deviation over fold metrics.
void aggregate(CvResult& result) {
  const std::size_t n = result.folds.size();
  auto fields = [](const Metrics& m) {
    return std::array<double, 4>{m.accuracy, m.macro_f1, m.f1_rumor,
                                 m.f1_nonrumor};
  };
  std::array<double, 4> mean{}, sd{};
  for (const FoldResult& f : result.folds) {
    const auto v = fields(f.metrics);
    for (std::size_t i = 0; i < 4; ++i) mean[i] += v[i];
  }
  for (auto& v : mean) v /= static_cast<double>(n);
  if (n >= 2) {
    for (const FoldResult& f : result.folds) {
      const auto v = fields(f.metrics);
      for (std::size_t i = 0; i < 4; ++i) {
        sd[i] += (v[i] - mean[i]) * (v[i] - mean[i]);
      }
    }
    for (auto& v : sd) v = std::sqrt(v / static_cast<double>(n - 1));
  }
  result.mean.accuracy = mean[0];
  result.mean.macro_f1 = mean[1];
  result.mean.f1_rumor = mean[2];
  result.mean.f1_nonrumor = mean[3];
  result.stddev.accuracy = sd[0];
  result.stddev.macro_f1 = sd[1];
  result.stddev.f1_rumor = sd[2];
  result.stddev.f1_nonrumor = sd[3];
}

}  // namespace

CvResult cross_validate(const Corpus& source, const Corpus& target,
                        const TrainConfig& cfg, int k) {
  validate(cfg);
  const std::vector<CvFoldPlan> plans =
      plan_inverted_cv(target.dataset, k, cfg.seed);

  CvResult result;
  result.k = k;
  for (const CvFoldPlan& plan : plans) {
    Corpus train_corpus = subset(target, plan.train_ids);
    Corpus test_corpus = subset(target, plan.test_ids);

    TrainConfig fold_cfg = cfg;
    fold_cfg.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(plan.fold) + 1);
    TrainResult trained = train(source, train_corpus, fold_cfg);

    FoldResult fr;
    fr.fold = plan.fold;
    fr.n_train = static_cast<long>(plan.train_ids.size());
    fr.n_test = static_cast<long>(plan.test_ids.size());
    fr.metrics = evaluate(trained.params, test_corpus);
    result.folds.push_back(std::move(fr));
  }
  aggregate(result);
  return result;
}

void write_cv_csv(const std::string& path, const CvResult& result) {
  std::ofstream out(path);
  if (!out) throw LoadError("cannot open " + path + " for writing");
  out << "fold,n_train,n_test,accuracy,macro_f1,f1_rumor,f1_nonrumor\n";
  for (const FoldResult& f : result.folds) {
    out << f.fold << "," << f.n_train << "," << f.n_test << ","
        << fmt_double(f.metrics.accuracy) << ","
        << fmt_double(f.metrics.macro_f1) << ","
        << fmt_double(f.metrics.f1_rumor) << ","
        << fmt_double(f.metrics.f1_nonrumor) << "\n";
  }
  out << "mean,,," << fmt_double(result.mean.accuracy) << ","
      << fmt_double(result.mean.macro_f1) << ","
      << fmt_double(result.mean.f1_rumor) << ","
      << fmt_double(result.mean.f1_nonrumor) << "\n";
  out << "stddev,,," << fmt_double(result.stddev.accuracy) << ","
      << fmt_double(result.stddev.macro_f1) << ","
      << fmt_double(result.stddev.f1_rumor) << ","
      << fmt_double(result.stddev.f1_nonrumor) << "\n";
  if (!out) throw LoadError("failed writing " + path);
}

EarlyCurve early_detection_curve(const ModelParams& params,
                                 const Corpus& corpus,
                                 const std::vector<Checkpoint>& checkpoints) {
  if (checkpoints.empty()) {
    throw ContractError("early_detection_curve: no checkpoints");
  }
  for (std::size_t i = 1; i < checkpoints.size(); ++i) {
    if (checkpoints[i].kind != checkpoints[0].kind) {
      throw ContractError("early_detection_curve: mixed checkpoint kinds");
    }
    if (!(checkpoints[i].value > checkpoints[i - 1].value)) {
      throw ContractError(
          "early_detection_curve: checkpoint values must increase strictly");
    }
  }

  EarlyCurve curve;
  for (const Checkpoint& cp : checkpoints) {
    Corpus cut;
    cut.dataset.name = corpus.dataset.name;
    cut.dataset.role = corpus.dataset.role;
    for (const Event& e : corpus.dataset.events) {
      cut.dataset.events.push_back(truncate_event(e, cp));
    }
    cut.table = corpus.table;
    curve.points.emplace_back(cp, evaluate(params, cut));
  }
  return curve;
}

void write_early_csv(const std::string& path, const EarlyCurve& curve) {
  std::ofstream out(path);
  if (!out) throw LoadError("cannot open " + path + " for writing");
  out << "kind,checkpoint,accuracy,macro_f1,f1_rumor,f1_nonrumor\n";
  for (const auto& [cp, m] : curve.points) {
    out << (cp.kind == Checkpoint::Kind::post_count ? "posts" : "seconds")
        << ",";
    if (std::isinf(cp.value)) {
      out << "all";
    } else {
      out << fmt_double(cp.value);
    }
    out << "," << fmt_double(m.accuracy) << "," << fmt_double(m.macro_f1)
        << "," << fmt_double(m.f1_rumor) << "," << fmt_double(m.f1_nonrumor)
        << "\n";
  }
  if (!out) throw LoadError("failed writing " + path);
}

std::vector<Checkpoint> default_checkpoints() {
  std::vector<Checkpoint> cps;
  for (double v : {1.0, 5.0, 10.0, 20.0, 50.0, 100.0}) {
    cps.push_back({Checkpoint::Kind::post_count, v});
  }
  cps.push_back({Checkpoint::Kind::post_count,
                 std::numeric_limits<double>::infinity()});
  return cps;
}

namespace {

/// Leading eigenvector of a symmetric PSD matrix by power iteration.
/// Returns (unit vector, eigenvalue). The start vector leans on the
/// dominant diagonal entry so a zero-overlap start is not an issue for the
/// near-diagonal covariances this sees.
std::pair<Vector, double> power_iterate(const Matrix& c) {
  const Eigen::Index d = c.rows();
  Eigen::Index pivot = 0;
  c.diagonal().maxCoeff(&pivot);
  Vector v = Vector::Constant(d, 1.0 / std::sqrt(static_cast<double>(d)));
  v(pivot) += 1.0;
  v.normalize();

  double lambda = 0.0;
  for (int it = 0; it < 100000; ++it) {
    Vector w = c * v;
    const double norm = w.norm();
    if (norm < 1e-300) return {v, 0.0};  // rank exhausted
    w /= norm;
    if (w.dot(v) < 0.0) w = -w;  // fix the sign before the Cauchy test
    const double delta = (w - v).cwiseAbs().maxCoeff();
    v = w;
    if (delta < 1e-9) break;
  }
  lambda = v.dot(c * v);
  // Canonical orientation: largest-magnitude component positive.
  Eigen::Index arg = 0;
  v.cwiseAbs().maxCoeff(&arg);
  if (v(arg) < 0.0) v = -v;
  return {v, lambda};
}

}  // namespace

PcaResult pca_top2(const Matrix& data) {
  if (data.rows() < 3) {
    throw ContractError("pca_top2: need at least 3 rows, got " +
                        std::to_string(data.rows()));
  }
  if (data.cols() < 2) {
    throw ContractError("pca_top2: need at least 2 columns");
  }
  const Eigen::RowVectorXd mean = data.colwise().mean();
  const Matrix centered = data.rowwise() - mean;
  const Matrix cov = centered.transpose() * centered /
                     static_cast<double>(data.rows() - 1);

  PcaResult r;
  auto [v1, l1] = power_iterate(cov);
  r.pc1 = v1;
  r.var1 = l1;
  const Matrix deflated = cov - l1 * v1 * v1.transpose();
  auto [v2, l2] = power_iterate(deflated);
  // Deflation leaves a residue along pc1 at tolerance level; project it out.
  v2 -= v2.dot(v1) * v1;
  const double n2 = v2.norm();
  if (n2 > 1e-12) {
    v2 /= n2;
  } else {
    // Rank-1 covariance: any unit direction orthogonal to pc1 will do.
    // Start from the axis pc1 touches least, which cannot be parallel.
    Eigen::Index jmin = 0;
    v1.cwiseAbs().minCoeff(&jmin);
    v2 = Vector::Zero(v1.size());
    v2(jmin) = 1.0;
    v2 -= v2.dot(v1) * v1;
    v2.normalize();
  }
  r.pc2 = v2;
  r.var2 = l2;
  return r;
}

FeatureExport export_features(const ModelParams& params,
                              const Corpus& corpus) {
  const std::vector<EncodedEvent> events = encode_corpus(corpus);
  if (events.empty()) throw ContractError("export_features: no events");

  FeatureExport fx;
  TapedParams tp = record_params(nullptr, params);
  Matrix all(static_cast<Eigen::Index>(events.size()), 2 * params.dims.d_out);
  for (std::size_t i = 0; i < events.size(); ++i) {
    const EncodedEvent& e = events[i];
    EventRepr r =
        forward(e.x, e.td, e.bu, tp, Mode::eval, 0.0, nullptr, nullptr);
    FeatureRow row;
    row.id = e.id;
    row.label = e.label;
    row.o = r.o.value.transpose();
    row.pca_x = std::numeric_limits<double>::quiet_NaN();
    row.pca_y = std::numeric_limits<double>::quiet_NaN();
    all.row(static_cast<Eigen::Index>(i)) = r.o.value.row(0);
    fx.rows.push_back(std::move(row));
  }

  if (events.size() >= 3) {
    fx.pca = pca_top2(all);
    fx.pca_valid = true;
    const Eigen::RowVectorXd mean = all.colwise().mean();
    for (std::size_t i = 0; i < fx.rows.size(); ++i) {
      const Eigen::RowVectorXd c = all.row(static_cast<Eigen::Index>(i)) - mean;
      fx.rows[i].pca_x = c.dot(fx.pca.pc1);
      fx.rows[i].pca_y = c.dot(fx.pca.pc2);
    }
  }
  return fx;
}

void write_features_csv(const std::string& path, const FeatureExport& fx) {
  std::ofstream out(path);
  if (!out) throw LoadError("cannot open " + path + " for writing");
  if (fx.rows.empty()) throw ContractError("write_features_csv: no rows");
  const Eigen::Index d = fx.rows.front().o.size();
  out << "id,label";
  for (Eigen::Index j = 0; j < d; ++j) out << ",o_" << j;
  out << ",pca_x,pca_y\n";
  for (const FeatureRow& row : fx.rows) {
    out << row.id << "," << row.label;
    for (Eigen::Index j = 0; j < d; ++j) out << "," << fmt_double(row.o(j));
    out << "," << fmt_double(row.pca_x) << "," << fmt_double(row.pca_y)
        << "\n";
  }
  if (!out) throw LoadError("failed writing " + path);
}

}  // namespace aclr
