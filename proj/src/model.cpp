#include "aclr/model.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"

namespace aclr {

namespace {

using nlohmann::ordered_json;

int layer_in(const ModelDims& d, int l) { return l == 0 ? d.d_in : d.d_hidden; }
int layer_out(const ModelDims& d, int l) {
  return l == d.layers - 1 ? d.d_out : d.d_hidden;
}

Matrix glorot(int rows, int cols, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix w(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) w(i, j) = rng.uniform(-a, a);
  }
  return w;
}

}  // namespace

ModelDims synth_dims(int d_in) { return ModelDims{d_in, 16, 8, 2, 2}; }

void validate(const ModelDims& dims) {
  if (dims.d_in < 1 || dims.d_hidden < 1 || dims.d_out < 1) {
    throw ConfigError("ModelDims: all widths must be positive");
  }
  if (dims.layers < 1) throw ConfigError("ModelDims: need at least 1 layer");
  if (dims.classes < 2) throw ConfigError("ModelDims: need at least 2 classes");
}

ModelParams init_params(const ModelDims& dims, std::uint64_t seed) {
  validate(dims);
  ModelParams p;
  p.dims = dims;
  Rng rng(mix_seed(seed, 0x91017ull));
  for (int l = 0; l < dims.layers; ++l) {
    p.w_td.push_back(glorot(layer_in(dims, l), layer_out(dims, l), rng));
  }
  for (int l = 0; l < dims.layers; ++l) {
    p.w_bu.push_back(glorot(layer_in(dims, l), layer_out(dims, l), rng));
  }
  p.w_c = glorot(2 * dims.d_out, dims.classes, rng);
  p.b_c = Matrix::Zero(1, dims.classes);
  return p;
}

TapedParams record_params(Tape* tape, const ModelParams& params) {
  auto lift = [tape](const Matrix& m) {
    return tape ? tape->leaf(m) : constant(m);
  };
  TapedParams tp;
  tp.dims = params.dims;
  for (const Matrix& w : params.w_td) tp.w_td.push_back(lift(w));
  for (const Matrix& w : params.w_bu) tp.w_bu.push_back(lift(w));
  tp.w_c = lift(params.w_c);
  tp.b_c = lift(params.b_c);
  return tp;
}

namespace {

Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate,
                    Rng& rng) {
  // Inverted dropout: surviving entries are scaled by 1/keep so eval needs
  // no correction.
  const double keep = 1.0 - rate;
  Matrix mask(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      mask(i, j) = rng.uniform() < keep ? 1.0 / keep : 0.0;
    }
  }
  return mask;
}

Tensor encode_direction(const Tensor& x, const Adjacency& adj,
                        const std::vector<Tensor>& weights, Mode mode,
                        double dropout_rate, Rng* rng) {
  Tensor a_hat = constant(adj.a_hat);
  Tensor h = x;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    h = relu(matmul(matmul(a_hat, h), weights[l]));
    if (l == 0 && weights.size() > 1 && mode == Mode::train &&
        dropout_rate > 0.0) {
      h = cmul(h, dropout_mask(h.rows(), h.cols(), dropout_rate, *rng));
    }
  }
  return h;
}

}  // namespace

EventRepr forward(const Matrix& x, const Adjacency& td, const Adjacency& bu,
                  const TapedParams& params, Mode mode, double dropout_rate,
                  Rng* rng, Tape* tape) {
  const ModelDims& dims = params.dims;
  if (x.cols() != dims.d_in) {
    throw DimensionError("forward: x has " + std::to_string(x.cols()) +
                         " columns, model expects " + std::to_string(dims.d_in));
  }
  if (td.n != x.rows() || bu.n != x.rows()) {
    throw DimensionError("forward: x has " + std::to_string(x.rows()) +
                         " rows but adjacencies cover " +
                         std::to_string(td.n) + " and " + std::to_string(bu.n) +
                         " nodes");
  }
  if (td.direction != Direction::top_down ||
      bu.direction != Direction::bottom_up) {
    throw ContractError("forward: adjacency directions are swapped");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ContractError("forward: dropout rate must lie in [0, 1)");
  }
  if (mode == Mode::train && dropout_rate > 0.0 && rng == nullptr) {
    throw ContractError("forward: train mode with dropout needs an rng");
  }

  Tensor xt = tape ? tape->leaf(x) : constant(x);
  Tensor h_td =
      encode_direction(xt, td, params.w_td, mode, dropout_rate, rng);
  Tensor h_bu =
      encode_direction(xt, bu, params.w_bu, mode, dropout_rate, rng);
  EventRepr repr;
  repr.o = mean_rows(concat_cols(h_td, h_bu));
  repr.logits = add(matmul(repr.o, params.w_c), params.b_c);
  return repr;
}

namespace {

ordered_json matrix_to_json(const Matrix& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const ordered_json& j, const std::string& name) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) {
    throw LoadError("model checkpoint: " + name + " is not a matrix");
  }
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (static_cast<Eigen::Index>(j[i].size()) != cols) {
      throw LoadError("model checkpoint: " + name + " has ragged rows");
    }
    for (Eigen::Index k = 0; k < cols; ++k) {
      if (!j[i][k].is_number()) {
        throw LoadError("model checkpoint: " + name + " has a non-number");
      }
      m(i, k) = j[i][k].get<double>();
    }
  }
  return m;
}

constexpr int kCheckpointVersion = 1;

}  // namespace

void save_model(const std::string& path, const ModelParams& params) {
  validate(params.dims);
  ordered_json j;
  j["format"] = "bigcn-checkpoint";
  j["version"] = kCheckpointVersion;
  j["dims"] = {{"d_in", params.dims.d_in},
               {"d_hidden", params.dims.d_hidden},
               {"d_out", params.dims.d_out},
               {"layers", params.dims.layers},
               {"classes", params.dims.classes}};
  j["w_td"] = ordered_json::array();
  for (const Matrix& w : params.w_td) j["w_td"].push_back(matrix_to_json(w));
  j["w_bu"] = ordered_json::array();
  for (const Matrix& w : params.w_bu) j["w_bu"].push_back(matrix_to_json(w));
  j["w_c"] = matrix_to_json(params.w_c);
  j["b_c"] = matrix_to_json(params.b_c);

  std::ofstream out(path);
  if (!out) throw LoadError("cannot open " + path + " for writing");
  out << j.dump(1) << "\n";
  if (!out) throw LoadError("failed writing " + path);
}

ModelParams load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open model checkpoint " + path);
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const std::exception& e) {
    throw LoadError(path + ": " + e.what());
  }
  if (!j.is_object() || j.value("format", "") != "bigcn-checkpoint") {
    throw LoadError(path + ": not a model checkpoint");
  }
  if (j.value("version", -1) != kCheckpointVersion) {
    throw LoadError(path + ": unsupported checkpoint version");
  }
  ModelParams p;
  const auto& d = j.at("dims");
  p.dims.d_in = d.at("d_in").get<int>();
  p.dims.d_hidden = d.at("d_hidden").get<int>();
  p.dims.d_out = d.at("d_out").get<int>();
  p.dims.layers = d.at("layers").get<int>();
  p.dims.classes = d.at("classes").get<int>();
  validate(p.dims);
  for (const auto& w : j.at("w_td")) {
    p.w_td.push_back(matrix_from_json(w, "w_td"));
  }
  for (const auto& w : j.at("w_bu")) {
    p.w_bu.push_back(matrix_from_json(w, "w_bu"));
  }
  p.w_c = matrix_from_json(j.at("w_c"), "w_c");
  p.b_c = matrix_from_json(j.at("b_c"), "b_c");

  auto expect = [&](const Matrix& m, int rows, int cols, const char* name) {
    if (m.rows() != rows || m.cols() != cols) {
      throw LoadError(path + ": " + name + " has shape " +
                      std::to_string(m.rows()) + "x" +
                      std::to_string(m.cols()) + ", dims say " +
                      std::to_string(rows) + "x" + std::to_string(cols));
    }
  };
  if (static_cast<int>(p.w_td.size()) != p.dims.layers ||
      static_cast<int>(p.w_bu.size()) != p.dims.layers) {
    throw LoadError(path + ": layer count disagrees with dims");
  }
  for (int l = 0; l < p.dims.layers; ++l) {
    expect(p.w_td[static_cast<std::size_t>(l)], layer_in(p.dims, l),
           layer_out(p.dims, l), "w_td layer");
    expect(p.w_bu[static_cast<std::size_t>(l)], layer_in(p.dims, l),
           layer_out(p.dims, l), "w_bu layer");
  }
  expect(p.w_c, 2 * p.dims.d_out, p.dims.classes, "w_c");
  expect(p.b_c, 1, p.dims.classes, "b_c");
  return p;
}

std::vector<EncodedEvent> encode_corpus(const Corpus& corpus) {
  std::vector<EncodedEvent> out;
  out.reserve(corpus.dataset.events.size());
  for (const Event& e : corpus.dataset.events) {
    EncodedEvent enc;
    enc.id = e.id;
    enc.label = e.label;
    enc.x = embed_event(e, corpus.table);
    enc.td = build_adjacency(e, Direction::top_down);
    enc.bu = build_adjacency(e, Direction::bottom_up);
    out.push_back(std::move(enc));
  }
  return out;
}

}  // namespace aclr
