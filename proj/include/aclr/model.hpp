#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aclr/data.hpp"
#include "aclr/graph.hpp"
#include "aclr/rng.hpp"
#include "aclr/tensor.hpp"

namespace aclr {

/// Network shape. Layer l of each directional encoder maps
/// (l == 0 ? d_in : d_hidden) -> (l == layers-1 ? d_out : d_hidden);
/// the classifier maps the 2*d_out event vector to `classes` logits.
struct ModelDims {
  int d_in = 768;
  int d_hidden = 512;
  int d_out = 128;
  int layers = 2;
  int classes = 2;
};

/// Small shape for tests and synthetic runs.
ModelDims synth_dims(int d_in = 32);

void validate(const ModelDims& dims);

/// Weights of the two directional encoders plus the linear classifier.
/// Biases exist only on the classifier; graph layers are bias-free.
struct ModelParams {
  ModelDims dims;
  std::vector<Matrix> w_td;
  std::vector<Matrix> w_bu;
  Matrix w_c;  // 2*d_out x classes
  Matrix b_c;  // 1 x classes
};

/// Glorot-uniform weights, zero classifier bias. Deterministic in `seed`.
ModelParams init_params(const ModelDims& dims, std::uint64_t seed);

/// Parameters lifted onto a tape (leaves) or wrapped as constants when
/// `tape` is null. Order of leaves is fixed: w_td layers, w_bu layers,
/// w_c, b_c.
struct TapedParams {
  ModelDims dims;
  std::vector<Tensor> w_td;
  std::vector<Tensor> w_bu;
  Tensor w_c;
  Tensor b_c;
};

TapedParams record_params(Tape* tape, const ModelParams& params);

enum class Mode { train, eval };

/// Event-level outputs: o is the 1 x 2*d_out representation (mean over
/// nodes of the concatenated directional embeddings), logits its linear
/// classification.
struct EventRepr {
  Tensor o;
  Tensor logits;
};

/// Runs both directional encoders over one event.
///
///   H_0 = X; H_{l+1} = ReLU(A_hat H_l W_l)
///
/// In train mode, inverted dropout after the first layer's ReLU in each
/// direction (rng required when dropout_rate > 0). Eval mode never touches
/// the rng. The input X is recorded on the tape when one is given, so
/// gradients with respect to the data are available too.
EventRepr forward(const Matrix& x, const Adjacency& td, const Adjacency& bu,
                  const TapedParams& params, Mode mode, double dropout_rate,
                  Rng* rng, Tape* tape);

/// JSON checkpoint, exact round trip of every weight.
void save_model(const std::string& path, const ModelParams& params);
ModelParams load_model(const std::string& path);

/// An event prepared for the network: features plus both normalized
/// adjacencies.
struct EncodedEvent {
  std::string id;
  int label = 0;
  Matrix x;
  Adjacency td;
  Adjacency bu;
};

std::vector<EncodedEvent> encode_corpus(const Corpus& corpus);

}  // namespace aclr
