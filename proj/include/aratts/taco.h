// aratts/taco.h

// Copyright 2026  The aratts authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef ARATTS_TACO_H_
#define ARATTS_TACO_H_

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "aratts/params.h"
#include "aratts/rng.h"
#include "aratts/tape.h"
#include "aratts/tensor.h"

// Attention-based spectrogram prediction network.  A symbol-id sequence is
// encoded by an embedding, a convolutional stack and a bidirectional LSTM;
// an autoregressive decoder with hybrid (content + location) attention then
// emits one mel frame per step together with a stop logit, and a
// convolutional postnet adds a residual refinement.
namespace aratts {

struct TacoConfig {
  int64_t n_symbols = 0;

  int64_t embedding_dim = 512;
  int64_t encoder_conv_channels = 512;
  int64_t encoder_conv_width = 5;
  int64_t encoder_conv_layers = 3;
  // Total BiLSTM width; each direction gets half.
  int64_t encoder_lstm_units = 512;

  int64_t attention_dim = 128;
  bool location_features = true;
  int64_t location_filters = 32;
  int64_t location_kernel = 31;

  int64_t prenet_units = 256;
  int64_t decoder_lstm_units = 1024;
  int64_t n_mels = 80;

  int64_t postnet_channels = 512;
  int64_t postnet_width = 5;
  int64_t postnet_layers = 5;

  // Rates are configuration, not architecture.
  double encoder_dropout = 0.5;
  double prenet_dropout = 0.5;
  double zoneout = 0.1;

  double stop_threshold = 0.5;
  // Autoregression cap: max_steps_scale * T_x + max_steps_slack.
  int64_t max_steps_scale = 10;
  int64_t max_steps_slack = 100;

  static TacoConfig Full(int64_t n_symbols);
  // Small preset for desk-scale training runs: embedding 64, encoder conv 64,
  // BiLSTM 64, decoder LSTM 128.
  static TacoConfig Reduced(int64_t n_symbols);

  void Validate() const;  // throws BadConfig
  nlohmann::json ToJson() const;
  static TacoConfig FromJson(const nlohmann::json &j);
};

// Pointers into a ParamStore for the plain (tape-free) attention evaluation.
// Location members are null when location features are disabled.
struct AttentionWeights {
  const Tensor *W = nullptr;  // query projection   [query_dim, A]
  const Tensor *V = nullptr;  // memory projection  [enc_out, A]
  const Tensor *b = nullptr;  // bias               [A]
  const Tensor *w = nullptr;  // energy projection  [A]
  const Tensor *loc_conv_w = nullptr;  // [K, 1, F]
  const Tensor *loc_conv_b = nullptr;  // [F]
  const Tensor *loc_proj = nullptr;    // [F, A]
};

struct AttentionStep {
  Tensor energies;  // [T_x], before masking
  Tensor alpha;     // [T_x]
  Tensor context;   // [enc_out]
};

// One hybrid-attention step over encoder outputs `memory` [T_x, enc_out].
// `hv` is the precomputed memory projection memory * V [T_x, A]; `query` is
// the decoder state the energies condition on; `cum` is the running sum of
// past attention weights [T_x].  Positions at or beyond valid_len get energy
// -1e30 before the softmax, so their weight underflows to exactly zero.
AttentionStep AttendEval(const Tensor &memory, const Tensor &hv,
                         const Tensor &query, const Tensor &cum,
                         const AttentionWeights &aw, int64_t valid_len);

class TacoModel {
 public:
  TacoModel(const TacoConfig &cfg, uint64_t seed);

  const TacoConfig &config() const { return cfg_; }
  ParamStore &params() { return params_; }
  const ParamStore &params() const { return params_; }

  // Leaves for every parameter on the given tape.  Buffers bind as
  // constants; trainable tensors bind with gradients enabled.
  struct Bound {
    std::unordered_map<std::string, ad::Var> vars;
    ad::Var at(const std::string &name) const;
  };
  Bound Bind(ad::Tape &tape) const;

  struct TeacherForcedOut {
    ad::Var mel_pre;     // [T_dec, n_mels]
    ad::Var mel_post;    // [T_dec, n_mels]
    ad::Var stop_logits; // [T_dec]
    Tensor alignment;    // [T_dec, T_x], rows are attention weights
  };
  // Teacher-forced pass over a target spectrogram [T_dec, n_mels].  With
  // training true, dropout and zoneout are sampled from rng and batch-norm
  // batch statistics are used (running buffers updated in place); with
  // training false the pass is deterministic (dropout off, zoneout
  // expectation, batch norm on running statistics).
  TeacherForcedOut TeacherForced(ad::Tape &tape, const Bound &bound,
                                 const std::vector<int64_t> &ids,
                                 const Tensor &mel_target, bool training,
                                 CounterRng &rng);

  struct InferOptions {
    int64_t max_steps = -1;       // -1 derives the cap from the config
    bool prenet_dropout = false;  // sampled prenet noise during synthesis
    uint64_t seed = 0;
  };
  struct InferResult {
    Tensor mel;        // [T_dec, n_mels], postnet output
    Tensor mel_pre;    // [T_dec, n_mels]
    Tensor alignment;  // [T_dec, T_x]
    bool max_steps_reached = false;
  };
  // Free-running synthesis with plain kernels.  Feeds each predicted frame
  // back through the prenet and halts once the stop probability exceeds the
  // configured threshold, or flags max_steps_reached at the cap.
  InferResult Infer(const std::vector<int64_t> &ids,
                    const InferOptions &opts) const;
  InferResult Infer(const std::vector<int64_t> &ids) const {
    return Infer(ids, InferOptions());
  }

  // Plain-kernel eval-mode encoder [T_x, enc_out]; exposed for tests.
  Tensor EncodeEval(const std::vector<int64_t> &ids) const;

  AttentionWeights attention_weights() const;

 private:
  TacoConfig cfg_;
  ParamStore params_;
};

}  // namespace aratts

#endif  // ARATTS_TACO_H_
