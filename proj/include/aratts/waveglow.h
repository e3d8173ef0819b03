// aratts/waveglow.h

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

#ifndef ARATTS_WAVEGLOW_H_
#define ARATTS_WAVEGLOW_H_

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "aratts/params.h"
#include "aratts/rng.h"
#include "aratts/tape.h"
#include "aratts/tensor.h"
#include "aratts/wav.h"

// Flow-based vocoder: audio squeezed into groups of eight samples passes
// through a stack of flow steps, each an invertible 1x1 channel-mixing
// convolution followed by an affine coupling conditioned on upsampled mel
// features.  Training maximizes the Gaussian likelihood of the latent via
// the change-of-variables rule; synthesis runs the exact inverse on noise.
namespace aratts {

struct WaveGlowConfig {
  int64_t n_flows = 12;
  int64_t group = 8;
  int64_t wn_layers = 4;
  int64_t wn_channels = 64;
  int64_t wn_kernel = 3;  // dilation doubles per layer
  int64_t n_mels = 80;
  int64_t hop = 256;
  int64_t upsample_kernel = 512;  // 2 * hop
  int64_t sample_rate = 22050;
  double sigma = 1.0;  // prior std used by the NLL

  static WaveGlowConfig Desk();
  // Full-scale preset (8 WN layers, 256 channels); provided for completeness,
  // not exercised by the test suite.
  static WaveGlowConfig Full();

  void Validate() const;  // throws BadConfig
  nlohmann::json ToJson() const;
  static WaveGlowConfig FromJson(const nlohmann::json &j);
};

// Grouping of a waveform into channel vectors.  The result is channel-major
// [group, T] with column t holding samples group*t .. group*t+group-1; the
// tail is zero-padded and the original length recorded.
struct Squeezed {
  Tensor channels;   // [group, T]
  int64_t orig_len = 0;
};
Squeezed Squeeze(const std::vector<double> &audio, int64_t group = 8);
// Inverse permutation; orig_len < 0 keeps all group*T samples.
std::vector<double> Unsqueeze(const Tensor &channels, int64_t orig_len = -1);

class WaveGlowModel {
 public:
  WaveGlowModel(const WaveGlowConfig &cfg, uint64_t seed);

  const WaveGlowConfig &config() const { return cfg_; }
  ParamStore &params() { return params_; }
  const ParamStore &params() const { return params_; }

  struct Bound {
    std::unordered_map<std::string, ad::Var> vars;
    ad::Var at(const std::string &name) const;
  };
  Bound Bind(ad::Tape &tape) const;

  // Change-of-variables loss sum(z^2)/(2 sigma^2) - total_log_det on the
  // training tape.  audio is a raw sample vector; mel [F, n_mels] must
  // upsample to at least the padded audio length.
  ad::Var Nll(ad::Tape &tape, const Bound &bound,
              const std::vector<double> &audio, const Tensor &mel) const;

  struct ForwardOut {
    Tensor z;  // time-major [T, group]
    double log_det = 0;
    // Per-step contributions, two per flow (conv then coupling), summing to
    // log_det exactly.
    std::vector<double> step_log_dets;
    int64_t orig_len = 0;
  };
  ForwardOut Forward(const std::vector<double> &audio, const Tensor &mel) const;
  // Exact inverse of Forward; out_len < 0 keeps all samples.
  std::vector<double> Inverse(const Tensor &z, const Tensor &mel,
                              int64_t out_len = -1) const;

  // Draw z ~ N(0, sigma^2), invert the flow, clamp to [-1, 1] and truncate
  // to hop * n_frames samples.
  AudioClip Synthesize(const Tensor &mel, double sigma, uint64_t seed) const;

  // Throws SingularWeight when any mixing matrix has |det| < 1e-8; called at
  // load time and after optimizer steps.
  void CheckInvertible() const;

 private:
  Tensor CondFeatures(const Tensor &mel, int64_t padded_len) const;

  WaveGlowConfig cfg_;
  ParamStore params_;
};

}  // namespace aratts

#endif  // ARATTS_WAVEGLOW_H_
