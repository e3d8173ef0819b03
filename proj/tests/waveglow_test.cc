// tests/waveglow_test.cc

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

#include "aratts/waveglow.h"

#include <cmath>
#include <vector>

#include "aratts/error.h"
#include "doctest.h"

using aratts::CounterRng;
using aratts::Error;
using aratts::ErrorKind;
using aratts::Squeeze;
using aratts::Squeezed;
using aratts::Tensor;
using aratts::Unsqueeze;
using aratts::WaveGlowConfig;
using aratts::WaveGlowModel;
namespace ad = aratts::ad;

namespace {

WaveGlowConfig TinyConfig() {
  WaveGlowConfig c;
  c.n_flows = 3;
  c.group = 8;
  c.wn_layers = 2;
  c.wn_channels = 8;
  c.wn_kernel = 3;
  c.n_mels = 6;
  c.hop = 16;
  c.upsample_kernel = 32;
  return c;
}

std::vector<double> ToneAudio(std::size_t n, uint64_t seed) {
  CounterRng rng(seed, CounterRng::StreamOf("tone"));
  std::vector<double> a(n);
  for (std::size_t i = 0; i < n; ++i)
    a[i] = 0.4 * std::sin(0.21 * static_cast<double>(i)) +
           0.05 * rng.NextGaussian();
  return a;
}

Tensor SmoothMel(int64_t frames, int64_t mels, uint64_t seed) {
  CounterRng rng(seed, CounterRng::StreamOf("mel"));
  return Tensor::Randn({frames, mels}, rng, 0.5);
}

// Mel rows sized so the upsampler covers `samples` exactly as ingestion
// would produce them: 1 + floor(len / hop).
Tensor MelFor(const WaveGlowConfig &c, std::size_t samples, uint64_t seed) {
  const int64_t frames =
      1 + static_cast<int64_t>(samples) / c.hop;
  return SmoothMel(frames, c.n_mels, seed);
}

double MaxAbsDiff(const std::vector<double> &a, const std::vector<double> &b) {
  REQUIRE(a.size() == b.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Puts every coupling away from its zero-initialized identity so round-trip
// tests exercise real scale and shift paths.
void RandomizeCouplings(WaveGlowModel &model, uint64_t seed) {
  CounterRng rng(seed, CounterRng::StreamOf("couplings"));
  for (int64_t i = 0; i < model.config().n_flows; ++i) {
    const std::string p = "flow" + std::to_string(i) + ".wn.out.";
    Tensor &w = model.params().Get(p + "w");
    w = Tensor::Randn(w.shape(), rng, 0.3);
    Tensor &b = model.params().Get(p + "b");
    b = Tensor::Randn(b.shape(), rng, 0.3);
  }
}

}  // namespace

TEST_CASE("squeeze maps samples to [group, t] columns and pads the tail") {
  std::vector<double> a(16);
  for (std::size_t i = 0; i < 16; ++i) a[i] = static_cast<double>(i);
  Squeezed s = Squeeze(a, 8);
  CHECK(s.channels.dim(0) == 8);
  CHECK(s.channels.dim(1) == 2);
  CHECK(s.orig_len == 16);
  for (int64_t c = 0; c < 8; ++c)
    for (int64_t t = 0; t < 2; ++t)
      CHECK(s.channels.at(c, t) == static_cast<double>(8 * t + c));

  Squeezed padded = Squeeze(std::vector<double>(17, 1.0), 8);
  CHECK(padded.channels.dim(1) == 3);
  CHECK(padded.orig_len == 17);
  CHECK(padded.channels.at(0, 2) == 1.0);   // sample 16
  CHECK(padded.channels.at(1, 2) == 0.0);   // padding
  CHECK(padded.channels.at(7, 2) == 0.0);
}

TEST_CASE("squeeze round-trips bit-exactly") {
  CounterRng rng(3, CounterRng::StreamOf("squeeze"));
  for (std::size_t n : {8u, 16u, 17u, 23u, 256u}) {
    std::vector<double> a(n);
    for (auto &x : a) x = rng.NextGaussian();
    Squeezed s = Squeeze(a, 8);
    const std::vector<double> back = Unsqueeze(s.channels, s.orig_len);
    REQUIRE(back.size() == n);
    CHECK(MaxAbsDiff(a, back) == 0.0);
  }
  // Without a length the zero padding is kept.
  Squeezed s = Squeeze(std::vector<double>(9, 2.0), 8);
  CHECK(Unsqueeze(s.channels).size() == 16);
}

TEST_CASE("mixing matrices initialize orthogonal with positive determinant") {
  WaveGlowModel model(TinyConfig(), 11);
  for (int64_t i = 0; i < model.config().n_flows; ++i) {
    const Tensor &w = model.params().Get("flow" + std::to_string(i) + ".conv.w");
    const int64_t n = w.dim(0);
    for (int64_t r = 0; r < n; ++r)
      for (int64_t c = 0; c < n; ++c) {
        double dot = 0.0;
        for (int64_t k = 0; k < n; ++k) dot += w.at(k, r) * w.at(k, c);
        CHECK(std::abs(dot - (r == c ? 1.0 : 0.0)) < 1e-10);
      }
  }
  model.CheckInvertible();  // must not throw
}

TEST_CASE("a fresh model is norm-preserving with zero log-determinant") {
  // Couplings start as the identity and the mixing matrices are orthogonal,
  // so the latent keeps the padded signal's energy and log det vanishes.
  WaveGlowConfig cfg = TinyConfig();
  WaveGlowModel model(cfg, 21);
  const std::vector<double> audio = ToneAudio(120, 1);
  const Tensor mel = MelFor(cfg, audio.size(), 2);
  WaveGlowModel::ForwardOut out = model.Forward(audio, mel);

  CHECK(out.orig_len == 120);
  CHECK(out.z.dim(0) == 15);  // ceil(120 / 8)
  CHECK(out.z.dim(1) == 8);
  CHECK(std::abs(out.log_det) < 1e-9);
  CHECK(out.step_log_dets.size() == 2 * static_cast<std::size_t>(cfg.n_flows));

  double zz = 0.0, xx = 0.0;
  for (int64_t i = 0; i < out.z.numel(); ++i) zz += out.z[i] * out.z[i];
  for (double v : audio) xx += v * v;
  CHECK(zz == doctest::Approx(xx).epsilon(1e-9));
}

TEST_CASE("per-step log-determinants sum to the total") {
  WaveGlowConfig cfg = TinyConfig();
  WaveGlowModel model(cfg, 33);
  RandomizeCouplings(model, 5);
  const std::vector<double> audio = ToneAudio(200, 7);
  const Tensor mel = MelFor(cfg, audio.size(), 8);
  WaveGlowModel::ForwardOut out = model.Forward(audio, mel);
  double sum = 0.0;
  for (double d : out.step_log_dets) sum += d;
  CHECK(sum == doctest::Approx(out.log_det).epsilon(1e-12));
  CHECK(std::abs(out.log_det) > 1e-6);  // couplings actually fired
}

TEST_CASE("scaling one mixing matrix shifts its log-determinant by n log s") {
  WaveGlowConfig cfg = TinyConfig();
  WaveGlowModel model(cfg, 8);
  const std::vector<double> audio = ToneAudio(96, 3);
  const Tensor mel = MelFor(cfg, audio.size(), 4);
  WaveGlowModel::ForwardOut before = model.Forward(audio, mel);

  Tensor &w = model.params().Get("flow1.conv.w");
  for (int64_t i = 0; i < w.numel(); ++i) w[i] *= 2.0;
  WaveGlowModel::ForwardOut after = model.Forward(audio, mel);

  const double t_cols = static_cast<double>(before.z.dim(0));
  const double want = t_cols * 8.0 * std::log(2.0);
  CHECK(after.step_log_dets[2] - before.step_log_dets[2] ==
        doctest::Approx(want).epsilon(1e-9));
}

TEST_CASE("forward then inverse reconstructs the waveform") {
  WaveGlowConfig cfg = TinyConfig();
  WaveGlowModel model(cfg, 55);
  RandomizeCouplings(model, 6);
  const std::vector<double> audio = ToneAudio(150, 9);
  const Tensor mel = MelFor(cfg, audio.size(), 10);
  WaveGlowModel::ForwardOut out = model.Forward(audio, mel);
  const std::vector<double> back = model.Inverse(out.z, mel, out.orig_len);
  REQUIRE(back.size() == audio.size());
  CHECK(MaxAbsDiff(audio, back) < 1e-10);
}

TEST_CASE("training loss equals the plain-kernel change-of-variables value") {
  // The tape graph and the plain Forward are two separate implementations;
  // the literal sum(z^2)/(2 sigma^2) - log_det must agree between them.
  WaveGlowConfig cfg = TinyConfig();
  cfg.sigma = 0.8;
  WaveGlowModel model(cfg, 15);
  RandomizeCouplings(model, 16);
  const std::vector<double> audio = ToneAudio(130, 17);
  const Tensor mel = MelFor(cfg, audio.size(), 18);

  ad::Tape t;
  WaveGlowModel::Bound bound = model.Bind(t);
  const double nll = t.value(model.Nll(t, bound, audio, mel))[0];

  WaveGlowModel::ForwardOut out = model.Forward(audio, mel);
  double zz = 0.0;
  for (int64_t i = 0; i < out.z.numel(); ++i) zz += out.z[i] * out.z[i];
  const double want = zz / (2.0 * cfg.sigma * cfg.sigma) - out.log_det;
  CHECK(nll == doctest::Approx(want).epsilon(1e-9));
}

TEST_CASE("the likelihood of silence under a fresh model is zero") {
  WaveGlowConfig cfg = TinyConfig();
  WaveGlowModel model(cfg, 2);
  const std::vector<double> audio(128, 0.0);
  const Tensor mel = MelFor(cfg, audio.size(), 3);
  ad::Tape t;
  WaveGlowModel::Bound bound = model.Bind(t);
  const double nll = t.value(model.Nll(t, bound, audio, mel))[0];
  CHECK(std::abs(nll) < 1e-12);
}

TEST_CASE("a singular mixing matrix is rejected") {
  WaveGlowModel model(TinyConfig(), 44);
  model.params().Get("flow0.conv.w").Fill(0.0);
  CHECK_THROWS_AS(model.CheckInvertible(), Error);
  try {
    model.CheckInvertible();
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::kSingularWeight);
  }
  const std::vector<double> audio = ToneAudio(64, 1);
  const Tensor mel = MelFor(TinyConfig(), audio.size(), 1);
  CHECK_THROWS_AS(model.Forward(audio, mel), Error);
}

TEST_CASE("synthesis length is hop times the frame count and sigma zero is seedless") {
  WaveGlowConfig cfg = TinyConfig();
  WaveGlowModel model(cfg, 29);
  RandomizeCouplings(model, 30);
  const Tensor mel = SmoothMel(9, cfg.n_mels, 31);

  const aratts::AudioClip a = model.Synthesize(mel, 0.0, 1);
  const aratts::AudioClip b = model.Synthesize(mel, 0.0, 999);
  CHECK(a.sample_rate == cfg.sample_rate);
  CHECK(a.samples.size() == static_cast<std::size_t>(9 * cfg.hop));
  CHECK(MaxAbsDiff(a.samples, b.samples) == 0.0);
  for (double v : a.samples) {
    CHECK(v <= 1.0);
    CHECK(v >= -1.0);
  }

  // With noise the seed matters and is reproducible.
  const aratts::AudioClip c = model.Synthesize(mel, 0.7, 5);
  const aratts::AudioClip d = model.Synthesize(mel, 0.7, 5);
  const aratts::AudioClip e = model.Synthesize(mel, 0.7, 6);
  CHECK(MaxAbsDiff(c.samples, d.samples) == 0.0);
  CHECK(MaxAbsDiff(c.samples, e.samples) > 0.0);
}

TEST_CASE("too-short conditioning is rejected") {
  WaveGlowConfig cfg = TinyConfig();
  WaveGlowModel model(cfg, 3);
  const std::vector<double> audio = ToneAudio(160, 2);
  // 160 padded samples need (F - 1) * 16 + 32 >= 160, so F >= 9.
  const Tensor mel = SmoothMel(8, cfg.n_mels, 4);
  CHECK_THROWS_AS(model.Forward(audio, mel), Error);
}

TEST_CASE("vocoder config json round-trips and rejects bad shapes") {
  WaveGlowConfig cfg = WaveGlowConfig::Desk();
  CHECK(cfg.n_flows == 12);
  CHECK(cfg.group == 8);
  const WaveGlowConfig back = WaveGlowConfig::FromJson(cfg.ToJson());
  CHECK(back.n_flows == cfg.n_flows);
  CHECK(back.wn_channels == cfg.wn_channels);
  CHECK(back.upsample_kernel == cfg.upsample_kernel);

  WaveGlowConfig bad = cfg;
  bad.group = 7;
  CHECK_THROWS_AS(bad.Validate(), Error);
  bad = cfg;
  bad.wn_kernel = 4;
  CHECK_THROWS_AS(bad.Validate(), Error);
  bad = cfg;
  bad.upsample_kernel = bad.hop - 1;
  CHECK_THROWS_AS(bad.Validate(), Error);
}
