// tests/dsp_test.cc

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

#include "aratts/dsp.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "aratts/error.h"
#include "aratts/resample.h"
#include "aratts/rng.h"
#include "doctest.h"

using aratts::AudioClip;
using aratts::CounterRng;
using aratts::Error;
using aratts::ErrorKind;
using aratts::HzToMel;
using aratts::kHopLength;
using aratts::kLogFloor;
using aratts::kNumMels;
using aratts::kPipelineSampleRate;
using aratts::MelFilterbank;
using aratts::MelSpectrogram;
using aratts::MelSpectrogramOf;
using aratts::MelToHz;
using aratts::Resample;
using aratts::Stft;
using aratts::Tensor;
using aratts::TrimResult;
using aratts::TrimSilence;

namespace {

AudioClip Sine(double freq, int sample_rate, int n, double amp = 1.0) {
  AudioClip c;
  c.sample_rate = sample_rate;
  c.samples.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    c.samples[static_cast<std::size_t>(i)] =
        amp * std::sin(2.0 * M_PI * freq * i / sample_rate);
  return c;
}

std::string TempStem(const std::string &name) {
  return std::string(std::getenv("TMPDIR") ? std::getenv("TMPDIR") : "/tmp") +
         "/aratts_dsp_test_" + name;
}

}  // namespace

TEST_CASE("mel scale formula") {
  CHECK(HzToMel(0.0) == 0.0);
  CHECK(HzToMel(700.0) == doctest::Approx(2595.0 * std::log10(2.0)).epsilon(1e-12));
  CHECK(HzToMel(700.0) == doctest::Approx(781.17).epsilon(1e-4));
  CHECK(MelToHz(HzToMel(3456.7)) == doctest::Approx(3456.7).epsilon(1e-9));
}

TEST_CASE("mel filterbank rows are non-negative and non-empty") {
  const Tensor fb = MelFilterbank(80, 1024, 22050, 0.0, 8000.0);
  REQUIRE(fb.dim(0) == 80);
  REQUIRE(fb.dim(1) == 513);
  for (int64_t m = 0; m < fb.dim(0); ++m) {
    double row_max = 0.0;
    for (int64_t k = 0; k < fb.dim(1); ++k) {
      CHECK(fb.at(m, k) >= 0.0);
      row_max = std::max(row_max, fb.at(m, k));
    }
    CHECK(row_max > 0.0);
  }
}

TEST_CASE("mel filterbank triangles have unit area over Hz") {
  const Tensor fb = MelFilterbank(8, 1024, 22050, 0.0, 8000.0);
  // Sampled triangle area: sum over bins times bin spacing approximates the
  // continuous unit integral.  Coarse grid, coarse tolerance.
  const double bin_hz = 22050.0 / 1024.0;
  for (int64_t m = 2; m < fb.dim(0); ++m) {  // wide triangles only
    double area = 0.0;
    for (int64_t k = 0; k < fb.dim(1); ++k) area += fb.at(m, k) * bin_hz;
    CHECK(area == doctest::Approx(1.0).epsilon(0.08));
  }
}

TEST_CASE("stft frame count follows the centered-frame formula") {
  AudioClip c = Sine(440.0, kPipelineSampleRate, kPipelineSampleRate);
  const Tensor m = Stft(c.samples, 1024, 256);
  CHECK(m.dim(0) == 87);  // 1 + floor(22050 / 256)
  CHECK(m.dim(1) == 513);
}

TEST_CASE("stft of silence is zero and of dc is the window transform") {
  std::vector<double> zeros(3000, 0.0);
  const Tensor zm = Stft(zeros, 1024, 256);
  for (int64_t i = 0; i < zm.numel(); ++i) CHECK(zm[i] == 0.0);

  std::vector<double> ones(2048, 1.0);
  const Tensor dm = Stft(ones, 1024, 256);
  for (int64_t t = 0; t < dm.dim(0); ++t) {
    // Periodic Hann sums to N/2; its transform also leaks 0.25 N into the
    // two first-neighbour bins, and nothing anywhere else.
    CHECK(dm.at(t, 0) == doctest::Approx(512.0).epsilon(1e-9));
    CHECK(dm.at(t, 1) == doctest::Approx(256.0).epsilon(1e-9));
    for (int64_t k = 2; k < dm.dim(1); ++k)
      CHECK(dm.at(t, k) < 1e-6);
  }
}

TEST_CASE("pure tone at a bin center dominates that bin") {
  // Bin 32 of a 1024-point transform: period exactly 32 samples.
  AudioClip c = Sine(32.0 * 22050.0 / 1024.0, 22050, 8192);
  const Tensor m = Stft(c.samples, 1024, 256);
  for (int64_t t = 4; t < m.dim(0) - 4; ++t) {
    int64_t argmax = 0;
    for (int64_t k = 1; k < m.dim(1); ++k)
      if (m.at(t, k) > m.at(t, argmax)) argmax = k;
    CHECK(argmax == 32);
  }
}

TEST_CASE("stft satisfies parseval within tolerance") {
  CounterRng rng(7, CounterRng::StreamOf("parseval"));
  std::vector<double> x(22050);
  for (auto &v : x) v = rng.NextUniform() - 0.5;

  const int N = 1024, hop = 256;
  const Tensor m = Stft(x, N, hop);

  // Recompute the windowed frames directly for the time-domain side.
  const std::vector<double> w = aratts::HannWindow(N);
  auto reflect = [&x](long i) {
    const long n = static_cast<long>(x.size());
    const long period = 2 * n - 2;
    long j = i % period;
    if (j < 0) j += period;
    if (j >= n) j = period - j;
    return x[static_cast<std::size_t>(j)];
  };
  double time_energy = 0.0;
  for (int64_t t = 0; t < m.dim(0); ++t)
    for (int i = 0; i < N; ++i) {
      const double v = reflect(static_cast<long>(t) * hop - N / 2 + i) *
                       w[static_cast<std::size_t>(i)];
      time_energy += v * v;
    }

  double spec_energy = 0.0;
  for (int64_t t = 0; t < m.dim(0); ++t) {
    double acc = m.at(t, 0) * m.at(t, 0) + m.at(t, 512) * m.at(t, 512);
    for (int64_t k = 1; k < 512; ++k) acc += 2.0 * m.at(t, k) * m.at(t, k);
    spec_energy += acc / N;
  }
  CHECK(spec_energy == doctest::Approx(time_energy).epsilon(0.05));
}

TEST_CASE("mel spectrogram floor, log-linearity, and shape") {
  AudioClip zeros;
  zeros.sample_rate = kPipelineSampleRate;
  zeros.samples.assign(4096, 0.0);
  const MelSpectrogram mz = MelSpectrogramOf(zeros);
  CHECK(mz.values.dim(0) == 1 + 4096 / kHopLength);
  CHECK(mz.values.dim(1) == kNumMels);
  for (int64_t i = 0; i < mz.values.numel(); ++i)
    CHECK(mz.values[i] == doctest::Approx(std::log(kLogFloor)).epsilon(1e-12));

  AudioClip tone = Sine(440.0, kPipelineSampleRate, 8192, 0.4);
  AudioClip tone2 = tone;
  for (auto &v : tone2.samples) v *= 2.0;
  const MelSpectrogram a = MelSpectrogramOf(tone);
  const MelSpectrogram b = MelSpectrogramOf(tone2);
  for (int64_t i = 0; i < a.values.numel(); ++i) {
    if (a.values[i] > std::log(kLogFloor) + 1e-9 &&
        b.values[i] > std::log(kLogFloor) + 1e-9) {
      CHECK(b.values[i] - a.values[i] ==
            doctest::Approx(std::log(2.0)).epsilon(1e-6));
    }
  }
}

TEST_CASE("mel spectrogram shifts by one frame when input shifts one hop") {
  CounterRng rng(21, CounterRng::StreamOf("shift"));
  AudioClip c;
  c.sample_rate = kPipelineSampleRate;
  c.samples.resize(6000);
  for (auto &v : c.samples) v = rng.NextUniform() - 0.5;

  AudioClip shifted;
  shifted.sample_rate = c.sample_rate;
  shifted.samples.assign(kHopLength, 0.0);
  shifted.samples.insert(shifted.samples.end(), c.samples.begin(),
                         c.samples.end());

  const MelSpectrogram a = MelSpectrogramOf(c);
  const MelSpectrogram s = MelSpectrogramOf(shifted);
  // Interior frames: window must stay inside the unpadded signal on both.
  const int64_t t_lo = 2;
  const int64_t t_hi = (6000 - 512) / kHopLength - 1;
  for (int64_t t = t_lo; t <= t_hi; ++t)
    for (int64_t m = 0; m < kNumMels; ++m)
      CHECK(a.values.at(t, m) == s.values.at(t + 1, m));
}

TEST_CASE("trim keeps a loud middle and reports boundaries within one hop") {
  const int sr = kPipelineSampleRate;
  const int lead = sr / 2, tone_len = sr, tail = sr / 2;
  AudioClip c;
  c.sample_rate = sr;
  c.samples.assign(static_cast<std::size_t>(lead), 0.0);
  const AudioClip tone = Sine(440.0, sr, tone_len, 0.9);
  c.samples.insert(c.samples.end(), tone.samples.begin(), tone.samples.end());
  c.samples.insert(c.samples.end(), static_cast<std::size_t>(tail), 0.0);

  const TrimResult r = TrimSilence(c);
  CHECK(std::llabs(static_cast<long long>(r.start) - lead) <= 256);
  CHECK(std::llabs(static_cast<long long>(r.end) - (lead + tone_len)) <= 256);
  // Contiguous slice of the input.
  REQUIRE(r.end <= c.samples.size());
  REQUIRE(r.start < r.end);
  CHECK(r.clip.samples.size() == r.end - r.start);
  for (std::size_t i = 0; i < r.clip.samples.size(); ++i)
    CHECK(r.clip.samples[i] == c.samples[r.start + i]);
}

TEST_CASE("trim passes a clip that is loud everywhere through unchanged") {
  const AudioClip c = Sine(220.0, 22050, 8000, 0.8);
  const TrimResult r = TrimSilence(c);
  CHECK(r.start == 0);
  CHECK(r.end == c.samples.size());
  CHECK(r.clip.samples == c.samples);
}

TEST_CASE("trim raises on silence") {
  AudioClip c;
  c.sample_rate = 22050;
  c.samples.assign(10000, 0.0);
  try {
    TrimSilence(c);
    FAIL("expected AllSilent");
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::kAllSilent);
  }
}

TEST_CASE("resample identity and length contract") {
  const AudioClip c = Sine(440.0, 22050, 1000);
  const AudioClip same = Resample(c, 22050);
  CHECK(same.samples == c.samples);

  const AudioClip src = Sine(1000.0, 48000, 48000);
  const AudioClip down = Resample(src, 22050);
  CHECK(down.sample_rate == 22050);
  CHECK(down.samples.size() == 22050);
  for (double v : down.samples) {
    CHECK(v <= 1.0);
    CHECK(v >= -1.0);
  }
}

TEST_CASE("resampled tone keeps its frequency") {
  const AudioClip src = Sine(1000.0, 48000, 48000, 0.8);
  const AudioClip down = Resample(src, 22050);
  const Tensor m = Stft(down.samples, 1024, 256);
  const int64_t mid = m.dim(0) / 2;
  int64_t argmax = 0;
  for (int64_t k = 0; k < m.dim(1); ++k)
    if (m.at(mid, k) > m.at(mid, argmax)) argmax = k;
  // 1 kHz sits at bin 46.44; one-bin tolerance.
  CHECK((argmax == 46 || argmax == 47));
}

TEST_CASE("mel sidecar round-trips through f32 storage") {
  CounterRng rng(5, CounterRng::StreamOf("sidecar"));
  AudioClip c;
  c.sample_rate = kPipelineSampleRate;
  c.samples.resize(5000);
  for (auto &v : c.samples) v = rng.NextUniform() - 0.5;
  const MelSpectrogram mel = MelSpectrogramOf(c);

  const std::string stem = TempStem("sidecar");
  SaveMel(mel, stem);
  const MelSpectrogram back = aratts::LoadMel(stem);
  CHECK(back.n_mels == mel.n_mels);
  CHECK(back.hop == mel.hop);
  CHECK(back.frame_length == mel.frame_length);
  CHECK(back.sample_rate == mel.sample_rate);
  REQUIRE(back.values.SameShape(mel.values));
  for (int64_t i = 0; i < mel.values.numel(); ++i)
    CHECK(back.values[i] ==
          doctest::Approx(mel.values[i]).epsilon(1e-6));

  // Truncated payload must be caught by the header length check.
  {
    std::ifstream is(stem + ".bin", std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(is)),
                      std::istreambuf_iterator<char>());
    bytes.resize(bytes.size() - 4);
    std::ofstream os(stem + ".bin", std::ios::binary | std::ios::trunc);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  try {
    aratts::LoadMel(stem);
    FAIL("expected shape conflict");
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::kShapeConflict);
  }
  std::remove((stem + ".json").c_str());
  std::remove((stem + ".bin").c_str());
}
