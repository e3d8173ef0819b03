// src/dsp.cc

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

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "aratts/error.h"
#include "json.hpp"

namespace aratts {

namespace {

bool IsPowerOfTwo(int n) { return n > 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2 FFT, n a power of two.
void Fft(std::vector<std::complex<double>> &a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * M_PI / static_cast<double>(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

// Magnitudes of the first n/2+1 DFT bins of a real frame.  Radix-2 FFT when
// the length allows, direct DFT otherwise.
void RealSpectrum(const std::vector<double> &frame, std::vector<double> *mags) {
  const std::size_t n = frame.size();
  const std::size_t bins = n / 2 + 1;
  mags->resize(bins);
  if (IsPowerOfTwo(static_cast<int>(n))) {
    std::vector<std::complex<double>> a(n);
    for (std::size_t i = 0; i < n; ++i) a[i] = frame[i];
    Fft(a);
    for (std::size_t k = 0; k < bins; ++k) (*mags)[k] = std::abs(a[k]);
    return;
  }
  for (std::size_t k = 0; k < bins; ++k) {
    double re = 0.0, im = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double ang = -2.0 * M_PI * static_cast<double>(k) *
                         static_cast<double>(i) / static_cast<double>(n);
      re += frame[i] * std::cos(ang);
      im += frame[i] * std::sin(ang);
    }
    (*mags)[k] = std::hypot(re, im);
  }
}

// Reflection indexing without edge repetition: ... x2 x1 | x0 x1 ... xn-1 | xn-2 ...
std::size_t ReflectIndex(long i, std::size_t n) {
  if (n == 1) return 0;
  const long period = 2 * static_cast<long>(n) - 2;
  long j = i % period;
  if (j < 0) j += period;
  if (j >= static_cast<long>(n)) j = period - j;
  return static_cast<std::size_t>(j);
}

double BlockRms(const std::vector<double> &x, std::size_t begin,
                std::size_t end) {
  if (begin >= end) return 0.0;
  double acc = 0.0;
  for (std::size_t i = begin; i < end; ++i) acc += x[i] * x[i];
  return std::sqrt(acc / static_cast<double>(end - begin));
}

void PutF32Le(std::ofstream &os, float v) {
  std::uint32_t u;
  static_assert(sizeof(u) == sizeof(v));
  std::memcpy(&u, &v, sizeof(u));
  unsigned char b[4] = {static_cast<unsigned char>(u & 0xFF),
                        static_cast<unsigned char>((u >> 8) & 0xFF),
                        static_cast<unsigned char>((u >> 16) & 0xFF),
                        static_cast<unsigned char>((u >> 24) & 0xFF)};
  os.write(reinterpret_cast<const char *>(b), 4);
}

float GetF32Le(const unsigned char *b) {
  const std::uint32_t u = static_cast<std::uint32_t>(b[0]) |
                          (static_cast<std::uint32_t>(b[1]) << 8) |
                          (static_cast<std::uint32_t>(b[2]) << 16) |
                          (static_cast<std::uint32_t>(b[3]) << 24);
  float v;
  std::memcpy(&v, &u, sizeof(v));
  return v;
}

}  // namespace

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double MelToHz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

std::vector<double> HannWindow(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    w[static_cast<std::size_t>(i)] =
        0.5 - 0.5 * std::cos(2.0 * M_PI * i / static_cast<double>(n));
  return w;
}

Tensor Stft(const std::vector<double> &samples, int frame_length, int hop) {
  if (samples.empty()) Throw(ErrorKind::kShapeMismatch, "stft: empty signal");
  if (frame_length <= 0 || hop <= 0 || frame_length < hop)
    Throw(ErrorKind::kBadConfig, "stft: need frame_length >= hop > 0");

  const std::size_t n = samples.size();
  const int pad = frame_length / 2;
  const std::size_t n_frames = 1 + n / static_cast<std::size_t>(hop);
  const std::size_t bins = static_cast<std::size_t>(frame_length) / 2 + 1;
  const std::vector<double> window = HannWindow(frame_length);

  Tensor out(
      {static_cast<int64_t>(n_frames), static_cast<int64_t>(bins)});
  std::vector<double> frame(static_cast<std::size_t>(frame_length));
  std::vector<double> mags;
  for (std::size_t t = 0; t < n_frames; ++t) {
    const long start = static_cast<long>(t) * hop - pad;
    for (int i = 0; i < frame_length; ++i)
      frame[static_cast<std::size_t>(i)] =
          samples[ReflectIndex(start + i, n)] *
          window[static_cast<std::size_t>(i)];
    RealSpectrum(frame, &mags);
    for (std::size_t k = 0; k < bins; ++k) out.at(t, k) = mags[k];
  }
  return out;
}

Tensor MelFilterbank(int n_mels, int frame_length, int sample_rate,
                     double f_min, double f_max) {
  if (n_mels <= 0 || frame_length <= 0 || sample_rate <= 0)
    Throw(ErrorKind::kBadConfig, "mel filterbank: non-positive size");
  if (!(0.0 <= f_min && f_min < f_max && f_max <= sample_rate / 2.0))
    Throw(ErrorKind::kBadConfig,
          "mel filterbank: need 0 <= f_min < f_max <= nyquist");

  const std::size_t bins = static_cast<std::size_t>(frame_length) / 2 + 1;
  // n_mels + 2 edge points, uniform in mel.
  std::vector<double> hz(static_cast<std::size_t>(n_mels) + 2);
  const double mel_lo = HzToMel(f_min), mel_hi = HzToMel(f_max);
  for (std::size_t m = 0; m < hz.size(); ++m)
    hz[m] = MelToHz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(m) /
                                 static_cast<double>(n_mels + 1));

  Tensor fb({n_mels, static_cast<int64_t>(bins)});
  for (int m = 0; m < n_mels; ++m) {
    const double lo = hz[static_cast<std::size_t>(m)];
    const double ctr = hz[static_cast<std::size_t>(m) + 1];
    const double hi = hz[static_cast<std::size_t>(m) + 2];
    const double area_scale = 2.0 / (hi - lo);
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate /
                       static_cast<double>(frame_length);
      double w = 0.0;
      if (f > lo && f < hi)
        w = (f <= ctr) ? (f - lo) / (ctr - lo) : (hi - f) / (hi - ctr);
      fb.at(static_cast<std::size_t>(m), k) = w * area_scale;
    }
  }
  return fb;
}

TrimResult TrimSilence(const AudioClip &clip, double threshold_db, int frame,
                       int hop) {
  if (clip.samples.empty())
    Throw(ErrorKind::kShapeMismatch, "trim: empty clip");
  if (frame <= 0 || hop <= 0 || frame < hop)
    Throw(ErrorKind::kBadConfig, "trim: need frame >= hop > 0");

  const std::vector<double> &x = clip.samples;
  const std::size_t n = x.size();
  const std::size_t uhop = static_cast<std::size_t>(hop);
  const std::size_t uframe = static_cast<std::size_t>(frame);

  std::vector<double> rms;
  for (std::size_t s = 0; s < n; s += uhop)
    rms.push_back(BlockRms(x, s, std::min(n, s + uframe)));
  const double peak = *std::max_element(rms.begin(), rms.end());
  if (peak <= 1e-10)
    Throw(ErrorKind::kAllSilent, "trim: no frame above the silence floor");
  const double threshold = peak * std::pow(10.0, -threshold_db / 20.0);

  std::size_t f0 = 0, f1 = rms.size() - 1;
  while (rms[f0] < threshold) ++f0;
  while (rms[f1] < threshold) --f1;

  // The loud frame's mean square is a weighted mean of its hop blocks', so at
  // least one block inside it reaches the threshold.
  std::size_t start = f0 * uhop;
  for (std::size_t s = f0 * uhop; s < std::min(n, f0 * uhop + uframe);
       s += uhop) {
    if (BlockRms(x, s, std::min(n, s + uhop)) >= threshold) {
      start = s;
      break;
    }
  }
  std::size_t end = std::min(n, f1 * uhop + uframe);
  for (std::size_t s = f1 * uhop; s < std::min(n, f1 * uhop + uframe);
       s += uhop) {
    if (BlockRms(x, s, std::min(n, s + uhop)) >= threshold)
      end = std::min(n, s + uhop);
  }

  TrimResult r;
  r.start = start;
  r.end = end;
  r.clip.sample_rate = clip.sample_rate;
  r.clip.samples.assign(x.begin() + static_cast<long>(start),
                        x.begin() + static_cast<long>(end));
  return r;
}

MelSpectrogram MelSpectrogramOf(const AudioClip &clip,
                                const MelParams &params) {
  const Tensor mags = Stft(clip.samples, params.frame_length, params.hop);
  const Tensor fb = MelFilterbank(params.n_mels, params.frame_length,
                                  clip.sample_rate, params.f_min, params.f_max);
  const int64_t n_frames = mags.dim(0);
  const int64_t bins = mags.dim(1);
  const int64_t n_mels = fb.dim(0);

  MelSpectrogram mel;
  mel.frame_length = params.frame_length;
  mel.hop = params.hop;
  mel.n_mels = params.n_mels;
  mel.sample_rate = clip.sample_rate;
  mel.values = Tensor({n_frames, n_mels});
  for (int64_t t = 0; t < n_frames; ++t) {
    for (int64_t m = 0; m < n_mels; ++m) {
      double acc = 0.0;
      for (int64_t k = 0; k < bins; ++k)
        acc += fb.at(m, k) * mags.at(t, k);
      mel.values.at(t, m) = std::log(std::max(acc, kLogFloor));
    }
  }
  return mel;
}

void SaveMel(const MelSpectrogram &mel, const std::string &stem) {
  nlohmann::json header;
  header["n_frames"] = mel.values.dim(0);
  header["n_mels"] = mel.n_mels;
  header["hop"] = mel.hop;
  header["frame_length"] = mel.frame_length;
  header["sample_rate"] = mel.sample_rate;
  header["log_convention"] = kLogConvention;

  {
    std::ofstream os(stem + ".json");
    if (!os) Throw(ErrorKind::kIo, "cannot write " + stem + ".json");
    os << header.dump(2) << "\n";
    if (!os) Throw(ErrorKind::kIo, "short write to " + stem + ".json");
  }
  {
    std::ofstream os(stem + ".bin", std::ios::binary);
    if (!os) Throw(ErrorKind::kIo, "cannot write " + stem + ".bin");
    for (double v : mel.values.vec()) PutF32Le(os, static_cast<float>(v));
    if (!os) Throw(ErrorKind::kIo, "short write to " + stem + ".bin");
  }
}

MelSpectrogram LoadMel(const std::string &stem) {
  std::ifstream js(stem + ".json");
  if (!js) Throw(ErrorKind::kIo, "cannot read " + stem + ".json");
  nlohmann::json header;
  try {
    js >> header;
  } catch (const nlohmann::json::exception &e) {
    Throw(ErrorKind::kBadConfig, std::string("bad mel header: ") + e.what());
  }

  MelSpectrogram mel;
  std::size_t n_frames = 0;
  try {
    n_frames = header.at("n_frames").get<std::size_t>();
    mel.n_mels = header.at("n_mels").get<int>();
    mel.hop = header.at("hop").get<int>();
    mel.frame_length = header.at("frame_length").get<int>();
    mel.sample_rate = header.at("sample_rate").get<int>();
  } catch (const nlohmann::json::exception &e) {
    Throw(ErrorKind::kBadConfig, std::string("bad mel header: ") + e.what());
  }
  if (mel.n_mels <= 0)
    Throw(ErrorKind::kBadConfig, "bad mel header: n_mels must be positive");

  std::ifstream bs(stem + ".bin", std::ios::binary);
  if (!bs) Throw(ErrorKind::kIo, "cannot read " + stem + ".bin");
  std::vector<unsigned char> raw((std::istreambuf_iterator<char>(bs)),
                                 std::istreambuf_iterator<char>());
  const std::size_t want = n_frames * static_cast<std::size_t>(mel.n_mels) * 4;
  if (raw.size() != want)
    Throw(ErrorKind::kShapeConflict,
          "mel payload is " + std::to_string(raw.size()) + " bytes, header implies " +
              std::to_string(want));

  mel.values = Tensor({static_cast<int64_t>(n_frames), mel.n_mels});
  for (std::size_t i = 0; i < n_frames * static_cast<std::size_t>(mel.n_mels); ++i)
    mel.values.vec()[i] = static_cast<double>(GetF32Le(raw.data() + 4 * i));
  return mel;
}

}  // namespace aratts
