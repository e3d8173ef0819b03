// src/resample.cc

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

#include "aratts/resample.h"

#include <cmath>
#include <cstddef>

#include "aratts/error.h"

namespace aratts {

namespace {

constexpr int kTapsPerPhase = 64;  // filter support in input samples
constexpr double kKaiserBeta = 8.6;

// Zeroth-order modified Bessel function of the first kind, power series.
double BesselI0(double x) {
  const double q = x * x / 4.0;
  double term = 1.0, sum = 1.0;
  for (int k = 1; k < 64; ++k) {
    term *= q / (static_cast<double>(k) * k);
    sum += term;
    if (term < sum * 1e-21) break;
  }
  return sum;
}

// Kaiser window evaluated at u in [-1, 1]; zero outside.
double Kaiser(double u) {
  const double t = 1.0 - u * u;
  if (t <= 0.0) return 0.0;
  return BesselI0(kKaiserBeta * std::sqrt(t)) / BesselI0(kKaiserBeta);
}

double Sinc(double u) {
  if (std::abs(u) < 1e-12) return 1.0;
  const double pu = M_PI * u;
  return std::sin(pu) / pu;
}

}  // namespace

AudioClip Resample(const AudioClip &clip, int target_rate) {
  if (target_rate <= 0) Throw(ErrorKind::kBadConfig, "resample: target rate must be positive");
  if (clip.sample_rate == target_rate) return clip;

  AudioClip out;
  out.sample_rate = target_rate;
  if (clip.samples.empty()) return out;

  const double ratio = static_cast<double>(clip.sample_rate) / target_rate;
  // Cutoff at the lower of the two Nyquist frequencies, in cycles per input
  // sample.  Downsampling also uses the cutoff as the passband gain so the
  // kernel stays a unit-DC-gain low-pass.
  const double cutoff = 0.5 * std::min(1.0, 1.0 / ratio);
  const int half = kTapsPerPhase / 2;

  const std::size_t n_in = clip.samples.size();
  const std::size_t n_out = static_cast<std::size_t>(
      std::llround(static_cast<double>(n_in) * target_rate / clip.sample_rate));
  out.samples.resize(n_out);

  for (std::size_t n = 0; n < n_out; ++n) {
    const double center = static_cast<double>(n) * ratio;
    const long first = static_cast<long>(std::ceil(center)) - half;
    double acc = 0.0;
    for (long i = first; i < first + kTapsPerPhase; ++i) {
      if (i < 0 || i >= static_cast<long>(n_in)) continue;
      const double x = static_cast<double>(i) - center;
      acc += clip.samples[static_cast<std::size_t>(i)] * 2.0 * cutoff *
             Sinc(2.0 * cutoff * x) * Kaiser(x / half);
    }
    if (acc > 1.0) acc = 1.0;
    if (acc < -1.0) acc = -1.0;
    out.samples[n] = acc;
  }
  return out;
}

}  // namespace aratts
