// aratts/dsp.h

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

#ifndef ARATTS_DSP_H_
#define ARATTS_DSP_H_

#include <cstddef>
#include <string>
#include <vector>

#include "aratts/tensor.h"
#include "aratts/wav.h"

namespace aratts {

// Analysis parameters shared by preprocessing, training targets and synthesis.
constexpr int kPipelineSampleRate = 22050;
constexpr int kFrameLength = 1024;
constexpr int kHopLength = 256;
constexpr int kNumMels = 80;
constexpr double kMelFminHz = 0.0;
constexpr double kMelFmaxHz = 8000.0;
// Amplitudes are compressed as ln(max(x, kLogFloor)).
constexpr double kLogFloor = 1e-5;
constexpr const char *kLogConvention = "ln(max(x,1e-5))";

struct MelParams {
  int frame_length = kFrameLength;
  int hop = kHopLength;
  int n_mels = kNumMels;
  double f_min = kMelFminHz;
  double f_max = kMelFmaxHz;
};

// Log-mel features for one clip.  values is [n_frames, n_mels]; every entry is
// at least ln(kLogFloor).
struct MelSpectrogram {
  Tensor values = Tensor({0, 0});
  int frame_length = kFrameLength;
  int hop = kHopLength;
  int n_mels = kNumMels;
  int sample_rate = kPipelineSampleRate;

  int64_t NumFrames() const { return values.dim(0); }
};

// HTK mel scale.
double HzToMel(double hz);
double MelToHz(double mel);

// Periodic Hann window of length n: w[i] = 0.5 - 0.5 cos(2 pi i / n).
std::vector<double> HannWindow(int n);

// Magnitude short-time Fourier transform, [n_frames, frame_length/2 + 1].
// The signal is reflection-padded by frame_length/2 on both sides so frame t
// is centered on sample t * hop; n_frames = 1 + floor(len / hop).
Tensor Stft(const std::vector<double> &samples, int frame_length, int hop);

// Triangular mel filterbank, [n_mels, frame_length/2 + 1].  Centers are
// uniformly spaced on the mel scale between f_min and f_max; each triangle is
// scaled to unit area over Hz.
Tensor MelFilterbank(int n_mels, int frame_length, int sample_rate,
                     double f_min, double f_max);

// Removes leading and trailing frames whose RMS sits more than threshold_db
// below the loudest frame, then sharpens each boundary to hop resolution
// inside the boundary frame.  [start, end) indexes the retained slice of the
// input.  Throws AllSilent when the peak frame RMS is at or below 1e-10.
struct TrimResult {
  AudioClip clip;
  std::size_t start = 0;
  std::size_t end = 0;
};
TrimResult TrimSilence(const AudioClip &clip, double threshold_db = 60.0,
                       int frame = 1024, int hop = 256);

// Full feature extraction: STFT magnitudes through the mel filterbank, then
// ln(max(x, kLogFloor)).
MelSpectrogram MelSpectrogramOf(const AudioClip &clip,
                                const MelParams &params = {});

// Sidecar storage: <stem>.json holds the header record, <stem>.bin holds the
// values row-major as little-endian 32-bit floats.  Loading goes through f32,
// so save/load is exact only at f32 precision.
void SaveMel(const MelSpectrogram &mel, const std::string &stem);
MelSpectrogram LoadMel(const std::string &stem);

}  // namespace aratts

#endif  // ARATTS_DSP_H_
