// aratts/wav.h

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

#ifndef ARATTS_WAV_H_
#define ARATTS_WAV_H_

#include <string>
#include <vector>

namespace aratts {

// Time-domain waveform.  Samples are in [-1, 1] after ingestion.
struct AudioClip {
  std::vector<double> samples;
  int sample_rate = 0;

  double DurationSeconds() const {
    return sample_rate > 0
               ? static_cast<double>(samples.size()) / sample_rate
               : 0.0;
  }
};

// Reads a RIFF/WAVE file with 16-bit integer PCM; multi-channel input keeps
// channel 0.  Samples are integer / 32768 exactly.  Throws kMalformedWav on
// container damage and kUnsupportedEncoding for any format other than 16-bit
// PCM.
AudioClip LoadWav(const std::string &path);

// Writes mono 16-bit PCM.  Quantization is round(sample * 32768) clamped to
// the int16 range, the exact inverse of the LoadWav scale, so
// WriteWav(LoadWav(f)) reproduces f's sample payload byte for byte.
void WriteWav(const std::string &path, const AudioClip &clip);

}  // namespace aratts

#endif  // ARATTS_WAV_H_
