// aratts/resample.h

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

#ifndef ARATTS_RESAMPLE_H_
#define ARATTS_RESAMPLE_H_

#include "aratts/wav.h"

namespace aratts {

// Band-limited sample-rate conversion: polyphase windowed sinc, Kaiser window
// with beta 8.6, 64 taps per phase.  Output length is
// round(len * target / source); the result is clamped to [-1, 1].
// target_rate == source rate returns the input unchanged.
AudioClip Resample(const AudioClip &clip, int target_rate);

}  // namespace aratts

#endif  // ARATTS_RESAMPLE_H_
