// aratts/checkpoint.h

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

#ifndef ARATTS_CHECKPOINT_H_
#define ARATTS_CHECKPOINT_H_

#include <string>
#include <unordered_map>
#include <vector>

#include "aratts/params.h"
#include "aratts/tensor.h"

// Named-tensor checkpoint file.  Layout: magic "ATTS", u32 version, u32
// tensor count, then per tensor a u16 name length, the UTF-8 name, a u8
// dtype code (0 = f32, 1 = f64), a u8 rank, u32 dims and raw little-endian
// data; finally a u32-length-prefixed UTF-8 JSON metadata blob.  Tensors are
// written in store order as f64, so save -> load -> save is byte-identical.
namespace aratts {

void SaveCheckpoint(const std::string &path, const ParamStore &params,
                    const std::string &metadata_json);

struct LoadedCheckpoint {
  std::vector<std::string> names;  // file order
  std::unordered_map<std::string, Tensor> tensors;
  std::string metadata_json;

  bool Has(const std::string &name) const { return tensors.count(name) != 0; }
  const Tensor &at(const std::string &name) const;
};

LoadedCheckpoint LoadCheckpoint(const std::string &path);

// Exact restore: every store entry must appear in the checkpoint with a
// matching shape and vice versa; throws ShapeConflict otherwise.
void RestoreParams(ParamStore &dst, const LoadedCheckpoint &src);

}  // namespace aratts

#endif  // ARATTS_CHECKPOINT_H_
