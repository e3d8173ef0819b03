// aratts/params.h

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

#ifndef ARATTS_PARAMS_H_
#define ARATTS_PARAMS_H_

#include <string>
#include <unordered_map>
#include <vector>

#include "aratts/tensor.h"

namespace aratts {

// Named tensor table with deterministic (insertion) iteration order.
// Trainable entries receive optimizer updates; buffers such as batch-norm
// running statistics are checkpointed but never trained.
class ParamStore {
 public:
  Tensor &Add(const std::string &name, Tensor init, bool trainable = true);
  bool Has(const std::string &name) const;
  Tensor &Get(const std::string &name);
  const Tensor &Get(const std::string &name) const;
  bool Trainable(const std::string &name) const;
  const std::vector<std::string> &Names() const { return names_; }

 private:
  struct Entry {
    Tensor value;
    bool trainable;
  };
  std::vector<std::string> names_;
  std::unordered_map<std::string, Entry> entries_;
};

}  // namespace aratts

#endif  // ARATTS_PARAMS_H_
