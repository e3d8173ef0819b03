// aratts/optimizer.h

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

#ifndef ARATTS_OPTIMIZER_H_
#define ARATTS_OPTIMIZER_H_

#include <cstdint>
#include <string>
#include <unordered_map>

#include "aratts/params.h"
#include "aratts/tensor.h"

namespace aratts {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-6;
  double weight_decay = 1e-6;  // added to the gradient, not decoupled
};

// Adam with bias correction.  The decay term joins the raw gradient before
// the moment updates, and eps sits outside the square root:
//   theta -= lr * m_hat / (sqrt(v_hat) + eps)
class Adam {
 public:
  explicit Adam(AdamConfig cfg) : cfg_(cfg) {}
  Adam() : Adam(AdamConfig{}) {}

  // Updates every trainable entry of the store.  grads must hold a tensor of
  // matching shape for each of them; extra entries are ignored.
  void Step(ParamStore &params,
            const std::unordered_map<std::string, Tensor> &grads);

  int64_t step_count() const { return t_; }
  const AdamConfig &config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  int64_t t_ = 0;
  std::unordered_map<std::string, Tensor> m_;
  std::unordered_map<std::string, Tensor> v_;
};

}  // namespace aratts

#endif  // ARATTS_OPTIMIZER_H_
