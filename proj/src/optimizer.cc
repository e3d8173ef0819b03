// optimizer.cc

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

#include "aratts/optimizer.h"

#include <cmath>

#include "aratts/error.h"

namespace aratts {

void Adam::Step(ParamStore &params,
                const std::unordered_map<std::string, Tensor> &grads) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (const std::string &name : params.Names()) {
    if (!params.Trainable(name)) continue;
    Tensor &theta = params.Get(name);
    auto git = grads.find(name);
    if (git == grads.end())
      Throw(ErrorKind::kShapeMismatch, "adam: no gradient for " + name);
    const Tensor &grad = git->second;
    if (!(grad.shape() == theta.shape()))
      Throw(ErrorKind::kShapeMismatch, "adam: gradient shape mismatch for " + name);
    Tensor &m = m_.try_emplace(name, Tensor::Zeros(theta.shape())).first->second;
    Tensor &v = v_.try_emplace(name, Tensor::Zeros(theta.shape())).first->second;
    for (int64_t i = 0; i < theta.numel(); ++i) {
      const double g = grad[i] + cfg_.weight_decay * theta[i];
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      theta[i] -= cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
    }
  }
}

}  // namespace aratts
