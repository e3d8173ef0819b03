// aratts/tensor.cc

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

#include "aratts/tensor.h"

#include <cmath>
#include <sstream>

namespace aratts {

std::string Tensor::ShapeStr() const {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape_.size(); ++i) {
    if (i) os << "x";
    os << shape_[i];
  }
  os << "]";
  return os.str();
}

bool AllFinite(const Tensor &t) {
  for (double v : t.vec())
    if (!std::isfinite(v)) return false;
  return true;
}

void CheckFinite(const Tensor &t, const char *what) {
  if (!AllFinite(t))
    Throw(ErrorKind::kNonFinite,
          std::string("non-finite value in ") + what + " " + t.ShapeStr());
}

}  // namespace aratts
