// aratts/tensor.h

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

#ifndef ARATTS_TENSOR_H_
#define ARATTS_TENSOR_H_

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "aratts/error.h"
#include "aratts/rng.h"

namespace aratts {

// Dense row-major tensor of doubles.  Rank 1..3 covers everything the
// networks need.  A Tensor is a plain value; gradients live next to the
// values they belong to (ad::Tape nodes, Parameter).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int64_t> shape)
      : shape_(std::move(shape)), data_(CheckedNumel(shape_), 0.0) {}
  Tensor(std::vector<int64_t> shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (static_cast<int64_t>(data_.size()) != CheckedNumel(shape_))
      Throw(ErrorKind::kShapeMismatch, "tensor data length != product of shape");
  }

  static Tensor Zeros(std::vector<int64_t> shape) { return Tensor(std::move(shape)); }
  static Tensor Full(std::vector<int64_t> shape, double v) {
    Tensor t(std::move(shape));
    for (auto &x : t.data_) x = v;
    return t;
  }
  static Tensor Randn(std::vector<int64_t> shape, CounterRng &rng,
                      double stddev = 1.0) {
    Tensor t(std::move(shape));
    for (auto &x : t.data_) x = stddev * rng.NextGaussian();
    return t;
  }
  static Tensor Uniform(std::vector<int64_t> shape, CounterRng &rng, double lo,
                        double hi) {
    Tensor t(std::move(shape));
    for (auto &x : t.data_) x = lo + (hi - lo) * rng.NextUniform();
    return t;
  }
  static Tensor FromVector(const std::vector<double> &v) {
    return Tensor({static_cast<int64_t>(v.size())}, v);
  }

  const std::vector<int64_t> &shape() const { return shape_; }
  int64_t rank() const { return static_cast<int64_t>(shape_.size()); }
  int64_t dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  int64_t numel() const { return static_cast<int64_t>(data_.size()); }

  double *data() { return data_.data(); }
  const double *data() const { return data_.data(); }
  std::vector<double> &vec() { return data_; }
  const std::vector<double> &vec() const { return data_; }

  double &operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  // 2-D accessors.
  double &at(int64_t r, int64_t c) { return data_[static_cast<size_t>(r * shape_[1] + c)]; }
  double at(int64_t r, int64_t c) const { return data_[static_cast<size_t>(r * shape_[1] + c)]; }
  // 3-D accessors.
  double &at(int64_t a, int64_t b, int64_t c) {
    return data_[static_cast<size_t>((a * shape_[1] + b) * shape_[2] + c)];
  }
  double at(int64_t a, int64_t b, int64_t c) const {
    return data_[static_cast<size_t>((a * shape_[1] + b) * shape_[2] + c)];
  }

  bool SameShape(const Tensor &o) const { return shape_ == o.shape_; }

  void Fill(double v) {
    for (auto &x : data_) x = v;
  }

  std::string ShapeStr() const;

 private:
  static int64_t CheckedNumel(const std::vector<int64_t> &shape) {
    int64_t n = 1;
    for (int64_t d : shape) {
      if (d < 0) Throw(ErrorKind::kShapeMismatch, "negative dimension");
      n *= d;
    }
    return n;
  }

  std::vector<int64_t> shape_;
  std::vector<double> data_;
};

// True if every entry is finite.
bool AllFinite(const Tensor &t);

// Throws kNonFinite naming `what` if any entry is NaN/Inf.
void CheckFinite(const Tensor &t, const char *what);

}  // namespace aratts

#endif  // ARATTS_TENSOR_H_
