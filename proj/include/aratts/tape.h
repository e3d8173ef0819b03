// aratts/tape.h

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

#ifndef ARATTS_TAPE_H_
#define ARATTS_TAPE_H_

#include <cstdint>
#include <functional>
#include <vector>

#include "aratts/rng.h"
#include "aratts/tensor.h"

// Reverse-mode autodiff on a dynamic tape.  A Tape is built fresh each
// training step; ops append nodes in topological order, so walking ids from
// the loss down to zero is a valid reverse traversal.  Every op checks its
// output for NaN/Inf and throws NonFinite instead of propagating poison.
namespace aratts::ad {

// Variance floor shared by the tape batch norm and the plain eval path.
inline constexpr double kBatchNormEps = 1e-5;

struct Var {
  int32_t id = -1;
  bool valid() const { return id >= 0; }
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape &) = delete;
  Tape &operator=(const Tape &) = delete;

  // Leaves.  Gradients accumulate only into nodes downstream of a
  // requires_grad leaf; Constant marks pure data.
  Var Leaf(Tensor value, bool requires_grad = true);
  Var Constant(Tensor value) { return Leaf(std::move(value), false); }

  const Tensor &value(Var v) const { return nodes_[Check(v)].value; }
  Tensor &grad(Var v) { return nodes_[Check(v)].grad; }
  std::size_t size() const { return nodes_.size(); }

  // Elementwise; shapes must match exactly.
  Var Add(Var a, Var b);
  Var Sub(Var a, Var b);
  Var Mul(Var a, Var b);
  Var ScalarMul(Var a, double s);
  // keep * prev + (1 - keep) * next with a fixed mixing tensor.  Carries the
  // zoneout state update in both its sampled and expectation forms.
  Var Blend(Var prev, Var next, Tensor keep);

  Var Matmul(Var a, Var b);
  Var MatVec(Var m, Var v);
  Var VecMat(Var v, Var m);
  Var Transpose(Var a);
  Var AddRow(Var m, Var row);

  Var Conv1dSame(Var x, Var w, Var b, int64_t dilation = 1);
  // Transposed 1-D convolution: x [t, ci], w [k, ci, co], b [co] ->
  // [(t-1)*stride + k, co].
  Var ConvTranspose1d(Var x, Var w, Var b, int64_t stride);

  Var EmbeddingLookup(Var table, std::vector<int64_t> ids);

  // Per-channel normalization of x [t, c] over rows.  Training mode uses the
  // batch statistics (biased variance) and, when running stats are supplied,
  // folds them in with the given momentum; eval mode requires running stats.
  Var BatchNorm(Var x, Var gamma, Var beta, bool training,
                Tensor *running_mean = nullptr, Tensor *running_var = nullptr,
                double momentum = 0.1);

  Var Relu(Var x);
  Var Tanh(Var x);
  Var Sigmoid(Var x);
  Var Exp(Var x);
  // Gradient is passed through inside (lo, hi) and cut outside.
  Var Clamp(Var x, double lo, double hi);
  Var Softmax1d(Var x);
  Var SoftmaxRows(Var x);

  // Inverted-scale dropout: kept activations are divided by 1-p at train
  // time, so eval is the identity (returns x unchanged).
  Var Dropout(Var x, double p, bool training, CounterRng &rng);

  struct LstmOut {
    Var h, c;
  };
  // Fused step; gate order i, f, g, o; see kernels::LstmCellForward.
  LstmOut LstmCell(Var x, Var h_prev, Var c_prev, Var w_ih, Var w_hh, Var b);

  Var Concat1d(Var a, Var b);
  Var ConcatCols(Var a, Var b);
  Var Row(Var x, int64_t r);                          // [t, c] -> [c]
  Var SliceRange(Var x, int64_t begin, int64_t end);  // rank-1
  Var SliceCols(Var x, int64_t begin, int64_t end);   // rank-2
  Var StackRows(const std::vector<Var> &rows);
  Var Reshape(Var x, std::vector<int64_t> shape);

  Var Sum(Var x);  // rank-0 scalar
  // log |det w| of a square matrix; throws SingularWeight when a pivot
  // magnitude falls below 1e-12.
  Var LogAbsDet(Var w);

  Var MseLoss(Var pred, const Tensor &target);
  Var BceWithLogitsLoss(Var logits, const Tensor &targets);

  // Seeds d(loss)/d(loss) = 1 and runs the chain rule down the tape.  loss
  // must be scalar.  Gradients accumulate across calls until cleared.
  void Backward(Var loss);
  void ZeroGrads();

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::function<void()> backward;
    bool needs_grad = false;
  };

  std::size_t Check(Var v) const;
  Var Push(Tensor value, bool needs_grad, std::function<void()> backward);
  bool NeedsGrad(Var v) const { return nodes_[Check(v)].needs_grad; }

  std::vector<Node> nodes_;
};

}  // namespace aratts::ad

#endif  // ARATTS_TAPE_H_
