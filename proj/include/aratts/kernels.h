// aratts/kernels.h

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

#ifndef ARATTS_KERNELS_H_
#define ARATTS_KERNELS_H_

#include <cstdint>
#include <vector>

#include "aratts/tensor.h"

// Plain forward kernels over Tensor values.  The tape wraps these for
// training; inference paths (synthesis, flow inversion) call them directly.
namespace aratts::kernels {

// [m,k] x [k,n] -> [m,n]
Tensor Matmul(const Tensor &a, const Tensor &b);
// [m,n] x [n] -> [m]
Tensor MatVec(const Tensor &m, const Tensor &v);
// [m] x [m,n] -> [n]
Tensor VecMat(const Tensor &v, const Tensor &m);
// 2-D transpose.
Tensor Transpose(const Tensor &m);
// [m,n] + [n] broadcast over rows.
Tensor AddRow(const Tensor &m, const Tensor &row);

// Same-padding 1-D convolution over time.  x [T, c_in], w [k, c_in, c_out],
// b [c_out] -> [T, c_out]; tap k reads x[t + (k - k_half) * dilation].
Tensor Conv1dSame(const Tensor &x, const Tensor &w, const Tensor &b,
                  int64_t dilation = 1);

Tensor Relu(const Tensor &x);
Tensor TanhT(const Tensor &x);
Tensor SigmoidT(const Tensor &x);
Tensor ExpT(const Tensor &x);
Tensor Clamp(const Tensor &x, double lo, double hi);

// Numerically stable softmax.  Softmax1d over a rank-1 tensor; SoftmaxRows
// row-wise over a rank-2 tensor.
Tensor Softmax1d(const Tensor &x);
Tensor SoftmaxRows(const Tensor &x);

double SigmoidScalar(double z);

// Rows of table selected by id.  table [v, d] -> [ids.size(), d].
// Out-of-range ids throw UnknownSymbolId.
Tensor EmbeddingGather(const Tensor &table, const std::vector<int64_t> &ids);

// Per-channel statistics over rows of x [t, c]; variance is biased (1/t).
void ChannelStats(const Tensor &x, Tensor *mean, Tensor *var);

// One LSTM step.  x [d_in], h/c [d_h], w_ih [d_in, 4 d_h], w_hh [d_h, 4 d_h],
// b [4 d_h]; gate order i, f, g, o.  gates receives the post-activation
// values [4 d_h] and tanh_c the tanh of the new cell, both needed by the
// backward rule.
void LstmCellForward(const Tensor &x, const Tensor &h_prev,
                     const Tensor &c_prev, const Tensor &w_ih,
                     const Tensor &w_hh, const Tensor &b, Tensor *h_out,
                     Tensor *c_out, Tensor *gates, Tensor *tanh_c);

// LU decomposition with partial pivoting of a square matrix.  Returns false
// when the matrix is numerically singular (a pivot below 1e-12 absolute).
struct LuFactors {
  Tensor lu;                  // combined L (unit diagonal) and U
  std::vector<int64_t> perm;  // row permutation
  int sign = 1;               // permutation parity
};
bool LuFactor(const Tensor &a, LuFactors *f);
// log|det a| from its factors.
double LuLogAbsDet(const LuFactors &f);
// Solves a x = rhs for one right-hand side.
std::vector<double> LuSolve(const LuFactors &f, const std::vector<double> &rhs);
// Matrix inverse from factors.
Tensor LuInverse(const LuFactors &f);

}  // namespace aratts::kernels

#endif  // ARATTS_KERNELS_H_
