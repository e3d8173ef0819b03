// src/kernels.cc

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

#include "aratts/kernels.h"

#include <algorithm>
#include <cmath>

#include "aratts/error.h"

namespace aratts::kernels {

namespace {

void Require(bool ok, const char *msg) {
  if (!ok) Throw(ErrorKind::kShapeMismatch, msg);
}

}  // namespace

Tensor Matmul(const Tensor &a, const Tensor &b) {
  Require(a.rank() == 2 && b.rank() == 2 && a.dim(1) == b.dim(0),
          "matmul: need [m,k] x [k,n]");
  const int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor out({m, n});
  for (int64_t i = 0; i < m; ++i) {
    for (int64_t p = 0; p < k; ++p) {
      const double av = a.at(i, p);
      if (av == 0.0) continue;
      for (int64_t j = 0; j < n; ++j) out.at(i, j) += av * b.at(p, j);
    }
  }
  return out;
}

Tensor MatVec(const Tensor &m, const Tensor &v) {
  Require(m.rank() == 2 && v.rank() == 1 && m.dim(1) == v.dim(0),
          "matvec: need [m,n] x [n]");
  Tensor out({m.dim(0)});
  for (int64_t i = 0; i < m.dim(0); ++i) {
    double acc = 0.0;
    for (int64_t j = 0; j < m.dim(1); ++j) acc += m.at(i, j) * v[j];
    out[i] = acc;
  }
  return out;
}

Tensor VecMat(const Tensor &v, const Tensor &m) {
  Require(v.rank() == 1 && m.rank() == 2 && v.dim(0) == m.dim(0),
          "vecmat: need [m] x [m,n]");
  Tensor out({m.dim(1)});
  for (int64_t i = 0; i < m.dim(0); ++i) {
    const double vi = v[i];
    if (vi == 0.0) continue;
    for (int64_t j = 0; j < m.dim(1); ++j) out[j] += vi * m.at(i, j);
  }
  return out;
}

Tensor Transpose(const Tensor &m) {
  Require(m.rank() == 2, "transpose: rank-2 only");
  Tensor out({m.dim(1), m.dim(0)});
  for (int64_t i = 0; i < m.dim(0); ++i)
    for (int64_t j = 0; j < m.dim(1); ++j) out.at(j, i) = m.at(i, j);
  return out;
}

Tensor AddRow(const Tensor &m, const Tensor &row) {
  Require(m.rank() == 2 && row.rank() == 1 && m.dim(1) == row.dim(0),
          "addrow: need [m,n] + [n]");
  Tensor out = m;
  for (int64_t i = 0; i < m.dim(0); ++i)
    for (int64_t j = 0; j < m.dim(1); ++j) out.at(i, j) += row[j];
  return out;
}

Tensor Conv1dSame(const Tensor &x, const Tensor &w, const Tensor &b,
                  int64_t dilation) {
  Require(x.rank() == 2 && w.rank() == 3 && b.rank() == 1,
          "conv1d: need x [t,ci], w [k,ci,co], b [co]");
  Require(w.dim(1) == x.dim(1) && w.dim(2) == b.dim(0),
          "conv1d: channel mismatch");
  Require(dilation >= 1, "conv1d: dilation must be >= 1");
  const int64_t T = x.dim(0), ci = x.dim(1), K = w.dim(0), co = w.dim(2);
  const int64_t k_half = K / 2;
  Tensor out({T, co});
  for (int64_t t = 0; t < T; ++t) {
    for (int64_t j = 0; j < co; ++j) out.at(t, j) = b[j];
    for (int64_t k = 0; k < K; ++k) {
      const int64_t s = t + (k - k_half) * dilation;
      if (s < 0 || s >= T) continue;
      for (int64_t c = 0; c < ci; ++c) {
        const double xv = x.at(s, c);
        if (xv == 0.0) continue;
        for (int64_t j = 0; j < co; ++j) out.at(t, j) += xv * w.at(k, c, j);
      }
    }
  }
  return out;
}

Tensor Relu(const Tensor &x) {
  Tensor out = x;
  for (auto &v : out.vec()) v = v > 0.0 ? v : 0.0;
  return out;
}

Tensor TanhT(const Tensor &x) {
  Tensor out = x;
  for (auto &v : out.vec()) v = std::tanh(v);
  return out;
}

double SigmoidScalar(double z) {
  // Split on sign so exp never overflows.
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Tensor SigmoidT(const Tensor &x) {
  Tensor out = x;
  for (auto &v : out.vec()) v = SigmoidScalar(v);
  return out;
}

Tensor ExpT(const Tensor &x) {
  Tensor out = x;
  for (auto &v : out.vec()) v = std::exp(v);
  return out;
}

Tensor Clamp(const Tensor &x, double lo, double hi) {
  Tensor out = x;
  for (auto &v : out.vec()) v = std::min(hi, std::max(lo, v));
  return out;
}

Tensor Softmax1d(const Tensor &x) {
  Require(x.rank() == 1 && x.numel() > 0, "softmax1d: non-empty rank-1 only");
  Tensor out = x;
  const double mx = *std::max_element(out.vec().begin(), out.vec().end());
  double sum = 0.0;
  for (auto &v : out.vec()) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (auto &v : out.vec()) v /= sum;
  return out;
}

Tensor SoftmaxRows(const Tensor &x) {
  Require(x.rank() == 2 && x.dim(1) > 0, "softmax rows: rank-2 only");
  Tensor out = x;
  for (int64_t i = 0; i < x.dim(0); ++i) {
    double mx = out.at(i, 0);
    for (int64_t j = 1; j < x.dim(1); ++j) mx = std::max(mx, out.at(i, j));
    double sum = 0.0;
    for (int64_t j = 0; j < x.dim(1); ++j) {
      out.at(i, j) = std::exp(out.at(i, j) - mx);
      sum += out.at(i, j);
    }
    for (int64_t j = 0; j < x.dim(1); ++j) out.at(i, j) /= sum;
  }
  return out;
}

Tensor EmbeddingGather(const Tensor &table, const std::vector<int64_t> &ids) {
  Require(table.rank() == 2, "embedding: table must be [v,d]");
  const int64_t v = table.dim(0), d = table.dim(1);
  Tensor out({static_cast<int64_t>(ids.size()), d});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= v)
      Throw(ErrorKind::kUnknownSymbolId,
            "embedding id " + std::to_string(ids[i]) + " out of range [0," +
                std::to_string(v) + ")");
    for (int64_t j = 0; j < d; ++j)
      out.at(static_cast<int64_t>(i), j) = table.at(ids[i], j);
  }
  return out;
}

void ChannelStats(const Tensor &x, Tensor *mean, Tensor *var) {
  Require(x.rank() == 2 && x.dim(0) > 0, "channel stats: non-empty [t,c]");
  const int64_t T = x.dim(0), C = x.dim(1);
  *mean = Tensor({C});
  *var = Tensor({C});
  for (int64_t t = 0; t < T; ++t)
    for (int64_t c = 0; c < C; ++c) (*mean)[c] += x.at(t, c);
  for (int64_t c = 0; c < C; ++c) (*mean)[c] /= static_cast<double>(T);
  for (int64_t t = 0; t < T; ++t)
    for (int64_t c = 0; c < C; ++c) {
      const double d = x.at(t, c) - (*mean)[c];
      (*var)[c] += d * d;
    }
  for (int64_t c = 0; c < C; ++c) (*var)[c] /= static_cast<double>(T);
}

void LstmCellForward(const Tensor &x, const Tensor &h_prev,
                     const Tensor &c_prev, const Tensor &w_ih,
                     const Tensor &w_hh, const Tensor &b, Tensor *h_out,
                     Tensor *c_out, Tensor *gates, Tensor *tanh_c) {
  Require(x.rank() == 1 && h_prev.rank() == 1 && c_prev.rank() == 1,
          "lstm cell: rank-1 state");
  const int64_t dh = h_prev.dim(0);
  Require(c_prev.dim(0) == dh, "lstm cell: h/c size mismatch");
  Require(w_ih.rank() == 2 && w_ih.dim(0) == x.dim(0) && w_ih.dim(1) == 4 * dh,
          "lstm cell: w_ih shape");
  Require(w_hh.rank() == 2 && w_hh.dim(0) == dh && w_hh.dim(1) == 4 * dh,
          "lstm cell: w_hh shape");
  Require(b.rank() == 1 && b.dim(0) == 4 * dh, "lstm cell: bias shape");

  Tensor z = b;
  for (int64_t i = 0; i < x.dim(0); ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    for (int64_t j = 0; j < 4 * dh; ++j) z[j] += xi * w_ih.at(i, j);
  }
  for (int64_t i = 0; i < dh; ++i) {
    const double hi = h_prev[i];
    if (hi == 0.0) continue;
    for (int64_t j = 0; j < 4 * dh; ++j) z[j] += hi * w_hh.at(i, j);
  }

  *gates = Tensor({4 * dh});
  *h_out = Tensor({dh});
  *c_out = Tensor({dh});
  *tanh_c = Tensor({dh});
  for (int64_t j = 0; j < dh; ++j) {
    const double gi = SigmoidScalar(z[j]);
    const double gf = SigmoidScalar(z[dh + j]);
    const double gg = std::tanh(z[2 * dh + j]);
    const double go = SigmoidScalar(z[3 * dh + j]);
    (*gates)[j] = gi;
    (*gates)[dh + j] = gf;
    (*gates)[2 * dh + j] = gg;
    (*gates)[3 * dh + j] = go;
    const double c = gf * c_prev[j] + gi * gg;
    (*c_out)[j] = c;
    (*tanh_c)[j] = std::tanh(c);
    (*h_out)[j] = go * (*tanh_c)[j];
  }
}

bool LuFactor(const Tensor &a, LuFactors *f) {
  Require(a.rank() == 2 && a.dim(0) == a.dim(1), "lu: square matrix only");
  const int64_t n = a.dim(0);
  f->lu = a;
  f->perm.resize(static_cast<std::size_t>(n));
  for (int64_t i = 0; i < n; ++i) f->perm[static_cast<std::size_t>(i)] = i;
  f->sign = 1;
  Tensor &lu = f->lu;

  for (int64_t col = 0; col < n; ++col) {
    int64_t pivot = col;
    double best = std::abs(lu.at(col, col));
    for (int64_t r = col + 1; r < n; ++r) {
      const double v = std::abs(lu.at(r, col));
      if (v > best) {
        best = v;
        pivot = r;
      }
    }
    if (best < 1e-12) return false;
    if (pivot != col) {
      for (int64_t j = 0; j < n; ++j)
        std::swap(lu.at(col, j), lu.at(pivot, j));
      std::swap(f->perm[static_cast<std::size_t>(col)],
                f->perm[static_cast<std::size_t>(pivot)]);
      f->sign = -f->sign;
    }
    const double d = lu.at(col, col);
    for (int64_t r = col + 1; r < n; ++r) {
      const double factor = lu.at(r, col) / d;
      lu.at(r, col) = factor;
      for (int64_t j = col + 1; j < n; ++j)
        lu.at(r, j) -= factor * lu.at(col, j);
    }
  }
  return true;
}

double LuLogAbsDet(const LuFactors &f) {
  double acc = 0.0;
  for (int64_t i = 0; i < f.lu.dim(0); ++i)
    acc += std::log(std::abs(f.lu.at(i, i)));
  return acc;
}

std::vector<double> LuSolve(const LuFactors &f,
                            const std::vector<double> &rhs) {
  const int64_t n = f.lu.dim(0);
  Require(static_cast<int64_t>(rhs.size()) == n, "lu solve: rhs length");
  std::vector<double> y(static_cast<std::size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    double acc = rhs[static_cast<std::size_t>(f.perm[static_cast<std::size_t>(i)])];
    for (int64_t j = 0; j < i; ++j)
      acc -= f.lu.at(i, j) * y[static_cast<std::size_t>(j)];
    y[static_cast<std::size_t>(i)] = acc;
  }
  for (int64_t i = n - 1; i >= 0; --i) {
    double acc = y[static_cast<std::size_t>(i)];
    for (int64_t j = i + 1; j < n; ++j)
      acc -= f.lu.at(i, j) * y[static_cast<std::size_t>(j)];
    y[static_cast<std::size_t>(i)] = acc / f.lu.at(i, i);
  }
  return y;
}

Tensor LuInverse(const LuFactors &f) {
  const int64_t n = f.lu.dim(0);
  Tensor inv({n, n});
  std::vector<double> e(static_cast<std::size_t>(n), 0.0);
  for (int64_t col = 0; col < n; ++col) {
    e[static_cast<std::size_t>(col)] = 1.0;
    const std::vector<double> x = LuSolve(f, e);
    e[static_cast<std::size_t>(col)] = 0.0;
    for (int64_t r = 0; r < n; ++r) inv.at(r, col) = x[static_cast<std::size_t>(r)];
  }
  return inv;
}

}  // namespace aratts::kernels
