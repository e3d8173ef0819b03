// src/tape.cc

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

#include "aratts/tape.h"

#include <cmath>
#include <utility>

#include "aratts/error.h"
#include "aratts/kernels.h"

namespace aratts::ad {

namespace {

constexpr double kBnEps = kBatchNormEps;

void Require(bool ok, const char *msg) {
  if (!ok) Throw(ErrorKind::kShapeMismatch, msg);
}

}  // namespace

std::size_t Tape::Check(Var v) const {
  if (!v.valid() || static_cast<std::size_t>(v.id) >= nodes_.size())
    Throw(ErrorKind::kShapeMismatch, "tape: dangling var");
  return static_cast<std::size_t>(v.id);
}

Var Tape::Push(Tensor value, bool needs_grad, std::function<void()> backward) {
  CheckFinite(value, "tape node");
  Node n;
  n.value = std::move(value);
  n.grad = Tensor(n.value.shape());
  n.needs_grad = needs_grad;
  if (needs_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int32_t>(nodes_.size() - 1)};
}

Var Tape::Leaf(Tensor value, bool requires_grad) {
  return Push(std::move(value), requires_grad, nullptr);
}

void Tape::Backward(Var loss) {
  const std::size_t li = Check(loss);
  if (nodes_[li].value.numel() != 1)
    Throw(ErrorKind::kShapeMismatch, "backward: loss must be scalar");
  // Interior grads are scratch for this walk; only leaf grads accumulate
  // across repeated calls.
  for (Node &n : nodes_)
    if (n.backward) n.grad.Fill(0.0);
  nodes_[li].grad[0] += 1.0;
  for (std::size_t i = li + 1; i-- > 0;) {
    Node &n = nodes_[i];
    if (n.backward) {
      CheckFinite(n.grad, "gradient");
      n.backward();
    }
  }
}

void Tape::ZeroGrads() {
  for (Node &n : nodes_) n.grad.Fill(0.0);
}

Var Tape::Add(Var a, Var b) {
  const Tensor &av = value(a), &bv = value(b);
  Require(av.SameShape(bv), "add: shape mismatch");
  Tensor out = av;
  for (int64_t i = 0; i < out.numel(); ++i) out[i] += bv[i];
  const bool ng = NeedsGrad(a) || NeedsGrad(b);
  return Push(std::move(out), ng, [this, a, b, id = nodes_.size()]() {
    const Tensor &g = nodes_[id].grad;
    Tensor &ga = grad(a);
    Tensor &gb = grad(b);
    for (int64_t i = 0; i < g.numel(); ++i) {
      ga[i] += g[i];
      gb[i] += g[i];
    }
  });
}

Var Tape::Sub(Var a, Var b) {
  const Tensor &av = value(a), &bv = value(b);
  Require(av.SameShape(bv), "sub: shape mismatch");
  Tensor out = av;
  for (int64_t i = 0; i < out.numel(); ++i) out[i] -= bv[i];
  const bool ng = NeedsGrad(a) || NeedsGrad(b);
  return Push(std::move(out), ng, [this, a, b, id = nodes_.size()]() {
    const Tensor &g = nodes_[id].grad;
    Tensor &ga = grad(a);
    Tensor &gb = grad(b);
    for (int64_t i = 0; i < g.numel(); ++i) {
      ga[i] += g[i];
      gb[i] -= g[i];
    }
  });
}

Var Tape::Mul(Var a, Var b) {
  const Tensor &av = value(a), &bv = value(b);
  Require(av.SameShape(bv), "mul: shape mismatch");
  Tensor out = av;
  for (int64_t i = 0; i < out.numel(); ++i) out[i] *= bv[i];
  const bool ng = NeedsGrad(a) || NeedsGrad(b);
  return Push(std::move(out), ng, [this, a, b, id = nodes_.size()]() {
    const Tensor &g = nodes_[id].grad;
    const Tensor &av2 = value(a);
    const Tensor &bv2 = value(b);
    Tensor &ga = grad(a);
    Tensor &gb = grad(b);
    for (int64_t i = 0; i < g.numel(); ++i) {
      ga[i] += g[i] * bv2[i];
      gb[i] += g[i] * av2[i];
    }
  });
}

Var Tape::ScalarMul(Var a, double s) {
  Tensor out = value(a);
  for (auto &v : out.vec()) v *= s;
  return Push(std::move(out), NeedsGrad(a), [this, a, s, id = nodes_.size()]() {
    const Tensor &g = nodes_[id].grad;
    Tensor &ga = grad(a);
    for (int64_t i = 0; i < g.numel(); ++i) ga[i] += s * g[i];
  });
}

Var Tape::Blend(Var prev, Var next, Tensor keep) {
  const Tensor &pv = value(prev), &nv = value(next);
  Require(pv.SameShape(nv) && pv.SameShape(keep), "blend: shape mismatch");
  Tensor out = pv;
  for (int64_t i = 0; i < out.numel(); ++i)
    out[i] = keep[i] * pv[i] + (1.0 - keep[i]) * nv[i];
  const bool ng = NeedsGrad(prev) || NeedsGrad(next);
  return Push(std::move(out), ng,
              [this, prev, next, keep = std::move(keep), id = nodes_.size()]() {
                const Tensor &g = nodes_[id].grad;
                Tensor &gp = grad(prev);
                Tensor &gn = grad(next);
                for (int64_t i = 0; i < g.numel(); ++i) {
                  gp[i] += keep[i] * g[i];
                  gn[i] += (1.0 - keep[i]) * g[i];
                }
              });
}

Var Tape::Matmul(Var a, Var b) {
  Tensor out = kernels::Matmul(value(a), value(b));
  const bool ng = NeedsGrad(a) || NeedsGrad(b);
  return Push(std::move(out), ng, [this, a, b, id = nodes_.size()]() {
    const Tensor &g = nodes_[id].grad;
    const Tensor &av = value(a);
    const Tensor &bv = value(b);
    const int64_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
    if (NeedsGrad(a)) {
      Tensor &ga = grad(a);
      for (int64_t i = 0; i < m; ++i)
        for (int64_t p = 0; p < k; ++p) {
          double acc = 0.0;
          for (int64_t j = 0; j < n; ++j) acc += g.at(i, j) * bv.at(p, j);
          ga.at(i, p) += acc;
        }
    }
    if (NeedsGrad(b)) {
      Tensor &gb = grad(b);
      for (int64_t i = 0; i < m; ++i)
        for (int64_t p = 0; p < k; ++p) {
          const double av2 = av.at(i, p);
          if (av2 == 0.0) continue;
          for (int64_t j = 0; j < n; ++j) gb.at(p, j) += av2 * g.at(i, j);
        }
    }
  });
}

Var Tape::MatVec(Var m, Var v) {
  Tensor out = kernels::MatVec(value(m), value(v));
  const bool ng = NeedsGrad(m) || NeedsGrad(v);
  return Push(std::move(out), ng, [this, m, v, id = nodes_.size()]() {
    const Tensor &g = nodes_[id].grad;
    const Tensor &mv = value(m);
    const Tensor &vv = value(v);
    Tensor &gm = grad(m);
    Tensor &gv = grad(v);
    for (int64_t i = 0; i < mv.dim(0); ++i) {
      const double gi = g[i];
      if (gi == 0.0) continue;
      for (int64_t j = 0; j < mv.dim(1); ++j) {
        gm.at(i, j) += gi * vv[j];
        gv[j] += gi * mv.at(i, j);
      }
    }
  });
}

Var Tape::VecMat(Var v, Var m) {
  Tensor out = kernels::VecMat(value(v), value(m));
  const bool ng = NeedsGrad(v) || NeedsGrad(m);
  return Push(std::move(out), ng, [this, v, m, id = nodes_.size()]() {
    const Tensor &g = nodes_[id].grad;
    const Tensor &vv = value(v);
    const Tensor &mv = value(m);
    Tensor &gv = grad(v);
    Tensor &gm = grad(m);
    for (int64_t i = 0; i < mv.dim(0); ++i) {
      double acc = 0.0;
      const double vi = vv[i];
      for (int64_t j = 0; j < mv.dim(1); ++j) {
        acc += g[j] * mv.at(i, j);
        gm.at(i, j) += vi * g[j];
      }
      gv[i] += acc;
    }
  });
}

Var Tape::Transpose(Var a) {
  Tensor out = kernels::Transpose(value(a));
  return Push(std::move(out), NeedsGrad(a), [this, a, id = nodes_.size()]() {
    const Tensor &g = nodes_[id].grad;
    Tensor &ga = grad(a);
    for (int64_t i = 0; i < g.dim(0); ++i)
      for (int64_t j = 0; j < g.dim(1); ++j) ga.at(j, i) += g.at(i, j);
  });
}

Var Tape::AddRow(Var m, Var row) {
  Tensor out = kernels::AddRow(value(m), value(row));
  const bool ng = NeedsGrad(m) || NeedsGrad(row);
  return Push(std::move(out), ng, [this, m, row, id = nodes_.size()]() {
    const Tensor &g = nodes_[id].grad;
    Tensor &gm = grad(m);
    Tensor &gr = grad(row);
    for (int64_t i = 0; i < g.dim(0); ++i)
      for (int64_t j = 0; j < g.dim(1); ++j) {
        gm.at(i, j) += g.at(i, j);
        gr[j] += g.at(i, j);
      }
  });
}

Var Tape::Conv1dSame(Var x, Var w, Var b, int64_t dilation) {
  Tensor out = kernels::Conv1dSame(value(x), value(w), value(b), dilation);
  const bool ng = NeedsGrad(x) || NeedsGrad(w) || NeedsGrad(b);
  return Push(std::move(out), ng,
              [this, x, w, b, dilation, id = nodes_.size()]() {
                const Tensor &g = nodes_[id].grad;
                const Tensor &xv = value(x);
                const Tensor &wv = value(w);
                const int64_t T = xv.dim(0), ci = xv.dim(1);
                const int64_t K = wv.dim(0), co = wv.dim(2);
                const int64_t k_half = K / 2;
                Tensor &gx = grad(x);
                Tensor &gw = grad(w);
                Tensor &gb = grad(b);
                const bool nx = NeedsGrad(x), nw = NeedsGrad(w);
                for (int64_t t = 0; t < T; ++t) {
                  for (int64_t j = 0; j < co; ++j) gb[j] += g.at(t, j);
                  for (int64_t k = 0; k < K; ++k) {
                    const int64_t s = t + (k - k_half) * dilation;
                    if (s < 0 || s >= T) continue;
                    for (int64_t c = 0; c < ci; ++c) {
                      if (nx) {
                        double acc = 0.0;
                        for (int64_t j = 0; j < co; ++j)
                          acc += g.at(t, j) * wv.at(k, c, j);
                        gx.at(s, c) += acc;
                      }
                      if (nw) {
                        const double xv2 = xv.at(s, c);
                        if (xv2 == 0.0) continue;
                        for (int64_t j = 0; j < co; ++j)
                          gw.at(k, c, j) += xv2 * g.at(t, j);
                      }
                    }
                  }
                }
              });
}

Var Tape::ConvTranspose1d(Var x, Var w, Var b, int64_t stride) {
  const Tensor &xv = value(x), &wv = value(w), &bv = value(b);
  Require(xv.rank() == 2 && wv.rank() == 3 && bv.rank() == 1,
          "conv transpose: need x [t,ci], w [k,ci,co], b [co]");
  Require(wv.dim(1) == xv.dim(1) && wv.dim(2) == bv.dim(0),
          "conv transpose: channel mismatch");
  Require(stride >= 1 && xv.dim(0) >= 1, "conv transpose: bad stride or empty input");
  const int64_t T = xv.dim(0), ci = xv.dim(1), K = wv.dim(0), co = wv.dim(2);
  const int64_t T_out = (T - 1) * stride + K;
  Tensor out({T_out, co});
  for (int64_t u = 0; u < T_out; ++u)
    for (int64_t j = 0; j < co; ++j) out.at(u, j) = bv[j];
  for (int64_t s = 0; s < T; ++s)
    for (int64_t k = 0; k < K; ++k) {
      const int64_t u = s * stride + k;
      for (int64_t c = 0; c < ci; ++c) {
        const double xv2 = xv.at(s, c);
        if (xv2 == 0.0) continue;
        for (int64_t j = 0; j < co; ++j) out.at(u, j) += xv2 * wv.at(k, c, j);
      }
    }
  const bool ng = NeedsGrad(x) || NeedsGrad(w) || NeedsGrad(b);
  return Push(std::move(out), ng, [this, x, w, b, stride, id = nodes_.size()]() {
    const Tensor &g = nodes_[id].grad;
    const Tensor &xv2 = value(x);
    const Tensor &wv2 = value(w);
    const int64_t T = xv2.dim(0), ci = xv2.dim(1);
    const int64_t K = wv2.dim(0), co = wv2.dim(2);
    Tensor &gx = grad(x);
    Tensor &gw = grad(w);
    Tensor &gb = grad(b);
    for (int64_t u = 0; u < g.dim(0); ++u)
      for (int64_t j = 0; j < co; ++j) gb[j] += g.at(u, j);
    for (int64_t s = 0; s < T; ++s)
      for (int64_t k = 0; k < K; ++k) {
        const int64_t u = s * stride + k;
        for (int64_t c = 0; c < ci; ++c) {
          double acc = 0.0;
          for (int64_t j = 0; j < co; ++j) {
            acc += g.at(u, j) * wv2.at(k, c, j);
            gw.at(k, c, j) += xv2.at(s, c) * g.at(u, j);
          }
          gx.at(s, c) += acc;
        }
      }
  });
}

Var Tape::EmbeddingLookup(Var table, std::vector<int64_t> ids) {
  Tensor out = kernels::EmbeddingGather(value(table), ids);
  return Push(std::move(out), NeedsGrad(table),
              [this, table, ids = std::move(ids), id = nodes_.size()]() {
                const Tensor &g = nodes_[id].grad;
                Tensor &gt = grad(table);
                const int64_t d = g.dim(1);
                for (std::size_t i = 0; i < ids.size(); ++i)
                  for (int64_t j = 0; j < d; ++j)
                    gt.at(ids[i], j) += g.at(static_cast<int64_t>(i), j);
              });
}

Var Tape::BatchNorm(Var x, Var gamma, Var beta, bool training,
                    Tensor *running_mean, Tensor *running_var,
                    double momentum) {
  const Tensor &xv = value(x);
  const Tensor &gv = value(gamma);
  const Tensor &bv = value(beta);
  Require(xv.rank() == 2, "batch norm: x must be [t,c]");
  const int64_t T = xv.dim(0), C = xv.dim(1);
  Require(gv.rank() == 1 && gv.dim(0) == C && bv.rank() == 1 && bv.dim(0) == C,
          "batch norm: gamma/beta must be [c]");

  Tensor mean, var;
  if (training) {
    kernels::ChannelStats(xv, &mean, &var);
    if (running_mean != nullptr && running_var != nullptr) {
      Require(running_mean->rank() == 1 && running_mean->dim(0) == C &&
                  running_var->rank() == 1 && running_var->dim(0) == C,
              "batch norm: running stats must be [c]");
      for (int64_t c = 0; c < C; ++c) {
        (*running_mean)[c] =
            (1.0 - momentum) * (*running_mean)[c] + momentum * mean[c];
        (*running_var)[c] =
            (1.0 - momentum) * (*running_var)[c] + momentum * var[c];
      }
    }
  } else {
    if (running_mean == nullptr || running_var == nullptr)
      Throw(ErrorKind::kBadConfig, "batch norm eval needs running stats");
    mean = *running_mean;
    var = *running_var;
  }

  Tensor invstd({C});
  for (int64_t c = 0; c < C; ++c) invstd[c] = 1.0 / std::sqrt(var[c] + kBnEps);
  Tensor xhat({T, C});
  Tensor out({T, C});
  for (int64_t t = 0; t < T; ++t)
    for (int64_t c = 0; c < C; ++c) {
      xhat.at(t, c) = (xv.at(t, c) - mean[c]) * invstd[c];
      out.at(t, c) = gv[c] * xhat.at(t, c) + bv[c];
    }

  const bool ng = NeedsGrad(x) || NeedsGrad(gamma) || NeedsGrad(beta);
  return Push(
      std::move(out), ng,
      [this, x, gamma, beta, training, xhat = std::move(xhat),
       invstd = std::move(invstd), id = nodes_.size()]() {
        const Tensor &g = nodes_[id].grad;
        const Tensor &gv2 = value(gamma);
        const int64_t T = g.dim(0), C = g.dim(1);
        Tensor &gx = grad(x);
        Tensor &gg = grad(gamma);
        Tensor &gb = grad(beta);
        for (int64_t c = 0; c < C; ++c) {
          double sum_dy = 0.0, sum_dy_xhat = 0.0;
          for (int64_t t = 0; t < T; ++t) {
            sum_dy += g.at(t, c);
            sum_dy_xhat += g.at(t, c) * xhat.at(t, c);
          }
          gg[c] += sum_dy_xhat;
          gb[c] += sum_dy;
          if (!NeedsGrad(x)) continue;
          if (training) {
            // Batch statistics depend on x, so the normalization itself
            // back-propagates.
            const double n = static_cast<double>(T);
            for (int64_t t = 0; t < T; ++t) {
              const double dxhat = g.at(t, c) * gv2[c];
              gx.at(t, c) += invstd[c] *
                             (dxhat - (gv2[c] / n) * sum_dy -
                              xhat.at(t, c) * (gv2[c] / n) * sum_dy_xhat);
            }
          } else {
            for (int64_t t = 0; t < T; ++t)
              gx.at(t, c) += g.at(t, c) * gv2[c] * invstd[c];
          }
        }
      });
}

Var Tape::Relu(Var x) {
  Tensor out = kernels::Relu(value(x));
  return Push(std::move(out), NeedsGrad(x), [this, x, id = nodes_.size()]() {
    const Tensor &g = nodes_[id].grad;
    const Tensor &xv = value(x);
    Tensor &gx = grad(x);
    for (int64_t i = 0; i < g.numel(); ++i)
      if (xv[i] > 0.0) gx[i] += g[i];
  });
}

Var Tape::Tanh(Var x) {
  Tensor out = kernels::TanhT(value(x));
  return Push(std::move(out), NeedsGrad(x), [this, x, id = nodes_.size()]() {
    const Tensor &g = nodes_[id].grad;
    const Tensor &y = nodes_[id].value;
    Tensor &gx = grad(x);
    for (int64_t i = 0; i < g.numel(); ++i) gx[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var Tape::Sigmoid(Var x) {
  Tensor out = kernels::SigmoidT(value(x));
  return Push(std::move(out), NeedsGrad(x), [this, x, id = nodes_.size()]() {
    const Tensor &g = nodes_[id].grad;
    const Tensor &y = nodes_[id].value;
    Tensor &gx = grad(x);
    for (int64_t i = 0; i < g.numel(); ++i) gx[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var Tape::Exp(Var x) {
  Tensor out = kernels::ExpT(value(x));
  return Push(std::move(out), NeedsGrad(x), [this, x, id = nodes_.size()]() {
    const Tensor &g = nodes_[id].grad;
    const Tensor &y = nodes_[id].value;
    Tensor &gx = grad(x);
    for (int64_t i = 0; i < g.numel(); ++i) gx[i] += g[i] * y[i];
  });
}

Var Tape::Clamp(Var x, double lo, double hi) {
  Tensor out = kernels::Clamp(value(x), lo, hi);
  return Push(std::move(out), NeedsGrad(x),
              [this, x, lo, hi, id = nodes_.size()]() {
                const Tensor &g = nodes_[id].grad;
                const Tensor &xv = value(x);
                Tensor &gx = grad(x);
                for (int64_t i = 0; i < g.numel(); ++i)
                  if (xv[i] > lo && xv[i] < hi) gx[i] += g[i];
              });
}

Var Tape::Softmax1d(Var x) {
  Tensor out = kernels::Softmax1d(value(x));
  return Push(std::move(out), NeedsGrad(x), [this, x, id = nodes_.size()]() {
    const Tensor &g = nodes_[id].grad;
    const Tensor &y = nodes_[id].value;
    Tensor &gx = grad(x);
    double dot = 0.0;
    for (int64_t i = 0; i < g.numel(); ++i) dot += g[i] * y[i];
    for (int64_t i = 0; i < g.numel(); ++i) gx[i] += y[i] * (g[i] - dot);
  });
}

Var Tape::SoftmaxRows(Var x) {
  Tensor out = kernels::SoftmaxRows(value(x));
  return Push(std::move(out), NeedsGrad(x), [this, x, id = nodes_.size()]() {
    const Tensor &g = nodes_[id].grad;
    const Tensor &y = nodes_[id].value;
    Tensor &gx = grad(x);
    for (int64_t i = 0; i < g.dim(0); ++i) {
      double dot = 0.0;
      for (int64_t j = 0; j < g.dim(1); ++j) dot += g.at(i, j) * y.at(i, j);
      for (int64_t j = 0; j < g.dim(1); ++j)
        gx.at(i, j) += y.at(i, j) * (g.at(i, j) - dot);
    }
  });
}

Var Tape::Dropout(Var x, double p, bool training, CounterRng &rng) {
  if (p < 0.0 || p >= 1.0)
    Throw(ErrorKind::kBadConfig, "dropout: p must be in [0,1)");
  if (!training || p == 0.0) return x;
  const Tensor &xv = value(x);
  Tensor scale(xv.shape());
  const double keep_scale = 1.0 / (1.0 - p);
  for (int64_t i = 0; i < scale.numel(); ++i)
    scale[i] = rng.NextBernoulli(1.0 - p) ? keep_scale : 0.0;
  Tensor out = xv;
  for (int64_t i = 0; i < out.numel(); ++i) out[i] *= scale[i];
  return Push(std::move(out), NeedsGrad(x),
              [this, x, scale = std::move(scale), id = nodes_.size()]() {
                const Tensor &g = nodes_[id].grad;
                Tensor &gx = grad(x);
                for (int64_t i = 0; i < g.numel(); ++i)
                  gx[i] += g[i] * scale[i];
              });
}

Tape::LstmOut Tape::LstmCell(Var x, Var h_prev, Var c_prev, Var w_ih, Var w_hh,
                             Var b) {
  Tensor h, c, gates, tanh_c;
  kernels::LstmCellForward(value(x), value(h_prev), value(c_prev), value(w_ih),
                           value(w_hh), value(b), &h, &c, &gates, &tanh_c);
  const int64_t dh = h.dim(0);
  Tensor hc({2 * dh});
  for (int64_t i = 0; i < dh; ++i) {
    hc[i] = h[i];
    hc[dh + i] = c[i];
  }
  const bool ng = NeedsGrad(x) || NeedsGrad(h_prev) || NeedsGrad(c_prev) ||
                  NeedsGrad(w_ih) || NeedsGrad(w_hh) || NeedsGrad(b);
  // One fused node holds [h; c]; the incoming gradient splits the same way.
  Var fused = Push(
      std::move(hc), ng,
      [this, x, h_prev, c_prev, w_ih, w_hh, b, gates = std::move(gates),
       tanh_c = std::move(tanh_c), id = nodes_.size()]() {
        const Tensor &g = nodes_[id].grad;
        const int64_t dh = tanh_c.dim(0);
        const Tensor &xv = value(x);
        const Tensor &hv = value(h_prev);
        const Tensor &cv = value(c_prev);
        const Tensor &wih = value(w_ih);
        const Tensor &whh = value(w_hh);

        Tensor dz({4 * dh});
        Tensor &gc_prev = grad(c_prev);
        for (int64_t j = 0; j < dh; ++j) {
          const double gi = gates[j], gf = gates[dh + j];
          const double gg = gates[2 * dh + j], go = gates[3 * dh + j];
          const double dh_j = g[j], dc_j = g[dh + j];
          const double tc = tanh_c[j];
          const double dct = dc_j + dh_j * go * (1.0 - tc * tc);
          gc_prev[j] += dct * gf;
          dz[j] = dct * gg * gi * (1.0 - gi);
          dz[dh + j] = dct * cv[j] * gf * (1.0 - gf);
          dz[2 * dh + j] = dct * gi * (1.0 - gg * gg);
          dz[3 * dh + j] = dh_j * tc * go * (1.0 - go);
        }

        Tensor &gx = grad(x);
        Tensor &gh = grad(h_prev);
        Tensor &gwih = grad(w_ih);
        Tensor &gwhh = grad(w_hh);
        Tensor &gb = grad(b);
        for (int64_t j = 0; j < 4 * dh; ++j) gb[j] += dz[j];
        for (int64_t i = 0; i < xv.dim(0); ++i) {
          double acc = 0.0;
          const double xi = xv[i];
          for (int64_t j = 0; j < 4 * dh; ++j) {
            acc += wih.at(i, j) * dz[j];
            gwih.at(i, j) += xi * dz[j];
          }
          gx[i] += acc;
        }
        for (int64_t i = 0; i < dh; ++i) {
          double acc = 0.0;
          const double hi = hv[i];
          for (int64_t j = 0; j < 4 * dh; ++j) {
            acc += whh.at(i, j) * dz[j];
            gwhh.at(i, j) += hi * dz[j];
          }
          gh[i] += acc;
        }
      });
  LstmOut out;
  out.h = SliceRange(fused, 0, dh);
  out.c = SliceRange(fused, dh, 2 * dh);
  return out;
}

Var Tape::Concat1d(Var a, Var b) {
  const Tensor &av = value(a), &bv = value(b);
  Require(av.rank() == 1 && bv.rank() == 1, "concat1d: rank-1 only");
  const int64_t na = av.dim(0), nb = bv.dim(0);
  Tensor out({na + nb});
  for (int64_t i = 0; i < na; ++i) out[i] = av[i];
  for (int64_t i = 0; i < nb; ++i) out[na + i] = bv[i];
  const bool ng = NeedsGrad(a) || NeedsGrad(b);
  return Push(std::move(out), ng, [this, a, b, na, nb, id = nodes_.size()]() {
    const Tensor &g = nodes_[id].grad;
    Tensor &ga = grad(a);
    Tensor &gb = grad(b);
    for (int64_t i = 0; i < na; ++i) ga[i] += g[i];
    for (int64_t i = 0; i < nb; ++i) gb[i] += g[na + i];
  });
}

Var Tape::ConcatCols(Var a, Var b) {
  const Tensor &av = value(a), &bv = value(b);
  Require(av.rank() == 2 && bv.rank() == 2 && av.dim(0) == bv.dim(0),
          "concat cols: need matching row counts");
  const int64_t T = av.dim(0), na = av.dim(1), nb = bv.dim(1);
  Tensor out({T, na + nb});
  for (int64_t t = 0; t < T; ++t) {
    for (int64_t j = 0; j < na; ++j) out.at(t, j) = av.at(t, j);
    for (int64_t j = 0; j < nb; ++j) out.at(t, na + j) = bv.at(t, j);
  }
  const bool ng = NeedsGrad(a) || NeedsGrad(b);
  return Push(std::move(out), ng, [this, a, b, na, nb, id = nodes_.size()]() {
    const Tensor &g = nodes_[id].grad;
    Tensor &ga = grad(a);
    Tensor &gb = grad(b);
    for (int64_t t = 0; t < g.dim(0); ++t) {
      for (int64_t j = 0; j < na; ++j) ga.at(t, j) += g.at(t, j);
      for (int64_t j = 0; j < nb; ++j) gb.at(t, j) += g.at(t, na + j);
    }
  });
}

Var Tape::SliceRange(Var x, int64_t begin, int64_t end) {
  const Tensor &xv = value(x);
  Require(xv.rank() == 1 && 0 <= begin && begin < end && end <= xv.dim(0),
          "slice: bad rank-1 range");
  Tensor out({end - begin});
  for (int64_t i = begin; i < end; ++i) out[i - begin] = xv[i];
  return Push(std::move(out), NeedsGrad(x),
              [this, x, begin, end, id = nodes_.size()]() {
                const Tensor &g = nodes_[id].grad;
                Tensor &gx = grad(x);
                for (int64_t i = begin; i < end; ++i) gx[i] += g[i - begin];
              });
}

Var Tape::Row(Var x, int64_t r) {
  const Tensor &xv = value(x);
  Require(xv.rank() == 2 && 0 <= r && r < xv.dim(0), "row: bad index");
  const int64_t C = xv.dim(1);
  Tensor out({C});
  for (int64_t j = 0; j < C; ++j) out[j] = xv.at(r, j);
  return Push(std::move(out), NeedsGrad(x),
              [this, x, r, C, id = nodes_.size()]() {
                const Tensor &g = nodes_[id].grad;
                Tensor &gx = grad(x);
                for (int64_t j = 0; j < C; ++j) gx.at(r, j) += g[j];
              });
}

Var Tape::SliceCols(Var x, int64_t begin, int64_t end) {
  const Tensor &xv = value(x);
  Require(xv.rank() == 2 && 0 <= begin && begin < end && end <= xv.dim(1),
          "slice cols: bad range");
  const int64_t T = xv.dim(0);
  Tensor out({T, end - begin});
  for (int64_t t = 0; t < T; ++t)
    for (int64_t j = begin; j < end; ++j) out.at(t, j - begin) = xv.at(t, j);
  return Push(std::move(out), NeedsGrad(x),
              [this, x, begin, end, id = nodes_.size()]() {
                const Tensor &g = nodes_[id].grad;
                Tensor &gx = grad(x);
                for (int64_t t = 0; t < g.dim(0); ++t)
                  for (int64_t j = begin; j < end; ++j)
                    gx.at(t, j) += g.at(t, j - begin);
              });
}

Var Tape::StackRows(const std::vector<Var> &rows) {
  Require(!rows.empty(), "stack rows: empty list");
  const int64_t n = value(rows[0]).dim(0);
  bool ng = false;
  for (Var r : rows) {
    Require(value(r).rank() == 1 && value(r).dim(0) == n,
            "stack rows: rows must be rank-1 of equal length");
    ng = ng || NeedsGrad(r);
  }
  Tensor out({static_cast<int64_t>(rows.size()), n});
  for (std::size_t t = 0; t < rows.size(); ++t)
    for (int64_t j = 0; j < n; ++j)
      out.at(static_cast<int64_t>(t), j) = value(rows[t])[j];
  return Push(std::move(out), ng, [this, rows, id = nodes_.size()]() {
    const Tensor &g = nodes_[id].grad;
    for (std::size_t t = 0; t < rows.size(); ++t) {
      Tensor &gr = grad(rows[t]);
      for (int64_t j = 0; j < g.dim(1); ++j)
        gr[j] += g.at(static_cast<int64_t>(t), j);
    }
  });
}

Var Tape::Reshape(Var x, std::vector<int64_t> shape) {
  const Tensor &xv = value(x);
  Tensor out(std::move(shape), xv.vec());
  return Push(std::move(out), NeedsGrad(x), [this, x, id = nodes_.size()]() {
    const Tensor &g = nodes_[id].grad;
    Tensor &gx = grad(x);
    for (int64_t i = 0; i < g.numel(); ++i) gx[i] += g[i];
  });
}

Var Tape::Sum(Var x) {
  const Tensor &xv = value(x);
  double acc = 0.0;
  for (int64_t i = 0; i < xv.numel(); ++i) acc += xv[i];
  Tensor out(std::vector<int64_t>{});
  out[0] = acc;
  return Push(std::move(out), NeedsGrad(x), [this, x, id = nodes_.size()]() {
    const double g = nodes_[id].grad[0];
    Tensor &gx = grad(x);
    for (int64_t i = 0; i < gx.numel(); ++i) gx[i] += g;
  });
}

Var Tape::LogAbsDet(Var w) {
  const Tensor &wv = value(w);
  kernels::LuFactors f;
  if (!kernels::LuFactor(wv, &f))
    Throw(ErrorKind::kSingularWeight, "log|det|: matrix is singular");
  Tensor out(std::vector<int64_t>{});
  out[0] = kernels::LuLogAbsDet(f);
  // d log|det W| / dW = inverse(W) transposed.
  Tensor inv_t = kernels::Transpose(kernels::LuInverse(f));
  return Push(std::move(out), NeedsGrad(w),
              [this, w, inv_t = std::move(inv_t), id = nodes_.size()]() {
                const double g = nodes_[id].grad[0];
                Tensor &gw = grad(w);
                for (int64_t i = 0; i < gw.numel(); ++i)
                  gw[i] += g * inv_t[i];
              });
}

Var Tape::MseLoss(Var pred, const Tensor &target) {
  const Tensor &pv = value(pred);
  Require(pv.SameShape(target), "mse: shape mismatch");
  Require(pv.numel() > 0, "mse: empty tensors");
  const double n = static_cast<double>(pv.numel());
  double acc = 0.0;
  for (int64_t i = 0; i < pv.numel(); ++i) {
    const double d = pv[i] - target[i];
    acc += d * d;
  }
  Tensor out(std::vector<int64_t>{});
  out[0] = acc / n;
  return Push(std::move(out), NeedsGrad(pred),
              [this, pred, target, n, id = nodes_.size()]() {
                const double g = nodes_[id].grad[0];
                const Tensor &pv2 = value(pred);
                Tensor &gp = grad(pred);
                for (int64_t i = 0; i < pv2.numel(); ++i)
                  gp[i] += g * 2.0 * (pv2[i] - target[i]) / n;
              });
}

Var Tape::BceWithLogitsLoss(Var logits, const Tensor &targets) {
  const Tensor &zv = value(logits);
  Require(zv.SameShape(targets), "bce: shape mismatch");
  Require(zv.numel() > 0, "bce: empty tensors");
  const double n = static_cast<double>(zv.numel());
  double acc = 0.0;
  for (int64_t i = 0; i < zv.numel(); ++i) {
    const double z = zv[i], y = targets[i];
    acc += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
  }
  Tensor out(std::vector<int64_t>{});
  out[0] = acc / n;
  return Push(std::move(out), NeedsGrad(logits),
              [this, logits, targets, n, id = nodes_.size()]() {
                const double g = nodes_[id].grad[0];
                const Tensor &zv2 = value(logits);
                Tensor &gz = grad(logits);
                for (int64_t i = 0; i < zv2.numel(); ++i)
                  gz[i] += g * (kernels::SigmoidScalar(zv2[i]) - targets[i]) / n;
              });
}

}  // namespace aratts::ad
