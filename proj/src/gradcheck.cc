// src/gradcheck.cc

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

#include "aratts/gradcheck.h"

#include <cmath>
#include <memory>

#include "aratts/waveglow.h"

namespace aratts::gradcheck {

namespace {

// Pushes values away from a non-differentiable point so the finite
// difference does not straddle a kink.
Tensor NudgeAway(Tensor t, double point, double margin) {
  for (auto &v : t.vec())
    if (std::abs(v - point) < margin) v = point + (v >= point ? margin : -margin);
  return t;
}

double Evaluate(const Case &c, const std::vector<Tensor> &leaves) {
  ad::Tape tape;
  std::vector<ad::Var> vars;
  vars.reserve(leaves.size());
  for (const Tensor &t : leaves) vars.push_back(tape.Leaf(t, true));
  const ad::Var loss = c.build(tape, vars);
  return tape.value(loss)[0];
}

}  // namespace

CaseResult RunCase(const Case &c, double h, double sabotage) {
  CaseResult res;
  res.name = c.name;

  // Analytic pass.
  ad::Tape tape;
  std::vector<ad::Var> vars;
  for (const Tensor &t : c.leaves) vars.push_back(tape.Leaf(t, true));
  const ad::Var loss = c.build(tape, vars);
  tape.Backward(loss);
  std::vector<Tensor> analytic;
  analytic.reserve(vars.size());
  for (ad::Var v : vars) analytic.push_back(tape.grad(v));
  if (sabotage != 0.0 && !analytic.empty() && analytic[0].numel() > 0)
    analytic[0][0] += sabotage;

  // Central differences per leaf element.
  double max_err = 0.0;
  std::vector<Tensor> work = c.leaves;
  for (std::size_t li = 0; li < work.size(); ++li) {
    for (int64_t i = 0; i < work[li].numel(); ++i) {
      const double keep = work[li][i];
      work[li][i] = keep + h;
      const double fp = Evaluate(c, work);
      work[li][i] = keep - h;
      const double fm = Evaluate(c, work);
      work[li][i] = keep;
      const double numeric = (fp - fm) / (2.0 * h);
      const double a = analytic[li][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-2});
      max_err = std::max(max_err, std::abs(a - numeric) / denom);
    }
  }
  res.max_rel_err = max_err;
  res.pass = max_err < kGradTolerance;
  return res;
}

std::vector<Case> StandardCases(uint64_t seed) {
  std::vector<Case> cases;
  CounterRng rng(seed, CounterRng::StreamOf("gradcheck"));

  auto randn = [&rng](std::vector<int64_t> shape) {
    return Tensor::Randn(std::move(shape), rng);
  };
  auto sq_sum = [](ad::Tape &t, ad::Var v) { return t.Sum(t.Mul(v, v)); };

  cases.push_back({"add",
                   {randn({2, 3}), randn({2, 3})},
                   [](ad::Tape &t, const std::vector<ad::Var> &v) {
                     return t.Sum(t.Mul(t.Add(v[0], v[1]), t.Add(v[0], v[1])));
                   }});
  cases.push_back({"sub",
                   {randn({4}), randn({4})},
                   [sq_sum](ad::Tape &t, const std::vector<ad::Var> &v) {
                     return sq_sum(t, t.Sub(v[0], v[1]));
                   }});
  cases.push_back({"mul",
                   {randn({2, 3}), randn({2, 3})},
                   [](ad::Tape &t, const std::vector<ad::Var> &v) {
                     return t.Sum(t.Mul(v[0], v[1]));
                   }});
  cases.push_back({"scalar_mul",
                   {randn({5})},
                   [sq_sum](ad::Tape &t, const std::vector<ad::Var> &v) {
                     return sq_sum(t, t.ScalarMul(v[0], -1.7));
                   }});
  cases.push_back({"matmul",
                   {randn({2, 3}), randn({3, 2})},
                   [sq_sum](ad::Tape &t, const std::vector<ad::Var> &v) {
                     return sq_sum(t, t.Matmul(v[0], v[1]));
                   }});
  cases.push_back({"matvec",
                   {randn({3, 4}), randn({4})},
                   [sq_sum](ad::Tape &t, const std::vector<ad::Var> &v) {
                     return sq_sum(t, t.MatVec(v[0], v[1]));
                   }});
  cases.push_back({"vecmat",
                   {randn({3}), randn({3, 4})},
                   [sq_sum](ad::Tape &t, const std::vector<ad::Var> &v) {
                     return sq_sum(t, t.VecMat(v[0], v[1]));
                   }});
  cases.push_back({"transpose",
                   {randn({2, 4})},
                   [sq_sum](ad::Tape &t, const std::vector<ad::Var> &v) {
                     return sq_sum(t, t.Transpose(v[0]));
                   }});
  cases.push_back({"linear",
                   {randn({2, 3}), randn({3, 4}), randn({4})},
                   [sq_sum](ad::Tape &t, const std::vector<ad::Var> &v) {
                     return sq_sum(t, t.AddRow(t.Matmul(v[0], v[1]), v[2]));
                   }});
  cases.push_back({"conv1d",
                   {randn({5, 2}), randn({3, 2, 2}), randn({2})},
                   [sq_sum](ad::Tape &t, const std::vector<ad::Var> &v) {
                     return sq_sum(t, t.Conv1dSame(v[0], v[1], v[2]));
                   }});
  cases.push_back({"conv1d_dilated",
                   {randn({6, 2}), randn({3, 2, 1}), randn({1})},
                   [sq_sum](ad::Tape &t, const std::vector<ad::Var> &v) {
                     return sq_sum(t, t.Conv1dSame(v[0], v[1], v[2], 2));
                   }});
  cases.push_back({"conv_transpose1d",
                   {randn({3, 2}), randn({4, 2, 2}), randn({2})},
                   [sq_sum](ad::Tape &t, const std::vector<ad::Var> &v) {
                     return sq_sum(t, t.ConvTranspose1d(v[0], v[1], v[2], 2));
                   }});
  cases.push_back({"embedding_lookup",
                   {randn({5, 3})},
                   [sq_sum](ad::Tape &t, const std::vector<ad::Var> &v) {
                     return sq_sum(t, t.EmbeddingLookup(v[0], {0, 3, 3, 1}));
                   }});
  cases.push_back({"batch_norm_train",
                   {randn({6, 2}), randn({2}), randn({2})},
                   [sq_sum](ad::Tape &t, const std::vector<ad::Var> &v) {
                     return sq_sum(t, t.BatchNorm(v[0], v[1], v[2], true));
                   }});
  cases.push_back(
      {"batch_norm_eval",
       {randn({4, 2}), randn({2}), randn({2})},
       [sq_sum](ad::Tape &t, const std::vector<ad::Var> &v) {
         Tensor rm({2});
         rm[0] = 0.3;
         rm[1] = -0.2;
         Tensor rv({2});
         rv[0] = 1.4;
         rv[1] = 0.6;
         return sq_sum(t, t.BatchNorm(v[0], v[1], v[2], false, &rm, &rv));
       }});
  cases.push_back({"relu",
                   {NudgeAway(randn({2, 4}), 0.0, 0.05)},
                   [sq_sum](ad::Tape &t, const std::vector<ad::Var> &v) {
                     return sq_sum(t, t.Relu(v[0]));
                   }});
  cases.push_back({"tanh",
                   {randn({6})},
                   [sq_sum](ad::Tape &t, const std::vector<ad::Var> &v) {
                     return sq_sum(t, t.Tanh(v[0]));
                   }});
  cases.push_back({"sigmoid",
                   {randn({6})},
                   [sq_sum](ad::Tape &t, const std::vector<ad::Var> &v) {
                     return sq_sum(t, t.Sigmoid(v[0]));
                   }});
  cases.push_back({"exp",
                   {randn({6})},
                   [sq_sum](ad::Tape &t, const std::vector<ad::Var> &v) {
                     return sq_sum(t, t.Exp(v[0]));
                   }});
  cases.push_back({"clamp",
                   {NudgeAway(NudgeAway(randn({8}), -1.0, 0.05), 1.0, 0.05)},
                   [sq_sum](ad::Tape &t, const std::vector<ad::Var> &v) {
                     return sq_sum(t, t.Clamp(v[0], -1.0, 1.0));
                   }});
  {
    Tensor probe = randn({5});
    cases.push_back({"softmax",
                     {randn({5})},
                     [probe](ad::Tape &t, const std::vector<ad::Var> &v) {
                       return t.Sum(t.Mul(t.Softmax1d(v[0]), t.Constant(probe)));
                     }});
  }
  {
    Tensor probe = randn({3, 4});
    cases.push_back(
        {"softmax_rows",
         {randn({3, 4})},
         [probe](ad::Tape &t, const std::vector<ad::Var> &v) {
           return t.Sum(t.Mul(t.SoftmaxRows(v[0]), t.Constant(probe)));
         }});
  }
  cases.push_back({"dropout",
                   {randn({3, 3})},
                   [sq_sum](ad::Tape &t, const std::vector<ad::Var> &v) {
                     // Same seed every rebuild: the mask must match between
                     // the analytic and finite-difference passes.
                     CounterRng mask_rng(11, CounterRng::StreamOf("dropout"));
                     return sq_sum(t, t.Dropout(v[0], 0.4, true, mask_rng));
                   }});
  cases.push_back(
      {"lstm_cell",
       {randn({3}), randn({2}), randn({2}), Tensor::Randn({3, 8}, rng, 0.5),
        Tensor::Randn({2, 8}, rng, 0.5), randn({8})},
       [sq_sum](ad::Tape &t, const std::vector<ad::Var> &v) {
         ad::Tape::LstmOut s = t.LstmCell(v[0], v[1], v[2], v[3], v[4], v[5]);
         return t.Add(sq_sum(t, s.h), t.Sum(s.c));
       }});
  {
    CounterRng mask_rng(5, CounterRng::StreamOf("zoneout"));
    Tensor keep({4});
    for (int64_t i = 0; i < 4; ++i)
      keep[i] = mask_rng.NextBernoulli(0.3) ? 1.0 : 0.0;
    cases.push_back({"blend",
                     {randn({4}), randn({4})},
                     [keep, sq_sum](ad::Tape &t, const std::vector<ad::Var> &v) {
                       return sq_sum(t, t.Blend(v[0], v[1], keep));
                     }});
  }
  cases.push_back({"concat_slice",
                   {randn({3}), randn({4})},
                   [sq_sum](ad::Tape &t, const std::vector<ad::Var> &v) {
                     ad::Var c = t.Concat1d(v[0], v[1]);
                     return sq_sum(t, t.SliceRange(c, 1, 6));
                   }});
  cases.push_back({"concat_cols_slice",
                   {randn({3, 2}), randn({3, 3})},
                   [sq_sum](ad::Tape &t, const std::vector<ad::Var> &v) {
                     ad::Var c = t.ConcatCols(v[0], v[1]);
                     return sq_sum(t, t.SliceCols(c, 1, 4));
                   }});
  cases.push_back({"stack_rows",
                   {randn({3}), randn({3}), randn({3})},
                   [sq_sum](ad::Tape &t, const std::vector<ad::Var> &v) {
                     return sq_sum(t, t.StackRows({v[0], v[1], v[2]}));
                   }});
  cases.push_back({"reshape",
                   {randn({2, 3})},
                   [sq_sum](ad::Tape &t, const std::vector<ad::Var> &v) {
                     return sq_sum(t, t.Reshape(v[0], {6}));
                   }});
  cases.push_back({"row",
                   {randn({4, 3})},
                   [sq_sum](ad::Tape &t, const std::vector<ad::Var> &v) {
                     return t.Add(sq_sum(t, t.Row(v[0], 0)),
                                  sq_sum(t, t.Row(v[0], 2)));
                   }});
  {
    // Diagonal dominance keeps the matrix far from singular under FD probes.
    Tensor w = randn({3, 3});
    for (int64_t i = 0; i < 3; ++i) w.at(i, i) += 3.0;
    cases.push_back({"log_abs_det",
                     {w},
                     [](ad::Tape &t, const std::vector<ad::Var> &v) {
                       return t.LogAbsDet(v[0]);
                     }});
  }
  {
    Tensor target = randn({2, 3});
    cases.push_back({"mse_loss",
                     {randn({2, 3})},
                     [target](ad::Tape &t, const std::vector<ad::Var> &v) {
                       return t.MseLoss(v[0], target);
                     }});
  }
  {
    Tensor target({5});
    for (int64_t i = 0; i < 5; ++i) target[i] = (i % 2 == 0) ? 1.0 : 0.0;
    cases.push_back(
        {"bce_with_logits_loss",
         {randn({5})},
         [target](ad::Tape &t, const std::vector<ad::Var> &v) {
           return t.BceWithLogitsLoss(v[0], target);
         }});
  }
  // Additive attention energies end to end: project, tanh, softmax, context.
  cases.push_back(
      {"attention_composite",
       {randn({4, 3}), randn({3, 2}), randn({3}), randn({3, 2}), randn({2}),
        randn({2})},
       [sq_sum](ad::Tape &t, const std::vector<ad::Var> &v) {
         ad::Var enc = v[0], V = v[1], s = v[2], W = v[3], w = v[4], b = v[5];
         ad::Var proj = t.AddRow(t.Matmul(enc, V), t.Add(t.VecMat(s, W), b));
         ad::Var e = t.MatVec(t.Tanh(proj), w);
         ad::Var alpha = t.Softmax1d(e);
         return sq_sum(t, t.VecMat(alpha, enc));
       }});
  // Conv, train-mode norm, relu stacked, as in the encoder.
  cases.push_back(
      {"conv_norm_relu_composite",
       {randn({6, 2}), randn({3, 2, 2}), randn({2}), randn({2}), randn({2})},
       [sq_sum](ad::Tape &t, const std::vector<ad::Var> &v) {
         ad::Var y = t.Conv1dSame(v[0], v[1], v[2]);
         y = t.BatchNorm(y, v[3], v[4], true);
         return sq_sum(t, t.Relu(y));
       }});
  // Zoneout: sampled mask mixing the previous and the new LSTM state.
  {
    CounterRng mask_rng(17, CounterRng::StreamOf("zoneout"));
    Tensor keep({2});
    for (int64_t i = 0; i < 2; ++i)
      keep[i] = mask_rng.NextBernoulli(0.5) ? 1.0 : 0.0;
    cases.push_back(
        {"zoneout_lstm_composite",
         {randn({3}), randn({2}), randn({2}), Tensor::Randn({3, 8}, rng, 0.5),
          Tensor::Randn({2, 8}, rng, 0.5), randn({8})},
         [keep, sq_sum](ad::Tape &t, const std::vector<ad::Var> &v) {
           ad::Tape::LstmOut s = t.LstmCell(v[0], v[1], v[2], v[3], v[4], v[5]);
           ad::Var h = t.Blend(v[1], s.h, keep);
           ad::Var c = t.Blend(v[2], s.c, keep);
           return t.Add(sq_sum(t, h), sq_sum(t, c));
         }});
  }
  // One full attention step with the location term: cumulative weights run
  // through a conv, join the projected query, and produce the context.
  cases.push_back(
      {"location_attention_composite",
       {randn({4, 3}), randn({3, 2}), randn({3}), randn({3, 2}), randn({2}),
        randn({2}), randn({3, 1, 2}), randn({2}), randn({2, 2}),
        Tensor::Uniform({4}, rng, 0.0, 1.0)},
       [sq_sum](ad::Tape &t, const std::vector<ad::Var> &v) {
         ad::Var enc = v[0], V = v[1], q = v[2], W = v[3], w = v[4], b = v[5];
         ad::Var lw = v[6], lb = v[7], lproj = v[8], cum = v[9];
         ad::Var loc = t.Conv1dSame(t.Reshape(cum, {4, 1}), lw, lb);
         ad::Var arg = t.AddRow(t.Add(t.Matmul(enc, V), t.Matmul(loc, lproj)),
                                t.Add(t.VecMat(q, W), b));
         ad::Var alpha = t.Softmax1d(t.MatVec(t.Tanh(arg), w));
         return sq_sum(t, t.VecMat(alpha, enc));
       }});
  // Encoder slice: embedding rows through conv, train-mode norm, relu, then
  // a two-direction recurrence over four steps.
  cases.push_back(
      {"encoder_slice_composite",
       {Tensor::Randn({5, 3}, rng, 0.5), Tensor::Randn({3, 3, 3}, rng, 0.5),
        randn({3}), randn({3}), randn({3}), Tensor::Randn({3, 8}, rng, 0.5),
        Tensor::Randn({2, 8}, rng, 0.5), randn({8}),
        Tensor::Randn({3, 8}, rng, 0.5), Tensor::Randn({2, 8}, rng, 0.5),
        randn({8})},
       [sq_sum](ad::Tape &t, const std::vector<ad::Var> &v) {
         ad::Var y = t.Conv1dSame(t.EmbeddingLookup(v[0], {0, 2, 4, 1}),
                                  v[1], v[2]);
         y = t.Relu(t.BatchNorm(y, v[3], v[4], true));
         const int64_t n = 4;
         Tensor zero({2});
         std::vector<ad::Var> fwd(n), bwd(n);
         ad::Var h = t.Constant(zero), c = t.Constant(zero);
         for (int64_t i = 0; i < n; ++i) {
           ad::Tape::LstmOut s = t.LstmCell(t.Row(y, i), h, c, v[5], v[6], v[7]);
           h = s.h;
           c = s.c;
           fwd[static_cast<std::size_t>(i)] = h;
         }
         h = t.Constant(zero);
         c = t.Constant(zero);
         for (int64_t i = n - 1; i >= 0; --i) {
           ad::Tape::LstmOut s =
               t.LstmCell(t.Row(y, i), h, c, v[8], v[9], v[10]);
           h = s.h;
           c = s.c;
           bwd[static_cast<std::size_t>(i)] = h;
         }
         std::vector<ad::Var> rows(n);
         for (int64_t i = 0; i < n; ++i)
           rows[static_cast<std::size_t>(i)] =
               t.Concat1d(fwd[static_cast<std::size_t>(i)],
                          bwd[static_cast<std::size_t>(i)]);
         return sq_sum(t, t.StackRows(rows));
       }});
  // Two-flow vocoder likelihood over 64 samples, every weight a leaf.
  {
    WaveGlowConfig wc;
    wc.n_flows = 2;
    wc.group = 8;
    wc.wn_layers = 1;
    wc.wn_channels = 8;
    wc.wn_kernel = 3;
    wc.n_mels = 4;
    wc.hop = 16;
    wc.upsample_kernel = 32;
    auto model = std::make_shared<WaveGlowModel>(wc, seed ^ 0x50f);
    std::vector<double> audio(64);
    for (std::size_t i = 0; i < audio.size(); ++i)
      audio[i] = 0.5 * std::sin(0.37 * static_cast<double>(i)) +
                 0.1 * rng.NextGaussian();
    Tensor mel = Tensor::Randn({4, 4}, rng, 0.5);
    std::vector<std::string> names = model->params().Names();
    std::vector<Tensor> leaves;
    leaves.reserve(names.size());
    for (const std::string &name : names)
      leaves.push_back(model->params().Get(name));
    cases.push_back(
        {"vocoder_nll_composite", std::move(leaves),
         [model, names, audio, mel](ad::Tape &t,
                                    const std::vector<ad::Var> &v) {
           WaveGlowModel::Bound bound;
           for (std::size_t i = 0; i < names.size(); ++i)
             bound.vars.emplace(names[i], v[i]);
           return model->Nll(t, bound, audio, mel);
         }});
  }
  return cases;
}

std::vector<CaseResult> RunAll(uint64_t seed) {
  std::vector<CaseResult> out;
  for (const Case &c : StandardCases(seed)) out.push_back(RunCase(c));
  return out;
}

std::vector<CaseResult> RunAll(uint64_t seed,
                               const std::string &sabotage_case) {
  std::vector<CaseResult> out;
  for (const Case &c : StandardCases(seed))
    out.push_back(RunCase(c, kFdStep, c.name == sabotage_case ? 0.5 : 0.0));
  return out;
}

}  // namespace aratts::gradcheck
