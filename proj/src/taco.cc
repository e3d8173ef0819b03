// src/taco.cc

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

#include "aratts/taco.h"

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "aratts/error.h"
#include "aratts/kernels.h"

namespace aratts {

namespace {

constexpr double kMaskEnergy = -1e30;

// Uniform Xavier draw with the given fan pair.
Tensor Xavier(std::vector<int64_t> shape, int64_t fan_in, int64_t fan_out,
              CounterRng &rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  return Tensor::Uniform(std::move(shape), rng, -a, a);
}

Tensor XavierLinear(int64_t in, int64_t out, CounterRng &rng) {
  return Xavier({in, out}, in, out, rng);
}

Tensor XavierConv(int64_t k, int64_t ci, int64_t co, CounterRng &rng) {
  return Xavier({k, ci, co}, k * ci, k * co, rng);
}

// LSTM parameters; forget-gate bias starts at one so early cells remember.
void AddLstm(ParamStore &p, const std::string &prefix, int64_t d_in,
             int64_t d_h, uint64_t seed) {
  CounterRng rng_ih(seed, CounterRng::StreamOf(prefix + ".w_ih"));
  CounterRng rng_hh(seed, CounterRng::StreamOf(prefix + ".w_hh"));
  p.Add(prefix + ".w_ih", Xavier({d_in, 4 * d_h}, d_in, d_h, rng_ih));
  p.Add(prefix + ".w_hh", Xavier({d_h, 4 * d_h}, d_h, d_h, rng_hh));
  Tensor b({4 * d_h});
  for (int64_t i = d_h; i < 2 * d_h; ++i) b[i] = 1.0;
  p.Add(prefix + ".b", std::move(b));
}

void AddBatchNorm(ParamStore &p, const std::string &prefix, int64_t c) {
  p.Add(prefix + ".gamma", Tensor::Full({c}, 1.0));
  p.Add(prefix + ".beta", Tensor::Zeros({c}));
  p.Add(prefix + ".running_mean", Tensor::Zeros({c}), /*trainable=*/false);
  p.Add(prefix + ".running_var", Tensor::Full({c}, 1.0), /*trainable=*/false);
}

// Eval-mode batch norm on running statistics.
Tensor BnEval(const Tensor &x, const Tensor &gamma, const Tensor &beta,
              const Tensor &rm, const Tensor &rv) {
  const int64_t T = x.dim(0), C = x.dim(1);
  Tensor y({T, C});
  for (int64_t c = 0; c < C; ++c) {
    const double inv = 1.0 / std::sqrt(rv[c] + ad::kBatchNormEps);
    for (int64_t t = 0; t < T; ++t)
      y.at(t, c) = gamma[c] * (x.at(t, c) - rm[c]) * inv + beta[c];
  }
  return y;
}

}  // namespace

TacoConfig TacoConfig::Full(int64_t n_symbols) {
  TacoConfig c;
  c.n_symbols = n_symbols;
  return c;
}

TacoConfig TacoConfig::Reduced(int64_t n_symbols) {
  TacoConfig c;
  c.n_symbols = n_symbols;
  c.embedding_dim = 64;
  c.encoder_conv_channels = 64;
  c.encoder_lstm_units = 64;
  c.decoder_lstm_units = 128;
  c.attention_dim = 64;
  c.location_filters = 16;
  c.location_kernel = 31;
  c.prenet_units = 64;
  c.postnet_channels = 64;
  return c;
}

void TacoConfig::Validate() const {
  auto need = [](bool ok, const char *msg) {
    if (!ok) Throw(ErrorKind::kBadConfig, msg);
  };
  need(n_symbols > 0, "config: n_symbols must be positive");
  need(embedding_dim > 0 && encoder_conv_channels > 0 && prenet_units > 0 &&
           decoder_lstm_units > 0 && attention_dim > 0 && n_mels > 0 &&
           postnet_channels > 0,
       "config: layer widths must be positive");
  need(encoder_conv_layers > 0 && postnet_layers >= 2,
       "config: layer counts out of range");
  need(encoder_conv_width > 0 && encoder_conv_width % 2 == 1 &&
           postnet_width > 0 && postnet_width % 2 == 1,
       "config: conv widths must be odd");
  need(encoder_lstm_units > 0 && encoder_lstm_units % 2 == 0,
       "config: encoder_lstm_units must be even");
  need(!location_features ||
           (location_filters > 0 && location_kernel > 0 &&
            location_kernel % 2 == 1),
       "config: location feature shape invalid");
  need(encoder_dropout >= 0 && encoder_dropout < 1 && prenet_dropout >= 0 &&
           prenet_dropout < 1 && zoneout >= 0 && zoneout < 1,
       "config: rates must lie in [0, 1)");
  need(max_steps_scale > 0 && max_steps_slack >= 0,
       "config: decode cap invalid");
}

nlohmann::json TacoConfig::ToJson() const {
  return {{"n_symbols", n_symbols},
          {"embedding_dim", embedding_dim},
          {"encoder_conv_channels", encoder_conv_channels},
          {"encoder_conv_width", encoder_conv_width},
          {"encoder_conv_layers", encoder_conv_layers},
          {"encoder_lstm_units", encoder_lstm_units},
          {"attention_dim", attention_dim},
          {"location_features", location_features},
          {"location_filters", location_filters},
          {"location_kernel", location_kernel},
          {"prenet_units", prenet_units},
          {"decoder_lstm_units", decoder_lstm_units},
          {"n_mels", n_mels},
          {"postnet_channels", postnet_channels},
          {"postnet_width", postnet_width},
          {"postnet_layers", postnet_layers},
          {"encoder_dropout", encoder_dropout},
          {"prenet_dropout", prenet_dropout},
          {"zoneout", zoneout},
          {"stop_threshold", stop_threshold},
          {"max_steps_scale", max_steps_scale},
          {"max_steps_slack", max_steps_slack}};
}

TacoConfig TacoConfig::FromJson(const nlohmann::json &j) {
  TacoConfig c;
  try {
    j.at("n_symbols").get_to(c.n_symbols);
    j.at("embedding_dim").get_to(c.embedding_dim);
    j.at("encoder_conv_channels").get_to(c.encoder_conv_channels);
    j.at("encoder_conv_width").get_to(c.encoder_conv_width);
    j.at("encoder_conv_layers").get_to(c.encoder_conv_layers);
    j.at("encoder_lstm_units").get_to(c.encoder_lstm_units);
    j.at("attention_dim").get_to(c.attention_dim);
    j.at("location_features").get_to(c.location_features);
    j.at("location_filters").get_to(c.location_filters);
    j.at("location_kernel").get_to(c.location_kernel);
    j.at("prenet_units").get_to(c.prenet_units);
    j.at("decoder_lstm_units").get_to(c.decoder_lstm_units);
    j.at("n_mels").get_to(c.n_mels);
    j.at("postnet_channels").get_to(c.postnet_channels);
    j.at("postnet_width").get_to(c.postnet_width);
    j.at("postnet_layers").get_to(c.postnet_layers);
    j.at("encoder_dropout").get_to(c.encoder_dropout);
    j.at("prenet_dropout").get_to(c.prenet_dropout);
    j.at("zoneout").get_to(c.zoneout);
    j.at("stop_threshold").get_to(c.stop_threshold);
    j.at("max_steps_scale").get_to(c.max_steps_scale);
    j.at("max_steps_slack").get_to(c.max_steps_slack);
  } catch (const nlohmann::json::exception &e) {
    Throw(ErrorKind::kBadConfig,
          std::string("config json: ") + e.what());
  }
  c.Validate();
  return c;
}

TacoModel::TacoModel(const TacoConfig &cfg, uint64_t seed) : cfg_(cfg) {
  cfg_.Validate();
  auto rng_for = [seed](const std::string &name) {
    return CounterRng(seed, CounterRng::StreamOf(name));
  };

  {
    CounterRng r = rng_for("encoder.embedding");
    params_.Add("encoder.embedding",
                Tensor::Randn({cfg_.n_symbols, cfg_.embedding_dim}, r, 0.5));
  }
  int64_t ci = cfg_.embedding_dim;
  for (int64_t l = 0; l < cfg_.encoder_conv_layers; ++l) {
    const std::string pre = "encoder.conv" + std::to_string(l);
    CounterRng r = rng_for(pre + ".w");
    params_.Add(pre + ".w", XavierConv(cfg_.encoder_conv_width, ci,
                                       cfg_.encoder_conv_channels, r));
    params_.Add(pre + ".b", Tensor::Zeros({cfg_.encoder_conv_channels}));
    AddBatchNorm(params_, pre + ".bn", cfg_.encoder_conv_channels);
    ci = cfg_.encoder_conv_channels;
  }
  const int64_t half = cfg_.encoder_lstm_units / 2;
  AddLstm(params_, "encoder.lstm_fwd", ci, half, seed);
  AddLstm(params_, "encoder.lstm_bwd", ci, half, seed);

  const int64_t enc_out = cfg_.encoder_lstm_units;
  const int64_t A = cfg_.attention_dim;
  {
    CounterRng rw = rng_for("attention.W"), rv = rng_for("attention.V"),
               re = rng_for("attention.w");
    params_.Add("attention.W", XavierLinear(cfg_.decoder_lstm_units, A, rw));
    params_.Add("attention.V", XavierLinear(enc_out, A, rv));
    params_.Add("attention.b", Tensor::Zeros({A}));
    params_.Add("attention.w", Xavier({A}, A, 1, re));
  }
  if (cfg_.location_features) {
    CounterRng rc = rng_for("attention.loc_conv.w"),
               rp = rng_for("attention.loc_proj");
    params_.Add("attention.loc_conv.w",
                XavierConv(cfg_.location_kernel, 1, cfg_.location_filters, rc));
    params_.Add("attention.loc_conv.b", Tensor::Zeros({cfg_.location_filters}));
    params_.Add("attention.loc_proj",
                XavierLinear(cfg_.location_filters, A, rp));
  }

  {
    CounterRng r1 = rng_for("decoder.prenet1.w"),
               r2 = rng_for("decoder.prenet2.w");
    params_.Add("decoder.prenet1.w",
                XavierLinear(cfg_.n_mels, cfg_.prenet_units, r1));
    params_.Add("decoder.prenet1.b", Tensor::Zeros({cfg_.prenet_units}));
    params_.Add("decoder.prenet2.w",
                XavierLinear(cfg_.prenet_units, cfg_.prenet_units, r2));
    params_.Add("decoder.prenet2.b", Tensor::Zeros({cfg_.prenet_units}));
  }
  AddLstm(params_, "decoder.lstm1", cfg_.prenet_units + enc_out,
          cfg_.decoder_lstm_units, seed);
  AddLstm(params_, "decoder.lstm2", cfg_.decoder_lstm_units + enc_out,
          cfg_.decoder_lstm_units, seed);
  const int64_t proj_in = cfg_.decoder_lstm_units + enc_out;
  {
    CounterRng rm = rng_for("decoder.mel_proj.w"),
               rs = rng_for("decoder.stop_proj.w");
    params_.Add("decoder.mel_proj.w", XavierLinear(proj_in, cfg_.n_mels, rm));
    params_.Add("decoder.mel_proj.b", Tensor::Zeros({cfg_.n_mels}));
    params_.Add("decoder.stop_proj.w", XavierLinear(proj_in, 1, rs));
    params_.Add("decoder.stop_proj.b", Tensor::Zeros({1}));
  }

  ci = cfg_.n_mels;
  for (int64_t l = 0; l < cfg_.postnet_layers; ++l) {
    const std::string pre = "postnet.conv" + std::to_string(l);
    const bool last = l == cfg_.postnet_layers - 1;
    const int64_t co = last ? cfg_.n_mels : cfg_.postnet_channels;
    if (last) {
      // Zero residual at init: the postnet output starts equal to its input.
      params_.Add(pre + ".w", Tensor::Zeros({cfg_.postnet_width, ci, co}));
    } else {
      CounterRng r = rng_for(pre + ".w");
      params_.Add(pre + ".w", XavierConv(cfg_.postnet_width, ci, co, r));
    }
    params_.Add(pre + ".b", Tensor::Zeros({co}));
    AddBatchNorm(params_, pre + ".bn", co);
    ci = co;
  }
}

ad::Var TacoModel::Bound::at(const std::string &name) const {
  auto it = vars.find(name);
  if (it == vars.end())
    Throw(ErrorKind::kBadConfig, "unbound parameter: " + name);
  return it->second;
}

TacoModel::Bound TacoModel::Bind(ad::Tape &tape) const {
  Bound b;
  for (const std::string &name : params_.Names())
    b.vars[name] = tape.Leaf(params_.Get(name), params_.Trainable(name));
  return b;
}

AttentionWeights TacoModel::attention_weights() const {
  AttentionWeights aw;
  aw.W = &params_.Get("attention.W");
  aw.V = &params_.Get("attention.V");
  aw.b = &params_.Get("attention.b");
  aw.w = &params_.Get("attention.w");
  if (cfg_.location_features) {
    aw.loc_conv_w = &params_.Get("attention.loc_conv.w");
    aw.loc_conv_b = &params_.Get("attention.loc_conv.b");
    aw.loc_proj = &params_.Get("attention.loc_proj");
  }
  return aw;
}

AttentionStep AttendEval(const Tensor &memory, const Tensor &hv,
                         const Tensor &query, const Tensor &cum,
                         const AttentionWeights &aw, int64_t valid_len) {
  const int64_t T = memory.dim(0);
  if (valid_len < 1 || valid_len > T)
    Throw(ErrorKind::kShapeMismatch, "attend: valid_len out of range");
  Tensor arg = hv;
  if (aw.loc_proj != nullptr) {
    Tensor cum_col({T, 1});
    for (int64_t t = 0; t < T; ++t) cum_col.at(t, 0) = cum[t];
    const Tensor f =
        kernels::Conv1dSame(cum_col, *aw.loc_conv_w, *aw.loc_conv_b);
    const Tensor loc = kernels::Matmul(f, *aw.loc_proj);
    for (int64_t i = 0; i < arg.numel(); ++i) arg[i] += loc[i];
  }
  const Tensor qrow = kernels::VecMat(query, *aw.W);
  const int64_t A = qrow.dim(0);
  for (int64_t t = 0; t < T; ++t)
    for (int64_t a = 0; a < A; ++a)
      arg.at(t, a) = std::tanh(arg.at(t, a) + qrow[a] + (*aw.b)[a]);
  AttentionStep out;
  out.energies = kernels::MatVec(arg, *aw.w);
  Tensor masked = out.energies;
  for (int64_t t = valid_len; t < T; ++t) masked[t] = kMaskEnergy;
  out.alpha = kernels::Softmax1d(masked);
  out.context = kernels::VecMat(out.alpha, memory);
  return out;
}

namespace {

// Tape-side state threaded through the decoder loop.
struct TapeAttention {
  ad::Var memory;  // [T_x, enc_out]
  ad::Var hv;      // [T_x, A]
  ad::Var cum;     // [T_x, 1]
  ad::Var context; // [enc_out]
};

}  // namespace

TacoModel::TeacherForcedOut TacoModel::TeacherForced(
    ad::Tape &t, const Bound &bound, const std::vector<int64_t> &ids,
    const Tensor &mel_target, bool training, CounterRng &rng) {
  const int64_t T_x = static_cast<int64_t>(ids.size());
  if (T_x < 1) Throw(ErrorKind::kShapeMismatch, "teacher forced: empty input");
  if (mel_target.rank() != 2 || mel_target.dim(1) != cfg_.n_mels ||
      mel_target.dim(0) < 1)
    Throw(ErrorKind::kShapeMismatch, "teacher forced: bad target shape");
  const int64_t T_dec = mel_target.dim(0);
  const int64_t enc_out = cfg_.encoder_lstm_units;
  const int64_t half = enc_out / 2;
  const int64_t D = cfg_.decoder_lstm_units;

  // Encoder.
  ad::Var x = t.EmbeddingLookup(bound.at("encoder.embedding"), ids);
  for (int64_t l = 0; l < cfg_.encoder_conv_layers; ++l) {
    const std::string pre = "encoder.conv" + std::to_string(l);
    x = t.Conv1dSame(x, bound.at(pre + ".w"), bound.at(pre + ".b"));
    x = t.BatchNorm(x, bound.at(pre + ".bn.gamma"), bound.at(pre + ".bn.beta"),
                    training, &params_.Get(pre + ".bn.running_mean"),
                    &params_.Get(pre + ".bn.running_var"));
    x = t.Relu(x);
    x = t.Dropout(x, cfg_.encoder_dropout, training, rng);
  }
  std::vector<ad::Var> fwd(T_x), bwd(T_x);
  {
    ad::Var h = t.Constant(Tensor::Zeros({half}));
    ad::Var c = t.Constant(Tensor::Zeros({half}));
    for (int64_t i = 0; i < T_x; ++i) {
      auto out = t.LstmCell(t.Row(x, i), h, c, bound.at("encoder.lstm_fwd.w_ih"),
                            bound.at("encoder.lstm_fwd.w_hh"),
                            bound.at("encoder.lstm_fwd.b"));
      h = out.h;
      c = out.c;
      fwd[i] = h;
    }
  }
  {
    ad::Var h = t.Constant(Tensor::Zeros({half}));
    ad::Var c = t.Constant(Tensor::Zeros({half}));
    for (int64_t i = T_x - 1; i >= 0; --i) {
      auto out = t.LstmCell(t.Row(x, i), h, c, bound.at("encoder.lstm_bwd.w_ih"),
                            bound.at("encoder.lstm_bwd.w_hh"),
                            bound.at("encoder.lstm_bwd.b"));
      h = out.h;
      c = out.c;
      bwd[i] = h;
    }
  }
  std::vector<ad::Var> enc_rows(T_x);
  for (int64_t i = 0; i < T_x; ++i) enc_rows[i] = t.Concat1d(fwd[i], bwd[i]);
  TapeAttention att;
  att.memory = t.StackRows(enc_rows);
  att.hv = t.Matmul(att.memory, bound.at("attention.V"));
  att.cum = t.Constant(Tensor::Zeros({T_x, 1}));
  att.context = t.Constant(Tensor::Zeros({enc_out}));

  // Zoneout helper; keep-probability is the zoneout rate.
  auto zone = [&](ad::Var prev, ad::Var next, int64_t n) {
    if (cfg_.zoneout == 0.0) return next;
    Tensor keep({n});
    if (training) {
      for (int64_t i = 0; i < n; ++i)
        keep[i] = rng.NextBernoulli(cfg_.zoneout) ? 1.0 : 0.0;
    } else {
      keep.Fill(cfg_.zoneout);
    }
    return t.Blend(prev, next, std::move(keep));
  };

  ad::Var h1 = t.Constant(Tensor::Zeros({D})), c1 = h1;
  ad::Var h2 = t.Constant(Tensor::Zeros({D})), c2 = h2;
  std::vector<ad::Var> mel_rows(T_dec), stop_rows(T_dec);
  Tensor alignment({T_dec, T_x});

  for (int64_t i = 0; i < T_dec; ++i) {
    Tensor prev({cfg_.n_mels});
    if (i > 0)
      for (int64_t d = 0; d < cfg_.n_mels; ++d) prev[d] = mel_target.at(i - 1, d);
    ad::Var p = t.Constant(std::move(prev));
    p = t.Relu(t.Add(t.VecMat(p, bound.at("decoder.prenet1.w")),
                     bound.at("decoder.prenet1.b")));
    p = t.Dropout(p, cfg_.prenet_dropout, training, rng);
    p = t.Relu(t.Add(t.VecMat(p, bound.at("decoder.prenet2.w")),
                     bound.at("decoder.prenet2.b")));
    p = t.Dropout(p, cfg_.prenet_dropout, training, rng);

    auto s1 = t.LstmCell(t.Concat1d(p, att.context), h1, c1,
                         bound.at("decoder.lstm1.w_ih"),
                         bound.at("decoder.lstm1.w_hh"),
                         bound.at("decoder.lstm1.b"));
    h1 = zone(h1, s1.h, D);
    c1 = zone(c1, s1.c, D);

    // Hybrid attention step with h1 as the query.
    ad::Var arg = att.hv;
    if (cfg_.location_features) {
      ad::Var f = t.Conv1dSame(att.cum, bound.at("attention.loc_conv.w"),
                               bound.at("attention.loc_conv.b"));
      arg = t.Add(arg, t.Matmul(f, bound.at("attention.loc_proj")));
    }
    ad::Var qb = t.Add(t.VecMat(h1, bound.at("attention.W")),
                       bound.at("attention.b"));
    ad::Var e = t.MatVec(t.Tanh(t.AddRow(arg, qb)), bound.at("attention.w"));
    ad::Var alpha = t.Softmax1d(e);
    att.context = t.VecMat(alpha, att.memory);
    att.cum = t.Add(att.cum, t.Reshape(alpha, {T_x, 1}));
    const Tensor &av = t.value(alpha);
    for (int64_t j = 0; j < T_x; ++j) alignment.at(i, j) = av[j];

    auto s2 = t.LstmCell(t.Concat1d(h1, att.context), h2, c2,
                         bound.at("decoder.lstm2.w_ih"),
                         bound.at("decoder.lstm2.w_hh"),
                         bound.at("decoder.lstm2.b"));
    h2 = zone(h2, s2.h, D);
    c2 = zone(c2, s2.c, D);

    ad::Var proj_in = t.Concat1d(h2, att.context);
    mel_rows[i] = t.Add(t.VecMat(proj_in, bound.at("decoder.mel_proj.w")),
                        bound.at("decoder.mel_proj.b"));
    stop_rows[i] = t.Add(t.VecMat(proj_in, bound.at("decoder.stop_proj.w")),
                         bound.at("decoder.stop_proj.b"));
  }

  TeacherForcedOut out;
  out.mel_pre = t.StackRows(mel_rows);
  out.stop_logits = t.Reshape(t.StackRows(stop_rows), {T_dec});
  ad::Var post = out.mel_pre;
  for (int64_t l = 0; l < cfg_.postnet_layers; ++l) {
    const std::string pre = "postnet.conv" + std::to_string(l);
    post = t.Conv1dSame(post, bound.at(pre + ".w"), bound.at(pre + ".b"));
    post = t.BatchNorm(post, bound.at(pre + ".bn.gamma"),
                       bound.at(pre + ".bn.beta"), training,
                       &params_.Get(pre + ".bn.running_mean"),
                       &params_.Get(pre + ".bn.running_var"));
    if (l < cfg_.postnet_layers - 1) post = t.Tanh(post);
  }
  out.mel_post = t.Add(out.mel_pre, post);
  out.alignment = std::move(alignment);
  return out;
}

Tensor TacoModel::EncodeEval(const std::vector<int64_t> &ids) const {
  const int64_t T_x = static_cast<int64_t>(ids.size());
  if (T_x < 1) Throw(ErrorKind::kShapeMismatch, "encode: empty input");
  Tensor x = kernels::EmbeddingGather(params_.Get("encoder.embedding"), ids);
  for (int64_t l = 0; l < cfg_.encoder_conv_layers; ++l) {
    const std::string pre = "encoder.conv" + std::to_string(l);
    x = kernels::Conv1dSame(x, params_.Get(pre + ".w"),
                            params_.Get(pre + ".b"));
    x = BnEval(x, params_.Get(pre + ".bn.gamma"), params_.Get(pre + ".bn.beta"),
               params_.Get(pre + ".bn.running_mean"),
               params_.Get(pre + ".bn.running_var"));
    x = kernels::Relu(x);
  }
  const int64_t half = cfg_.encoder_lstm_units / 2;
  Tensor out({T_x, cfg_.encoder_lstm_units});
  Tensor gates, tanh_c;
  {
    Tensor h = Tensor::Zeros({half}), c = Tensor::Zeros({half});
    const Tensor &w_ih = params_.Get("encoder.lstm_fwd.w_ih");
    const Tensor &w_hh = params_.Get("encoder.lstm_fwd.w_hh");
    const Tensor &b = params_.Get("encoder.lstm_fwd.b");
    for (int64_t i = 0; i < T_x; ++i) {
      Tensor xi({x.dim(1)});
      for (int64_t j = 0; j < x.dim(1); ++j) xi[j] = x.at(i, j);
      Tensor h2, c2;
      kernels::LstmCellForward(xi, h, c, w_ih, w_hh, b, &h2, &c2, &gates,
                               &tanh_c);
      h = std::move(h2);
      c = std::move(c2);
      for (int64_t j = 0; j < half; ++j) out.at(i, j) = h[j];
    }
  }
  {
    Tensor h = Tensor::Zeros({half}), c = Tensor::Zeros({half});
    const Tensor &w_ih = params_.Get("encoder.lstm_bwd.w_ih");
    const Tensor &w_hh = params_.Get("encoder.lstm_bwd.w_hh");
    const Tensor &b = params_.Get("encoder.lstm_bwd.b");
    for (int64_t i = T_x - 1; i >= 0; --i) {
      Tensor xi({x.dim(1)});
      for (int64_t j = 0; j < x.dim(1); ++j) xi[j] = x.at(i, j);
      Tensor h2, c2;
      kernels::LstmCellForward(xi, h, c, w_ih, w_hh, b, &h2, &c2, &gates,
                               &tanh_c);
      h = std::move(h2);
      c = std::move(c2);
      for (int64_t j = 0; j < half; ++j) out.at(i, half + j) = h[j];
    }
  }
  return out;
}

TacoModel::InferResult TacoModel::Infer(const std::vector<int64_t> &ids,
                                        const InferOptions &opts) const {
  const int64_t T_x = static_cast<int64_t>(ids.size());
  const Tensor memory = EncodeEval(ids);
  const AttentionWeights aw = attention_weights();
  const Tensor hv = kernels::Matmul(memory, *aw.V);
  const int64_t enc_out = cfg_.encoder_lstm_units;
  const int64_t D = cfg_.decoder_lstm_units;
  const int64_t max_steps =
      opts.max_steps > 0 ? opts.max_steps
                         : cfg_.max_steps_scale * T_x + cfg_.max_steps_slack;
  CounterRng rng(opts.seed, CounterRng::StreamOf("infer.prenet"));

  const Tensor &p1w = params_.Get("decoder.prenet1.w");
  const Tensor &p1b = params_.Get("decoder.prenet1.b");
  const Tensor &p2w = params_.Get("decoder.prenet2.w");
  const Tensor &p2b = params_.Get("decoder.prenet2.b");
  const Tensor &melw = params_.Get("decoder.mel_proj.w");
  const Tensor &melb = params_.Get("decoder.mel_proj.b");
  const Tensor &stopw = params_.Get("decoder.stop_proj.w");
  const Tensor &stopb = params_.Get("decoder.stop_proj.b");

  // Zoneout at eval blends with the expected keep rate.
  const double z = cfg_.zoneout;
  auto blend = [z](Tensor &prev, const Tensor &next) {
    for (int64_t i = 0; i < prev.numel(); ++i)
      prev[i] = z * prev[i] + (1.0 - z) * next[i];
  };
  auto prenet_pass = [&](const Tensor &frame) {
    Tensor p = kernels::VecMat(frame, p1w);
    for (int64_t i = 0; i < p.numel(); ++i)
      p[i] = std::max(0.0, p[i] + p1b[i]);
    if (opts.prenet_dropout && cfg_.prenet_dropout > 0) {
      const double scale = 1.0 / (1.0 - cfg_.prenet_dropout);
      for (int64_t i = 0; i < p.numel(); ++i)
        p[i] = rng.NextUniform() < cfg_.prenet_dropout ? 0.0 : p[i] * scale;
    }
    Tensor q = kernels::VecMat(p, p2w);
    for (int64_t i = 0; i < q.numel(); ++i)
      q[i] = std::max(0.0, q[i] + p2b[i]);
    if (opts.prenet_dropout && cfg_.prenet_dropout > 0) {
      const double scale = 1.0 / (1.0 - cfg_.prenet_dropout);
      for (int64_t i = 0; i < q.numel(); ++i)
        q[i] = rng.NextUniform() < cfg_.prenet_dropout ? 0.0 : q[i] * scale;
    }
    return q;
  };

  Tensor h1 = Tensor::Zeros({D}), c1 = h1, h2 = h1, c2 = h1;
  Tensor context = Tensor::Zeros({enc_out});
  Tensor cum = Tensor::Zeros({T_x});
  Tensor frame = Tensor::Zeros({cfg_.n_mels});
  std::vector<Tensor> mel_rows, align_rows;
  bool capped = true;
  Tensor gates, tanh_c;

  for (int64_t step = 0; step < max_steps; ++step) {
    const Tensor p = prenet_pass(frame);
    Tensor in1({p.numel() + enc_out});
    for (int64_t i = 0; i < p.numel(); ++i) in1[i] = p[i];
    for (int64_t i = 0; i < enc_out; ++i) in1[p.numel() + i] = context[i];
    Tensor nh1, nc1;
    kernels::LstmCellForward(in1, h1, c1, params_.Get("decoder.lstm1.w_ih"),
                             params_.Get("decoder.lstm1.w_hh"),
                             params_.Get("decoder.lstm1.b"), &nh1, &nc1,
                             &gates, &tanh_c);
    blend(h1, nh1);
    blend(c1, nc1);

    const AttentionStep a = AttendEval(memory, hv, h1, cum, aw, T_x);
    context = a.context;
    for (int64_t j = 0; j < T_x; ++j) cum[j] += a.alpha[j];
    align_rows.push_back(a.alpha);

    Tensor in2({D + enc_out});
    for (int64_t i = 0; i < D; ++i) in2[i] = h1[i];
    for (int64_t i = 0; i < enc_out; ++i) in2[D + i] = context[i];
    Tensor nh2, nc2;
    kernels::LstmCellForward(in2, h2, c2, params_.Get("decoder.lstm2.w_ih"),
                             params_.Get("decoder.lstm2.w_hh"),
                             params_.Get("decoder.lstm2.b"), &nh2, &nc2,
                             &gates, &tanh_c);
    blend(h2, nh2);
    blend(c2, nc2);

    Tensor proj_in({D + enc_out});
    for (int64_t i = 0; i < D; ++i) proj_in[i] = h2[i];
    for (int64_t i = 0; i < enc_out; ++i) proj_in[D + i] = context[i];
    frame = kernels::VecMat(proj_in, melw);
    for (int64_t i = 0; i < cfg_.n_mels; ++i) frame[i] += melb[i];
    mel_rows.push_back(frame);
    const double stop_logit =
        kernels::VecMat(proj_in, stopw)[0] + stopb[0];
    if (kernels::SigmoidScalar(stop_logit) > cfg_.stop_threshold) {
      capped = false;
      break;
    }
  }

  const int64_t T_dec = static_cast<int64_t>(mel_rows.size());
  InferResult res;
  res.max_steps_reached = capped;
  res.mel_pre = Tensor({T_dec, cfg_.n_mels});
  res.alignment = Tensor({T_dec, T_x});
  for (int64_t i = 0; i < T_dec; ++i) {
    for (int64_t d = 0; d < cfg_.n_mels; ++d)
      res.mel_pre.at(i, d) = mel_rows[i][d];
    for (int64_t j = 0; j < T_x; ++j) res.alignment.at(i, j) = align_rows[i][j];
  }

  Tensor post = res.mel_pre;
  for (int64_t l = 0; l < cfg_.postnet_layers; ++l) {
    const std::string pre = "postnet.conv" + std::to_string(l);
    post = kernels::Conv1dSame(post, params_.Get(pre + ".w"),
                               params_.Get(pre + ".b"));
    post = BnEval(post, params_.Get(pre + ".bn.gamma"),
                  params_.Get(pre + ".bn.beta"),
                  params_.Get(pre + ".bn.running_mean"),
                  params_.Get(pre + ".bn.running_var"));
    if (l < cfg_.postnet_layers - 1) post = kernels::TanhT(post);
  }
  res.mel = res.mel_pre;
  for (int64_t i = 0; i < res.mel.numel(); ++i) res.mel[i] += post[i];
  return res;
}

}  // namespace aratts
