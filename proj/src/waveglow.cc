// src/waveglow.cc

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

#include "aratts/waveglow.h"

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "aratts/error.h"
#include "aratts/kernels.h"

namespace aratts {

namespace {

constexpr double kLogScaleClamp = 7.0;
constexpr double kMinAbsDet = 1e-8;

// Orthonormal columns by modified Gram-Schmidt; determinant made positive by
// flipping one column if needed.
Tensor OrthogonalInit(int64_t n, CounterRng &rng) {
  Tensor w = Tensor::Randn({n, n}, rng);
  for (int64_t j = 0; j < n; ++j) {
    for (int64_t k = 0; k < j; ++k) {
      double dot = 0;
      for (int64_t i = 0; i < n; ++i) dot += w.at(i, j) * w.at(i, k);
      for (int64_t i = 0; i < n; ++i) w.at(i, j) -= dot * w.at(i, k);
    }
    double norm = 0;
    for (int64_t i = 0; i < n; ++i) norm += w.at(i, j) * w.at(i, j);
    norm = std::sqrt(norm);
    if (norm < 1e-8) Throw(ErrorKind::kSingularWeight, "degenerate init draw");
    for (int64_t i = 0; i < n; ++i) w.at(i, j) /= norm;
  }
  kernels::LuFactors f;
  if (!kernels::LuFactor(w, &f))
    Throw(ErrorKind::kSingularWeight, "degenerate init draw");
  double det_sign = f.sign;
  for (int64_t i = 0; i < n; ++i)
    if (f.lu.at(i, i) < 0) det_sign = -det_sign;
  if (det_sign < 0)
    for (int64_t i = 0; i < n; ++i) w.at(i, 0) = -w.at(i, 0);
  return w;
}

// Time-major grouping [T, group] of a zero-padded waveform.
Tensor TimeMajor(const std::vector<double> &audio, int64_t group,
                 int64_t *padded_len) {
  const int64_t L = static_cast<int64_t>(audio.size());
  const int64_t T = (L + group - 1) / group;
  if (T < 1) Throw(ErrorKind::kShapeMismatch, "flow: empty audio");
  Tensor z({T, group});
  for (int64_t s = 0; s < L; ++s) z[s] = audio[s];
  *padded_len = T * group;
  return z;
}

double LogAbsDetOf(const Tensor &w) {
  kernels::LuFactors f;
  if (!kernels::LuFactor(w, &f))
    Throw(ErrorKind::kSingularWeight, "mixing matrix is singular");
  const double ld = kernels::LuLogAbsDet(f);
  if (ld < std::log(kMinAbsDet))
    Throw(ErrorKind::kSingularWeight, "mixing matrix |det| below 1e-8");
  return ld;
}

}  // namespace

WaveGlowConfig WaveGlowConfig::Desk() { return WaveGlowConfig(); }

WaveGlowConfig WaveGlowConfig::Full() {
  WaveGlowConfig c;
  c.wn_layers = 8;
  c.wn_channels = 256;
  return c;
}

void WaveGlowConfig::Validate() const {
  auto need = [](bool ok, const char *msg) {
    if (!ok) Throw(ErrorKind::kBadConfig, msg);
  };
  need(n_flows > 0, "config: n_flows must be positive");
  need(group > 0 && group % 2 == 0, "config: group must be positive and even");
  need(wn_layers > 0 && wn_channels > 0, "config: WN shape invalid");
  need(wn_kernel > 0 && wn_kernel % 2 == 1, "config: WN kernel must be odd");
  need(n_mels > 0 && hop > 0 && upsample_kernel >= hop,
       "config: conditioning shape invalid");
  need(sample_rate > 0, "config: sample rate invalid");
  need(sigma > 0, "config: sigma must be positive");
}

nlohmann::json WaveGlowConfig::ToJson() const {
  return {{"n_flows", n_flows},
          {"group", group},
          {"wn_layers", wn_layers},
          {"wn_channels", wn_channels},
          {"wn_kernel", wn_kernel},
          {"n_mels", n_mels},
          {"hop", hop},
          {"upsample_kernel", upsample_kernel},
          {"sample_rate", sample_rate},
          {"sigma", sigma}};
}

WaveGlowConfig WaveGlowConfig::FromJson(const nlohmann::json &j) {
  WaveGlowConfig c;
  try {
    j.at("n_flows").get_to(c.n_flows);
    j.at("group").get_to(c.group);
    j.at("wn_layers").get_to(c.wn_layers);
    j.at("wn_channels").get_to(c.wn_channels);
    j.at("wn_kernel").get_to(c.wn_kernel);
    j.at("n_mels").get_to(c.n_mels);
    j.at("hop").get_to(c.hop);
    j.at("upsample_kernel").get_to(c.upsample_kernel);
    j.at("sample_rate").get_to(c.sample_rate);
    j.at("sigma").get_to(c.sigma);
  } catch (const nlohmann::json::exception &e) {
    Throw(ErrorKind::kBadConfig, std::string("config json: ") + e.what());
  }
  c.Validate();
  return c;
}

Squeezed Squeeze(const std::vector<double> &audio, int64_t group) {
  if (group < 1) Throw(ErrorKind::kBadConfig, "squeeze: bad group");
  const int64_t L = static_cast<int64_t>(audio.size());
  const int64_t T = (L + group - 1) / group;
  Squeezed out;
  out.orig_len = L;
  out.channels = Tensor({group, T > 0 ? T : 0});
  for (int64_t s = 0; s < L; ++s)
    out.channels.at(s % group, s / group) = audio[s];
  return out;
}

std::vector<double> Unsqueeze(const Tensor &channels, int64_t orig_len) {
  if (channels.rank() != 2)
    Throw(ErrorKind::kShapeMismatch, "unsqueeze: rank-2 input required");
  const int64_t group = channels.dim(0), T = channels.dim(1);
  const int64_t full = group * T;
  const int64_t n = orig_len < 0 ? full : orig_len;
  if (n > full) Throw(ErrorKind::kShapeMismatch, "unsqueeze: length too long");
  std::vector<double> audio(static_cast<std::size_t>(n));
  for (int64_t s = 0; s < n; ++s) audio[s] = channels.at(s % group, s / group);
  return audio;
}

WaveGlowModel::WaveGlowModel(const WaveGlowConfig &cfg, uint64_t seed)
    : cfg_(cfg) {
  cfg_.Validate();
  auto rng_for = [seed](const std::string &name) {
    return CounterRng(seed, CounterRng::StreamOf(name));
  };
  auto xavier = [](std::vector<int64_t> shape, int64_t fi, int64_t fo,
                   CounterRng &rng) {
    const double a = std::sqrt(6.0 / static_cast<double>(fi + fo));
    return Tensor::Uniform(std::move(shape), rng, -a, a);
  };

  {
    CounterRng r = rng_for("upsampler.w");
    params_.Add("upsampler.w",
                xavier({cfg_.upsample_kernel, cfg_.n_mels, cfg_.n_mels},
                       cfg_.n_mels, cfg_.upsample_kernel * cfg_.n_mels, r));
    params_.Add("upsampler.b", Tensor::Zeros({cfg_.n_mels}));
  }
  const int64_t half = cfg_.group / 2;
  const int64_t ch = cfg_.wn_channels;
  const int64_t cond_ch = cfg_.n_mels * cfg_.group;
  for (int64_t i = 0; i < cfg_.n_flows; ++i) {
    const std::string fp = "flow" + std::to_string(i);
    {
      CounterRng r = rng_for(fp + ".conv.w");
      params_.Add(fp + ".conv.w", OrthogonalInit(cfg_.group, r));
    }
    {
      CounterRng r = rng_for(fp + ".wn.in.w");
      params_.Add(fp + ".wn.in.w", xavier({half, ch}, half, ch, r));
      params_.Add(fp + ".wn.in.b", Tensor::Zeros({ch}));
    }
    for (int64_t l = 0; l < cfg_.wn_layers; ++l) {
      const std::string lp = fp + ".wn.layer" + std::to_string(l);
      CounterRng rw = rng_for(lp + ".w"), rc = rng_for(lp + ".cond.w"),
                 rr = rng_for(lp + ".res.w");
      params_.Add(lp + ".w", xavier({cfg_.wn_kernel, ch, 2 * ch},
                                    cfg_.wn_kernel * ch, cfg_.wn_kernel * 2 * ch,
                                    rw));
      params_.Add(lp + ".b", Tensor::Zeros({2 * ch}));
      params_.Add(lp + ".cond.w", xavier({cond_ch, 2 * ch}, cond_ch, 2 * ch, rc));
      params_.Add(lp + ".res.w", xavier({ch, ch}, ch, ch, rr));
    }
    // Zero-initialized output projection: each coupling starts as identity.
    params_.Add(fp + ".wn.out.w", Tensor::Zeros({ch, cfg_.group}));
    params_.Add(fp + ".wn.out.b", Tensor::Zeros({cfg_.group}));
  }
}

ad::Var WaveGlowModel::Bound::at(const std::string &name) const {
  auto it = vars.find(name);
  if (it == vars.end())
    Throw(ErrorKind::kBadConfig, "unbound parameter: " + name);
  return it->second;
}

WaveGlowModel::Bound WaveGlowModel::Bind(ad::Tape &tape) const {
  Bound b;
  for (const std::string &name : params_.Names())
    b.vars[name] = tape.Leaf(params_.Get(name), params_.Trainable(name));
  return b;
}

// Upsampled, cropped and group-stacked conditioning [T, n_mels * group].
Tensor WaveGlowModel::CondFeatures(const Tensor &mel, int64_t padded_len) const {
  if (mel.rank() != 2 || mel.dim(1) != cfg_.n_mels)
    Throw(ErrorKind::kShapeMismatch, "conditioning: bad mel shape");
  const int64_t F = mel.dim(0);
  const int64_t full = (F - 1) * cfg_.hop + cfg_.upsample_kernel;
  if (full < padded_len)
    Throw(ErrorKind::kShapeMismatch,
          "conditioning: mel too short for audio length");
  const Tensor &w = params_.Get("upsampler.w");
  const Tensor &b = params_.Get("upsampler.b");
  // Transposed convolution evaluated only on the first padded_len samples.
  Tensor up({padded_len, cfg_.n_mels});
  for (int64_t o = 0; o < padded_len; ++o)
    for (int64_t m = 0; m < cfg_.n_mels; ++m) up.at(o, m) = b[m];
  for (int64_t f = 0; f < F; ++f) {
    const int64_t base = f * cfg_.hop;
    const int64_t kmax = std::min(cfg_.upsample_kernel, padded_len - base);
    for (int64_t k = 0; k < kmax; ++k)
      for (int64_t ci = 0; ci < cfg_.n_mels; ++ci) {
        const double xv = mel.at(f, ci);
        if (xv == 0.0) continue;
        for (int64_t co = 0; co < cfg_.n_mels; ++co)
          up.at(base + k, co) += xv * w.at(k, ci, co);
      }
  }
  const int64_t T = padded_len / cfg_.group;
  return Tensor({T, cfg_.group * cfg_.n_mels}, up.vec());
}

namespace {

// Gated WN transform shared by forward and inverse: za [T, half] plus
// conditioning -> (log_s, t) packed as [T, group].
Tensor WnEval(const ParamStore &p, const WaveGlowConfig &cfg,
              const std::string &fp, const Tensor &za, const Tensor &cond) {
  const int64_t ch = cfg.wn_channels;
  Tensor h = kernels::AddRow(kernels::Matmul(za, p.Get(fp + ".wn.in.w")),
                             p.Get(fp + ".wn.in.b"));
  for (int64_t l = 0; l < cfg.wn_layers; ++l) {
    const std::string lp = fp + ".wn.layer" + std::to_string(l);
    const int64_t dil = int64_t{1} << l;
    Tensor u = kernels::Conv1dSame(h, p.Get(lp + ".w"), p.Get(lp + ".b"), dil);
    const Tensor cu = kernels::Matmul(cond, p.Get(lp + ".cond.w"));
    const int64_t T = u.dim(0);
    Tensor g({T, ch});
    for (int64_t t = 0; t < T; ++t)
      for (int64_t c = 0; c < ch; ++c) {
        const double a = u.at(t, c) + cu.at(t, c);
        const double s = u.at(t, ch + c) + cu.at(t, ch + c);
        g.at(t, c) = std::tanh(a) * (1.0 / (1.0 + std::exp(-s)));
      }
    const Tensor r = kernels::Matmul(g, p.Get(lp + ".res.w"));
    for (int64_t i = 0; i < h.numel(); ++i) h[i] += r[i];
  }
  return kernels::AddRow(kernels::Matmul(h, p.Get(fp + ".wn.out.w")),
                         p.Get(fp + ".wn.out.b"));
}

}  // namespace

WaveGlowModel::ForwardOut WaveGlowModel::Forward(
    const std::vector<double> &audio, const Tensor &mel) const {
  int64_t padded_len = 0;
  Tensor z = TimeMajor(audio, cfg_.group, &padded_len);
  const Tensor cond = CondFeatures(mel, padded_len);
  const int64_t T = z.dim(0);
  const int64_t half = cfg_.group / 2;

  ForwardOut out;
  out.orig_len = static_cast<int64_t>(audio.size());
  for (int64_t i = 0; i < cfg_.n_flows; ++i) {
    const std::string fp = "flow" + std::to_string(i);
    const Tensor &w = params_.Get(fp + ".conv.w");
    const double ld_conv = static_cast<double>(T) * LogAbsDetOf(w);
    z = kernels::Matmul(z, kernels::Transpose(w));
    out.step_log_dets.push_back(ld_conv);

    Tensor za({T, half});
    for (int64_t t = 0; t < T; ++t)
      for (int64_t c = 0; c < half; ++c) za.at(t, c) = z.at(t, c);
    const Tensor st = WnEval(params_, cfg_, fp, za, cond);
    double ld_couple = 0;
    for (int64_t t = 0; t < T; ++t)
      for (int64_t c = 0; c < half; ++c) {
        const double ls = std::min(kLogScaleClamp,
                                   std::max(-kLogScaleClamp, st.at(t, c)));
        const double tt = st.at(t, half + c);
        z.at(t, half + c) = z.at(t, half + c) * std::exp(ls) + tt;
        ld_couple += ls;
      }
    out.step_log_dets.push_back(ld_couple);
  }
  for (double d : out.step_log_dets) out.log_det += d;
  out.z = std::move(z);
  return out;
}

std::vector<double> WaveGlowModel::Inverse(const Tensor &z_in, const Tensor &mel,
                                           int64_t out_len) const {
  if (z_in.rank() != 2 || z_in.dim(1) != cfg_.group)
    Throw(ErrorKind::kShapeMismatch, "inverse: bad latent shape");
  const int64_t T = z_in.dim(0);
  const int64_t half = cfg_.group / 2;
  const Tensor cond = CondFeatures(mel, T * cfg_.group);
  Tensor z = z_in;
  for (int64_t i = cfg_.n_flows - 1; i >= 0; --i) {
    const std::string fp = "flow" + std::to_string(i);
    Tensor za({T, half});
    for (int64_t t = 0; t < T; ++t)
      for (int64_t c = 0; c < half; ++c) za.at(t, c) = z.at(t, c);
    const Tensor st = WnEval(params_, cfg_, fp, za, cond);
    for (int64_t t = 0; t < T; ++t)
      for (int64_t c = 0; c < half; ++c) {
        const double ls = std::min(kLogScaleClamp,
                                   std::max(-kLogScaleClamp, st.at(t, c)));
        const double tt = st.at(t, half + c);
        z.at(t, half + c) = (z.at(t, half + c) - tt) * std::exp(-ls);
      }
    const Tensor &w = params_.Get(fp + ".conv.w");
    LogAbsDetOf(w);  // singularity gate
    kernels::LuFactors f;
    kernels::LuFactor(w, &f);
    z = kernels::Matmul(z, kernels::Transpose(kernels::LuInverse(f)));
  }
  std::vector<double> audio(static_cast<std::size_t>(T * cfg_.group));
  for (int64_t i = 0; i < z.numel(); ++i) audio[static_cast<std::size_t>(i)] = z[i];
  if (out_len >= 0) {
    if (out_len > static_cast<int64_t>(audio.size()))
      Throw(ErrorKind::kShapeMismatch, "inverse: out_len too long");
    audio.resize(static_cast<std::size_t>(out_len));
  }
  return audio;
}

ad::Var WaveGlowModel::Nll(ad::Tape &t, const Bound &bound,
                           const std::vector<double> &audio,
                           const Tensor &mel) const {
  int64_t padded_len = 0;
  const Tensor z0 = TimeMajor(audio, cfg_.group, &padded_len);
  const int64_t T = z0.dim(0);
  const int64_t half = cfg_.group / 2;
  const int64_t F = mel.dim(0);
  const int64_t full = (F - 1) * cfg_.hop + cfg_.upsample_kernel;
  if (full < padded_len)
    Throw(ErrorKind::kShapeMismatch,
          "conditioning: mel too short for audio length");

  // Trainable upsampler, cropped to the padded length and group-stacked.
  ad::Var up = t.ConvTranspose1d(t.Constant(mel), bound.at("upsampler.w"),
                                 bound.at("upsampler.b"), cfg_.hop);
  ad::Var cond = t.Reshape(
      t.SliceRange(t.Reshape(up, {full * cfg_.n_mels}), 0,
                   padded_len * cfg_.n_mels),
      {T, cfg_.group * cfg_.n_mels});

  ad::Var z = t.Constant(z0);
  ad::Var total_ld = t.Constant(Tensor::Zeros({}));
  const int64_t ch = cfg_.wn_channels;
  for (int64_t i = 0; i < cfg_.n_flows; ++i) {
    const std::string fp = "flow" + std::to_string(i);
    ad::Var w = bound.at(fp + ".conv.w");
    z = t.Matmul(z, t.Transpose(w));
    total_ld = t.Add(total_ld,
                     t.ScalarMul(t.LogAbsDet(w), static_cast<double>(T)));

    ad::Var za = t.SliceCols(z, 0, half);
    ad::Var zb = t.SliceCols(z, half, cfg_.group);
    ad::Var h = t.AddRow(t.Matmul(za, bound.at(fp + ".wn.in.w")),
                         bound.at(fp + ".wn.in.b"));
    for (int64_t l = 0; l < cfg_.wn_layers; ++l) {
      const std::string lp = fp + ".wn.layer" + std::to_string(l);
      ad::Var u = t.Conv1dSame(h, bound.at(lp + ".w"), bound.at(lp + ".b"),
                               int64_t{1} << l);
      u = t.Add(u, t.Matmul(cond, bound.at(lp + ".cond.w")));
      ad::Var g = t.Mul(t.Tanh(t.SliceCols(u, 0, ch)),
                        t.Sigmoid(t.SliceCols(u, ch, 2 * ch)));
      h = t.Add(h, t.Matmul(g, bound.at(lp + ".res.w")));
    }
    ad::Var st = t.AddRow(t.Matmul(h, bound.at(fp + ".wn.out.w")),
                          bound.at(fp + ".wn.out.b"));
    ad::Var ls = t.Clamp(t.SliceCols(st, 0, half), -kLogScaleClamp,
                         kLogScaleClamp);
    ad::Var tt = t.SliceCols(st, half, cfg_.group);
    zb = t.Add(t.Mul(zb, t.Exp(ls)), tt);
    z = t.ConcatCols(za, zb);
    total_ld = t.Add(total_ld, t.Sum(ls));
  }
  ad::Var z_term = t.ScalarMul(t.Sum(t.Mul(z, z)),
                               1.0 / (2.0 * cfg_.sigma * cfg_.sigma));
  return t.Sub(z_term, total_ld);
}

AudioClip WaveGlowModel::Synthesize(const Tensor &mel, double sigma,
                                    uint64_t seed) const {
  if (mel.rank() != 2 || mel.dim(1) != cfg_.n_mels || mel.dim(0) < 1)
    Throw(ErrorKind::kShapeMismatch, "synthesize: bad mel shape");
  if (sigma < 0) Throw(ErrorKind::kBadConfig, "synthesize: negative sigma");
  const int64_t F = mel.dim(0);
  const int64_t out_len = F * cfg_.hop;
  const int64_t T = (out_len + cfg_.group - 1) / cfg_.group;
  Tensor z({T, cfg_.group});
  if (sigma > 0) {
    CounterRng rng(seed, CounterRng::StreamOf("synthesize"));
    for (int64_t i = 0; i < z.numel(); ++i) z[i] = sigma * rng.NextGaussian();
  }
  std::vector<double> audio = Inverse(z, mel, out_len);
  for (double &s : audio) s = std::min(1.0, std::max(-1.0, s));
  AudioClip clip;
  clip.samples = std::move(audio);
  clip.sample_rate = static_cast<int>(cfg_.sample_rate);
  return clip;
}

void WaveGlowModel::CheckInvertible() const {
  for (int64_t i = 0; i < cfg_.n_flows; ++i)
    LogAbsDetOf(params_.Get("flow" + std::to_string(i) + ".conv.w"));
}

}  // namespace aratts
