// train.cc

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

#include "aratts/train.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"

#include "aratts/error.h"
#include "aratts/phonetizer.h"
#include "aratts/wav.h"

namespace aratts {

namespace {

constexpr double kDiagonalBand = 0.15;

std::string StepName(const char *prefix, int64_t step, const char *ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s%06lld%s", prefix,
                static_cast<long long>(step), ext);
  return buf;
}

// Shuffled index stream over [0, n) that reshuffles whenever a pass ends.
class OrderStream {
 public:
  OrderStream(int64_t n, CounterRng rng) : rng_(rng), perm_(n) {
    for (int64_t i = 0; i < n; ++i) perm_[static_cast<std::size_t>(i)] = i;
    pos_ = n;  // force an initial shuffle
  }

  int64_t Next() {
    const int64_t n = static_cast<int64_t>(perm_.size());
    if (pos_ >= n) {
      for (int64_t i = n - 1; i > 0; --i) {
        const int64_t j =
            static_cast<int64_t>(rng_.NextBelow(static_cast<uint64_t>(i + 1)));
        std::swap(perm_[static_cast<std::size_t>(i)],
                  perm_[static_cast<std::size_t>(j)]);
      }
      pos_ = 0;
    }
    return perm_[static_cast<std::size_t>(pos_++)];
  }

 private:
  CounterRng rng_;
  std::vector<int64_t> perm_;
  int64_t pos_ = 0;
};

struct EvalStats {
  double loss = 0;
  double diagonality = 0;
};

// Eval-mode teacher-forced pass over a set; also hands back the first
// utterance's alignment for dumps.
EvalStats EvalTaco(TacoModel &model, const std::vector<Utterance> &set,
                   Tensor *first_alignment) {
  EvalStats stats;
  CounterRng idle(0, 0);
  for (std::size_t u = 0; u < set.size(); ++u) {
    ad::Tape t;
    TacoModel::Bound bound = model.Bind(t);
    TacoModel::TeacherForcedOut out =
        model.TeacherForced(t, bound, set[u].ids, set[u].mel, false, idle);
    ad::Var pre = t.MseLoss(out.mel_pre, set[u].mel);
    ad::Var post = t.MseLoss(out.mel_post, set[u].mel);
    ad::Var stop =
        t.BceWithLogitsLoss(out.stop_logits, StopTargets(set[u].mel.dim(0)));
    stats.loss +=
        t.value(pre)[0] + t.value(post)[0] + t.value(stop)[0];
    stats.diagonality += Diagonality(out.alignment);
    if (u == 0 && first_alignment != nullptr) *first_alignment = out.alignment;
  }
  if (!set.empty()) {
    stats.loss /= static_cast<double>(set.size());
    stats.diagonality /= static_cast<double>(set.size());
  }
  return stats;
}

void AccumulateGrads(ad::Tape &tape, const ParamStore &params,
                     const std::unordered_map<std::string, ad::Var> &bound,
                     std::unordered_map<std::string, Tensor> &acc) {
  for (const std::string &name : params.Names()) {
    if (!params.Trainable(name)) continue;
    const Tensor &g = tape.grad(bound.at(name));
    auto it = acc.find(name);
    if (it == acc.end()) {
      acc.emplace(name, g);
    } else {
      Tensor &a = it->second;
      for (int64_t i = 0; i < a.numel(); ++i) a[i] += g[i];
    }
  }
}

void ScaleGrads(std::unordered_map<std::string, Tensor> &acc, double s) {
  for (auto &kv : acc)
    for (int64_t i = 0; i < kv.second.numel(); ++i) kv.second[i] *= s;
}

[[noreturn]] void RethrowAtStep(const Error &e, int64_t step) {
  Throw(e.kind(), std::string(e.what()) + " (optimizer step " +
                      std::to_string(step) + ")");
}

std::string CheckpointMetadata(const std::string &kind,
                               const nlohmann::json &config, int64_t n_symbols,
                               int64_t step) {
  nlohmann::json j;
  j["kind"] = kind;
  j["config"] = config;
  j["step"] = step;
  if (n_symbols >= 0) {
    std::vector<std::string> symbols;
    const std::vector<std::string> &table = SymbolTable();
    if (n_symbols == static_cast<int64_t>(table.size())) {
      symbols = table;
    } else {
      for (int64_t i = 0; i < n_symbols; ++i)
        symbols.push_back("id" + std::to_string(i));
    }
    j["symbols"] = symbols;
  }
  return j.dump();
}

}  // namespace

double Diagonality(const Tensor &alignment) {
  if (alignment.rank() != 2 || alignment.dim(0) == 0 || alignment.dim(1) == 0)
    Throw(ErrorKind::kShapeMismatch, "diagonality: need a [t_dec, t_x] matrix");
  const int64_t t_dec = alignment.dim(0);
  const int64_t t_x = alignment.dim(1);
  double mass = 0;
  for (int64_t i = 0; i < t_dec; ++i)
    for (int64_t j = 0; j < t_x; ++j) {
      const double rel = static_cast<double>(j) / static_cast<double>(t_x) -
                         static_cast<double>(i) / static_cast<double>(t_dec);
      if (std::fabs(rel) < kDiagonalBand) mass += alignment.at(i, j);
    }
  return mass / static_cast<double>(t_dec);
}

void WriteAlignmentPgm(const Tensor &alignment, const std::string &path) {
  if (alignment.rank() != 2)
    Throw(ErrorKind::kShapeMismatch, "alignment dump: need a rank-2 matrix");
  double peak = 0;
  for (int64_t i = 0; i < alignment.numel(); ++i)
    peak = std::max(peak, alignment[i]);
  if (peak <= 0) peak = 1;
  std::ofstream f(path, std::ios::trunc);
  if (!f) Throw(ErrorKind::kIo, "cannot open for write: " + path);
  // One image row per decoder step, gray 255 at the strongest weight.
  f << "P2\n" << alignment.dim(1) << ' ' << alignment.dim(0) << "\n255\n";
  for (int64_t i = 0; i < alignment.dim(0); ++i) {
    for (int64_t j = 0; j < alignment.dim(1); ++j) {
      const int v =
          static_cast<int>(std::lround(255.0 * alignment.at(i, j) / peak));
      f << std::min(255, std::max(0, v))
        << (j + 1 == alignment.dim(1) ? '\n' : ' ');
    }
  }
  if (!f) Throw(ErrorKind::kIo, "write failed: " + path);
}

void WriteAlignmentCsv(const Tensor &alignment, const std::string &path) {
  if (alignment.rank() != 2)
    Throw(ErrorKind::kShapeMismatch, "alignment dump: need a rank-2 matrix");
  std::ofstream f(path, std::ios::trunc);
  if (!f) Throw(ErrorKind::kIo, "cannot open for write: " + path);
  f << std::setprecision(17);
  for (int64_t i = 0; i < alignment.dim(0); ++i)
    for (int64_t j = 0; j < alignment.dim(1); ++j)
      f << alignment.at(i, j) << (j + 1 == alignment.dim(1) ? '\n' : ',');
  if (!f) Throw(ErrorKind::kIo, "write failed: " + path);
}

Tensor StopTargets(int64_t t_dec) {
  if (t_dec <= 0)
    Throw(ErrorKind::kShapeMismatch, "stop targets: need at least one frame");
  Tensor t({t_dec});
  t[t_dec - 1] = 1.0;
  return t;
}

std::vector<Utterance> LoadUtterances(const std::string &data_dir,
                                      const std::vector<IngestEntry> &entries,
                                      bool with_audio) {
  std::vector<Utterance> out;
  out.reserve(entries.size());
  for (const IngestEntry &e : entries) {
    Utterance u;
    u.stem = e.stem;
    u.ids = e.ids;
    MelSpectrogram mel = LoadMel(data_dir + "/" + e.stem);
    if (mel.NumFrames() != e.n_frames)
      Throw(ErrorKind::kBadConfig,
            "feature file for " + e.stem + " does not match the manifest");
    u.mel = std::move(mel.values);
    if (with_audio) u.audio = LoadWav(data_dir + "/" + e.stem + ".wav").samples;
    out.push_back(std::move(u));
  }
  return out;
}

void WriteCurves(const std::vector<CurveRow> &curves, const std::string &path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) Throw(ErrorKind::kIo, "cannot open for write: " + path);
  f << "step,train_loss,val_loss,diagonality\n" << std::setprecision(17);
  for (const CurveRow &r : curves)
    f << r.step << ',' << r.train_loss << ',' << r.val_loss << ','
      << r.diagonality << '\n';
  if (!f) Throw(ErrorKind::kIo, "write failed: " + path);
}

double EvalTacoLoss(TacoModel &model, const std::vector<Utterance> &set) {
  return EvalTaco(model, set, nullptr).loss;
}

double EvalTacoDiagonality(TacoModel &model,
                           const std::vector<Utterance> &set) {
  return EvalTaco(model, set, nullptr).diagonality;
}

TacoTrainResult TrainTaco(TacoModel &model,
                          const std::vector<Utterance> &train_set,
                          const std::vector<Utterance> &val_set,
                          const TacoTrainOptions &opts) {
  if (train_set.empty())
    Throw(ErrorKind::kEmptyManifest, "training set is empty");
  if (opts.batch_size <= 0)
    Throw(ErrorKind::kBadConfig, "batch_size must be positive");
  const std::vector<Utterance> &eval_set =
      val_set.empty() ? train_set : val_set;
  const int64_t n = static_cast<int64_t>(train_set.size());
  const int64_t steps_per_epoch = (n + opts.batch_size - 1) / opts.batch_size;
  const int64_t total_steps =
      opts.steps > 0 ? opts.steps : opts.epochs * steps_per_epoch;

  TacoTrainResult result;
  Tensor eval_alignment;
  EvalStats stats = EvalTaco(model, eval_set, &eval_alignment);
  result.initial_loss = stats.loss;
  result.curves.push_back({0, stats.loss, stats.loss, stats.diagonality});

  OrderStream order(n, CounterRng(opts.seed, CounterRng::StreamOf("order")));
  CounterRng train_rng(opts.seed, CounterRng::StreamOf("taco_train"));
  Adam adam(opts.adam);
  const bool early_enabled =
      opts.stop_loss_frac > 0 || opts.stop_diagonality > 0;

  int64_t step = 0;
  while (step < total_steps) {
    ++step;
    std::unordered_map<std::string, Tensor> grads;
    double batch_loss = 0;
    try {
      for (int64_t b = 0; b < opts.batch_size; ++b) {
        const Utterance &u = train_set[static_cast<std::size_t>(order.Next())];
        ad::Tape t;
        TacoModel::Bound bound = model.Bind(t);
        TacoModel::TeacherForcedOut out =
            model.TeacherForced(t, bound, u.ids, u.mel, true, train_rng);
        ad::Var pre = t.MseLoss(out.mel_pre, u.mel);
        ad::Var post = t.MseLoss(out.mel_post, u.mel);
        ad::Var stop =
            t.BceWithLogitsLoss(out.stop_logits, StopTargets(u.mel.dim(0)));
        ad::Var loss = t.Add(t.Add(pre, post), stop);
        batch_loss += t.value(loss)[0];
        t.Backward(loss);
        AccumulateGrads(t, model.params(), bound.vars, grads);
      }
      ScaleGrads(grads, 1.0 / static_cast<double>(opts.batch_size));
      adam.Step(model.params(), grads);
    } catch (const Error &e) {
      if (e.kind() == ErrorKind::kNonFinite) {
        // Flush the curves so far; they are the abort diagnostics.
        if (!opts.out_dir.empty())
          WriteCurves(result.curves, opts.out_dir + "/curves.csv");
        RethrowAtStep(e, step);
      }
      throw;
    }
    batch_loss /= static_cast<double>(opts.batch_size);

    const bool eval_now =
        (opts.eval_every > 0 && step % opts.eval_every == 0) ||
        step == total_steps;
    if (eval_now) {
      stats = EvalTaco(model, eval_set, &eval_alignment);
      result.curves.push_back(
          {step, batch_loss, stats.loss, stats.diagonality});
      if (!opts.out_dir.empty() && opts.align_every > 0 &&
          step % opts.align_every == 0) {
        WriteAlignmentPgm(eval_alignment,
                          opts.out_dir + "/" + StepName("align_step", step, ".pgm"));
        WriteAlignmentCsv(eval_alignment,
                          opts.out_dir + "/" + StepName("align_step", step, ".csv"));
      }
      if (early_enabled &&
          (opts.stop_loss_frac <= 0 ||
           stats.loss <= opts.stop_loss_frac * result.initial_loss) &&
          (opts.stop_diagonality <= 0 ||
           stats.diagonality >= opts.stop_diagonality)) {
        result.stopped_early = true;
      }
    }
    if (!opts.out_dir.empty() && opts.checkpoint_every > 0 &&
        step % opts.checkpoint_every == 0) {
      SaveCheckpoint(
          opts.out_dir + "/" + StepName("checkpoint_step", step, ".atts"),
          model.params(),
          CheckpointMetadata("taco", model.config().ToJson(),
                             model.config().n_symbols, step));
    }
    if (result.stopped_early) break;
  }

  if (result.curves.back().step != step && step > 0) {
    stats = EvalTaco(model, eval_set, &eval_alignment);
    result.curves.push_back(
        {step, result.curves.back().train_loss, stats.loss,
         stats.diagonality});
  }
  result.final_loss = stats.loss;
  result.final_diagonality = stats.diagonality;
  result.steps_run = step;

  if (!opts.out_dir.empty()) {
    WriteCurves(result.curves, opts.out_dir + "/curves.csv");
    SaveCheckpoint(opts.out_dir + "/checkpoint_final.atts", model.params(),
                   CheckpointMetadata("taco", model.config().ToJson(),
                                      model.config().n_symbols, step));
  }
  return result;
}

double EvalVocoderLoss(WaveGlowModel &model,
                       const std::vector<Utterance> &set,
                       int64_t segment_frames) {
  if (set.empty()) return 0;
  const int64_t hop = model.config().hop;
  double total = 0;
  for (const Utterance &u : set) {
    const int64_t f_u = u.mel.dim(0);
    const int64_t n_seg = std::min<int64_t>(segment_frames, f_u);
    const int64_t len = std::min<int64_t>(
        n_seg * hop, static_cast<int64_t>(u.audio.size()));
    std::vector<double> crop(u.audio.begin(), u.audio.begin() + len);
    Tensor mel_crop({n_seg, u.mel.dim(1)});
    for (int64_t i = 0; i < mel_crop.numel(); ++i) mel_crop[i] = u.mel[i];
    ad::Tape t;
    WaveGlowModel::Bound bound = model.Bind(t);
    ad::Var nll = model.Nll(t, bound, crop, mel_crop);
    total += t.value(nll)[0] / static_cast<double>(len);
  }
  return total / static_cast<double>(set.size());
}

VocoderTrainResult TrainVocoder(WaveGlowModel &model,
                                const std::vector<Utterance> &train_set,
                                const std::vector<Utterance> &val_set,
                                const VocoderTrainOptions &opts) {
  if (train_set.empty())
    Throw(ErrorKind::kEmptyManifest, "training set is empty");
  if (opts.batch_size <= 0 || opts.segment_frames <= 0)
    Throw(ErrorKind::kBadConfig, "batch_size and segment_frames must be positive");
  for (const Utterance &u : train_set)
    if (u.audio.empty())
      Throw(ErrorKind::kBadConfig,
            "vocoder training needs audio for " + u.stem);
  const std::vector<Utterance> &eval_set =
      val_set.empty() ? train_set : val_set;
  const int64_t hop = model.config().hop;
  const int64_t n = static_cast<int64_t>(train_set.size());
  const int64_t steps_per_epoch = (n + opts.batch_size - 1) / opts.batch_size;
  const int64_t total_steps =
      opts.steps > 0 ? opts.steps : opts.epochs * steps_per_epoch;

  VocoderTrainResult result;
  result.initial_loss = EvalVocoderLoss(model, eval_set, opts.segment_frames);
  result.curves.push_back({0, result.initial_loss, result.initial_loss, 0});

  OrderStream order(n, CounterRng(opts.seed, CounterRng::StreamOf("order")));
  CounterRng crop_rng(opts.seed, CounterRng::StreamOf("crop"));
  Adam adam(opts.adam);

  double last_eval = result.initial_loss;
  int64_t step = 0;
  while (step < total_steps) {
    ++step;
    std::unordered_map<std::string, Tensor> grads;
    double batch_loss = 0;
    try {
      for (int64_t b = 0; b < opts.batch_size; ++b) {
        const Utterance &u = train_set[static_cast<std::size_t>(order.Next())];
        const int64_t f_u = u.mel.dim(0);
        const int64_t n_seg = std::min<int64_t>(opts.segment_frames, f_u);
        const int64_t f0 = static_cast<int64_t>(
            crop_rng.NextBelow(static_cast<uint64_t>(f_u - n_seg + 1)));
        const int64_t a = f0 * hop;
        const int64_t e = std::min<int64_t>(
            (f0 + n_seg) * hop, static_cast<int64_t>(u.audio.size()));
        std::vector<double> crop(u.audio.begin() + a, u.audio.begin() + e);
        Tensor mel_crop({n_seg, u.mel.dim(1)});
        for (int64_t i = 0; i < n_seg; ++i)
          for (int64_t j = 0; j < u.mel.dim(1); ++j)
            mel_crop.at(i, j) = u.mel.at(f0 + i, j);
        ad::Tape t;
        WaveGlowModel::Bound bound = model.Bind(t);
        ad::Var nll = model.Nll(t, bound, crop, mel_crop);
        ad::Var loss =
            t.ScalarMul(nll, 1.0 / static_cast<double>(crop.size()));
        batch_loss += t.value(loss)[0];
        t.Backward(loss);
        AccumulateGrads(t, model.params(), bound.vars, grads);
      }
      ScaleGrads(grads, 1.0 / static_cast<double>(opts.batch_size));
      adam.Step(model.params(), grads);
      model.CheckInvertible();
    } catch (const Error &e) {
      if (e.kind() == ErrorKind::kNonFinite) {
        if (!opts.out_dir.empty())
          WriteCurves(result.curves, opts.out_dir + "/curves.csv");
        RethrowAtStep(e, step);
      }
      throw;
    }
    batch_loss /= static_cast<double>(opts.batch_size);

    const bool eval_now =
        (opts.eval_every > 0 && step % opts.eval_every == 0) ||
        step == total_steps;
    if (eval_now) {
      last_eval = EvalVocoderLoss(model, eval_set, opts.segment_frames);
      result.curves.push_back({step, batch_loss, last_eval, 0});
      if (opts.stop_loss_frac > 0 &&
          last_eval <= opts.stop_loss_frac * result.initial_loss) {
        result.stopped_early = true;
        break;
      }
    }
  }

  result.final_loss = last_eval;
  result.steps_run = step;
  if (!opts.out_dir.empty()) {
    WriteCurves(result.curves, opts.out_dir + "/curves.csv");
    SaveCheckpoint(opts.out_dir + "/checkpoint_final.atts", model.params(),
                   CheckpointMetadata("vocoder", model.config().ToJson(), -1,
                                      step));
  }
  return result;
}

RemapReport TransferInit(ParamStore &dst,
                         const std::vector<std::string> &dst_symbols,
                         const LoadedCheckpoint &src, uint64_t seed) {
  const std::string kEmbedding = "encoder.embedding";
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(src.metadata_json);
  } catch (const nlohmann::json::exception &) {
    Throw(ErrorKind::kBadConfig, "transfer: checkpoint metadata is not JSON");
  }
  if (!meta.contains("symbols") || !meta["symbols"].is_array())
    Throw(ErrorKind::kBadConfig,
          "transfer: checkpoint metadata lacks a symbols array");
  std::vector<std::string> src_symbols;
  for (const auto &s : meta["symbols"]) src_symbols.push_back(s.get<std::string>());

  for (const std::string &name : src.names)
    if (!dst.Has(name))
      Throw(ErrorKind::kShapeConflict,
            "transfer: checkpoint has unexpected tensor " + name);

  for (const std::string &name : dst.Names()) {
    if (name == kEmbedding) continue;
    auto it = src.tensors.find(name);
    if (it == src.tensors.end())
      Throw(ErrorKind::kShapeConflict,
            "transfer: checkpoint is missing tensor " + name);
    Tensor &d = dst.Get(name);
    if (!(it->second.shape() == d.shape()))
      Throw(ErrorKind::kShapeConflict,
            "transfer: tensor " + name + " has a different shape");
    d = it->second;
  }

  Tensor &demb = dst.Get(kEmbedding);
  const Tensor &semb = src.at(kEmbedding);
  if (demb.rank() != 2 || semb.rank() != 2 || demb.dim(1) != semb.dim(1))
    Throw(ErrorKind::kShapeConflict,
          "transfer: embedding widths do not match");
  if (semb.dim(0) != static_cast<int64_t>(src_symbols.size()))
    Throw(ErrorKind::kShapeConflict,
          "transfer: checkpoint symbol list does not match its embedding");
  if (demb.dim(0) != static_cast<int64_t>(dst_symbols.size()))
    Throw(ErrorKind::kShapeConflict,
          "transfer: destination symbol list does not match its embedding");

  std::unordered_map<std::string, int64_t> src_row;
  for (std::size_t i = 0; i < src_symbols.size(); ++i)
    src_row.emplace(src_symbols[i], static_cast<int64_t>(i));

  RemapReport report;
  CounterRng rng(seed, CounterRng::StreamOf("transfer_init"));
  const int64_t width = demb.dim(1);
  for (int64_t r = 0; r < demb.dim(0); ++r) {
    auto it = src_row.find(dst_symbols[static_cast<std::size_t>(r)]);
    if (it != src_row.end()) {
      for (int64_t c = 0; c < width; ++c)
        demb.at(r, c) = semb.at(it->second, c);
      ++report.rows_copied;
    } else {
      // New-symbol rows; draws happen in destination-row order.
      for (int64_t c = 0; c < width; ++c)
        demb.at(r, c) = 0.02 * rng.NextGaussian();
      ++report.rows_initialized;
      report.initialized_symbols.push_back(
          dst_symbols[static_cast<std::size_t>(r)]);
    }
  }
  report.exact = report.rows_initialized == 0;
  return report;
}

}  // namespace aratts
