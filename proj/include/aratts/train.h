// aratts/train.h

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

#ifndef ARATTS_TRAIN_H_
#define ARATTS_TRAIN_H_

#include <cstdint>
#include <string>
#include <vector>

#include "aratts/checkpoint.h"
#include "aratts/dataset.h"
#include "aratts/optimizer.h"
#include "aratts/taco.h"
#include "aratts/waveglow.h"

namespace aratts {

// Fraction of total attention mass falling inside the relative band
// |j / T_x - i / T_dec| < 0.15, averaged over decoder steps.  alignment is
// [T_dec, T_x]; 1.0 means perfectly diagonal.
double Diagonality(const Tensor &alignment);

// Alignment dumps: plain-text PGM (P2, 255 = max weight in the matrix) and a
// CSV with one decoder step per row.
void WriteAlignmentPgm(const Tensor &alignment, const std::string &path);
void WriteAlignmentCsv(const Tensor &alignment, const std::string &path);

// Stop targets for a teacher-forced pass of t_dec frames: zero everywhere,
// one at the final frame.
Tensor StopTargets(int64_t t_dec);

// In-memory training example.  audio stays empty unless requested; mel is
// [n_frames, n_mels].
struct Utterance {
  std::string stem;
  std::vector<int64_t> ids;
  Tensor mel;
  std::vector<double> audio;
};

// Reads "<stem>.json/.bin" (and "<stem>.wav" when with_audio) back from an
// ingest directory.
std::vector<Utterance> LoadUtterances(const std::string &data_dir,
                                      const std::vector<IngestEntry> &entries,
                                      bool with_audio);

struct CurveRow {
  int64_t step = 0;
  double train_loss = 0;
  double val_loss = 0;
  double diagonality = 0;  // unused by the vocoder curves
};
void WriteCurves(const std::vector<CurveRow> &curves, const std::string &path);

struct TacoTrainOptions {
  int64_t steps = 0;   // optimizer steps; when 0, epochs decides
  int64_t epochs = 0;
  int64_t batch_size = 2;  // utterance gradients averaged per step
  uint64_t seed = 0;
  AdamConfig adam;
  // Curve / early-stop cadence in steps.  Row 0 records the pre-training
  // evaluation.  Evaluation runs teacher-forced in eval mode over the
  // validation set, or over the training set when there is none.
  int64_t eval_every = 50;
  int64_t align_every = 0;  // alignment dumps into out_dir, 0 = off
  std::string out_dir;      // empty: no files (no curves, no checkpoints)
  int64_t checkpoint_every = 0;  // extra periodic checkpoints, 0 = final only
  // Stop once eval loss <= stop_loss_frac * initial loss AND eval
  // diagonality >= stop_diagonality; zero disables that half of the test.
  double stop_loss_frac = 0;
  double stop_diagonality = 0;
};

struct TacoTrainResult {
  std::vector<CurveRow> curves;
  double initial_loss = 0;
  double final_loss = 0;
  double final_diagonality = 0;
  int64_t steps_run = 0;
  bool stopped_early = false;
};

// Composite teacher-forced loss: MSE before postnet + MSE after postnet +
// stop-token BCE.  Throws NonFinite (with the step in the message) if the
// loss or a gradient leaves the finite range.
TacoTrainResult TrainTaco(TacoModel &model,
                          const std::vector<Utterance> &train_set,
                          const std::vector<Utterance> &val_set,
                          const TacoTrainOptions &opts);

// Mean eval-mode composite loss / teacher-forced diagonality over a set.
double EvalTacoLoss(TacoModel &model, const std::vector<Utterance> &set);
double EvalTacoDiagonality(TacoModel &model,
                           const std::vector<Utterance> &set);

struct VocoderTrainOptions {
  int64_t steps = 0;
  int64_t epochs = 0;
  int64_t batch_size = 1;
  // Crops are hop-aligned: segment_frames mel rows against
  // segment_frames * hop samples, random offset per draw.
  int64_t segment_frames = 8;
  uint64_t seed = 0;
  AdamConfig adam;
  int64_t eval_every = 20;
  std::string out_dir;
  double stop_loss_frac = 0;
};

struct VocoderTrainResult {
  std::vector<CurveRow> curves;
  double initial_loss = 0;
  double final_loss = 0;
  int64_t steps_run = 0;
  bool stopped_early = false;
};

// Likelihood training on random crops; losses are reported per sample
// (NLL / crop length).  Mixing matrices are checked for invertibility after
// every optimizer step.
VocoderTrainResult TrainVocoder(WaveGlowModel &model,
                                const std::vector<Utterance> &train_set,
                                const std::vector<Utterance> &val_set,
                                const VocoderTrainOptions &opts);

double EvalVocoderLoss(WaveGlowModel &model,
                       const std::vector<Utterance> &set,
                       int64_t segment_frames);

// Warm start from a checkpoint whose symbol inventory may differ.  Every
// tensor except the embedding must match by name and shape (ShapeConflict
// otherwise).  Embedding rows are matched by symbol string; rows for symbols
// absent from the source are drawn N(0, 0.02^2) from (seed, "transfer_init"),
// in destination-row order.
struct RemapReport {
  int64_t rows_copied = 0;
  int64_t rows_initialized = 0;
  std::vector<std::string> initialized_symbols;
  bool exact = false;  // every destination row came from the source
};
RemapReport TransferInit(ParamStore &dst,
                         const std::vector<std::string> &dst_symbols,
                         const LoadedCheckpoint &src, uint64_t seed);

}  // namespace aratts

#endif  // ARATTS_TRAIN_H_
