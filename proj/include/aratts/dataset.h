// aratts/dataset.h

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

#ifndef ARATTS_DATASET_H_
#define ARATTS_DATASET_H_

#include <cstdint>
#include <string>
#include <vector>

#include "aratts/dsp.h"

namespace aratts {

// One "<wav path>|<diacritized text>" manifest line.  Blank lines and lines
// starting with # are skipped; line numbers are 1-based.
struct ManifestRecord {
  std::string wav_path;
  std::string text;
  int line = 0;
};

// Throws kIo if the file cannot be opened, kEmptyManifest if it holds no
// records, kBadConfig on a line without the separator.
std::vector<ManifestRecord> ReadManifest(const std::string &path);

// Deterministic 95/5 split: Fisher-Yates shuffle of [0, n) seeded from
// (seed, "split"), validation takes the last floor(0.05 n + 0.5) slots.
// Throws kTooFewRecords when n < 20.
struct SplitIndices {
  std::vector<int64_t> train;
  std::vector<int64_t> validation;
};
SplitIndices SplitDataset(int64_t n, uint64_t seed);

struct IngestOptions {
  int sample_rate = kPipelineSampleRate;
  double trim_threshold_db = 60.0;
  MelParams mel;
  bool write_trimmed_audio = true;  // vocoder training reads these back
};

// One successfully processed record.
struct IngestEntry {
  std::string stem;               // sidecar base name inside out_dir
  std::vector<int64_t> ids;       // encoded phoneme sequence
  int64_t n_frames = 0;           // mel rows
  int64_t n_samples = 0;          // trimmed sample count
  int undiacritized = 0;
};

struct IngestFailure {
  int line = 0;
  std::string wav_path;
  std::string message;
};

struct IngestResult {
  std::vector<IngestEntry> entries;
  std::vector<IngestFailure> failures;
};

// Runs the acoustic front end over a manifest: load, resample, trim, mel
// extraction, phonetization.  Mel sidecars (and, by default, the trimmed
// waveforms) land in out_dir under the wav's base name.  A record that fails
// any stage is collected in failures and the run continues.  Duplicate base
// names past the first fail their record.
IngestResult Ingest(const std::string &manifest_path,
                    const std::string &wav_dir, const std::string &out_dir,
                    const IngestOptions &opts);
inline IngestResult Ingest(const std::string &manifest_path,
                           const std::string &wav_dir,
                           const std::string &out_dir) {
  return Ingest(manifest_path, wav_dir, out_dir, IngestOptions());
}

// Processed manifest: "<stem>|<space-joined ids>|<n_frames>|<n_samples>|
// <undiacritized>" per line.  Read throws kEmptyManifest on no records.
void WriteProcessedManifest(const std::string &path,
                            const std::vector<IngestEntry> &entries);
std::vector<IngestEntry> ReadProcessedManifest(const std::string &path);

}  // namespace aratts

#endif  // ARATTS_DATASET_H_
