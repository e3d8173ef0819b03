// dataset.cc

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

#include "aratts/dataset.h"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "aratts/error.h"
#include "aratts/phonetizer.h"
#include "aratts/resample.h"
#include "aratts/rng.h"
#include "aratts/wav.h"

namespace aratts {

namespace {

std::string Strip(const std::string &s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// "path/to/clip_003.wav" -> "clip_003"
std::string StemOf(const std::string &wav_path) {
  std::size_t slash = wav_path.find_last_of("/\\");
  std::string base =
      (slash == std::string::npos) ? wav_path : wav_path.substr(slash + 1);
  std::size_t dot = base.find_last_of('.');
  if (dot != std::string::npos && dot > 0) base = base.substr(0, dot);
  return base;
}

}  // namespace

std::vector<ManifestRecord> ReadManifest(const std::string &path) {
  std::ifstream f(path);
  if (!f) Throw(ErrorKind::kIo, "cannot open manifest: " + path);
  std::vector<ManifestRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    const std::string s = Strip(line);
    if (s.empty() || s[0] == '#') continue;
    std::size_t bar = s.find('|');
    if (bar == std::string::npos)
      Throw(ErrorKind::kBadConfig, "manifest line " + std::to_string(line_no) +
                                       ": missing | separator");
    ManifestRecord r;
    r.wav_path = Strip(s.substr(0, bar));
    r.text = Strip(s.substr(bar + 1));
    r.line = line_no;
    if (r.wav_path.empty())
      Throw(ErrorKind::kBadConfig,
            "manifest line " + std::to_string(line_no) + ": empty wav path");
    records.push_back(std::move(r));
  }
  if (records.empty()) Throw(ErrorKind::kEmptyManifest, "manifest: " + path);
  return records;
}

SplitIndices SplitDataset(int64_t n, uint64_t seed) {
  if (n < 20)
    Throw(ErrorKind::kTooFewRecords,
          "split needs at least 20 records, got " + std::to_string(n));
  std::vector<int64_t> idx(static_cast<std::size_t>(n));
  for (int64_t i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  CounterRng rng(seed, CounterRng::StreamOf("split"));
  for (int64_t i = n - 1; i > 0; --i) {
    const int64_t j =
        static_cast<int64_t>(rng.NextBelow(static_cast<uint64_t>(i + 1)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  const int64_t n_val =
      static_cast<int64_t>(std::floor(0.05 * static_cast<double>(n) + 0.5));
  const int64_t n_train = n - n_val;
  SplitIndices out;
  out.train.assign(idx.begin(), idx.begin() + n_train);
  out.validation.assign(idx.begin() + n_train, idx.end());
  return out;
}

IngestResult Ingest(const std::string &manifest_path,
                    const std::string &wav_dir, const std::string &out_dir,
                    const IngestOptions &opts) {
  const std::vector<ManifestRecord> records = ReadManifest(manifest_path);
  IngestResult out;
  std::set<std::string> used_stems;
  for (const ManifestRecord &r : records) {
    try {
      const std::string stem = StemOf(r.wav_path);
      if (!used_stems.insert(stem).second)
        Throw(ErrorKind::kBadConfig, "duplicate clip name " + stem);
      AudioClip clip = LoadWav(wav_dir + "/" + r.wav_path);
      clip = Resample(clip, opts.sample_rate);
      TrimResult trimmed = TrimSilence(clip, opts.trim_threshold_db);
      MelSpectrogram mel = MelSpectrogramOf(trimmed.clip, opts.mel);
      const PhonetizeResult ph = PhonetizeUtf8(r.text);

      SaveMel(mel, out_dir + "/" + stem);
      if (opts.write_trimmed_audio)
        WriteWav(out_dir + "/" + stem + ".wav", trimmed.clip);

      IngestEntry e;
      e.stem = stem;
      e.ids.assign(ph.sequence.ids.begin(), ph.sequence.ids.end());
      e.n_frames = mel.NumFrames();
      e.n_samples = static_cast<int64_t>(trimmed.clip.samples.size());
      e.undiacritized = ph.undiacritized;
      out.entries.push_back(std::move(e));
    } catch (const Error &err) {
      out.failures.push_back({r.line, r.wav_path, err.what()});
    }
  }
  return out;
}

void WriteProcessedManifest(const std::string &path,
                            const std::vector<IngestEntry> &entries) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) Throw(ErrorKind::kIo, "cannot open for write: " + path);
  for (const IngestEntry &e : entries) {
    f << e.stem << '|';
    for (std::size_t i = 0; i < e.ids.size(); ++i) {
      if (i > 0) f << ' ';
      f << e.ids[i];
    }
    f << '|' << e.n_frames << '|' << e.n_samples << '|' << e.undiacritized
      << '\n';
  }
  if (!f) Throw(ErrorKind::kIo, "write failed: " + path);
}

std::vector<IngestEntry> ReadProcessedManifest(const std::string &path) {
  std::ifstream f(path);
  if (!f) Throw(ErrorKind::kIo, "cannot open manifest: " + path);
  std::vector<IngestEntry> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    const std::string s = Strip(line);
    if (s.empty()) continue;
    std::istringstream ls(s);
    std::string stem, ids_field, frames_field, samples_field, undiac_field;
    if (!std::getline(ls, stem, '|') || !std::getline(ls, ids_field, '|') ||
        !std::getline(ls, frames_field, '|') ||
        !std::getline(ls, samples_field, '|') ||
        !std::getline(ls, undiac_field))
      Throw(ErrorKind::kBadConfig, "processed manifest line " +
                                       std::to_string(line_no) +
                                       ": expected 5 fields");
    IngestEntry e;
    e.stem = Strip(stem);
    std::istringstream is(ids_field);
    int64_t id = 0;
    while (is >> id) e.ids.push_back(id);
    e.n_frames = std::stoll(frames_field);
    e.n_samples = std::stoll(samples_field);
    e.undiacritized = std::stoi(undiac_field);
    entries.push_back(std::move(e));
  }
  if (entries.empty()) Throw(ErrorKind::kEmptyManifest, "manifest: " + path);
  return entries;
}

}  // namespace aratts
