// tests/dataset_test.cc

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
#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

#include "aratts/error.h"
#include "aratts/phonetizer.h"
#include "aratts/train.h"
#include "aratts/wav.h"
#include "doctest.h"

using aratts::AudioClip;
using aratts::Error;
using aratts::ErrorKind;
using aratts::IngestEntry;
using aratts::IngestOptions;
using aratts::IngestResult;
using aratts::ManifestRecord;
using aratts::ReadManifest;
using aratts::ReadProcessedManifest;
using aratts::WriteProcessedManifest;

namespace {

std::string TempDir(const std::string &name) {
  const std::string dir =
      std::string(std::getenv("TMPDIR") ? std::getenv("TMPDIR") : "/tmp") +
      "/aratts_dataset_test_" + name;
  const int rc = system(("rm -rf " + dir + " && mkdir -p " + dir).c_str());
  if (rc != 0) aratts::Throw(aratts::ErrorKind::kIo, "cannot reset " + dir);
  return dir;
}

void WriteSine(const std::string &path, double seconds, double freq,
               int sample_rate) {
  AudioClip clip;
  clip.sample_rate = sample_rate;
  const int n = static_cast<int>(seconds * sample_rate);
  clip.samples.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    clip.samples[static_cast<std::size_t>(i)] =
        0.5 * std::sin(2.0 * M_PI * freq * i / sample_rate);
  aratts::WriteWav(path, clip);
}

}  // namespace

TEST_CASE("manifest parsing: comments, blanks, separators, line numbers") {
  const std::string dir = TempDir("manifest");
  const std::string path = dir + "/list.txt";
  {
    std::ofstream f(path);
    f << "# corpus\n";
    f << "\n";
    f << "a.wav|بَ بَ\n";
    f << "  b.wav  |  دَرَسَ  \n";
  }
  std::vector<ManifestRecord> records = ReadManifest(path);
  REQUIRE(records.size() == 2);
  CHECK(records[0].wav_path == "a.wav");
  CHECK(records[0].text == "بَ بَ");
  CHECK(records[0].line == 3);
  CHECK(records[1].wav_path == "b.wav");
  CHECK(records[1].text == "دَرَسَ");
  CHECK(records[1].line == 4);

  {
    std::ofstream f(path);
    f << "# nothing but comments\n";
  }
  CHECK_THROWS_AS(ReadManifest(path), Error);
  try {
    ReadManifest(path);
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::kEmptyManifest);
  }

  {
    std::ofstream f(path);
    f << "no separator here\n";
  }
  CHECK_THROWS_AS(ReadManifest(path), Error);
}

TEST_CASE("ingest runs the front end and collects per-record failures") {
  const std::string wav_dir = TempDir("ingest_wavs");
  const std::string out_dir = TempDir("ingest_out");
  WriteSine(wav_dir + "/one.wav", 0.30, 220.0, 16000);
  WriteSine(wav_dir + "/two.wav", 0.25, 330.0, 22050);
  WriteSine(wav_dir + "/three.wav", 0.20, 440.0, 16000);

  const std::string manifest = wav_dir + "/list.txt";
  {
    std::ofstream f(manifest);
    f << "one.wav|دَرَسَ\n";
    f << "missing.wav|بَ\n";       // no such file
    f << "two.wav|hello\n";        // rejected codepoints
    f << "three.wav|بَ بَا\n";
  }

  IngestResult res = aratts::Ingest(manifest, wav_dir, out_dir);
  REQUIRE(res.entries.size() == 2);
  REQUIRE(res.failures.size() == 2);
  CHECK(res.failures[0].line == 2);
  CHECK(res.failures[0].wav_path == "missing.wav");
  CHECK(res.failures[1].line == 3);

  const IngestEntry &one = res.entries[0];
  CHECK(one.stem == "one");
  // 0.30 s resampled to 22050 and kept whole by the trimmer:
  // 1 + floor(6615 / 256) = 26 frames.
  CHECK(one.n_samples == 6615);
  CHECK(one.n_frames == 26);
  const std::vector<std::string> want = {"d", "a", "r", "a", "s", "a"};
  REQUIRE(one.ids.size() == want.size());
  for (std::size_t i = 0; i < want.size(); ++i)
    CHECK(one.ids[i] == aratts::SymbolId(want[i]));

  // Sidecars and the trimmed waveform landed next to each other.
  CHECK(std::ifstream(out_dir + "/one.json").good());
  CHECK(std::ifstream(out_dir + "/one.bin").good());
  CHECK(std::ifstream(out_dir + "/one.wav").good());
  AudioClip trimmed = aratts::LoadWav(out_dir + "/one.wav");
  CHECK(trimmed.sample_rate == 22050);
  CHECK(trimmed.samples.size() == 6615);

  // A second run overwrites and reproduces the same entries.
  IngestResult again = aratts::Ingest(manifest, wav_dir, out_dir);
  REQUIRE(again.entries.size() == 2);
  CHECK(again.entries[0].ids == res.entries[0].ids);
  CHECK(again.entries[0].n_frames == res.entries[0].n_frames);

  // Processed manifest round-trips the entries.
  const std::string processed = out_dir + "/processed.txt";
  WriteProcessedManifest(processed, res.entries);
  std::vector<IngestEntry> back = ReadProcessedManifest(processed);
  REQUIRE(back.size() == 2);
  CHECK(back[0].stem == "one");
  CHECK(back[0].ids == res.entries[0].ids);
  CHECK(back[0].n_frames == 26);
  CHECK(back[0].n_samples == 6615);
  CHECK(back[1].stem == "three");

  // Loader returns mel plus audio for the vocoder path.
  std::vector<aratts::Utterance> utts =
      aratts::LoadUtterances(out_dir, back, true);
  REQUIRE(utts.size() == 2);
  CHECK(utts[0].mel.dim(0) == 26);
  CHECK(utts[0].mel.dim(1) == 80);
  CHECK(utts[0].audio.size() == 6615);
  CHECK(utts[0].ids.size() == 6);
}

TEST_CASE("duplicate clip names fail the later record") {
  const std::string wav_dir = TempDir("dup_wavs");
  const std::string out_dir = TempDir("dup_out");
  const int mkdir_rc = system(("mkdir -p " + wav_dir + "/sub").c_str());
  REQUIRE(mkdir_rc == 0);
  WriteSine(wav_dir + "/a.wav", 0.2, 200.0, 22050);
  WriteSine(wav_dir + "/sub/a.wav", 0.2, 300.0, 22050);
  const std::string manifest = wav_dir + "/list.txt";
  {
    std::ofstream f(manifest);
    f << "a.wav|بَ\n";
    f << "sub/a.wav|بَ\n";  // same base name
  }
  IngestResult res = aratts::Ingest(manifest, wav_dir, out_dir);
  CHECK(res.entries.size() == 1);
  REQUIRE(res.failures.size() == 1);
  CHECK(res.failures[0].line == 2);
}

TEST_CASE("an unreadable or empty processed manifest is refused") {
  const std::string dir = TempDir("processed");
  CHECK_THROWS_AS(ReadProcessedManifest(dir + "/nope.txt"), Error);
  std::ofstream(dir + "/empty.txt") << "\n\n";
  CHECK_THROWS_AS(ReadProcessedManifest(dir + "/empty.txt"), Error);
}
