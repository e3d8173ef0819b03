// tools/aratts_main.cc

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

// Command-line front end: phonetize, preprocess, train-taco, train-vocoder,
// synthesize, gradcheck.  Exit codes: 0 success, 1 invalid input, 2 runtime
// failure.  Every command records its resolved settings in a run-config JSON
// next to its primary output.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "aratts/checkpoint.h"
#include "aratts/dataset.h"
#include "aratts/dsp.h"
#include "aratts/error.h"
#include "aratts/gradcheck.h"
#include "aratts/phonetizer.h"
#include "aratts/taco.h"
#include "aratts/train.h"
#include "aratts/wav.h"
#include "aratts/waveglow.h"

namespace {

using nlohmann::json;

int ThreadsFromEnv() {
  const char *env = std::getenv("ARATTS_THREADS");
  if (env == nullptr) return 1;
  try {
    const int n = std::stoi(env);
    return n > 0 ? n : 1;
  } catch (...) {
    return 1;
  }
}

void WriteRunConfig(const std::string &path, const json &j) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) aratts::Throw(aratts::ErrorKind::kIo, "cannot write " + path);
  f << j.dump(2) << "\n";
}

// Every command logs the settings it actually runs with.
void LogConfig(const json &j) { std::cout << "config: " << j.dump() << "\n"; }

std::string StripExtension(const std::string &path) {
  const std::size_t slash = path.find_last_of("/\\");
  const std::size_t dot = path.find_last_of('.');
  if (dot == std::string::npos) return path;
  if (slash != std::string::npos && dot < slash) return path;
  return path.substr(0, dot);
}

json MetadataOf(const aratts::LoadedCheckpoint &ckpt, const char *want_kind) {
  json meta;
  try {
    meta = json::parse(ckpt.metadata_json);
  } catch (const json::exception &) {
    aratts::Throw(aratts::ErrorKind::kBadConfig,
                  "checkpoint metadata is not JSON");
  }
  if (!meta.contains("kind") || meta["kind"] != want_kind)
    aratts::Throw(aratts::ErrorKind::kBadConfig,
                  std::string("checkpoint is not a ") + want_kind +
                      " checkpoint");
  return meta;
}

// ---------------------------------------------------------------- phonetize

struct PhonetizeArgs {
  std::string in, out;
  bool lenient = false;
};

int CmdPhonetize(const PhonetizeArgs &a, int threads) {
  json rc = {{"command", "phonetize"},
             {"in", a.in},
             {"out", a.out},
             {"lenient", a.lenient},
             {"threads", threads}};
  LogConfig(rc);
  std::ifstream in(a.in);
  if (!in) aratts::Throw(aratts::ErrorKind::kIo, "cannot open " + a.in);
  std::ofstream out(a.out, std::ios::trunc);
  if (!out) aratts::Throw(aratts::ErrorKind::kIo, "cannot write " + a.out);

  std::string line;
  int line_no = 0, ok = 0, failed = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      out << "\n";
      continue;
    }
    try {
      const aratts::PhonetizeResult r = aratts::PhonetizeUtf8(line);
      const std::vector<std::string> symbols = r.sequence.Symbols();
      for (std::size_t i = 0; i < symbols.size(); ++i)
        out << (i > 0 ? " " : "") << symbols[i];
      out << "\n";
      ++ok;
    } catch (const aratts::Error &e) {
      ++failed;
      std::cerr << "line " << line_no << ": " << e.what() << "\n";
      if (a.lenient) std::cerr << "line " << line_no << ": skipped\n";
    }
  }
  std::cout << ok << " line(s) phonetized, " << failed << " failed\n";

  rc["lines"] = line_no;
  rc["failures"] = failed;
  WriteRunConfig(a.out + ".run-config.json", rc);
  return (failed > 0 && !a.lenient) ? 1 : 0;
}

// --------------------------------------------------------------- preprocess

struct PreprocessArgs {
  std::string manifest, wav_dir, out_dir;
  int sample_rate = aratts::kPipelineSampleRate;
  double trim_db = 60.0;
};

int CmdPreprocess(const PreprocessArgs &a, int threads) {
  json rc = {{"command", "preprocess"},
             {"manifest", a.manifest},
             {"wav_dir", a.wav_dir},
             {"out_dir", a.out_dir},
             {"sample_rate", a.sample_rate},
             {"trim_threshold_db", a.trim_db},
             {"frame_length", aratts::kFrameLength},
             {"hop", aratts::kHopLength},
             {"n_mels", aratts::kNumMels},
             {"threads", threads}};
  LogConfig(rc);
  std::filesystem::create_directories(a.out_dir);
  aratts::IngestOptions opts;
  opts.sample_rate = a.sample_rate;
  opts.trim_threshold_db = a.trim_db;
  const aratts::IngestResult res =
      aratts::Ingest(a.manifest, a.wav_dir, a.out_dir, opts);

  std::ofstream fail_log(a.out_dir + "/failures.txt", std::ios::trunc);
  for (const aratts::IngestFailure &f : res.failures) {
    std::cerr << "line " << f.line << " (" << f.wav_path << "): " << f.message
              << "\n";
    fail_log << "line " << f.line << " (" << f.wav_path << "): " << f.message
             << "\n";
  }
  if (!res.entries.empty())
    aratts::WriteProcessedManifest(a.out_dir + "/processed_manifest.txt",
                                   res.entries);
  std::cout << res.entries.size() << " clip(s) processed, "
            << res.failures.size() << " failed\n";

  rc["processed"] = res.entries.size();
  rc["failed"] = res.failures.size();
  WriteRunConfig(a.out_dir + "/run-config.json", rc);
  return res.entries.empty() ? 1 : 0;
}

// --------------------------------------------------------------- train-taco

struct TrainTacoArgs {
  std::string data_dir, out_dir;
  std::string manifest = "processed_manifest.txt";
  std::string preset = "reduced";
  std::string config_file;
  std::string init_checkpoint;
  int64_t steps = 0, epochs = 1, batch_size = 2;
  uint64_t seed = 0;
  double lr = 1e-3;
  int64_t eval_every = 50, align_every = 0;
  int64_t checkpoint_every = -1;  // -1 resolves to once per epoch
  double stop_loss_frac = 0, stop_diagonality = 0;
  bool no_split = false;
};

aratts::TacoConfig ResolveTacoConfig(const std::string &preset,
                                     const std::string &config_file) {
  const int64_t n_symbols =
      static_cast<int64_t>(aratts::SymbolTable().size());
  if (!config_file.empty()) {
    std::ifstream f(config_file);
    if (!f) aratts::Throw(aratts::ErrorKind::kIo, "cannot open " + config_file);
    json j;
    try {
      f >> j;
    } catch (const json::exception &e) {
      aratts::Throw(aratts::ErrorKind::kBadConfig,
                    "config " + config_file + ": " + e.what());
    }
    if (!j.contains("n_symbols")) j["n_symbols"] = n_symbols;
    return aratts::TacoConfig::FromJson(j);
  }
  if (preset == "full") return aratts::TacoConfig::Full(n_symbols);
  if (preset == "reduced") return aratts::TacoConfig::Reduced(n_symbols);
  aratts::Throw(aratts::ErrorKind::kBadConfig, "unknown preset " + preset);
}

int CmdTrainTaco(const TrainTacoArgs &a, int threads) {
  std::filesystem::create_directories(a.out_dir);
  const std::vector<aratts::IngestEntry> entries =
      aratts::ReadProcessedManifest(a.data_dir + "/" + a.manifest);

  std::vector<aratts::Utterance> all =
      aratts::LoadUtterances(a.data_dir, entries, false);
  std::vector<aratts::Utterance> train_set, val_set;
  if (a.no_split) {
    train_set = std::move(all);
  } else {
    const aratts::SplitIndices split =
        aratts::SplitDataset(static_cast<int64_t>(all.size()), a.seed);
    for (int64_t i : split.train)
      train_set.push_back(all[static_cast<std::size_t>(i)]);
    for (int64_t i : split.validation)
      val_set.push_back(all[static_cast<std::size_t>(i)]);
  }

  aratts::TacoConfig cfg = ResolveTacoConfig(a.preset, a.config_file);
  cfg.Validate();

  const int64_t steps_per_epoch =
      (static_cast<int64_t>(train_set.size()) + a.batch_size - 1) /
      a.batch_size;
  const int64_t checkpoint_every =
      a.checkpoint_every < 0 ? steps_per_epoch : a.checkpoint_every;

  json rc = {{"command", "train-taco"},
             {"data_dir", a.data_dir},
             {"out_dir", a.out_dir},
             {"preset", a.preset},
             {"config", cfg.ToJson()},
             {"steps", a.steps},
             {"epochs", a.epochs},
             {"batch_size", a.batch_size},
             {"seed", a.seed},
             {"lr", a.lr},
             {"eval_every", a.eval_every},
             {"align_every", a.align_every},
             {"checkpoint_every", checkpoint_every},
             {"stop_loss_frac", a.stop_loss_frac},
             {"stop_diagonality", a.stop_diagonality},
             {"train_utterances", train_set.size()},
             {"val_utterances", val_set.size()},
             {"threads", threads}};
  LogConfig(rc);

  aratts::TacoModel model(cfg, a.seed);

  json remap;
  if (!a.init_checkpoint.empty()) {
    const aratts::LoadedCheckpoint ckpt =
        aratts::LoadCheckpoint(a.init_checkpoint);
    MetadataOf(ckpt, "taco");
    const aratts::RemapReport report = aratts::TransferInit(
        model.params(), aratts::SymbolTable(), ckpt, a.seed);
    std::cout << "warm start: " << report.rows_copied
              << " embedding row(s) copied, " << report.rows_initialized
              << " newly initialized\n";
    for (const std::string &s : report.initialized_symbols)
      std::cout << "  new symbol: " << s << "\n";
    remap = {{"checkpoint", a.init_checkpoint},
             {"rows_copied", report.rows_copied},
             {"rows_initialized", report.rows_initialized},
             {"exact", report.exact}};
  }

  aratts::TacoTrainOptions opts;
  opts.steps = a.steps;
  opts.epochs = a.epochs;
  opts.batch_size = a.batch_size;
  opts.seed = a.seed;
  opts.adam.lr = a.lr;
  opts.eval_every = a.eval_every;
  opts.align_every = a.align_every;
  opts.checkpoint_every = checkpoint_every;
  opts.out_dir = a.out_dir;
  opts.stop_loss_frac = a.stop_loss_frac;
  opts.stop_diagonality = a.stop_diagonality;
  aratts::TacoTrainResult res;
  try {
    res = aratts::TrainTaco(model, train_set, val_set, opts);
  } catch (const aratts::Error &e) {
    if (e.kind() == aratts::ErrorKind::kNonFinite)
      std::cerr << "diagnostics: " << a.out_dir << "/curves.csv\n";
    throw;
  }

  std::cout << "steps: " << res.steps_run << (res.stopped_early ? " (early stop)" : "")
            << "\ninitial loss: " << res.initial_loss
            << "\nfinal loss: " << res.final_loss
            << "\nfinal diagonality: " << res.final_diagonality << "\n";

  rc["steps_run"] = res.steps_run;
  rc["initial_loss"] = res.initial_loss;
  rc["final_loss"] = res.final_loss;
  rc["final_diagonality"] = res.final_diagonality;
  rc["stopped_early"] = res.stopped_early;
  if (!remap.is_null()) rc["warm_start"] = remap;
  WriteRunConfig(a.out_dir + "/run-config.json", rc);
  return 0;
}

// ------------------------------------------------------------ train-vocoder

struct TrainVocoderArgs {
  std::string data_dir, out_dir;
  std::string manifest = "processed_manifest.txt";
  std::string preset = "desk";
  std::string config_file;
  int64_t steps = 0, epochs = 1, batch_size = 1, segment_frames = 8;
  uint64_t seed = 0;
  double lr = 1e-3;
  int64_t eval_every = 20;
  double stop_loss_frac = 0;
  bool no_split = false;
};

aratts::WaveGlowConfig ResolveVocoderConfig(const std::string &preset,
                                            const std::string &config_file) {
  if (!config_file.empty()) {
    std::ifstream f(config_file);
    if (!f) aratts::Throw(aratts::ErrorKind::kIo, "cannot open " + config_file);
    json j;
    try {
      f >> j;
    } catch (const json::exception &e) {
      aratts::Throw(aratts::ErrorKind::kBadConfig,
                    "config " + config_file + ": " + e.what());
    }
    return aratts::WaveGlowConfig::FromJson(j);
  }
  if (preset == "desk") return aratts::WaveGlowConfig::Desk();
  if (preset == "full") return aratts::WaveGlowConfig::Full();
  aratts::Throw(aratts::ErrorKind::kBadConfig, "unknown preset " + preset);
}

int CmdTrainVocoder(const TrainVocoderArgs &a, int threads) {
  std::filesystem::create_directories(a.out_dir);
  const std::vector<aratts::IngestEntry> entries =
      aratts::ReadProcessedManifest(a.data_dir + "/" + a.manifest);
  std::vector<aratts::Utterance> all =
      aratts::LoadUtterances(a.data_dir, entries, true);
  std::vector<aratts::Utterance> train_set, val_set;
  if (a.no_split) {
    train_set = std::move(all);
  } else {
    const aratts::SplitIndices split =
        aratts::SplitDataset(static_cast<int64_t>(all.size()), a.seed);
    for (int64_t i : split.train)
      train_set.push_back(all[static_cast<std::size_t>(i)]);
    for (int64_t i : split.validation)
      val_set.push_back(all[static_cast<std::size_t>(i)]);
  }

  aratts::WaveGlowConfig cfg = ResolveVocoderConfig(a.preset, a.config_file);
  cfg.Validate();

  json rc = {{"command", "train-vocoder"},
             {"data_dir", a.data_dir},
             {"out_dir", a.out_dir},
             {"preset", a.preset},
             {"config", cfg.ToJson()},
             {"steps", a.steps},
             {"epochs", a.epochs},
             {"batch_size", a.batch_size},
             {"segment_frames", a.segment_frames},
             {"seed", a.seed},
             {"lr", a.lr},
             {"eval_every", a.eval_every},
             {"stop_loss_frac", a.stop_loss_frac},
             {"train_utterances", train_set.size()},
             {"val_utterances", val_set.size()},
             {"threads", threads}};
  LogConfig(rc);

  aratts::WaveGlowModel model(cfg, a.seed);

  aratts::VocoderTrainOptions opts;
  opts.steps = a.steps;
  opts.epochs = a.epochs;
  opts.batch_size = a.batch_size;
  opts.segment_frames = a.segment_frames;
  opts.seed = a.seed;
  opts.adam.lr = a.lr;
  opts.eval_every = a.eval_every;
  opts.out_dir = a.out_dir;
  opts.stop_loss_frac = a.stop_loss_frac;
  aratts::VocoderTrainResult res;
  try {
    res = aratts::TrainVocoder(model, train_set, val_set, opts);
  } catch (const aratts::Error &e) {
    if (e.kind() == aratts::ErrorKind::kNonFinite)
      std::cerr << "diagnostics: " << a.out_dir << "/curves.csv\n";
    throw;
  }

  std::cout << "steps: " << res.steps_run << (res.stopped_early ? " (early stop)" : "")
            << "\ninitial loss: " << res.initial_loss
            << "\nfinal loss: " << res.final_loss << "\n";

  rc["steps_run"] = res.steps_run;
  rc["initial_loss"] = res.initial_loss;
  rc["final_loss"] = res.final_loss;
  rc["stopped_early"] = res.stopped_early;
  WriteRunConfig(a.out_dir + "/run-config.json", rc);
  return 0;
}

// --------------------------------------------------------------- synthesize

struct SynthesizeArgs {
  std::string taco_ckpt, vocoder_ckpt, text, text_file, out;
  double sigma = 0.6;
  uint64_t seed = 0;
  int64_t max_steps = -1;
  bool prenet_dropout = false;
};

int CmdSynthesize(const SynthesizeArgs &a, int threads) {
  json rc = {{"command", "synthesize"},
             {"taco", a.taco_ckpt},
             {"vocoder", a.vocoder_ckpt},
             {"out", a.out},
             {"sigma", a.sigma},
             {"seed", a.seed},
             {"max_steps", a.max_steps},
             {"prenet_dropout", a.prenet_dropout},
             {"threads", threads}};
  LogConfig(rc);
  std::string text = a.text;
  if (!a.text_file.empty()) {
    std::ifstream f(a.text_file);
    if (!f) aratts::Throw(aratts::ErrorKind::kIo, "cannot open " + a.text_file);
    std::ostringstream ss;
    ss << f.rdbuf();
    text = ss.str();
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r'))
      text.pop_back();
  }
  if (text.empty())
    aratts::Throw(aratts::ErrorKind::kBadConfig, "no text to synthesize");

  const aratts::LoadedCheckpoint taco_ckpt =
      aratts::LoadCheckpoint(a.taco_ckpt);
  const json taco_meta = MetadataOf(taco_ckpt, "taco");
  aratts::TacoConfig tcfg = aratts::TacoConfig::FromJson(taco_meta["config"]);
  tcfg.Validate();
  aratts::TacoModel taco(tcfg, 0);
  aratts::RestoreParams(taco.params(), taco_ckpt);

  // Text ids resolve against the checkpoint's own symbol inventory.
  if (!taco_meta.contains("symbols"))
    aratts::Throw(aratts::ErrorKind::kBadConfig,
                  "checkpoint metadata lacks a symbols array");
  std::unordered_map<std::string, int64_t> symbol_row;
  int64_t row = 0;
  for (const auto &s : taco_meta["symbols"])
    symbol_row.emplace(s.get<std::string>(), row++);
  const aratts::PhonetizeResult ph = aratts::PhonetizeUtf8(text);
  std::vector<int64_t> ids;
  for (const std::string &sym : ph.sequence.Symbols()) {
    auto it = symbol_row.find(sym);
    if (it == symbol_row.end())
      aratts::Throw(aratts::ErrorKind::kUnknownSymbolId,
                    "model does not know symbol " + sym);
    ids.push_back(it->second);
  }

  const aratts::LoadedCheckpoint voc_ckpt =
      aratts::LoadCheckpoint(a.vocoder_ckpt);
  const json voc_meta = MetadataOf(voc_ckpt, "vocoder");
  aratts::WaveGlowConfig vcfg =
      aratts::WaveGlowConfig::FromJson(voc_meta["config"]);
  vcfg.Validate();
  if (vcfg.n_mels != tcfg.n_mels)
    aratts::Throw(aratts::ErrorKind::kBadConfig,
                  "spectrogram widths of the two checkpoints differ");
  aratts::WaveGlowModel vocoder(vcfg, 0);
  aratts::RestoreParams(vocoder.params(), voc_ckpt);
  vocoder.CheckInvertible();

  aratts::TacoModel::InferOptions iopts;
  iopts.max_steps = a.max_steps;
  iopts.prenet_dropout = a.prenet_dropout;
  iopts.seed = a.seed;
  const aratts::TacoModel::InferResult infer = taco.Infer(ids, iopts);
  const aratts::AudioClip clip =
      vocoder.Synthesize(infer.mel, a.sigma, a.seed);
  aratts::WriteWav(a.out, clip);

  const std::string stem = StripExtension(a.out);
  aratts::MelSpectrogram mel;
  mel.values = infer.mel;
  mel.n_mels = static_cast<int>(tcfg.n_mels);
  mel.hop = static_cast<int>(vcfg.hop);
  mel.sample_rate = static_cast<int>(vcfg.sample_rate);
  aratts::SaveMel(mel, stem);
  aratts::WriteAlignmentPgm(infer.alignment, stem + ".align.pgm");
  aratts::WriteAlignmentCsv(infer.alignment, stem + ".align.csv");

  const double diag = aratts::Diagonality(infer.alignment);
  std::cout << "symbols: " << ids.size() << "\nframes: " << infer.mel.dim(0)
            << "\nsamples: " << clip.samples.size()
            << "\nalignment diagonality: " << diag << "\n";
  if (infer.max_steps_reached)
    std::cout << "warning: decoder hit the step cap before the stop token\n";

  rc["symbols"] = ids.size();
  rc["frames"] = infer.mel.dim(0);
  rc["samples"] = clip.samples.size();
  rc["sample_rate"] = clip.sample_rate;
  rc["diagonality"] = diag;
  rc["capped"] = infer.max_steps_reached;
  WriteRunConfig(a.out + ".run-config.json", rc);
  return 0;
}

// ---------------------------------------------------------------- gradcheck

struct GradcheckArgs {
  std::string module = "all";
  uint64_t seed = 99;
  std::string corrupt;
};

int CmdGradcheck(const GradcheckArgs &a, int threads) {
  // No file outputs, so the resolved config goes to stdout only.
  LogConfig({{"command", "gradcheck"},
             {"module", a.module},
             {"seed", a.seed},
             {"threads", threads}});
  const std::vector<aratts::gradcheck::CaseResult> results =
      a.corrupt.empty() ? aratts::gradcheck::RunAll(a.seed)
                        : aratts::gradcheck::RunAll(a.seed, a.corrupt);
  int selected = 0, failed = 0;
  for (const aratts::gradcheck::CaseResult &r : results) {
    if (a.module != "all" && r.name.find(a.module) == std::string::npos)
      continue;
    ++selected;
    if (!r.pass) ++failed;
    std::cout << (r.pass ? "pass" : "FAIL") << "  " << r.name
              << "  max rel err " << r.max_rel_err << "\n";
  }
  if (selected == 0)
    aratts::Throw(aratts::ErrorKind::kBadConfig,
                  "no gradcheck case matches module " + a.module);
  std::cout << selected << " case(s), " << failed << " failure(s)\n";
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Arabic text-to-speech pipeline"};
  app.require_subcommand(1);
  int threads = ThreadsFromEnv();
  app.add_option("--threads", threads,
                 "worker threads (recorded; compute is single-threaded)")
      ->check(CLI::PositiveNumber);

  PhonetizeArgs pa;
  CLI::App *phonetize =
      app.add_subcommand("phonetize", "diacritized text to phoneme lines");
  phonetize->add_option("--in", pa.in, "input text, one utterance per line")
      ->required();
  phonetize->add_option("--out", pa.out, "output symbol lines")->required();
  phonetize->add_flag("--lenient", pa.lenient,
                      "skip failing lines instead of failing the run");

  PreprocessArgs pp;
  CLI::App *preprocess =
      app.add_subcommand("preprocess", "manifest of wavs to features");
  preprocess->add_option("--manifest", pp.manifest, "wav|text manifest")
      ->required();
  preprocess->add_option("--wav-dir", pp.wav_dir, "base dir for wav paths")
      ->required();
  preprocess->add_option("--out-dir", pp.out_dir, "feature directory")
      ->required();
  preprocess->add_option("--sample-rate", pp.sample_rate, "target rate")
      ->capture_default_str();
  preprocess->add_option("--trim-db", pp.trim_db, "silence threshold dB")
      ->capture_default_str();

  TrainTacoArgs ta;
  CLI::App *train_taco =
      app.add_subcommand("train-taco", "train the spectrogram predictor");
  train_taco->add_option("--data-dir", ta.data_dir, "preprocess output dir")
      ->required();
  train_taco->add_option("--out", ta.out_dir, "run directory")->required();
  train_taco->add_option("--manifest", ta.manifest, "processed manifest name")
      ->capture_default_str();
  train_taco->add_option("--preset", ta.preset, "full or reduced")
      ->capture_default_str();
  train_taco->add_option("--config", ta.config_file, "config JSON overriding the preset");
  train_taco->add_option("--init-checkpoint", ta.init_checkpoint,
                         "warm-start checkpoint (embedding remapped by symbol)");
  train_taco->add_option("--steps", ta.steps, "optimizer steps (0: use epochs)")
      ->capture_default_str();
  train_taco->add_option("--epochs", ta.epochs, "epochs when steps is 0")
      ->capture_default_str();
  train_taco->add_option("--batch-size", ta.batch_size, "utterances per step")
      ->capture_default_str();
  train_taco->add_option("--seed", ta.seed, "run seed")->capture_default_str();
  train_taco->add_option("--lr", ta.lr, "learning rate")->capture_default_str();
  train_taco->add_option("--eval-every", ta.eval_every, "curve cadence")
      ->capture_default_str();
  train_taco->add_option("--align-every", ta.align_every,
                         "alignment dump cadence (0: off)")
      ->capture_default_str();
  train_taco->add_option("--checkpoint-every", ta.checkpoint_every,
                         "checkpoint cadence (-1: once per epoch, 0: final only)")
      ->capture_default_str();
  train_taco->add_option("--stop-loss-frac", ta.stop_loss_frac,
                         "early stop once loss falls to this fraction of start");
  train_taco->add_option("--stop-diagonality", ta.stop_diagonality,
                         "early stop once diagonality reaches this");
  train_taco->add_flag("--no-split", ta.no_split,
                       "train on every utterance (skip the 95/5 split)");

  TrainVocoderArgs tv;
  CLI::App *train_vocoder =
      app.add_subcommand("train-vocoder", "train the flow vocoder");
  train_vocoder->add_option("--data-dir", tv.data_dir, "preprocess output dir")
      ->required();
  train_vocoder->add_option("--out", tv.out_dir, "run directory")->required();
  train_vocoder->add_option("--manifest", tv.manifest, "processed manifest name")
      ->capture_default_str();
  train_vocoder->add_option("--preset", tv.preset, "desk or full")
      ->capture_default_str();
  train_vocoder->add_option("--config", tv.config_file,
                            "config JSON overriding the preset");
  train_vocoder->add_option("--steps", tv.steps, "optimizer steps (0: use epochs)")
      ->capture_default_str();
  train_vocoder->add_option("--epochs", tv.epochs, "epochs when steps is 0")
      ->capture_default_str();
  train_vocoder->add_option("--batch-size", tv.batch_size, "crops per step")
      ->capture_default_str();
  train_vocoder->add_option("--segment-frames", tv.segment_frames,
                            "crop length in mel frames")
      ->capture_default_str();
  train_vocoder->add_option("--seed", tv.seed, "run seed")->capture_default_str();
  train_vocoder->add_option("--lr", tv.lr, "learning rate")->capture_default_str();
  train_vocoder->add_option("--eval-every", tv.eval_every, "curve cadence")
      ->capture_default_str();
  train_vocoder->add_option("--stop-loss-frac", tv.stop_loss_frac,
                            "early stop once loss falls to this fraction of start");
  train_vocoder->add_flag("--no-split", tv.no_split,
                          "train on every utterance (skip the 95/5 split)");

  SynthesizeArgs sy;
  CLI::App *synthesize =
      app.add_subcommand("synthesize", "text through both models to a wav");
  synthesize->add_option("--taco", sy.taco_ckpt, "spectrogram checkpoint")
      ->required();
  synthesize->add_option("--vocoder", sy.vocoder_ckpt, "vocoder checkpoint")
      ->required();
  synthesize->add_option("--text", sy.text, "diacritized text");
  synthesize->add_option("--text-file", sy.text_file, "file with the text");
  synthesize->add_option("--out", sy.out, "output wav path")->required();
  synthesize->add_option("--sigma", sy.sigma, "latent noise scale")
      ->capture_default_str();
  synthesize->add_option("--seed", sy.seed, "noise seed")->capture_default_str();
  synthesize->add_option("--max-steps", sy.max_steps,
                         "decoder cap (-1: from config)")
      ->capture_default_str();
  synthesize->add_flag("--prenet-dropout", sy.prenet_dropout,
                       "sample prenet noise during synthesis");

  GradcheckArgs gc;
  CLI::App *gradcheck =
      app.add_subcommand("gradcheck", "finite-difference check of backward rules");
  gradcheck->add_option("--module", gc.module,
                        "all, or a substring selecting cases")
      ->capture_default_str();
  gradcheck->add_option("--seed", gc.seed, "probe seed")->capture_default_str();
  gradcheck
      ->add_option("--self-test-corrupt", gc.corrupt,
                   "sabotage the named case's analytic gradient")
      ->group("");  // hidden; exists to prove the checker can fail

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    // Bad usage is a validation failure; --help stays exit 0.
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (phonetize->parsed()) return CmdPhonetize(pa, threads);
    if (preprocess->parsed()) return CmdPreprocess(pp, threads);
    if (train_taco->parsed()) return CmdTrainTaco(ta, threads);
    if (train_vocoder->parsed()) return CmdTrainVocoder(tv, threads);
    if (synthesize->parsed()) return CmdSynthesize(sy, threads);
    if (gradcheck->parsed()) return CmdGradcheck(gc, threads);
  } catch (const aratts::Error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return aratts::IsValidationError(e.kind()) ? 1 : 2;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
