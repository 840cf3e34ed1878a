// Copyright 2026 The InSE-Net Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// inse: coded-audio quality pipeline CLI.
// Exit codes: 0 success, 1 processing error, 2 usage/argument error.

#include <CLI11.hpp>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <set>
#include <thread>

#include "inse/dataset.hpp"
#include "inse/errors.hpp"
#include "inse/evaluation.hpp"
#include "inse/frontend.hpp"
#include "inse/synth.hpp"
#include "inse/training.hpp"

namespace fs = std::filesystem;
using namespace inse;

namespace {

struct CommonOptions {
  uint64_t seed = 0;
  std::string config_path;

  ToolConfig tools() const {
    return config_path.empty() ? ToolConfig{} : ToolConfig::load_file(config_path);
  }
};

void add_common(CLI::App* cmd, CommonOptions& common) {
  cmd->add_option("--seed", common.seed, "Deterministic RNG seed")
      ->capture_default_str();
  cmd->add_option("--config", common.config_path,
                  "Key-value tool config (codec/oracle executables, bitrate ladders)")
      ->check(CLI::ExistingFile);
}

int cmd_spectrogram(const std::string& in_wav, const std::string& out_file) {
  AudioBuffer audio = read_wav(in_wav);
  if (audio.channel_count() == 2) {
    std::cerr << "stereo input: downmixing to the mid signal\n";
    audio = downmix_mid(audio);
  }
  write_spectrogram(out_file, gammatone_spectrogram(audio));
  return 0;
}

struct SynthArgs {
  std::string out_dir;
  std::string manifest_path;
  std::vector<std::string> colors = {"white", "pink", "brown"};
  int count = 1;
  bool no_silence = false;
  double level_db = -109.0;
  std::string codec_id;
  int bitrate = 0;
};

int cmd_synth(const SynthArgs& args, const CommonOptions& common) {
  std::vector<NoiseSpec> specs;
  int color_index = 0;
  for (const auto& name : args.colors) {
    const NoiseColor color = noise_color_from_string(name);
    for (int i = 0; i < args.count; ++i) {
      NoiseSpec spec;
      spec.color = color;
      spec.seed = common.seed + 10007ULL * color_index + i;
      spec.target_level_db = args.level_db;
      specs.push_back(spec);
    }
    ++color_index;
  }

  const ToolConfig tools = common.tools();
  SyntheticPairOptions options;
  if (!args.codec_id.empty()) {
    options.codec_id = args.codec_id;
    options.bitrate_kbps = args.bitrate;
    options.tools = &tools;
  }
  const auto entries =
      make_synthetic_pairs(specs, !args.no_silence, args.out_dir, options);

  if (!args.manifest_path.empty()) {
    Manifest manifest;
    if (fs::exists(args.manifest_path))
      manifest = Manifest::load(args.manifest_path, /*check_paths=*/false);
    manifest.entries.insert(manifest.entries.end(), entries.begin(), entries.end());
    manifest.save(args.manifest_path);
  }
  std::cout << "wrote " << entries.size() << " synthetic pairs to " << args.out_dir
            << "\n";
  return 0;
}

struct BuildManifestArgs {
  std::string refs_dir;
  std::string out_dir;
  std::string manifest_path;
  std::string content_type = "music";
  bool no_anchors = false;
  int workers = 1;
};

int cmd_build_manifest(const BuildManifestArgs& args, const CommonOptions& common) {
  const ToolConfig tools = common.tools();

  std::vector<std::string> ref_files;
  for (const auto& entry : fs::directory_iterator(args.refs_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".wav")
      ref_files.push_back(entry.path().string());
  std::sort(ref_files.begin(), ref_files.end());
  if (ref_files.empty()) throw ArgumentError("no .wav files under " + args.refs_dir);

  const std::string excerpt_dir = (fs::path(args.out_dir) / "excerpts").string();
  const std::string coded_dir = (fs::path(args.out_dir) / "coded").string();
  fs::create_directories(excerpt_dir);
  fs::create_directories(coded_dir);

  struct Excerpt {
    std::string id;
    std::string path;
  };
  std::vector<Excerpt> excerpts;
  for (const auto& file : ref_files) {
    AudioBuffer audio = read_wav(file);
    if (audio.channel_count() == 2) audio = downmix_mid(audio);
    const auto segments = segment_excerpts(audio);
    const std::string stem = fs::path(file).stem().string();
    for (std::size_t s = 0; s < segments.size(); ++s) {
      Excerpt ex;
      ex.id = stem + "_" + std::to_string(s);
      ex.path = (fs::path(excerpt_dir) / (ex.id + ".wav")).string();
      write_wav(ex.path, segments[s]);
      excerpts.push_back(std::move(ex));
    }
  }
  std::cerr << "segmented " << ref_files.size() << " file(s) into " << excerpts.size()
            << " excerpt(s)\n";

  // One degradation job per (excerpt, codec, bitrate) plus anchors.
  struct Job {
    std::size_t excerpt;
    std::string codec;  // codec id, or "anchor35"/"anchor70"
    int bitrate = 0;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < excerpts.size(); ++i) {
    for (const auto& codec : tools.configured_codecs())
      for (int bitrate : tools.codec_bitrates(codec)) jobs.push_back({i, codec, bitrate});
    if (!args.no_anchors) {
      jobs.push_back({i, "anchor35", 0});
      jobs.push_back({i, "anchor70", 0});
    }
  }

  std::vector<std::optional<DatasetEntry>> produced(jobs.size());
  std::mutex log_mutex;
  std::atomic<std::size_t> next{0};
  auto run_job = [&](std::size_t j) {
    const Job& job = jobs[j];
    const Excerpt& ex = excerpts[job.excerpt];
    try {
      DatasetEntry entry;
      entry.ref_path = ex.path;
      entry.codec = job.codec;
      entry.content_type = args.content_type;
      entry.excerpt_id = ex.id;
      if (job.codec.rfind("anchor", 0) == 0) {
        const double fc = job.codec == "anchor35" ? 3500.0 : 7000.0;
        const std::string out_path =
            (fs::path(coded_dir) / (ex.id + "_" + job.codec + ".wav")).string();
        write_wav(out_path, lowpass(read_wav(ex.path), fc));
        entry.deg_path = out_path;
      } else {
        entry.deg_path = encode_decode(ex.path, job.codec, job.bitrate, coded_dir, tools);
        entry.bitrate_kbps = job.bitrate;
      }
      entry.label = label_with_oracle(ex.path, entry.deg_path, tools);
      produced[j] = std::move(entry);
    } catch (const std::exception& e) {
      std::lock_guard<std::mutex> lock(log_mutex);
      std::cerr << "skipping " << ex.id << " " << job.codec << "@" << job.bitrate
                << ": " << e.what() << "\n";
    }
  };

  const int n_workers =
      std::max(1, std::min<int>(args.workers, static_cast<int>(jobs.size())));
  if (n_workers <= 1) {
    for (std::size_t j = 0; j < jobs.size(); ++j) run_job(j);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_workers; ++t)
      pool.emplace_back([&]() {
        for (;;) {
          const std::size_t j = next.fetch_add(1);
          if (j >= jobs.size()) return;
          run_job(j);
        }
      });
    for (auto& th : pool) th.join();
  }

  Manifest manifest;
  for (const auto& ex : excerpts) {
    DatasetEntry self;
    self.ref_path = self.deg_path = ex.path;
    self.label = 5.0;
    self.codec = "none";
    self.content_type = args.content_type;
    self.excerpt_id = ex.id;
    manifest.entries.push_back(std::move(self));
  }
  for (auto& entry : produced)
    if (entry) manifest.entries.push_back(std::move(*entry));

  const std::string manifest_path =
      args.manifest_path.empty() ? (fs::path(args.out_dir) / "manifest.csv").string()
                                 : args.manifest_path;
  manifest.save(manifest_path);
  std::cout << "wrote " << manifest.entries.size() << " entries to " << manifest_path
            << "\n";
  return 0;
}

struct TrainArgs {
  std::string manifest_path;
  std::string out_dir;
  double learning_rate = 4e-5;
  int batch_size = 32;
  int epochs = 50;
  int folds = 5;
  double beta = 1.0;
  double dropout = 0.5;
  int width = 64;
  int workers = 1;
  bool verbose = false;
};

int cmd_train(const TrainArgs& args, const CommonOptions& common) {
  const Manifest manifest = Manifest::load(args.manifest_path);

  TrainConfig config;
  config.learning_rate = args.learning_rate;
  config.batch_size = args.batch_size;
  config.epochs = args.epochs;
  config.k_folds = args.folds;
  config.smooth_l1_beta = args.beta;
  config.seed = common.seed;
  config.model = ModelSpec::reduced(args.width);
  config.model.dropout = args.dropout;
  config.workers = args.workers;
  config.out_dir = args.out_dir;
  config.verbose = args.verbose;

  const auto results = train(manifest, config);
  bool any_ok = false;
  for (const auto& r : results) {
    if (r.failed) {
      std::cout << "fold " << r.fold_index << ": FAILED (" << r.error << ")\n";
    } else {
      any_ok = true;
      std::printf("fold %d: val_mse %.6f rp %.6f rs %.6f -> %s\n", r.fold_index,
                  r.final_val_mse, r.final_rp, r.final_rs, r.checkpoint_path.c_str());
    }
  }
  if (!any_ok) throw Error("every fold failed");
  return 0;
}

struct PredictArgs {
  std::string checkpoint;
  std::string manifest_path;
  std::string ref_path;
  std::string deg_path;
};

int cmd_predict(const PredictArgs& args) {
  LoadedCheckpoint ckpt = load_checkpoint(args.checkpoint);

  std::vector<std::pair<std::string, std::string>> pairs;
  if (!args.manifest_path.empty()) {
    const Manifest manifest = Manifest::load(args.manifest_path);
    for (const auto& e : manifest.entries) pairs.emplace_back(e.ref_path, e.deg_path);
  } else {
    if (args.ref_path.empty() || args.deg_path.empty())
      throw ArgumentError("predict needs --manifest or both --ref and --deg");
    pairs.emplace_back(args.ref_path, args.deg_path);
  }

  for (const auto& [ref, deg] : pairs) {
    const double mos = predict_file_pair(ckpt.model, ckpt.norm_stats, ref, deg);
    std::printf("%s\t%.6f\n", deg.c_str(), mos);
  }
  return 0;
}

struct EvaluateArgs {
  std::string checkpoint;
  std::string manifest_path;
  std::vector<std::string> groupings = {"overall"};
  std::string subjective_csv;
  std::string out_csv;
  bool no_anchors = false;
};

int cmd_evaluate(const EvaluateArgs& args) {
  const Manifest manifest = Manifest::load(args.manifest_path);

  EvaluateOptions options;
  options.groupings = args.groupings;
  options.include_anchors = !args.no_anchors;
  options.subjective_csv = args.subjective_csv;
  std::vector<std::string> warnings;
  options.warnings = &warnings;

  const EvaluationResult result = evaluate(args.checkpoint, manifest, options);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  std::cout << format_report_table(result.reports);
  if (result.ranking_violations)
    std::printf("ranking_violation_rate: %.6f\n", *result.ranking_violations);
  else
    std::cout << "ranking_violation_rate: absent (no bitrate ladders)\n";
  if (!args.out_csv.empty()) write_report_csv(args.out_csv, result.reports);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"InSE-Net coded-audio quality pipeline"};
  app.require_subcommand(1);

  CommonOptions common;

  std::string in_wav, out_file;
  CLI::App* spectrogram = app.add_subcommand(
      "spectrogram",
      "Write the Gammatone spectrogram of a WAV file as a GTSPEC1 container");
  spectrogram->add_option("input", in_wav, "48 kHz WAV input")
      ->required()
      ->check(CLI::ExistingFile);
  spectrogram->add_option("output", out_file, "GTSPEC1 output path")->required();
  add_common(spectrogram, common);

  SynthArgs synth_args;
  CLI::App* synth = app.add_subcommand(
      "synth", "Generate high-passed low-level noise and silence pairs (MOS 5)");
  synth->add_option("--out-dir", synth_args.out_dir, "Output directory")->required();
  synth->add_option("--manifest", synth_args.manifest_path,
                    "Manifest CSV to create or append to");
  synth->add_option("--colors", synth_args.colors, "Noise colors (white pink brown)")
      ->capture_default_str();
  synth->add_option("--count", synth_args.count, "Realizations per color")
      ->capture_default_str();
  synth->add_flag("--no-silence", synth_args.no_silence, "Skip the silence pair");
  synth->add_option("--level-db", synth_args.level_db, "Target RMS level in dBFS")
      ->capture_default_str();
  synth->add_option("--codec", synth_args.codec_id,
                    "Codec id for the degraded side (default: self-pair)");
  synth->add_option("--bitrate", synth_args.bitrate, "Bitrate for --codec");
  add_common(synth, common);

  BuildManifestArgs build_args;
  CLI::App* build = app.add_subcommand(
      "build-manifest", "Segment references, run codecs, label with the oracle");
  build->add_option("--refs", build_args.refs_dir, "Directory of reference WAVs")
      ->required()
      ->check(CLI::ExistingDirectory);
  build->add_option("--out-dir", build_args.out_dir, "Working/output directory")
      ->required();
  build->add_option("--manifest", build_args.manifest_path,
                    "Manifest path (default <out-dir>/manifest.csv)");
  build->add_option("--content-type", build_args.content_type,
                    "music|speech|noise|silence|mixed")
      ->capture_default_str();
  build->add_flag("--no-anchors", build_args.no_anchors,
                  "Skip the 3.5/7 kHz low-pass anchors");
  build->add_option("--workers", build_args.workers, "Parallel codec/oracle jobs")
      ->capture_default_str();
  add_common(build, common);

  TrainArgs train_args;
  CLI::App* train_cmd = app.add_subcommand(
      "train", "Smooth-L1/Adam training with 5-fold cross-validation (80/20 split)");
  train_cmd->add_option("--manifest", train_args.manifest_path, "Training manifest CSV")
      ->required()
      ->check(CLI::ExistingFile);
  train_cmd
      ->add_option("--out-dir", train_args.out_dir,
                   "Directory for checkpoints and fold reports")
      ->required();
  train_cmd->add_option("--lr", train_args.learning_rate, "Adam learning rate")
      ->capture_default_str();
  train_cmd->add_option("--batch-size", train_args.batch_size, "Batch size")
      ->capture_default_str();
  train_cmd->add_option("--epochs", train_args.epochs, "Training epochs")
      ->capture_default_str();
  train_cmd
      ->add_option("--folds", train_args.folds,
                   "Cross-validation folds (1 = train on everything)")
      ->capture_default_str();
  train_cmd->add_option("--beta", train_args.beta, "Smooth-L1 transition point")
      ->capture_default_str();
  train_cmd->add_option("--dropout", train_args.dropout, "Dropout rate after FC1/FC2")
      ->capture_default_str();
  train_cmd
      ->add_option("--width", train_args.width,
                   "Inception branch width; 64 is the full model")
      ->capture_default_str();
  train_cmd->add_option("--workers", train_args.workers, "Spectrogram workers")
      ->capture_default_str();
  train_cmd->add_flag("--verbose", train_args.verbose, "Per-epoch progress on stderr");
  add_common(train_cmd, common);

  PredictArgs predict_args;
  CLI::App* predict =
      app.add_subcommand("predict", "Score ref/deg pairs: prints deg_path<TAB>mos");
  predict->add_option("--checkpoint", predict_args.checkpoint, "Trained checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  predict->add_option("--manifest", predict_args.manifest_path,
                      "Manifest CSV of pairs to score");
  predict->add_option("--ref", predict_args.ref_path, "Single reference WAV");
  predict->add_option("--deg", predict_args.deg_path, "Single degraded WAV");
  add_common(predict, common);

  EvaluateArgs eval_args;
  CLI::App* evaluate_cmd = app.add_subcommand(
      "evaluate",
      "Correlation reports (R_p, R_s, MSE) against labels or subjective scores");
  evaluate_cmd->add_option("--checkpoint", eval_args.checkpoint, "Trained checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--manifest", eval_args.manifest_path, "Manifest CSV")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate_cmd
      ->add_option("--group", eval_args.groupings, "overall, codec and/or bitrate")
      ->capture_default_str();
  evaluate_cmd->add_option("--subjective", eval_args.subjective_csv,
                           "deg_path,score CSV replacing manifest labels");
  evaluate_cmd->add_option("--out", eval_args.out_csv, "Report CSV output path");
  evaluate_cmd->add_flag("--no-anchors", eval_args.no_anchors,
                         "Exclude anchor* codecs from the reports");
  add_common(evaluate_cmd, common);

  try {
    app.parse(argc, argv);
    if (spectrogram->parsed()) return cmd_spectrogram(in_wav, out_file);
    if (synth->parsed()) return cmd_synth(synth_args, common);
    if (build->parsed()) return cmd_build_manifest(build_args, common);
    if (train_cmd->parsed()) return cmd_train(train_args, common);
    if (predict->parsed()) return cmd_predict(predict_args);
    if (evaluate_cmd->parsed()) return cmd_evaluate(eval_args);
    return 2;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // prints help, exits 0
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
