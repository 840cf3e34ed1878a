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

#include "inse/training.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <mutex>
#include <thread>

#include "inse/errors.hpp"
#include "inse/evaluation.hpp"

namespace fs = std::filesystem;

namespace inse {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Spectrogram pairs keyed by (ref, deg); entries sharing files share work.
class PairCache {
 public:
  explicit PairCache(const GammatoneConfig& config) : config_(config) {}

  void preload(const std::vector<DatasetEntry>& entries, int workers) {
    std::vector<std::pair<std::string, std::string>> keys;
    for (const auto& e : entries) {
      const auto key = std::make_pair(e.ref_path, e.deg_path);
      if (!cache_.count(key)) {
        cache_.emplace(key, PairedInput{});
        keys.push_back(key);
      }
    }
    const int n_workers = std::max(1, std::min<int>(workers, static_cast<int>(keys.size())));
    if (n_workers == 1) {
      for (const auto& key : keys)
        cache_[key] = pair_from_files(key.first, key.second, config_);
      return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::atomic<bool> failed{false};
    std::string error;
    std::mutex error_mu;
    for (int t = 0; t < n_workers; ++t) {
      pool.emplace_back([&]() {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= keys.size() || failed.load()) return;
          try {
            cache_[keys[i]] = pair_from_files(keys[i].first, keys[i].second, config_);
          } catch (const std::exception& e) {
            std::lock_guard<std::mutex> lock(error_mu);
            failed = true;
            if (error.empty()) error = e.what();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (failed) throw IoError("pair preload failed: " + error);
  }

  const PairedInput& get(const DatasetEntry& e) const {
    return cache_.at({e.ref_path, e.deg_path});
  }

 private:
  GammatoneConfig config_;
  std::map<std::pair<std::string, std::string>, PairedInput> cache_;
};

void fill_batch(nn::Tensor<float>& x, const std::vector<const PairedInput*>& pairs,
                const NormStats& stats) {
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const PairedInput normalized = normalize_pair(*pairs[i], stats);
    std::copy(normalized.tensor.begin(), normalized.tensor.end(),
              x.v.begin() + i * static_cast<std::size_t>(PairedInput::kSize));
  }
}

std::string format_metric(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

void TrainConfig::validate() const {
  if (learning_rate <= 0) throw ArgumentError("train config: learning rate must be > 0");
  if (batch_size < 1) throw ArgumentError("train config: batch size must be >= 1");
  if (epochs < 1) throw ArgumentError("train config: epochs must be >= 1");
  if (smooth_l1_beta <= 0) throw ArgumentError("train config: beta must be > 0");
  if (k_folds < 1) throw ArgumentError("train config: need at least one fold");
}

double smooth_l1(const std::vector<double>& pred, const std::vector<double>& target,
                 double beta) {
  if (beta <= 0) throw ArgumentError("smooth_l1: beta must be > 0");
  if (pred.size() != target.size() || pred.empty())
    throw ArgumentError("smooth_l1: prediction/target size mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = std::abs(pred[i] - target[i]);
    total += d < beta ? 0.5 * d * d / beta : d - 0.5 * beta;
  }
  return total / static_cast<double>(pred.size());
}

NormStats compute_norm_stats_from_pairs(const std::vector<const PairedInput*>& pairs) {
  if (pairs.empty()) throw ArgumentError("compute_norm_stats: empty training set");
  const int bands = PairedInput::kBands;
  std::vector<double> mean(bands, 0.0), m2(bands, 0.0);
  std::vector<std::size_t> count(bands, 0);

  for (const PairedInput* pair : pairs) {
    for (int ch = 0; ch < PairedInput::kChannels; ++ch) {
      for (int b = 0; b < bands; ++b) {
        for (int t = 0; t < PairedInput::kFrames; ++t) {
          const double v = pair->at(ch, b, t);
          ++count[b];
          const double delta = v - mean[b];
          mean[b] += delta / static_cast<double>(count[b]);
          m2[b] += delta * (v - mean[b]);
        }
      }
    }
  }

  NormStats stats;
  stats.mean.resize(bands);
  stats.stddev.resize(bands);
  for (int b = 0; b < bands; ++b) {
    stats.mean[b] = mean[b];
    stats.stddev[b] = std::sqrt(m2[b] / static_cast<double>(count[b]));
  }
  return stats;
}

NormStats compute_norm_stats(const std::vector<DatasetEntry>& train_entries,
                             const GammatoneConfig& frontend) {
  if (train_entries.empty())
    throw ArgumentError("compute_norm_stats: empty training set");
  PairCache cache(frontend);
  cache.preload(train_entries, 1);
  std::vector<const PairedInput*> pairs;
  pairs.reserve(train_entries.size());
  for (const auto& e : train_entries) pairs.push_back(&cache.get(e));
  return compute_norm_stats_from_pairs(pairs);
}

PairedInput pair_from_files(const std::string& ref_path, const std::string& deg_path,
                            const GammatoneConfig& config) {
  AudioBuffer ref = read_wav(ref_path);
  AudioBuffer deg = read_wav(deg_path);
  if (ref.channel_count() == 2) ref = downmix_mid(ref);
  if (deg.channel_count() == 2) deg = downmix_mid(deg);
  const std::size_t n = std::min(ref.frame_count(), deg.frame_count());
  ref.samples[0].resize(n);
  deg.samples[0].resize(n);
  return pair_spectrograms(gammatone_spectrogram(ref, config),
                           gammatone_spectrogram(deg, config));
}

std::vector<FoldResult> train(const Manifest& manifest, const TrainConfig& config) {
  config.validate();
  // k_folds == 1 is memorization mode: train and validate on everything.
  std::vector<FoldSplit> folds;
  if (config.k_folds == 1) {
    FoldSplit all;
    all.train_ids = manifest.excerpt_ids();
    all.val_ids = all.train_ids;
    folds.push_back(all);
  } else {
    folds = split_folds(manifest, config.k_folds, config.seed);
  }
  if (!config.out_dir.empty()) fs::create_directories(config.out_dir);

  PairCache cache(config.frontend);
  cache.preload(manifest.entries, config.workers);

  std::vector<FoldResult> results;
  for (int f = 0; f < config.k_folds; ++f) {
    const FoldSplit& fold = folds[f];
    FoldResult result;
    result.fold_index = f;
    try {
      std::vector<DatasetEntry> train_entries, val_entries;
      for (const auto& e : manifest.entries) {
        if (config.k_folds == 1) {
          train_entries.push_back(e);
          val_entries.push_back(e);
        } else if (fold.in_val(e.excerpt_id)) {
          val_entries.push_back(e);
        } else {
          train_entries.push_back(e);
        }
      }
      if (train_entries.empty() || val_entries.empty())
        throw ArgumentError("fold " + std::to_string(f) + " has an empty split");

      std::vector<const PairedInput*> train_pairs;
      train_pairs.reserve(train_entries.size());
      for (const auto& e : train_entries) {
        if (config.on_entry_used) config.on_entry_used(e, DataUse::kNormStats);
        train_pairs.push_back(&cache.get(e));
      }
      const NormStats stats = compute_norm_stats_from_pairs(train_pairs);

      Model<float> model = build_model<float>(
          config.model, config.seed + 1000003ULL * static_cast<uint64_t>(f) + 1,
          /*validate=*/false);
      nn::Adam<float> optimizer(model.params(), config.learning_rate);

      std::vector<double> val_labels;
      for (const auto& e : val_entries) val_labels.push_back(e.label);

      for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::vector<std::size_t> order(train_entries.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::seed_seq seq{static_cast<uint32_t>(config.seed),
                          static_cast<uint32_t>(config.seed >> 32),
                          static_cast<uint32_t>(f), static_cast<uint32_t>(epoch)};
        std::mt19937_64 shuffle_rng(seq);
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        double loss_sum = 0.0;
        std::size_t loss_count = 0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(config.batch_size)) {
          const std::size_t end =
              std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
          const int bsize = static_cast<int>(end - start);

          std::vector<const PairedInput*> batch;
          std::vector<double> targets;
          batch.reserve(bsize);
          for (std::size_t i = start; i < end; ++i) {
            const DatasetEntry& e = train_entries[order[i]];
            if (config.on_entry_used) config.on_entry_used(e, DataUse::kGradient);
            batch.push_back(&cache.get(e));
            targets.push_back(e.label);
          }

          nn::Tensor<float> x(bsize, PairedInput::kChannels, PairedInput::kBands,
                              PairedInput::kFrames);
          fill_batch(x, batch, stats);
          nn::Tensor<float> y = model.forward(x, /*train=*/true);

          std::vector<double> preds(bsize);
          for (int i = 0; i < bsize; ++i) preds[i] = y.v[i];
          const double loss = smooth_l1(preds, targets, config.smooth_l1_beta);
          loss_sum += loss * bsize;
          loss_count += bsize;

          nn::Tensor<float> grad(bsize, 1, 1, 1);
          for (int i = 0; i < bsize; ++i) {
            const double d = preds[i] - targets[i];
            const double g = std::abs(d) < config.smooth_l1_beta
                                 ? d / config.smooth_l1_beta
                                 : (d > 0 ? 1.0 : -1.0);
            grad.v[i] = static_cast<float>(g / bsize);
          }
          optimizer.zero_grad();
          model.net.backward(grad);
          optimizer.step();
        }

        // Validation pass in eval mode; metrics use clamped inference scores.
        std::vector<double> val_raw, val_scores;
        for (std::size_t start = 0; start < val_entries.size();
             start += static_cast<std::size_t>(config.batch_size)) {
          const std::size_t end = std::min(
              val_entries.size(), start + static_cast<std::size_t>(config.batch_size));
          std::vector<const PairedInput*> batch;
          for (std::size_t i = start; i < end; ++i) {
            if (config.on_entry_used)
              config.on_entry_used(val_entries[i], DataUse::kValidation);
            batch.push_back(&cache.get(val_entries[i]));
          }
          nn::Tensor<float> x(static_cast<int>(batch.size()), PairedInput::kChannels,
                              PairedInput::kBands, PairedInput::kFrames);
          fill_batch(x, batch, stats);
          nn::Tensor<float> y = model.forward(x, /*train=*/false);
          for (std::size_t i = 0; i < batch.size(); ++i) {
            val_raw.push_back(y.v[i]);
            val_scores.push_back(std::clamp(static_cast<double>(y.v[i]),
                                            config.model.clamp_min,
                                            config.model.clamp_max));
          }
        }

        EpochRow row;
        row.epoch = epoch;
        row.train_loss = loss_sum / static_cast<double>(loss_count);
        row.val_loss = smooth_l1(val_raw, val_labels, config.smooth_l1_beta);
        double mse = 0.0;
        for (std::size_t i = 0; i < val_scores.size(); ++i) {
          const double d = val_scores[i] - val_labels[i];
          mse += d * d;
        }
        row.val_mse = mse / static_cast<double>(val_scores.size());
        try {
          row.val_rp = pearson(val_scores, val_labels);
          row.val_rs = spearman(val_scores, val_labels);
        } catch (const UndefinedCorrelationError&) {
          row.val_rp = kNaN;
          row.val_rs = kNaN;
        }
        result.epochs.push_back(row);
        if (config.verbose) {
          std::cerr << "fold " << f << " epoch " << epoch << ": train "
                    << format_metric(row.train_loss) << " val "
                    << format_metric(row.val_loss) << " rp "
                    << format_metric(row.val_rp) << "\n";
        }
      }

      const EpochRow& last = result.epochs.back();
      result.final_val_mse = last.val_mse;
      result.final_rp = last.val_rp;
      result.final_rs = last.val_rs;

      if (!config.out_dir.empty()) {
        CheckpointMeta meta;
        meta.seed = config.seed;
        meta.epochs = config.epochs;
        meta.fold_index = f;
        meta.learning_rate = config.learning_rate;
        meta.batch_size = config.batch_size;
        result.checkpoint_path =
            (fs::path(config.out_dir) / ("fold_" + std::to_string(f) + ".ckpt")).string();
        save_checkpoint(result.checkpoint_path, model, stats, meta);
      }
    } catch (const std::exception& e) {
      result.failed = true;
      result.error = e.what();
      std::cerr << "fold " << f << " failed: " << e.what() << "\n";
    }
    results.push_back(std::move(result));
  }

  if (!config.out_dir.empty()) {
    write_fold_report((fs::path(config.out_dir) / "fold_report.csv").string(), results);
    write_fold_summary((fs::path(config.out_dir) / "summary.txt").string(), results);
  }
  return results;
}

void write_fold_report(const std::string& csv_path,
                       const std::vector<FoldResult>& folds) {
  std::ofstream out(csv_path);
  if (!out) throw IoError("cannot create fold report: " + csv_path);
  out << "fold,epoch,train_loss,val_loss,val_mse,val_rp,val_rs\n";
  for (const auto& fold : folds) {
    for (const auto& row : fold.epochs) {
      out << fold.fold_index << ',' << row.epoch << ','
          << format_metric(row.train_loss) << ',' << format_metric(row.val_loss) << ','
          << format_metric(row.val_mse) << ',' << format_metric(row.val_rp) << ','
          << format_metric(row.val_rs) << "\n";
    }
  }
}

void write_fold_summary(const std::string& txt_path,
                        const std::vector<FoldResult>& folds) {
  std::ofstream out(txt_path);
  if (!out) throw IoError("cannot create fold summary: " + txt_path);

  std::size_t max_epochs = 0;
  for (const auto& f : folds)
    if (!f.failed) max_epochs = std::max(max_epochs, f.epochs.size());

  out << "per-epoch means over folds\n";
  out << "epoch mean_val_rp mean_val_mse\n";
  for (std::size_t e = 0; e < max_epochs; ++e) {
    double rp = 0.0, mse = 0.0;
    int n = 0;
    for (const auto& f : folds) {
      if (f.failed || e >= f.epochs.size()) continue;
      if (!std::isnan(f.epochs[e].val_rp)) {
        rp += f.epochs[e].val_rp;
        mse += f.epochs[e].val_mse;
        ++n;
      }
    }
    out << e << ' ' << (n ? format_metric(rp / n) : "nan") << ' '
        << (n ? format_metric(mse / n) : "nan") << "\n";
  }
  out << "\n";
  for (const auto& f : folds) {
    if (f.failed) {
      out << "fold " << f.fold_index << ": FAILED (" << f.error << ")\n";
    } else {
      out << "fold " << f.fold_index << ": val_mse " << format_metric(f.final_val_mse)
          << " rp " << format_metric(f.final_rp) << " rs " << format_metric(f.final_rs)
          << " checkpoint " << f.checkpoint_path << "\n";
    }
  }
}

}  // namespace inse
