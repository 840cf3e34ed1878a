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

#ifndef INSE_TRAINING_HPP_
#define INSE_TRAINING_HPP_

#include <functional>
#include <string>
#include <vector>

#include "inse/dataset.hpp"
#include "inse/frontend.hpp"
#include "inse/model.hpp"

namespace inse {

// Which pipeline stage touched an entry; exposed so tests can prove the
// validation split never leaks into statistics or gradients.
enum class DataUse { kNormStats, kGradient, kValidation };

struct TrainConfig {
  double learning_rate = 4e-5;
  int batch_size = 32;
  int epochs = 50;
  double smooth_l1_beta = 1.0;
  int k_folds = 5;
  uint64_t seed = 0;
  ModelSpec model = ModelSpec::standard();
  GammatoneConfig frontend;
  int workers = 1;
  std::string out_dir;  // checkpoints + fold reports; empty = keep in memory
  bool verbose = false;
  std::function<void(const DatasetEntry&, DataUse)> on_entry_used;

  void validate() const;
};

struct EpochRow {
  int epoch = 0;
  double train_loss = 0;
  double val_loss = 0;
  double val_mse = 0;
  double val_rp = 0;  // NaN when undefined
  double val_rs = 0;
};

struct FoldResult {
  int fold_index = 0;
  std::vector<EpochRow> epochs;
  double final_val_mse = 0;
  double final_rp = 0;
  double final_rs = 0;
  std::string checkpoint_path;
  bool failed = false;
  std::string error;
};

// Smooth L1: 0.5 d^2 / beta inside |d| < beta, |d| - 0.5 beta outside,
// averaged over the batch.
double smooth_l1(const std::vector<double>& pred, const std::vector<double>& target,
                 double beta);

// Per-band mean/std over every frame of every (ref and deg) channel.
NormStats compute_norm_stats_from_pairs(const std::vector<const PairedInput*>& pairs);
NormStats compute_norm_stats(const std::vector<DatasetEntry>& train_entries,
                             const GammatoneConfig& frontend);

// Loads a ref/deg pair from disk into an (unnormalized) model input.
// Stereo is downmixed to the mid signal; mismatched lengths are trimmed to
// the shorter one.
PairedInput pair_from_files(const std::string& ref_path, const std::string& deg_path,
                            const GammatoneConfig& config);

// k-fold cross-validated training. Per fold: normalization statistics come
// from the training split only, the model trains config.epochs epochs of
// smooth-L1/Adam, and a checkpoint (weights + stats + metadata) lands in
// out_dir. A failing fold is recorded and the remaining folds continue.
std::vector<FoldResult> train(const Manifest& manifest, const TrainConfig& config);

// Fold report CSV: fold,epoch,train_loss,val_loss,val_mse,val_rp,val_rs.
void write_fold_report(const std::string& csv_path,
                       const std::vector<FoldResult>& folds);
void write_fold_summary(const std::string& txt_path,
                        const std::vector<FoldResult>& folds);

}  // namespace inse

#endif  // INSE_TRAINING_HPP_
