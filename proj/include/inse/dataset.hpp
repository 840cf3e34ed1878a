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

#ifndef INSE_DATASET_HPP_
#define INSE_DATASET_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "inse/audio.hpp"

namespace inse {

// One (reference, degraded) record. `codec` is "none" for self-pairs;
// `excerpt_id` groups every degradation of one reference excerpt.
struct DatasetEntry {
  std::string ref_path;
  std::string deg_path;
  double label = 5.0;  // MOS in [1, 5]
  std::string codec = "none";
  std::optional<int> bitrate_kbps;
  std::string content_type = "music";  // music|speech|noise|silence|mixed
  std::string excerpt_id;

  bool is_ref_ref() const { return deg_path == ref_path || codec == "none"; }
  void validate() const;
};

struct Manifest {
  std::vector<DatasetEntry> entries;
  int schema_version = 1;

  // CSV header: ref_path,deg_path,label,codec,bitrate_kbps,content_type,excerpt_id
  // Loading validates every entry, forces ref-ref labels to 5.0, and (by
  // default) requires the referenced files to exist.
  static Manifest load(const std::string& path, bool check_paths = true);
  void save(const std::string& path) const;

  std::vector<std::string> excerpt_ids() const;  // sorted, unique
};

// One cross-validation fold: disjoint excerpt-id sets.
struct FoldSplit {
  int fold_index = 0;
  std::vector<std::string> train_ids;
  std::vector<std::string> val_ids;

  bool in_val(const std::string& id) const;
};

// Consecutive non-overlapping fixed-length segments; a trailing remainder
// shorter than length_s is dropped.
std::vector<AudioBuffer> segment_excerpts(const AudioBuffer& audio,
                                          double length_s = 7.2);

// Key-value tool configuration: codec/oracle executable paths and bitrate
// ladders. Lookup precedence: explicit override (CLI) > environment
// variable (INSE_<KEY> with dots mapped to underscores) > config file.
class ToolConfig {
 public:
  ToolConfig() = default;
  static ToolConfig load_file(const std::string& path);

  void set_override(const std::string& key, const std::string& value);
  std::optional<std::string> get(const std::string& key) const;

  std::optional<std::string> codec_exe(const std::string& codec_id) const;
  std::vector<int> codec_bitrates(const std::string& codec_id) const;
  std::vector<std::string> configured_codecs() const;
  std::optional<std::string> oracle_exe() const;
  std::optional<std::string> labels_csv() const;

  // Cached view of the labels CSV (ref_path,deg_path,mos).
  std::optional<double> csv_label(const std::string& ref_path,
                                  const std::string& deg_path) const;

 private:
  std::map<std::string, std::string> file_values_;
  std::map<std::string, std::string> overrides_;
  mutable bool labels_loaded_ = false;
  mutable std::map<std::pair<std::string, std::string>, double> labels_;
};

struct CommandResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr combined
};

// Runs `argv` through the shell with each argument quoted.
CommandResult run_command(const std::vector<std::string>& argv);
std::string shell_quote(const std::string& arg);

// Lag (in samples) that best aligns `sig` to `ref` by cross-correlation,
// searched over [-max_lag, max_lag]. Positive lag means `sig` is late.
long xcorr_lag(const std::vector<float>& ref, const std::vector<float>& sig,
               int max_lag);

// Shifts by `lag` and pads/trims to `target_len`.
std::vector<float> apply_lag(const std::vector<float>& sig, long lag,
                             std::size_t target_len);

inline constexpr int kCodecAlignMaxLag = 4096;

// Encodes and decodes `ref_path` through the configured codec executable
// (invoked as `exe ref out bitrate`), lag-aligns the decode to the
// reference and writes it, equal length, into workdir. Returns the path.
std::string encode_decode(const std::string& ref_path, const std::string& codec_id,
                          int bitrate_kbps, const std::string& workdir,
                          const ToolConfig& tools);

// MOS for a pair, from the oracle executable (`exe ref deg`, score parsed
// from the last numeric token of stdout) or the labels-CSV fallback.
// Identical ref/deg paths short-circuit to 5.0.
double label_with_oracle(const std::string& ref_path, const std::string& deg_path,
                         const ToolConfig& tools);

// Shuffles excerpt ids with `seed` and chunks them into k validation
// blocks. Every id lands in exactly one fold's validation set.
std::vector<FoldSplit> split_folds(const Manifest& manifest, int k, uint64_t seed);

}  // namespace inse

#endif  // INSE_DATASET_HPP_
