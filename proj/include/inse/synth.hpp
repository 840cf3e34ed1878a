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

#ifndef INSE_SYNTH_HPP_
#define INSE_SYNTH_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "inse/audio.hpp"
#include "inse/dataset.hpp"

namespace inse {

enum class NoiseColor { kWhite, kPink, kBrown };

NoiseColor noise_color_from_string(const std::string& name);
std::string to_string(NoiseColor color);

// One synthetic-noise recipe: color, length, RNG seed, target RMS level,
// optional high-pass cутoff applied before leveling.
struct NoiseSpec {
  NoiseColor color = NoiseColor::kWhite;
  double duration_s = 7.2;
  uint64_t seed = 0;
  double target_level_db = -109.0;  // dBFS RMS
  std::optional<double> highpass_fc;

  void validate() const;
};

// Deterministic mono 48 kHz colored noise. White is iid Gaussian, pink is
// FFT-domain 1/sqrt(f) shaping, brown is an integrated white walk with the
// mean removed. The optional high-pass runs before the final leveling, so
// the output RMS lands exactly on target_level_db.
AudioBuffer generate_noise(const NoiseSpec& spec);

// Zero-phase 8th-order Butterworth high-pass / low-pass (the low-pass is
// what MUSHRA anchors are made of).
AudioBuffer highpass(const AudioBuffer& audio, double fc_hz);
AudioBuffer lowpass(const AudioBuffer& audio, double fc_hz);

// Rescales so the RMS level equals level_db dBFS. Silent input cannot be
// scaled and raises ArgumentError.
AudioBuffer scale_to_level(const AudioBuffer& audio, double level_db);

struct SyntheticPairOptions {
  std::string codec_id;       // external codec for the degraded side; empty = self-pair
  int bitrate_kbps = 0;       // used when codec_id is set
  const ToolConfig* tools = nullptr;
};

// Writes 7.2 s ref/deg WAV pairs for the given noise recipes (plus digital
// silence when requested) and returns their manifest entries, all labeled
// MOS 5. Noise is forced through the 10 kHz high-pass and levels at or
// below -108 dBFS before it is written.
std::vector<DatasetEntry> make_synthetic_pairs(const std::vector<NoiseSpec>& specs,
                                               bool include_silence,
                                               const std::string& out_dir,
                                               const SyntheticPairOptions& options = {});

}  // namespace inse

#endif  // INSE_SYNTH_HPP_
