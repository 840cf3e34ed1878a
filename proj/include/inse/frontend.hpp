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

#ifndef INSE_FRONTEND_HPP_
#define INSE_FRONTEND_HPP_

#include <string>
#include <vector>

#include "inse/audio.hpp"

namespace inse {

// Gammatone spectrogram parameters. Defaults are the 48 kHz coded-audio
// configuration: 80 ms frames hopped by 20 ms over 32 ERB-spaced bands
// from 50 Hz to 24 kHz.
struct GammatoneConfig {
  double window_ms = 80.0;
  double hop_ms = 20.0;
  int n_bands = 32;
  double f_min = 50.0;
  double f_max = 24000.0;
  float db_floor = -120.0f;  // dB clamp, well below audible content
  int filter_order = 4;

  int window_samples(int sample_rate) const;
  int hop_samples(int sample_rate) const;
  void validate(int sample_rate) const;
};

// Band-by-frame log-power matrix in dB.
struct Spectrogram {
  int n_bands = 0;
  int n_frames = 0;
  std::vector<float> values;          // row-major [band][frame]
  std::vector<double> band_centers;   // Hz, ascending
  double frame_hop = 0.0;             // seconds
  float db_floor = -120.0f;

  float& at(int band, int frame) { return values[static_cast<std::size_t>(band) * n_frames + frame]; }
  float at(int band, int frame) const { return values[static_cast<std::size_t>(band) * n_frames + frame]; }
  bool same_layout(const Spectrogram& other) const;
};

// Stacked reference/degraded model input, 2 x 32 x 360.
struct PairedInput {
  static constexpr int kChannels = 2;
  static constexpr int kBands = 32;
  static constexpr int kFrames = 360;
  static constexpr int kSize = kChannels * kBands * kFrames;

  std::vector<float> tensor = std::vector<float>(kSize, 0.0f);
  bool normalized = false;

  float& at(int ch, int band, int frame) {
    return tensor[(static_cast<std::size_t>(ch) * kBands + band) * kFrames + frame];
  }
  float at(int ch, int band, int frame) const {
    return tensor[(static_cast<std::size_t>(ch) * kBands + band) * kFrames + frame];
  }
};

// Per-band feature statistics estimated from a training set.
struct NormStats {
  std::vector<double> mean;
  std::vector<double> stddev;
};

// ERB-rate-scale band centers: n_bands frequencies equally spaced on the
// Glasberg-Moore ERB-number scale, starting exactly at f_min and staying
// strictly below f_max.
std::vector<double> erb_center_frequencies(int n_bands, double f_min, double f_max);

// ERB-number and equivalent rectangular bandwidth of a frequency.
double erb_number(double f_hz);
double erb_number_inverse(double erb);
double erb_bandwidth(double f_hz);

// Gammatone spectrogram of mono 48 kHz audio. Frames are Hann-windowed
// FFTs whose power bins are pooled with 4th-order gammatone magnitude
// responses at the ERB-spaced centers. Frame count is ceil(N / hop) via
// reflection padding, so 7.2 s at 48 kHz yields exactly 360 frames.
Spectrogram gammatone_spectrogram(const AudioBuffer& audio,
                                  const GammatoneConfig& config = {});

// Stacks a reference/degraded spectrogram pair into a model input.
// Inputs longer than 360 frames are center-cropped; shorter are rejected.
PairedInput pair_spectrograms(const Spectrogram& ref, const Spectrogram& deg);

// Applies per-band (x - mean) / std to both channels. Bands whose std is
// zero use std = 1. Normalizing twice is a StateError.
PairedInput normalize_pair(const PairedInput& pair, const NormStats& stats);

// GTSPEC1 binary container.
void write_spectrogram(const std::string& path, const Spectrogram& spec);
Spectrogram read_spectrogram(const std::string& path);

}  // namespace inse

#endif  // INSE_FRONTEND_HPP_
