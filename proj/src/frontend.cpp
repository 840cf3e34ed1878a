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

#include "inse/frontend.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "inse/dsp.hpp"
#include "inse/errors.hpp"

namespace inse {

namespace {

// Glasberg-Moore constants for the ERB-rate scale.
constexpr double kErbScale = 21.4;
constexpr double kErbShift = 0.00437;

// Sample value in the reflection-padded domain. `i` indexes the padded
// signal; `pad_left` samples precede the first real sample.
float reflected(const std::vector<float>& x, long i, long pad_left) {
  long j = i - pad_left;
  const long n = static_cast<long>(x.size());
  if (j < 0) j = -j;
  if (j >= n) j = 2 * n - 2 - j;
  return x[static_cast<std::size_t>(j)];
}

}  // namespace

double erb_number(double f_hz) {
  return kErbScale * std::log10(1.0 + kErbShift * f_hz);
}

double erb_number_inverse(double erb) {
  return (std::pow(10.0, erb / kErbScale) - 1.0) / kErbShift;
}

double erb_bandwidth(double f_hz) {
  return 24.7 * (1.0 + 4.37 * f_hz / 1000.0);
}

std::vector<double> erb_center_frequencies(int n_bands, double f_min, double f_max) {
  if (n_bands < 2) throw ArgumentError("erb_center_frequencies: need at least 2 bands");
  if (f_min <= 0.0 || f_min >= f_max)
    throw ArgumentError("erb_center_frequencies: need 0 < f_min < f_max");

  const double e_min = erb_number(f_min);
  const double e_max = erb_number(f_max);
  const double step = (e_max - e_min) / n_bands;

  std::vector<double> centers(n_bands);
  centers[0] = f_min;
  for (int k = 1; k < n_bands; ++k)
    centers[k] = erb_number_inverse(e_min + step * k);
  return centers;
}

int GammatoneConfig::window_samples(int sample_rate) const {
  return static_cast<int>(std::lround(window_ms * sample_rate / 1000.0));
}

int GammatoneConfig::hop_samples(int sample_rate) const {
  return static_cast<int>(std::lround(hop_ms * sample_rate / 1000.0));
}

void GammatoneConfig::validate(int sample_rate) const {
  if (!(window_ms > hop_ms && hop_ms > 0))
    throw ArgumentError("gammatone config: need window_ms > hop_ms > 0");
  if (!(f_min > 0 && f_min < f_max && f_max <= sample_rate / 2.0))
    throw ArgumentError("gammatone config: need 0 < f_min < f_max <= fs/2");
  if (n_bands < 2) throw ArgumentError("gammatone config: need n_bands >= 2");
  if (filter_order < 1) throw ArgumentError("gammatone config: bad filter order");
}

bool Spectrogram::same_layout(const Spectrogram& other) const {
  return n_bands == other.n_bands && n_frames == other.n_frames &&
         band_centers == other.band_centers && frame_hop == other.frame_hop;
}

Spectrogram gammatone_spectrogram(const AudioBuffer& audio,
                                  const GammatoneConfig& config) {
  audio.validate();
  if (audio.sample_rate != kPipelineSampleRate)
    throw ArgumentError("gammatone_spectrogram: expected 48 kHz input, got " +
                        std::to_string(audio.sample_rate) + " Hz");
  if (!audio.mono())
    throw ArgumentError("gammatone_spectrogram: expected mono input");
  config.validate(audio.sample_rate);

  const int fs = audio.sample_rate;
  const int window = config.window_samples(fs);
  const int hop = config.hop_samples(fs);
  const std::vector<float>& x = audio.samples[0];
  const long n = static_cast<long>(x.size());
  if (n < window)
    throw ArgumentError("gammatone_spectrogram: signal shorter than one window");

  const int n_frames = static_cast<int>((n + hop - 1) / hop);
  // Reflection padding: (window - hop) / 2 on the left, whatever remains
  // to complete the last frame on the right.
  const long pad_left = (window - hop) / 2;

  const std::size_t fft_n = dsp::next_pow2(window);
  const std::size_t n_bins = fft_n / 2 + 1;
  const std::vector<double> win = dsp::hann_window(window);
  double win_sum = 0.0;
  for (double w : win) win_sum += w;
  const double power_scale = 1.0 / (win_sum * win_sum);

  Spectrogram spec;
  spec.n_bands = config.n_bands;
  spec.n_frames = n_frames;
  spec.band_centers = erb_center_frequencies(config.n_bands, config.f_min, config.f_max);
  spec.frame_hop = config.hop_ms / 1000.0;
  spec.db_floor = config.db_floor;
  spec.values.assign(static_cast<std::size_t>(config.n_bands) * n_frames, config.db_floor);

  // Per-band spectral weights: squared magnitude of the order-n gammatone
  // response, |H(f)|^2 = (1 + ((f - fc) / b)^2)^-order with b = 1.019 ERB(fc).
  std::vector<std::vector<double>> weights(config.n_bands,
                                           std::vector<double>(n_bins));
  for (int k = 0; k < config.n_bands; ++k) {
    const double fc = spec.band_centers[k];
    const double b = 1.019 * erb_bandwidth(fc);
    for (std::size_t i = 0; i < n_bins; ++i) {
      const double f = static_cast<double>(i) * fs / static_cast<double>(fft_n);
      const double u = (f - fc) / b;
      weights[k][i] = std::pow(1.0 + u * u, -config.filter_order);
    }
  }

  std::vector<double> frame(fft_n, 0.0);
  std::vector<double> power(n_bins);
  for (int t = 0; t < n_frames; ++t) {
    const long start = static_cast<long>(t) * hop;
    std::fill(frame.begin(), frame.end(), 0.0);
    for (int i = 0; i < window; ++i)
      frame[i] = win[i] * reflected(x, start + i, pad_left);

    const auto bins = dsp::rfft(frame);
    for (std::size_t i = 0; i < n_bins; ++i) {
      const double one_sided = (i == 0 || i == n_bins - 1) ? 1.0 : 2.0;
      power[i] = one_sided * std::norm(bins[i]) * power_scale;
    }

    for (int k = 0; k < config.n_bands; ++k) {
      double energy = 0.0;
      const auto& w = weights[k];
      for (std::size_t i = 0; i < n_bins; ++i) energy += w[i] * power[i];
      float db = config.db_floor;
      if (energy > 0.0)
        db = std::max(config.db_floor, static_cast<float>(10.0 * std::log10(energy)));
      spec.at(k, t) = db;
    }
  }
  return spec;
}

PairedInput pair_spectrograms(const Spectrogram& ref, const Spectrogram& deg) {
  if (!ref.same_layout(deg))
    throw PairingError("pair_spectrograms: spectrogram shapes/configs differ");
  if (ref.n_bands != PairedInput::kBands)
    throw PairingError("pair_spectrograms: expected " +
                       std::to_string(PairedInput::kBands) + " bands, got " +
                       std::to_string(ref.n_bands));
  if (ref.n_frames < PairedInput::kFrames)
    throw PairingError("pair_spectrograms: need at least " +
                       std::to_string(PairedInput::kFrames) + " frames, got " +
                       std::to_string(ref.n_frames));

  const int offset = (ref.n_frames - PairedInput::kFrames) / 2;  // center crop
  PairedInput pair;
  for (int b = 0; b < PairedInput::kBands; ++b) {
    for (int t = 0; t < PairedInput::kFrames; ++t) {
      pair.at(0, b, t) = ref.at(b, offset + t);
      pair.at(1, b, t) = deg.at(b, offset + t);
    }
  }
  pair.normalized = false;
  return pair;
}

PairedInput normalize_pair(const PairedInput& pair, const NormStats& stats) {
  if (pair.normalized)
    throw StateError("normalize_pair: input is already normalized");
  if (stats.mean.size() != PairedInput::kBands ||
      stats.stddev.size() != PairedInput::kBands)
    throw ArgumentError("normalize_pair: stats must cover all bands");

  PairedInput out = pair;
  for (int b = 0; b < PairedInput::kBands; ++b) {
    const double mean = stats.mean[b];
    const double sd = stats.stddev[b] > 0.0 ? stats.stddev[b] : 1.0;
    for (int ch = 0; ch < PairedInput::kChannels; ++ch) {
      for (int t = 0; t < PairedInput::kFrames; ++t) {
        out.at(ch, b, t) = static_cast<float>((pair.at(ch, b, t) - mean) / sd);
      }
    }
  }
  out.normalized = true;
  return out;
}

void write_spectrogram(const std::string& path, const Spectrogram& spec) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create spectrogram file: " + path);
  out.write("GTSPEC1", 7);
  const uint32_t bands = static_cast<uint32_t>(spec.n_bands);
  const uint32_t frames = static_cast<uint32_t>(spec.n_frames);
  out.write(reinterpret_cast<const char*>(&bands), 4);
  out.write(reinterpret_cast<const char*>(&frames), 4);
  out.write(reinterpret_cast<const char*>(spec.band_centers.data()),
            static_cast<std::streamsize>(spec.band_centers.size() * sizeof(double)));
  out.write(reinterpret_cast<const char*>(spec.values.data()),
            static_cast<std::streamsize>(spec.values.size() * sizeof(float)));
  if (!out) throw IoError("short write: " + path);
}

Spectrogram read_spectrogram(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open spectrogram file: " + path);
  char magic[7];
  in.read(magic, 7);
  if (!in || std::memcmp(magic, "GTSPEC1", 7) != 0)
    throw IoError("not a GTSPEC1 file: " + path);
  uint32_t bands = 0, frames = 0;
  in.read(reinterpret_cast<char*>(&bands), 4);
  in.read(reinterpret_cast<char*>(&frames), 4);
  if (!in || bands == 0 || frames == 0)
    throw IoError("bad GTSPEC1 header: " + path);

  Spectrogram spec;
  spec.n_bands = static_cast<int>(bands);
  spec.n_frames = static_cast<int>(frames);
  spec.frame_hop = GammatoneConfig{}.hop_ms / 1000.0;
  spec.band_centers.resize(bands);
  spec.values.resize(static_cast<std::size_t>(bands) * frames);
  in.read(reinterpret_cast<char*>(spec.band_centers.data()),
          static_cast<std::streamsize>(bands * sizeof(double)));
  in.read(reinterpret_cast<char*>(spec.values.data()),
          static_cast<std::streamsize>(spec.values.size() * sizeof(float)));
  if (!in) throw IoError("truncated GTSPEC1 file: " + path);
  return spec;
}

}  // namespace inse
