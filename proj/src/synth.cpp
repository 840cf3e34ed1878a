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

#include "inse/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include "inse/dsp.hpp"
#include "inse/errors.hpp"

namespace fs = std::filesystem;

namespace inse {

namespace {

constexpr int kHighpassOrder = 8;
constexpr double kSynthHighpassHz = 10000.0;
// Strictly under the -108 dBFS ceiling so 24-bit quantization cannot push
// the written file back over it.
constexpr double kSynthLevelDb = -109.0;

std::vector<double> white_samples(std::size_t n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> x(n);
  for (double& v : x) v = gauss(rng);
  return x;
}

}  // namespace

NoiseColor noise_color_from_string(const std::string& name) {
  if (name == "white") return NoiseColor::kWhite;
  if (name == "pink") return NoiseColor::kPink;
  if (name == "brown") return NoiseColor::kBrown;
  throw ArgumentError("unknown noise color '" + name + "'");
}

std::string to_string(NoiseColor color) {
  switch (color) {
    case NoiseColor::kWhite: return "white";
    case NoiseColor::kPink: return "pink";
    case NoiseColor::kBrown: return "brown";
  }
  throw ArgumentError("unknown noise color");
}

void NoiseSpec::validate() const {
  if (duration_s <= 0) throw ArgumentError("noise spec: duration must be positive");
  if (target_level_db > 0)
    throw ArgumentError("noise spec: target level must be <= 0 dBFS");
  if (highpass_fc && (*highpass_fc <= 0 || *highpass_fc >= kPipelineSampleRate / 2))
    throw ArgumentError("noise spec: high-pass cutoff out of range");
}

AudioBuffer generate_noise(const NoiseSpec& spec) {
  spec.validate();
  const std::size_t n =
      static_cast<std::size_t>(std::llround(spec.duration_s * kPipelineSampleRate));

  std::vector<double> x;
  switch (spec.color) {
    case NoiseColor::kWhite:
      x = white_samples(n, spec.seed);
      break;
    case NoiseColor::kPink: {
      // Shape a white spectrum by 1/sqrt(f): -3 dB per octave in power.
      const std::size_t m = dsp::next_pow2(n);
      std::vector<double> w = white_samples(m, spec.seed);
      auto bins = dsp::rfft(w);
      bins[0] = 0.0;
      for (std::size_t k = 1; k < bins.size(); ++k) {
        const double f = static_cast<double>(k) * kPipelineSampleRate /
                         static_cast<double>(m);
        bins[k] /= std::sqrt(f);
      }
      x = dsp::irfft(bins, m);
      x.resize(n);
      break;
    }
    case NoiseColor::kBrown: {
      // Integrated white walk, -6 dB per octave; remove the DC drift.
      x = white_samples(n, spec.seed);
      double acc = 0.0;
      for (double& v : x) {
        acc += v;
        v = acc;
      }
      double mean = 0.0;
      for (double v : x) mean += v;
      mean /= static_cast<double>(n);
      for (double& v : x) v -= mean;
      break;
    }
  }

  AudioBuffer audio(kPipelineSampleRate, n, 1);
  for (std::size_t i = 0; i < n; ++i)
    audio.samples[0][i] = static_cast<float>(x[i]);

  if (spec.highpass_fc) audio = highpass(audio, *spec.highpass_fc);
  return scale_to_level(audio, spec.target_level_db);
}

AudioBuffer highpass(const AudioBuffer& audio, double fc_hz) {
  audio.validate();
  if (fc_hz <= 0 || fc_hz >= audio.sample_rate / 2.0)
    throw ArgumentError("highpass: cutoff must lie in (0, fs/2)");
  const auto sections =
      dsp::butterworth_highpass(kHighpassOrder, fc_hz, audio.sample_rate);
  AudioBuffer out = audio;
  for (auto& channel : out.samples) channel = dsp::filtfilt(sections, channel);
  return out;
}

AudioBuffer lowpass(const AudioBuffer& audio, double fc_hz) {
  audio.validate();
  if (fc_hz <= 0 || fc_hz >= audio.sample_rate / 2.0)
    throw ArgumentError("lowpass: cutoff must lie in (0, fs/2)");
  const auto sections =
      dsp::butterworth_lowpass(kHighpassOrder, fc_hz, audio.sample_rate);
  AudioBuffer out = audio;
  for (auto& channel : out.samples) channel = dsp::filtfilt(sections, channel);
  return out;
}

AudioBuffer scale_to_level(const AudioBuffer& audio, double level_db) {
  audio.validate();
  double acc = 0.0;
  std::size_t count = 0;
  for (const auto& channel : audio.samples) {
    for (float s : channel) acc += static_cast<double>(s) * s;
    count += channel.size();
  }
  if (count == 0 || acc <= 0.0)
    throw ArgumentError("scale_to_level: cannot scale a silent signal");
  const double current_db = linear_to_db(std::sqrt(acc / static_cast<double>(count)));
  const double gain = db_to_linear(level_db - current_db);

  AudioBuffer out = audio;
  for (auto& channel : out.samples)
    for (float& s : channel) s = static_cast<float>(s * gain);
  return out;
}

std::vector<DatasetEntry> make_synthetic_pairs(const std::vector<NoiseSpec>& specs,
                                               bool include_silence,
                                               const std::string& out_dir,
                                               const SyntheticPairOptions& options) {
  fs::create_directories(out_dir);

  struct Item {
    std::string name;
    std::string content_type;
    AudioBuffer audio;
  };
  std::vector<Item> items;

  int index = 0;
  for (NoiseSpec spec : specs) {
    spec.duration_s = 7.2;
    if (!spec.highpass_fc) spec.highpass_fc = kSynthHighpassHz;
    spec.target_level_db = std::min(spec.target_level_db, kSynthLevelDb);
    items.push_back({to_string(spec.color) + "_" + std::to_string(index++) + "_s" +
                         std::to_string(spec.seed),
                     "noise", generate_noise(spec)});
  }
  if (include_silence) {
    AudioBuffer silence(kPipelineSampleRate,
                        static_cast<std::size_t>(std::llround(7.2 * kPipelineSampleRate)), 1);
    items.push_back({"silence", "silence", std::move(silence)});
  }

  std::vector<DatasetEntry> entries;
  entries.reserve(items.size());
  for (const auto& item : items) {
    const std::string ref_path = (fs::path(out_dir) / (item.name + "_ref.wav")).string();
    write_wav(ref_path, item.audio, WavFormat::kPcm24);

    DatasetEntry entry;
    entry.ref_path = ref_path;
    entry.label = 5.0;
    entry.content_type = item.content_type;
    entry.excerpt_id = item.name;

    if (!options.codec_id.empty()) {
      if (!options.tools)
        throw ConfigError("make_synthetic_pairs: codec requested without tool config");
      entry.deg_path = encode_decode(ref_path, options.codec_id,
                                     options.bitrate_kbps, out_dir, *options.tools);
      entry.codec = options.codec_id;
      entry.bitrate_kbps = options.bitrate_kbps;
    } else {
      const std::string deg_path =
          (fs::path(out_dir) / (item.name + "_deg.wav")).string();
      std::error_code ec;
      fs::copy_file(ref_path, deg_path, fs::copy_options::overwrite_existing, ec);
      if (ec) throw IoError("cannot copy " + ref_path + " to " + deg_path);
      entry.deg_path = deg_path;
      entry.codec = "none";
    }
    entries.push_back(std::move(entry));
  }
  return entries;
}

}  // namespace inse
