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

#ifndef INSE_AUDIO_HPP_
#define INSE_AUDIO_HPP_

#include <cstdint>
#include <string>
#include <vector>

namespace inse {

// The sample rate every pipeline entry point expects.
inline constexpr int kPipelineSampleRate = 48000;

// PCM audio, full scale +-1.0, one sample vector per channel.
struct AudioBuffer {
  std::vector<std::vector<float>> samples;  // samples[channel][frame]
  int sample_rate = 0;

  AudioBuffer() = default;
  AudioBuffer(int rate, std::size_t frames, int channels = 1)
      : samples(channels, std::vector<float>(frames, 0.0f)), sample_rate(rate) {}

  int channel_count() const { return static_cast<int>(samples.size()); }
  std::size_t frame_count() const { return samples.empty() ? 0 : samples[0].size(); }
  bool mono() const { return channel_count() == 1; }
  double duration_s() const {
    return sample_rate > 0 ? static_cast<double>(frame_count()) / sample_rate : 0.0;
  }

  std::vector<float>& channel(int c) { return samples.at(c); }
  const std::vector<float>& channel(int c) const { return samples.at(c); }

  // Throws ArgumentError when channel lengths differ, the rate is
  // non-positive, or any sample is non-finite.
  void validate() const;
};

enum class WavFormat { kPcm16, kPcm24, kFloat32 };

// Reads a PCM WAV file (16/24-bit integer or 32-bit float).
AudioBuffer read_wav(const std::string& path);

// Writes `audio` to `path`. Integer formats clip at full scale.
void write_wav(const std::string& path, const AudioBuffer& audio,
               WavFormat format = WavFormat::kPcm24);

// Mono mid-signal (L+R)/2 of a 2-channel buffer. Mono input is an
// ArgumentError: callers must not downmix what is already mono.
AudioBuffer downmix_mid(const AudioBuffer& stereo);

// RMS of a sample vector; 0 for an empty vector.
double rms(const std::vector<float>& samples);

// RMS in dBFS (full-scale sine at amplitude 1.0 sits at ~-3.01 dBFS).
// Throws ArgumentError for silent input, whose level is undefined.
double rms_dbfs(const std::vector<float>& samples);

double db_to_linear(double db);
double linear_to_db(double linear);

}  // namespace inse

#endif  // INSE_AUDIO_HPP_
