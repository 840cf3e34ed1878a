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

#include "inse/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "inse/errors.hpp"

namespace inse {

namespace {

uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

uint16_t read_u16(std::istream& in) {
  unsigned char b[2];
  in.read(reinterpret_cast<char*>(b), 2);
  return static_cast<uint16_t>(b[0] | (b[1] << 8));
}

void write_u32(std::ostream& out, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<char*>(b), 4);
}

void write_u16(std::ostream& out, uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff)};
  out.write(reinterpret_cast<char*>(b), 2);
}

}  // namespace

void AudioBuffer::validate() const {
  if (sample_rate <= 0) throw ArgumentError("audio: sample rate must be positive");
  if (samples.empty()) throw ArgumentError("audio: no channels");
  const std::size_t n = samples[0].size();
  for (const auto& ch : samples) {
    if (ch.size() != n) throw ArgumentError("audio: channel lengths differ");
    for (float s : ch) {
      if (!std::isfinite(s)) throw ArgumentError("audio: non-finite sample");
    }
  }
}

AudioBuffer read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open WAV file: " + path);

  char riff[4];
  in.read(riff, 4);
  if (!in || std::memcmp(riff, "RIFF", 4) != 0)
    throw IoError("not a RIFF file: " + path);
  read_u32(in);  // RIFF chunk size
  char wave[4];
  in.read(wave, 4);
  if (!in || std::memcmp(wave, "WAVE", 4) != 0)
    throw IoError("not a WAVE file: " + path);

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  bool have_fmt = false;
  std::vector<char> data;

  while (in) {
    char id[4];
    in.read(id, 4);
    if (!in) break;
    uint32_t size = read_u32(in);
    if (std::memcmp(id, "fmt ", 4) == 0) {
      format = read_u16(in);
      channels = read_u16(in);
      rate = read_u32(in);
      read_u32(in);  // byte rate
      read_u16(in);  // block align
      bits = read_u16(in);
      if (size > 16) in.seekg(size - 16, std::ios::cur);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data.resize(size);
      in.read(data.data(), size);
      if (!in) throw IoError("truncated data chunk: " + path);
      break;
    } else {
      in.seekg(size + (size & 1), std::ios::cur);
    }
  }

  if (!have_fmt || data.empty()) throw IoError("missing fmt/data chunk: " + path);
  if (channels < 1 || channels > 2)
    throw IoError("unsupported channel count in " + path);

  const bool is_float = format == 3 || (format == 0xFFFE && bits == 32);
  const bool is_pcm = format == 1 || format == 0xFFFE;
  if (!is_pcm && !is_float) throw IoError("unsupported WAV format tag in " + path);

  const int bytes_per_sample = bits / 8;
  if (bits != 16 && bits != 24 && bits != 32)
    throw IoError("unsupported bit depth in " + path);
  const std::size_t frames = data.size() / (bytes_per_sample * channels);

  AudioBuffer audio(static_cast<int>(rate), frames, channels);
  const unsigned char* p = reinterpret_cast<const unsigned char*>(data.data());
  for (std::size_t i = 0; i < frames; ++i) {
    for (int c = 0; c < channels; ++c) {
      float v = 0.0f;
      if (bits == 16) {
        int16_t s = static_cast<int16_t>(p[0] | (p[1] << 8));
        v = static_cast<float>(s) / 32768.0f;
      } else if (bits == 24) {
        int32_t s = p[0] | (p[1] << 8) | (p[2] << 16);
        if (s & 0x800000) s |= ~0xFFFFFF;  // sign-extend
        v = static_cast<float>(s) / 8388608.0f;
      } else if (is_float) {
        float f;
        std::memcpy(&f, p, 4);
        v = f;
      } else {  // 32-bit PCM
        int32_t s;
        std::memcpy(&s, p, 4);
        v = static_cast<float>(s) / 2147483648.0f;
      }
      audio.samples[c][i] = v;
      p += bytes_per_sample;
    }
  }
  return audio;
}

void write_wav(const std::string& path, const AudioBuffer& audio, WavFormat format) {
  audio.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create WAV file: " + path);

  const int channels = audio.channel_count();
  const std::size_t frames = audio.frame_count();
  uint16_t bits = format == WavFormat::kPcm16 ? 16 : format == WavFormat::kPcm24 ? 24 : 32;
  uint16_t fmt_tag = format == WavFormat::kFloat32 ? 3 : 1;
  const uint32_t data_size =
      static_cast<uint32_t>(frames * channels * (bits / 8));

  out.write("RIFF", 4);
  write_u32(out, 36 + data_size);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  write_u32(out, 16);
  write_u16(out, fmt_tag);
  write_u16(out, static_cast<uint16_t>(channels));
  write_u32(out, static_cast<uint32_t>(audio.sample_rate));
  write_u32(out, static_cast<uint32_t>(audio.sample_rate * channels * (bits / 8)));
  write_u16(out, static_cast<uint16_t>(channels * (bits / 8)));
  write_u16(out, bits);
  out.write("data", 4);
  write_u32(out, data_size);

  for (std::size_t i = 0; i < frames; ++i) {
    for (int c = 0; c < channels; ++c) {
      const float v = audio.samples[c][i];
      if (format == WavFormat::kPcm16) {
        long s = std::lround(static_cast<double>(v) * 32768.0);
        s = std::clamp(s, -32768L, 32767L);
        write_u16(out, static_cast<uint16_t>(static_cast<int16_t>(s)));
      } else if (format == WavFormat::kPcm24) {
        long s = std::lround(static_cast<double>(v) * 8388608.0);
        s = std::clamp(s, -8388608L, 8388607L);
        unsigned char b[3] = {static_cast<unsigned char>(s & 0xff),
                              static_cast<unsigned char>((s >> 8) & 0xff),
                              static_cast<unsigned char>((s >> 16) & 0xff)};
        out.write(reinterpret_cast<char*>(b), 3);
      } else {
        out.write(reinterpret_cast<const char*>(&v), 4);
      }
    }
  }
  if (!out) throw IoError("short write: " + path);
}

AudioBuffer downmix_mid(const AudioBuffer& stereo) {
  if (stereo.channel_count() != 2)
    throw ArgumentError("downmix_mid: input must have exactly 2 channels");
  AudioBuffer mono(stereo.sample_rate, stereo.frame_count(), 1);
  const auto& l = stereo.samples[0];
  const auto& r = stereo.samples[1];
  for (std::size_t i = 0; i < l.size(); ++i)
    mono.samples[0][i] = 0.5f * (l[i] + r[i]);
  return mono;
}

double rms(const std::vector<float>& samples) {
  if (samples.empty()) return 0.0;
  double acc = 0.0;
  for (float s : samples) acc += static_cast<double>(s) * s;
  return std::sqrt(acc / static_cast<double>(samples.size()));
}

double rms_dbfs(const std::vector<float>& samples) {
  const double r = rms(samples);
  if (r <= 0.0) throw ArgumentError("rms_dbfs: silent signal has no level");
  return linear_to_db(r);
}

double db_to_linear(double db) { return std::pow(10.0, db / 20.0); }

double linear_to_db(double linear) { return 20.0 * std::log10(linear); }

}  // namespace inse
