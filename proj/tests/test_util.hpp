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
// Shared fixtures and independent oracles for the test suites. Everything
// here is deliberately straight-line and separate from the library's own
// computation paths.

#ifndef INSE_TESTS_TEST_UTIL_HPP_
#define INSE_TESTS_TEST_UTIL_HPP_

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "inse/audio.hpp"
#include "inse/dataset.hpp"

namespace inse::test {

// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    auto base = std::filesystem::temp_directory_path();
    for (int i = 0;; ++i) {
      path_ = base / (tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(i));
      if (!std::filesystem::exists(path_)) break;
    }
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string str() const { return path_.string(); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline AudioBuffer make_sine(double freq_hz, double duration_s, double amplitude,
                             int sample_rate = kPipelineSampleRate) {
  const std::size_t n = static_cast<std::size_t>(std::llround(duration_s * sample_rate));
  AudioBuffer audio(sample_rate, n, 1);
  for (std::size_t i = 0; i < n; ++i)
    audio.samples[0][i] = static_cast<float>(
        amplitude * std::sin(2.0 * std::numbers::pi * freq_hz * i / sample_rate));
  return audio;
}

inline AudioBuffer random_audio(std::size_t n, uint64_t seed, double amplitude = 0.5,
                                int channels = 1) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-amplitude, amplitude);
  AudioBuffer audio(kPipelineSampleRate, n, channels);
  for (int c = 0; c < channels; ++c)
    for (std::size_t i = 0; i < n; ++i)
      audio.samples[c][i] = static_cast<float>(dist(rng));
  return audio;
}

// --- Welch PSD slope oracle -------------------------------------------------

// Naive radix-2 DIT FFT, independent of the library's transform.
inline void naive_fft(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

struct PsdEstimate {
  std::vector<double> freqs;
  std::vector<double> power;  // linear
};

// Welch average periodogram, Hann windows, 50% overlap.
inline PsdEstimate welch_psd(const std::vector<float>& x, int sample_rate,
                             std::size_t nfft = 8192) {
  PsdEstimate psd;
  psd.freqs.resize(nfft / 2 + 1);
  psd.power.assign(nfft / 2 + 1, 0.0);
  for (std::size_t i = 0; i <= nfft / 2; ++i)
    psd.freqs[i] = static_cast<double>(i) * sample_rate / static_cast<double>(nfft);

  std::vector<double> window(nfft);
  for (std::size_t i = 0; i < nfft; ++i)
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / nfft);

  std::size_t segments = 0;
  for (std::size_t start = 0; start + nfft <= x.size(); start += nfft / 2) {
    std::vector<std::complex<double>> seg(nfft);
    for (std::size_t i = 0; i < nfft; ++i)
      seg[i] = window[i] * static_cast<double>(x[start + i]);
    naive_fft(seg);
    for (std::size_t i = 0; i <= nfft / 2; ++i) psd.power[i] += std::norm(seg[i]);
    ++segments;
  }
  for (double& p : psd.power) p /= std::max<std::size_t>(1, segments);
  return psd;
}

// Least-squares slope of the PSD in dB against log2(frequency).
inline double psd_slope_db_per_octave(const std::vector<float>& x, int sample_rate,
                                      double f_lo, double f_hi) {
  const PsdEstimate psd = welch_psd(x, sample_rate);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t i = 1; i < psd.freqs.size(); ++i) {
    if (psd.freqs[i] < f_lo || psd.freqs[i] > f_hi || psd.power[i] <= 0) continue;
    const double lx = std::log2(psd.freqs[i]);
    const double ly = 10.0 * std::log10(psd.power[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  const double denom = static_cast<double>(n) * sxx - sx * sx;
  return (static_cast<double>(n) * sxy - sx * sy) / denom;
}

// --- Correlation oracles ----------------------------------------------------

// Textbook one-pass covariance formula (different route than the library's
// centered two-pass computation).
inline double naive_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    syy += y[i] * y[i];
    sxy += x[i] * y[i];
  }
  const double cov = sxy / n - (sx / n) * (sy / n);
  const double vx = sxx / n - (sx / n) * (sx / n);
  const double vy = syy / n - (sy / n) * (sy / n);
  return cov / std::sqrt(vx * vy);
}

// Brute-force average ranks: for each element count smaller values and ties.
inline std::vector<double> brute_force_ranks(const std::vector<double>& x) {
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::size_t smaller = 0, equal = 0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (x[j] < x[i]) ++smaller;
      if (x[j] == x[i]) ++equal;
    }
    ranks[i] = static_cast<double>(smaller) + (static_cast<double>(equal) + 1.0) / 2.0;
  }
  return ranks;
}

inline double naive_spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return naive_pearson(brute_force_ranks(x), brute_force_ranks(y));
}

// --- Time-domain gammatone filterbank oracle --------------------------------

// FIR gammatone: t^(order-1) e^(-2 pi 1.019 ERB t) cos(2 pi fc t), peak
// frequency response normalized to one.
inline std::vector<double> gammatone_fir(double fc, int order, int taps,
                                         int sample_rate) {
  const double erb = 24.7 * (1.0 + 4.37 * fc / 1000.0);
  const double decay = 2.0 * std::numbers::pi * 1.019 * erb;
  std::vector<double> h(taps);
  for (int i = 0; i < taps; ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    h[i] = std::pow(t, order - 1) * std::exp(-decay * t) *
           std::cos(2.0 * std::numbers::pi * fc * t);
  }
  // Normalize |H(fc)| to 1.
  std::complex<double> resp(0.0, 0.0);
  for (int i = 0; i < taps; ++i) {
    const double phase = -2.0 * std::numbers::pi * fc * i / sample_rate;
    resp += h[i] * std::complex<double>(std::cos(phase), std::sin(phase));
  }
  const double mag = std::abs(resp);
  for (double& v : h) v /= mag;
  return h;
}

// Mean-square output of each band filter applied to `x`, evaluated after
// the filters settle.
inline std::vector<double> gammatone_band_energies(const std::vector<float>& x,
                                                   const std::vector<double>& centers,
                                                   int order, int sample_rate,
                                                   int taps = 4096,
                                                   int eval_samples = 4800) {
  std::vector<double> energies(centers.size(), 0.0);
  const int start = taps;
  const int stop = std::min<int>(static_cast<int>(x.size()), start + eval_samples);
  for (std::size_t k = 0; k < centers.size(); ++k) {
    const std::vector<double> h = gammatone_fir(centers[k], order, taps, sample_rate);
    double acc = 0.0;
    for (int n = start; n < stop; ++n) {
      double y = 0.0;
      for (int i = 0; i < taps; ++i) y += h[i] * x[n - i];
      acc += y * y;
    }
    energies[k] = acc / static_cast<double>(stop - start);
  }
  return energies;
}

// --- Synthetic ranking dataset ----------------------------------------------

// Tone+noise excerpts degraded by additive white noise at evenly spaced
// SNR steps. Labels map linearly from 5 (cleanest) to 1 (noisiest), and
// fake bitrates ascend with quality so ranking diagnostics apply.
inline Manifest make_toy_dataset(const std::string& dir, int n_excerpts,
                                 int n_levels, uint64_t seed) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const std::size_t len = 345600;  // 7.2 s at 48 kHz
  const std::vector<int> ladder = {16, 20, 24, 32, 48, 80, 96, 128};

  Manifest manifest;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> freq_dist(std::log(150.0), std::log(6000.0));

  for (int e = 0; e < n_excerpts; ++e) {
    const double f1 = std::exp(freq_dist(rng));
    const double f2 = std::exp(freq_dist(rng));
    std::normal_distribution<double> floor_noise(0.0, 0.003);

    AudioBuffer ref(kPipelineSampleRate, len, 1);
    for (std::size_t i = 0; i < len; ++i) {
      const double t = static_cast<double>(i) / kPipelineSampleRate;
      ref.samples[0][i] = static_cast<float>(
          0.25 * std::sin(2.0 * std::numbers::pi * f1 * t) +
          0.15 * std::sin(2.0 * std::numbers::pi * f2 * t) + floor_noise(rng));
    }
    const std::string id = "toy" + std::to_string(e);
    const std::string ref_path = (fs::path(dir) / (id + "_ref.wav")).string();
    write_wav(ref_path, ref);

    DatasetEntry self;
    self.ref_path = self.deg_path = ref_path;
    self.label = 5.0;
    self.codec = "none";
    self.content_type = "mixed";
    self.excerpt_id = id;
    manifest.entries.push_back(self);

    const double sig_db = rms_dbfs(ref.samples[0]);
    for (int j = 0; j < n_levels; ++j) {
      const double frac =
          n_levels > 1 ? static_cast<double>(j) / (n_levels - 1) : 0.0;
      const double snr_db = 40.0 - 36.0 * frac;
      std::mt19937_64 noise_rng(seed ^ (0xABCDULL + 131 * e + 7 * j));
      std::normal_distribution<double> gauss(0.0, db_to_linear(sig_db - snr_db));

      AudioBuffer deg = ref;
      for (std::size_t i = 0; i < len; ++i)
        deg.samples[0][i] = static_cast<float>(deg.samples[0][i] + gauss(noise_rng));
      const std::string deg_path =
          (fs::path(dir) / (id + "_lvl" + std::to_string(j) + ".wav")).string();
      write_wav(deg_path, deg);

      DatasetEntry entry;
      entry.ref_path = ref_path;
      entry.deg_path = deg_path;
      entry.label = 5.0 - 4.0 * frac;
      entry.codec = "addnoise";
      entry.bitrate_kbps = ladder[(ladder.size() - 1) - j % ladder.size()];
      entry.content_type = "mixed";
      entry.excerpt_id = id;
      manifest.entries.push_back(entry);
    }
  }
  return manifest;
}

// --- Misc -------------------------------------------------------------------

inline double two_pass_mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double two_pass_std(const std::vector<double>& v) {
  const double m = two_pass_mean(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

}  // namespace inse::test

#endif  // INSE_TESTS_TEST_UTIL_HPP_
