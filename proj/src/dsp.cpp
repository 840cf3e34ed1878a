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

#include "inse/dsp.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "inse/errors.hpp"

namespace inse::dsp {

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

std::vector<std::complex<double>> rfft(const std::vector<double>& x) {
  if (x.empty() || (x.size() & (x.size() - 1)) != 0)
    throw ArgumentError("rfft: length must be a power of two");
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> full;
  fft.fwd(full, x);
  full.resize(x.size() / 2 + 1);
  return full;
}

std::vector<double> irfft(const std::vector<std::complex<double>>& spectrum,
                          std::size_t n) {
  if (spectrum.size() != n / 2 + 1)
    throw ArgumentError("irfft: spectrum size must be n/2+1");
  // Rebuild the conjugate-symmetric full spectrum for Eigen's c2r path.
  std::vector<std::complex<double>> full(n);
  for (std::size_t i = 0; i < spectrum.size(); ++i) full[i] = spectrum[i];
  for (std::size_t i = spectrum.size(); i < n; ++i)
    full[i] = std::conj(spectrum[n - i]);
  Eigen::FFT<double> fft;
  std::vector<double> out;
  fft.inv(out, full);
  return out;
}

std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (n < 2) return w;
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                static_cast<double>(n - 1));
  return w;
}

namespace {

std::vector<Biquad> butterworth(int order, double fc_hz, double fs_hz,
                                bool highpass) {
  if (order < 2 || order % 2 != 0)
    throw ArgumentError("butterworth: order must be a positive even number");
  if (fc_hz <= 0.0 || fc_hz >= fs_hz / 2.0)
    throw ArgumentError("butterworth: cutoff must lie in (0, fs/2)");

  const double k = 2.0 * fs_hz;  // bilinear constant
  const double warped = k * std::tan(std::numbers::pi * fc_hz / fs_hz);

  std::vector<Biquad> sections;
  sections.reserve(order / 2);
  for (int pair = 0; pair < order / 2; ++pair) {
    // Unit-circle prototype pole pair for the analog lowpass.
    const double theta =
        std::numbers::pi * (2.0 * pair + 1.0 + order) / (2.0 * order);
    std::complex<double> p(std::cos(theta), std::sin(theta));
    // Lowpass: scale pole. Highpass: invert pole (s -> wc/s).
    std::complex<double> q = highpass ? warped / p : warped * p;

    // Bilinear transform z = (k + s) / (k - s).
    std::complex<double> zp = (k + q) / (k - q);
    const double a1 = -2.0 * zp.real();
    const double a2 = std::norm(zp);

    Biquad s;
    s.a1 = a1;
    s.a2 = a2;
    if (highpass) {
      // Analog zeros at s=0 map to z=+1; normalize gain at Nyquist (z=-1).
      const double gain = (1.0 - a1 + a2) / 4.0;
      s.b0 = gain;
      s.b1 = -2.0 * gain;
      s.b2 = gain;
    } else {
      // Zeros at z=-1; normalize gain at DC (z=+1).
      const double gain = (1.0 + a1 + a2) / 4.0;
      s.b0 = gain;
      s.b1 = 2.0 * gain;
      s.b2 = gain;
    }
    sections.push_back(s);
  }
  return sections;
}

}  // namespace

std::vector<Biquad> butterworth_highpass(int order, double fc_hz, double fs_hz) {
  return butterworth(order, fc_hz, fs_hz, /*highpass=*/true);
}

std::vector<Biquad> butterworth_lowpass(int order, double fc_hz, double fs_hz) {
  return butterworth(order, fc_hz, fs_hz, /*highpass=*/false);
}

std::vector<float> filter(const std::vector<Biquad>& sections,
                          const std::vector<float>& x) {
  std::vector<double> y(x.begin(), x.end());
  for (const Biquad& s : sections) {
    double z1 = 0.0, z2 = 0.0;
    for (double& v : y) {
      const double in = v;
      const double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      v = out;
    }
  }
  std::vector<float> out(y.size());
  std::transform(y.begin(), y.end(), out.begin(),
                 [](double v) { return static_cast<float>(v); });
  return out;
}

std::vector<float> filtfilt(const std::vector<Biquad>& sections,
                            const std::vector<float>& x) {
  std::vector<float> y = filter(sections, x);
  std::reverse(y.begin(), y.end());
  y = filter(sections, y);
  std::reverse(y.begin(), y.end());
  return y;
}

}  // namespace inse::dsp
