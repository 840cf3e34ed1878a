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

#ifndef INSE_DSP_HPP_
#define INSE_DSP_HPP_

#include <complex>
#include <cstddef>
#include <vector>

namespace inse::dsp {

std::size_t next_pow2(std::size_t n);

// Forward real-to-complex FFT; returns n/2+1 one-sided bins. n must be a
// power of two.
std::vector<std::complex<double>> rfft(const std::vector<double>& x);

// Inverse of rfft for an even-length real output of n samples.
std::vector<double> irfft(const std::vector<std::complex<double>>& spectrum,
                          std::size_t n);

// Symmetric (palindromic) Hann window of length n.
std::vector<double> hann_window(std::size_t n);

// One second-order IIR section, direct form II transposed.
struct Biquad {
  double b0 = 1, b1 = 0, b2 = 0;  // numerator
  double a1 = 0, a2 = 0;          // denominator (a0 normalized to 1)
};

// Butterworth designs via pole placement and the bilinear transform.
// `order` must be even; the result is order/2 cascaded sections.
std::vector<Biquad> butterworth_highpass(int order, double fc_hz, double fs_hz);
std::vector<Biquad> butterworth_lowpass(int order, double fc_hz, double fs_hz);

// Single forward pass through a biquad cascade.
std::vector<float> filter(const std::vector<Biquad>& sections,
                          const std::vector<float>& x);

// Forward-backward (zero-phase) filtering; squared magnitude response.
std::vector<float> filtfilt(const std::vector<Biquad>& sections,
                            const std::vector<float>& x);

}  // namespace inse::dsp

#endif  // INSE_DSP_HPP_
