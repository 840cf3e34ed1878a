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
// Stand-in label oracle for tests: maps the aligned residual level to a
// MOS-like score, monotone in similarity.
// Usage: fake_oracle <ref.wav> <deg.wav>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>

#include "inse/audio.hpp"

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: fake_oracle <ref.wav> <deg.wav>\n";
    return 2;
  }
  try {
    const inse::AudioBuffer ref = inse::read_wav(argv[1]);
    const inse::AudioBuffer deg = inse::read_wav(argv[2]);
    const std::size_t n = std::min(ref.frame_count(), deg.frame_count());

    double err = 0.0, sig = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = ref.samples[0][i];
      const double d = deg.samples[0][i];
      err += (r - d) * (r - d);
      sig += r * r;
    }
    double mos;
    if (sig == 0.0) {
      mos = err == 0.0 ? 5.0 : 1.0;
    } else {
      const double nrmse = std::sqrt(err / sig);
      mos = 1.0 + 4.0 * std::exp(-3.0 * nrmse);
    }
    std::printf("degraded: %s\nMOS-LQO: %.6f\n", argv[2], std::clamp(mos, 1.0, 5.0));
  } catch (const std::exception& e) {
    std::cerr << "fake_oracle: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
