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

#ifndef INSE_MODEL_HPP_
#define INSE_MODEL_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "inse/frontend.hpp"
#include "inse/nn.hpp"

namespace inse {

// One modified Inception block: horizontal/vertical factorized rectangular
// branches, a pointwise branch, and an average-pooling branch, all
// concatenated. Blocks of kind A and B stride with same-padding; kind C
// runs the valid/pad-1 schedule that shrinks 16x45 to 14x22.
struct InceptionBlockSpec {
  std::string name;
  char kind = 'A';  // 'A', 'B' (same-padded) or 'C' (edge-trimming)
  int in_channels = 0;
  int branch_width = 64;  // channels of the h/v/pointwise conv branches
  int pool_proj = 0;      // channels of the pooling-branch projection
  int horiz_kh = 3, horiz_kw = 7;
  int vert_kh = 7, vert_kw = 3;
  int stride_h = 1, stride_w = 2;

  int out_channels() const { return 3 * branch_width + pool_proj; }
};

// Declarative network description: the Inception/SE stack, the adaptive
// pooling grid and the fully connected head.
struct ModelSpec {
  int input_channels = 2;
  int input_bands = 32;
  int input_frames = 360;
  std::vector<InceptionBlockSpec> blocks;
  std::vector<bool> se_after;  // one flag per block
  int se_reduction = 16;
  int pool_h = 4, pool_w = 4;
  std::vector<int> fc_dims = {3200, 512, 1};  // hidden widths, then 1 output
  double dropout = 0.5;
  double clamp_min = 1.0, clamp_max = 5.0;

  // The published 15M-parameter configuration.
  static ModelSpec standard();
  // Width-scaled variant for fast experiments; reduced(64) == standard().
  static ModelSpec reduced(int branch_width);

  void validate() const;
  std::string to_json() const;
  static ModelSpec from_json(const std::string& text);
};

template <typename T>
struct Model {
  ModelSpec spec;
  nn::Sequential<T> net;
  std::mt19937_64 dropout_rng;
  uint64_t seed = 0;

  nn::Tensor<T> forward(const nn::Tensor<T>& x, bool train) {
    nn::Context ctx{train, &dropout_rng};
    return net.forward(x, ctx);
  }

  std::vector<nn::ParamRef<T>> params() {
    std::vector<nn::ParamRef<T>> p;
    std::vector<nn::BufferRef<T>> b;
    net.collect("", p, b);
    return p;
  }

  std::vector<nn::BufferRef<T>> buffers() {
    std::vector<nn::ParamRef<T>> p;
    std::vector<nn::BufferRef<T>> b;
    net.collect("", p, b);
    return b;
  }
};

// Builds and initializes the network. When `validate` is set a dry forward
// pass checks every layer's shape arithmetic and names the offender.
// Instantiated for float (production) and double (gradient checks).
template <typename T>
Model<T> build_model(const ModelSpec& spec, uint64_t seed, bool validate = true);

extern template Model<float> build_model<float>(const ModelSpec&, uint64_t, bool);
extern template Model<double> build_model<double>(const ModelSpec&, uint64_t, bool);

// Number of trainable scalars.
template <typename T>
std::size_t count_parameters(Model<T>& model) {
  std::size_t total = 0;
  for (const auto& p : model.params()) total += p.value->size();
  return total;
}

// Scores one normalized pair; inference output is clamped to the spec's
// MOS range unless `clamp` is false.
double predict_mos(Model<float>& model, const PairedInput& pair, bool clamp = true);

// Batched variant; one forward pass over all pairs.
std::vector<double> predict_mos_batch(Model<float>& model,
                                      const std::vector<const PairedInput*>& pairs,
                                      bool clamp = true);

struct CheckpointMeta {
  uint64_t seed = 0;
  int epochs = 0;
  int fold_index = -1;
  double learning_rate = 0.0;
  int batch_size = 0;
};

inline constexpr char kCheckpointMagic[] = "INSE-CKPT-1";

// Single-file container: magic line, JSON header (spec, norm stats,
// metadata, tensor directory), then raw float32 tensor data.
void save_checkpoint(const std::string& path, Model<float>& model,
                     const NormStats& stats, const CheckpointMeta& meta);

struct LoadedCheckpoint {
  Model<float> model;
  NormStats norm_stats;
  CheckpointMeta meta;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace inse

#endif  // INSE_MODEL_HPP_
