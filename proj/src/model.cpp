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

#include "inse/model.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <map>

#include "inse/errors.hpp"

namespace inse {

namespace {

using nlohmann::json;

json block_to_json(const InceptionBlockSpec& b) {
  return json{{"name", b.name},
              {"kind", std::string(1, b.kind)},
              {"in_channels", b.in_channels},
              {"branch_width", b.branch_width},
              {"pool_proj", b.pool_proj},
              {"horiz", {b.horiz_kh, b.horiz_kw}},
              {"vert", {b.vert_kh, b.vert_kw}},
              {"stride", {b.stride_h, b.stride_w}}};
}

InceptionBlockSpec block_from_json(const json& j) {
  InceptionBlockSpec b;
  b.name = j.at("name").get<std::string>();
  b.kind = j.at("kind").get<std::string>().at(0);
  b.in_channels = j.at("in_channels").get<int>();
  b.branch_width = j.at("branch_width").get<int>();
  b.pool_proj = j.at("pool_proj").get<int>();
  b.horiz_kh = j.at("horiz")[0].get<int>();
  b.horiz_kw = j.at("horiz")[1].get<int>();
  b.vert_kh = j.at("vert")[0].get<int>();
  b.vert_kw = j.at("vert")[1].get<int>();
  b.stride_h = j.at("stride")[0].get<int>();
  b.stride_w = j.at("stride")[1].get<int>();
  return b;
}

template <typename T>
std::unique_ptr<nn::Sequential<T>> conv_bn_relu(int in_c, int out_c, int kh, int kw,
                                                int sh, int sw, int ph, int pw) {
  auto seq = std::make_unique<nn::Sequential<T>>();
  seq->add("conv", std::make_unique<nn::Conv2d<T>>(in_c, out_c, kh, kw, sh, sw, ph, pw));
  seq->add("bn", std::make_unique<nn::BatchNorm2d<T>>(out_c));
  seq->add("relu", std::make_unique<nn::ReLU<T>>());
  return seq;
}

template <typename T>
void append_conv_bn_relu(nn::Sequential<T>& branch, const std::string& tag, int in_c,
                         int out_c, int kh, int kw, int sh, int sw, int ph, int pw) {
  branch.add(tag + "_conv",
             std::make_unique<nn::Conv2d<T>>(in_c, out_c, kh, kw, sh, sw, ph, pw));
  branch.add(tag + "_bn", std::make_unique<nn::BatchNorm2d<T>>(out_c));
  branch.add(tag + "_relu", std::make_unique<nn::ReLU<T>>());
}

// Factorized branch: kh x 1 first, then 1 x kw carrying the block stride.
template <typename T>
std::unique_ptr<nn::Sequential<T>> factorized_branch(const InceptionBlockSpec& spec,
                                                     int kh, int kw) {
  auto branch = std::make_unique<nn::Sequential<T>>();
  const int w = spec.branch_width;
  if (spec.kind == 'C') {
    // Valid-style schedule that trims two rows: pad (k-3)/2 vertically.
    append_conv_bn_relu(*branch, "f1", spec.in_channels, w, kh, 1, 1, 1,
                        (kh - 3) / 2, 0);
    append_conv_bn_relu(*branch, "f2", w, w, 1, kw, spec.stride_h, spec.stride_w, 0,
                        (kw - 3) / 2);
  } else {
    append_conv_bn_relu(*branch, "f1", spec.in_channels, w, kh, 1, 1, 1, kh / 2, 0);
    append_conv_bn_relu(*branch, "f2", w, w, 1, kw, spec.stride_h, spec.stride_w, 0,
                        kw / 2);
  }
  return branch;
}

template <typename T>
std::unique_ptr<nn::InceptionBlock<T>> make_inception(const InceptionBlockSpec& spec) {
  auto block = std::make_unique<nn::InceptionBlock<T>>();
  block->add_branch("horiz",
                    factorized_branch<T>(spec, spec.horiz_kh, spec.horiz_kw));
  block->add_branch("vert", factorized_branch<T>(spec, spec.vert_kh, spec.vert_kw));

  auto point = std::make_unique<nn::Sequential<T>>();
  if (spec.kind == 'C') {
    append_conv_bn_relu(*point, "pw", spec.in_channels, spec.branch_width, 1, 1, 1, 1,
                        0, 0);
    point->add("pool", std::make_unique<nn::AvgPool2d<T>>(3, 3, spec.stride_h,
                                                          spec.stride_w, 0, 0));
  } else {
    append_conv_bn_relu(*point, "pw", spec.in_channels, spec.branch_width, 1, 1,
                        spec.stride_h, spec.stride_w, 0, 0);
  }
  block->add_branch("point", std::move(point));

  auto pool = std::make_unique<nn::Sequential<T>>();
  if (spec.kind == 'C') {
    pool->add("pool", std::make_unique<nn::AvgPool2d<T>>(3, 3, spec.stride_h,
                                                         spec.stride_w, 0, 0));
  } else {
    pool->add("pool", std::make_unique<nn::AvgPool2d<T>>(5, 5, spec.stride_h,
                                                         spec.stride_w, 2, 2));
  }
  append_conv_bn_relu(*pool, "proj", spec.in_channels, spec.pool_proj, 1, 1, 1, 1, 0,
                      0);
  block->add_branch("pool", std::move(pool));
  return block;
}

}  // namespace

ModelSpec ModelSpec::standard() { return reduced(64); }

ModelSpec ModelSpec::reduced(int branch_width) {
  if (branch_width < 4) throw ArgumentError("model spec: branch width must be >= 4");
  const int w = branch_width;
  ModelSpec spec;

  InceptionBlockSpec a1{"inception_a1", 'A', 2, w, std::max(1, w / 4), 3, 7, 7, 3, 2, 2};
  InceptionBlockSpec a2{"inception_a2", 'A', a1.out_channels(), w, std::max(1, w / 2),
                        3, 7, 7, 3, 1, 2};
  InceptionBlockSpec b{"inception_b", 'B', a2.out_channels(), w, w, 3, 5, 5, 3, 1, 2};
  InceptionBlockSpec c{"inception_c", 'C', b.out_channels(), w, w, 3, 3, 5, 5, 1, 2};
  spec.blocks = {a1, a2, b, c};
  spec.se_after = {false, true, true, true};

  const int flat = c.out_channels() * spec.pool_h * spec.pool_w;
  (void)flat;
  spec.fc_dims = {std::max(8, 3200 * w / 64), std::max(4, 512 * w / 64), 1};
  return spec;
}

void ModelSpec::validate() const {
  if (blocks.empty()) throw ArgumentError("model spec: no blocks");
  if (se_after.size() != blocks.size())
    throw ArgumentError("model spec: se_after must match the block count");
  if (fc_dims.empty() || fc_dims.back() != 1)
    throw ArgumentError("model spec: head must end in a single output");
  if (dropout < 0.0 || dropout >= 1.0)
    throw ArgumentError("model spec: dropout must be in [0, 1)");
  if (!(clamp_min < clamp_max)) throw ArgumentError("model spec: bad clamp range");
  int in_c = input_channels;
  for (const auto& b : blocks) {
    if (b.in_channels != in_c)
      throw ArgumentError("model spec: block '" + b.name + "' expects " +
                          std::to_string(b.in_channels) + " channels but receives " +
                          std::to_string(in_c));
    if (b.branch_width < 1 || b.pool_proj < 1)
      throw ArgumentError("model spec: block '" + b.name + "' has empty branches");
    in_c = b.out_channels();
  }
}

std::string ModelSpec::to_json() const {
  json j;
  j["input"] = {input_channels, input_bands, input_frames};
  j["blocks"] = json::array();
  for (const auto& b : blocks) j["blocks"].push_back(block_to_json(b));
  j["se_after"] = se_after;
  j["se_reduction"] = se_reduction;
  j["pool"] = {pool_h, pool_w};
  j["fc_dims"] = fc_dims;
  j["dropout"] = dropout;
  j["clamp"] = {clamp_min, clamp_max};
  return j.dump();
}

ModelSpec ModelSpec::from_json(const std::string& text) {
  json j = json::parse(text);
  ModelSpec spec;
  spec.input_channels = j.at("input")[0].get<int>();
  spec.input_bands = j.at("input")[1].get<int>();
  spec.input_frames = j.at("input")[2].get<int>();
  for (const auto& bj : j.at("blocks")) spec.blocks.push_back(block_from_json(bj));
  spec.se_after = j.at("se_after").get<std::vector<bool>>();
  spec.se_reduction = j.at("se_reduction").get<int>();
  spec.pool_h = j.at("pool")[0].get<int>();
  spec.pool_w = j.at("pool")[1].get<int>();
  spec.fc_dims = j.at("fc_dims").get<std::vector<int>>();
  spec.dropout = j.at("dropout").get<double>();
  spec.clamp_min = j.at("clamp")[0].get<double>();
  spec.clamp_max = j.at("clamp")[1].get<double>();
  return spec;
}

template <typename T>
Model<T> build_model(const ModelSpec& spec, uint64_t seed, bool validate) {
  spec.validate();
  Model<T> model;
  model.spec = spec;
  model.seed = seed;

  int channels = spec.input_channels;
  for (std::size_t i = 0; i < spec.blocks.size(); ++i) {
    const auto& block = spec.blocks[i];
    model.net.add(block.name, make_inception<T>(block));
    channels = block.out_channels();
    if (spec.se_after[i])
      model.net.add("se_" + block.name,
                    std::make_unique<nn::SqueezeExcite<T>>(channels, spec.se_reduction));
  }
  model.net.add("avgpool",
                std::make_unique<nn::AdaptiveAvgPool2d<T>>(spec.pool_h, spec.pool_w));
  model.net.add("flatten", std::make_unique<nn::Flatten<T>>());

  int features = channels * spec.pool_h * spec.pool_w;
  for (std::size_t i = 0; i < spec.fc_dims.size(); ++i) {
    const std::string tag = "fc" + std::to_string(i + 1);
    model.net.add(tag, std::make_unique<nn::Linear<T>>(features, spec.fc_dims[i]));
    features = spec.fc_dims[i];
    const bool last = i + 1 == spec.fc_dims.size();
    if (!last) {
      model.net.add(tag + "_relu", std::make_unique<nn::ReLU<T>>());
      if (spec.dropout > 0.0)
        model.net.add(tag + "_drop", std::make_unique<nn::Dropout<T>>(spec.dropout));
    }
  }

  std::mt19937_64 rng(seed);
  model.net.init(rng);
  model.dropout_rng.seed(seed ^ 0x9e3779b97f4a7c15ULL);

  if (validate) {
    nn::Tensor<T> probe(1, spec.input_channels, spec.input_bands, spec.input_frames);
    nn::Context ctx{false, nullptr};
    for (std::size_t i = 0; i < model.net.size(); ++i) {
      try {
        probe = model.net.layer(i)->forward(probe, ctx);
      } catch (const ShapeError& e) {
        throw ShapeError("model spec: layer '" + model.net.name(i) +
                         "' is inconsistent: " + e.what());
      }
    }
    if (probe.c != 1 || probe.h != 1 || probe.w != 1)
      throw ShapeError("model spec: head does not reduce to a single score");
  }
  return model;
}

template Model<float> build_model<float>(const ModelSpec&, uint64_t, bool);
template Model<double> build_model<double>(const ModelSpec&, uint64_t, bool);

double predict_mos(Model<float>& model, const PairedInput& pair, bool clamp) {
  return predict_mos_batch(model, {&pair}, clamp)[0];
}

std::vector<double> predict_mos_batch(Model<float>& model,
                                      const std::vector<const PairedInput*>& pairs,
                                      bool clamp) {
  if (pairs.empty()) return {};
  const auto& spec = model.spec;
  if (spec.input_channels != PairedInput::kChannels ||
      spec.input_bands != PairedInput::kBands ||
      spec.input_frames != PairedInput::kFrames)
    throw ShapeError("predict: model input shape does not match paired inputs");

  nn::Tensor<float> x(static_cast<int>(pairs.size()), PairedInput::kChannels,
                      PairedInput::kBands, PairedInput::kFrames);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (!pairs[i]->normalized)
      throw StateError("predict: input pair has not been normalized");
    std::copy(pairs[i]->tensor.begin(), pairs[i]->tensor.end(),
              x.v.begin() + i * static_cast<std::size_t>(PairedInput::kSize));
  }
  nn::Tensor<float> y = model.forward(x, /*train=*/false);
  std::vector<double> scores(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    double s = static_cast<double>(y.v[i]);
    if (clamp) s = std::clamp(s, spec.clamp_min, spec.clamp_max);
    scores[i] = s;
  }
  return scores;
}

namespace {

json stats_to_json(const NormStats& stats) {
  return json{{"mean", stats.mean}, {"stddev", stats.stddev}};
}

NormStats stats_from_json(const json& j) {
  NormStats stats;
  stats.mean = j.at("mean").get<std::vector<double>>();
  stats.stddev = j.at("stddev").get<std::vector<double>>();
  return stats;
}

}  // namespace

void save_checkpoint(const std::string& path, Model<float>& model,
                     const NormStats& stats, const CheckpointMeta& meta) {
  auto params = model.params();
  auto buffers = model.buffers();

  json tensors = json::array();
  std::size_t offset = 0;
  auto describe = [&tensors, &offset](const std::string& name, std::size_t count) {
    tensors.push_back({{"name", name}, {"count", count}, {"offset", offset}});
    offset += count * sizeof(float);
  };
  for (const auto& p : params) describe(p.name, p.value->size());
  for (const auto& b : buffers) describe(b.name, b.value->size());

  json header;
  header["format_version"] = kCheckpointMagic;
  header["model_spec"] = json::parse(model.spec.to_json());
  header["norm_stats"] = stats_to_json(stats);
  header["meta"] = {{"seed", meta.seed},
                    {"epochs", meta.epochs},
                    {"fold_index", meta.fold_index},
                    {"learning_rate", meta.learning_rate},
                    {"batch_size", meta.batch_size}};
  header["tensors"] = tensors;
  const std::string head = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create checkpoint: " + path);
  out << kCheckpointMagic << "\n";
  const uint64_t head_len = head.size();
  out.write(reinterpret_cast<const char*>(&head_len), sizeof(head_len));
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  for (const auto& p : params)
    out.write(reinterpret_cast<const char*>(p.value->data()),
              static_cast<std::streamsize>(p.value->size() * sizeof(float)));
  for (const auto& b : buffers)
    out.write(reinterpret_cast<const char*>(b.value->data()),
              static_cast<std::streamsize>(b.value->size() * sizeof(float)));
  if (!out) throw IoError("short write: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  std::string magic;
  std::getline(in, magic);
  if (magic != kCheckpointMagic)
    throw IoError("not an " + std::string(kCheckpointMagic) + " file: " + path);
  uint64_t head_len = 0;
  in.read(reinterpret_cast<char*>(&head_len), sizeof(head_len));
  std::string head(head_len, '\0');
  in.read(head.data(), static_cast<std::streamsize>(head_len));
  if (!in) throw IoError("truncated checkpoint header: " + path);

  json header = json::parse(head);
  LoadedCheckpoint loaded;
  loaded.model = build_model<float>(
      ModelSpec::from_json(header.at("model_spec").dump()), 0, /*validate=*/false);
  loaded.norm_stats = stats_from_json(header.at("norm_stats"));
  const auto& meta = header.at("meta");
  loaded.meta.seed = meta.at("seed").get<uint64_t>();
  loaded.meta.epochs = meta.at("epochs").get<int>();
  loaded.meta.fold_index = meta.at("fold_index").get<int>();
  loaded.meta.learning_rate = meta.at("learning_rate").get<double>();
  loaded.meta.batch_size = meta.at("batch_size").get<int>();

  std::map<std::string, std::pair<std::size_t, std::size_t>> directory;
  for (const auto& t : header.at("tensors"))
    directory[t.at("name").get<std::string>()] = {t.at("offset").get<std::size_t>(),
                                                  t.at("count").get<std::size_t>()};

  const std::streampos data_start = in.tellg();
  auto read_into = [&](const std::string& name, std::vector<float>* dst) {
    auto it = directory.find(name);
    if (it == directory.end())
      throw IoError("checkpoint " + path + " is missing tensor '" + name + "'");
    if (it->second.second != dst->size())
      throw IoError("checkpoint tensor '" + name + "' has " +
                    std::to_string(it->second.second) + " values, expected " +
                    std::to_string(dst->size()));
    in.seekg(data_start + static_cast<std::streamoff>(it->second.first));
    in.read(reinterpret_cast<char*>(dst->data()),
            static_cast<std::streamsize>(dst->size() * sizeof(float)));
    if (!in) throw IoError("truncated checkpoint tensor '" + name + "'");
  };
  for (const auto& p : loaded.model.params()) read_into(p.name, p.value);
  for (const auto& b : loaded.model.buffers()) read_into(b.name, b.value);
  return loaded;
}

}  // namespace inse
