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

#include "inse/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

#include "inse/dsp.hpp"
#include "inse/errors.hpp"

namespace fs = std::filesystem;

namespace inse {

namespace {

const std::set<std::string> kContentTypes = {"music", "speech", "noise",
                                             "silence", "mixed"};

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string format_label(double label) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", label);
  return buf;
}

constexpr char kManifestHeader[] =
    "ref_path,deg_path,label,codec,bitrate_kbps,content_type,excerpt_id";

}  // namespace

void DatasetEntry::validate() const {
  if (ref_path.empty() || deg_path.empty())
    throw ArgumentError("dataset entry: empty path");
  if (ref_path.find(',') != std::string::npos ||
      deg_path.find(',') != std::string::npos)
    throw ArgumentError("dataset entry: paths containing commas are not supported");
  if (!(label >= 1.0 && label <= 5.0))
    throw ArgumentError("dataset entry: label " + format_label(label) +
                        " outside [1, 5]");
  if (excerpt_id.empty()) throw ArgumentError("dataset entry: empty excerpt_id");
  if (codec.empty()) throw ArgumentError("dataset entry: empty codec");
  if (!kContentTypes.count(content_type))
    throw ArgumentError("dataset entry: unknown content_type '" + content_type + "'");
}

Manifest Manifest::load(const std::string& path, bool check_paths) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty manifest: " + path);
  if (trim(line) != kManifestHeader)
    throw IoError("bad manifest header in " + path);

  Manifest manifest;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split(trim(line), ',');
    if (fields.size() != 7)
      throw IoError("manifest " + path + " line " + std::to_string(line_no) +
                    ": expected 7 fields, got " + std::to_string(fields.size()));
    DatasetEntry e;
    e.ref_path = fields[0];
    e.deg_path = fields[1];
    try {
      e.label = std::stod(fields[2]);
    } catch (const std::exception&) {
      throw IoError("manifest " + path + " line " + std::to_string(line_no) +
                    ": bad label '" + fields[2] + "'");
    }
    e.codec = fields[3];
    if (!fields[4].empty()) e.bitrate_kbps = std::stoi(fields[4]);
    e.content_type = fields[5];
    e.excerpt_id = fields[6];
    // Ref-ref pairs are perceptually transparent by definition.
    if (e.is_ref_ref()) e.label = 5.0;
    e.validate();
    if (check_paths) {
      if (!fs::exists(e.ref_path))
        throw IoError("manifest references missing file: " + e.ref_path);
      if (!fs::exists(e.deg_path))
        throw IoError("manifest references missing file: " + e.deg_path);
    }
    manifest.entries.push_back(std::move(e));
  }
  return manifest;
}

void Manifest::save(const std::string& path) const {
  for (const auto& e : entries) e.validate();
  std::ofstream out(path);
  if (!out) throw IoError("cannot create manifest: " + path);
  out << kManifestHeader << "\n";
  for (const auto& e : entries) {
    out << e.ref_path << ',' << e.deg_path << ',' << format_label(e.label) << ','
        << e.codec << ',' << (e.bitrate_kbps ? std::to_string(*e.bitrate_kbps) : "")
        << ',' << e.content_type << ',' << e.excerpt_id << "\n";
  }
  if (!out) throw IoError("short write: " + path);
}

std::vector<std::string> Manifest::excerpt_ids() const {
  std::set<std::string> ids;
  for (const auto& e : entries) ids.insert(e.excerpt_id);
  return {ids.begin(), ids.end()};
}

bool FoldSplit::in_val(const std::string& id) const {
  return std::binary_search(val_ids.begin(), val_ids.end(), id);
}

std::vector<AudioBuffer> segment_excerpts(const AudioBuffer& audio, double length_s) {
  audio.validate();
  if (audio.sample_rate != kPipelineSampleRate)
    throw ArgumentError("segment_excerpts: expected 48 kHz input");
  if (length_s <= 0) throw ArgumentError("segment_excerpts: bad segment length");

  const std::size_t seg_len =
      static_cast<std::size_t>(std::llround(length_s * audio.sample_rate));
  const std::size_t n_segments = audio.frame_count() / seg_len;

  std::vector<AudioBuffer> segments;
  segments.reserve(n_segments);
  for (std::size_t s = 0; s < n_segments; ++s) {
    AudioBuffer seg(audio.sample_rate, seg_len, audio.channel_count());
    for (int c = 0; c < audio.channel_count(); ++c) {
      const auto& src = audio.samples[c];
      std::copy(src.begin() + s * seg_len, src.begin() + (s + 1) * seg_len,
                seg.samples[c].begin());
    }
    segments.push_back(std::move(seg));
  }
  return segments;
}

ToolConfig ToolConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  ToolConfig config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config " + path + " line " + std::to_string(line_no) +
                        ": expected key = value");
    config.file_values_[trim(stripped.substr(0, eq))] =
        trim(stripped.substr(eq + 1));
  }
  return config;
}

void ToolConfig::set_override(const std::string& key, const std::string& value) {
  overrides_[key] = value;
}

std::optional<std::string> ToolConfig::get(const std::string& key) const {
  if (auto it = overrides_.find(key); it != overrides_.end()) return it->second;
  std::string env_key = "INSE_";
  for (char c : key)
    env_key += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (const char* env = std::getenv(env_key.c_str())) return std::string(env);
  if (auto it = file_values_.find(key); it != file_values_.end()) return it->second;
  return std::nullopt;
}

std::optional<std::string> ToolConfig::codec_exe(const std::string& codec_id) const {
  return get("codec." + codec_id + ".exe");
}

std::vector<int> ToolConfig::codec_bitrates(const std::string& codec_id) const {
  auto raw = get("codec." + codec_id + ".bitrates");
  if (!raw) return {};
  std::vector<int> rates;
  for (const auto& tok : split(*raw, ',')) {
    const std::string t = trim(tok);
    if (!t.empty()) rates.push_back(std::stoi(t));
  }
  std::sort(rates.begin(), rates.end());
  return rates;
}

std::vector<std::string> ToolConfig::configured_codecs() const {
  std::set<std::string> ids;
  auto scan = [&ids](const std::map<std::string, std::string>& kv) {
    for (const auto& [key, value] : kv) {
      if (key.rfind("codec.", 0) == 0) {
        const auto rest = key.substr(6);
        const auto dot = rest.find('.');
        if (dot != std::string::npos && rest.substr(dot + 1) == "exe")
          ids.insert(rest.substr(0, dot));
      }
    }
  };
  scan(file_values_);
  scan(overrides_);
  // Codecs configured purely through INSE_CODEC_<ID>_EXE variables.
  for (char** env = environ; env && *env; ++env) {
    const std::string var(*env);
    if (var.rfind("INSE_CODEC_", 0) != 0) continue;
    const auto eq = var.find('=');
    if (eq == std::string::npos) continue;
    std::string key = var.substr(11, eq - 11);
    if (key.size() <= 4 || key.substr(key.size() - 4) != "_EXE") continue;
    key = key.substr(0, key.size() - 4);
    std::string id;
    for (char c : key)
      id += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (!id.empty()) ids.insert(id);
  }
  return {ids.begin(), ids.end()};
}

std::optional<std::string> ToolConfig::oracle_exe() const { return get("oracle.exe"); }

std::optional<std::string> ToolConfig::labels_csv() const {
  return get("oracle.labels_csv");
}

std::optional<double> ToolConfig::csv_label(const std::string& ref_path,
                                            const std::string& deg_path) const {
  if (!labels_loaded_) {
    labels_loaded_ = true;
    if (auto path = labels_csv()) {
      std::ifstream in(*path);
      if (!in) throw IoError("cannot open labels CSV: " + *path);
      std::string line;
      while (std::getline(in, line)) {
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped.rfind("ref_path", 0) == 0) continue;
        auto fields = split(stripped, ',');
        if (fields.size() != 3)
          throw IoError("labels CSV " + *path + ": expected 3 fields per row");
        labels_[{fields[0], fields[1]}] = std::stod(fields[2]);
      }
    }
  }
  auto it = labels_.find({ref_path, deg_path});
  if (it == labels_.end()) return std::nullopt;
  return it->second;
}

std::string shell_quote(const std::string& arg) {
  std::string out = "'";
  for (char c : arg) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  out += "'";
  return out;
}

CommandResult run_command(const std::vector<std::string>& argv) {
  if (argv.empty()) throw ArgumentError("run_command: empty argv");
  std::string cmd;
  for (const auto& a : argv) {
    if (!cmd.empty()) cmd += ' ';
    cmd += shell_quote(a);
  }
  cmd += " 2>&1";

  CommandResult result;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) throw IoError("failed to spawn: " + argv[0]);
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) result.output.append(buf, n);
  const int status = pclose(pipe);
  if (status == -1)
    result.exit_code = -1;
  else if (WIFEXITED(status))
    result.exit_code = WEXITSTATUS(status);
  else
    result.exit_code = 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
  return result;
}

long xcorr_lag(const std::vector<float>& ref, const std::vector<float>& sig,
               int max_lag) {
  if (ref.empty() || sig.empty()) throw ArgumentError("xcorr_lag: empty signal");
  const std::size_t n = std::max(ref.size(), sig.size());
  const std::size_t m = dsp::next_pow2(n + static_cast<std::size_t>(max_lag) + 1);

  std::vector<double> a(m, 0.0), b(m, 0.0);
  std::copy(ref.begin(), ref.end(), a.begin());
  std::copy(sig.begin(), sig.end(), b.begin());
  const auto fa = dsp::rfft(a);
  const auto fb = dsp::rfft(b);
  std::vector<std::complex<double>> prod(fa.size());
  for (std::size_t i = 0; i < fa.size(); ++i) prod[i] = std::conj(fa[i]) * fb[i];
  const auto corr = dsp::irfft(prod, m);  // corr[lag] = sum ref[i] * sig[i + lag]

  long best_lag = 0;
  double best = -1.0;
  for (long lag = -max_lag; lag <= max_lag; ++lag) {
    const std::size_t idx = lag >= 0 ? static_cast<std::size_t>(lag)
                                     : m - static_cast<std::size_t>(-lag);
    if (corr[idx] > best) {
      best = corr[idx];
      best_lag = lag;
    }
  }
  return best_lag;
}

std::vector<float> apply_lag(const std::vector<float>& sig, long lag,
                             std::size_t target_len) {
  std::vector<float> out(target_len, 0.0f);
  for (std::size_t i = 0; i < target_len; ++i) {
    const long j = static_cast<long>(i) + lag;
    if (j >= 0 && j < static_cast<long>(sig.size()))
      out[i] = sig[static_cast<std::size_t>(j)];
  }
  return out;
}

std::string encode_decode(const std::string& ref_path, const std::string& codec_id,
                          int bitrate_kbps, const std::string& workdir,
                          const ToolConfig& tools) {
  const auto exe = tools.codec_exe(codec_id);
  if (!exe)
    throw ConfigError("no executable configured for codec '" + codec_id + "'");
  const auto ladder = tools.codec_bitrates(codec_id);
  if (!ladder.empty() &&
      std::find(ladder.begin(), ladder.end(), bitrate_kbps) == ladder.end())
    throw ArgumentError("bitrate " + std::to_string(bitrate_kbps) +
                        " not in the configured ladder for codec '" + codec_id + "'");

  fs::create_directories(workdir);
  const std::string stem = fs::path(ref_path).stem().string();
  const std::string deg_path =
      (fs::path(workdir) / (stem + "_" + codec_id + "_" +
                            std::to_string(bitrate_kbps) + ".wav"))
          .string();

  const CommandResult run =
      run_command({*exe, ref_path, deg_path, std::to_string(bitrate_kbps)});
  if (run.exit_code != 0)
    throw CodecError("codec '" + codec_id + "' failed with exit code " +
                     std::to_string(run.exit_code) + ": " + run.output);

  const AudioBuffer ref = read_wav(ref_path);
  AudioBuffer deg = read_wav(deg_path);
  if (deg.sample_rate != ref.sample_rate)
    throw CodecError("codec '" + codec_id + "' changed the sample rate");
  if (deg.channel_count() != ref.channel_count())
    throw CodecError("codec '" + codec_id + "' changed the channel count");

  // Compensate codec delay: align on the mid signal, shift every channel.
  const AudioBuffer ref_mid = ref.mono() ? ref : downmix_mid(ref);
  const AudioBuffer deg_mid = deg.mono() ? deg : downmix_mid(deg);
  const long lag = xcorr_lag(ref_mid.samples[0], deg_mid.samples[0], kCodecAlignMaxLag);

  AudioBuffer aligned(ref.sample_rate, ref.frame_count(), ref.channel_count());
  for (int c = 0; c < ref.channel_count(); ++c)
    aligned.samples[c] = apply_lag(deg.samples[c], lag, ref.frame_count());
  write_wav(deg_path, aligned, WavFormat::kPcm24);
  return deg_path;
}

double label_with_oracle(const std::string& ref_path, const std::string& deg_path,
                         const ToolConfig& tools) {
  std::error_code ec;
  if (ref_path == deg_path || fs::equivalent(ref_path, deg_path, ec))
    return 5.0;  // the oracle caps short of 5 on transparent pairs

  if (const auto exe = tools.oracle_exe()) {
    const CommandResult run = run_command({*exe, ref_path, deg_path});
    if (run.exit_code != 0)
      throw LabelError("oracle failed with exit code " +
                       std::to_string(run.exit_code) + ": " + run.output);
    // MOS is the last numeric token of stdout.
    std::istringstream stream(run.output);
    std::string token;
    std::optional<double> mos;
    while (stream >> token) {
      try {
        std::size_t used = 0;
        const double v = std::stod(token, &used);
        if (used == token.size()) mos = v;
      } catch (const std::exception&) {
      }
    }
    if (!mos) throw LabelError("oracle produced no numeric score: " + run.output);
    if (*mos < 1.0 || *mos > 5.0)
      throw LabelError("oracle score " + std::to_string(*mos) + " outside [1, 5]");
    return *mos;
  }

  if (tools.labels_csv()) {
    if (auto mos = tools.csv_label(ref_path, deg_path)) {
      if (*mos < 1.0 || *mos > 5.0)
        throw LabelError("labels CSV score outside [1, 5] for " + deg_path);
      return *mos;
    }
    throw LabelError("no labels-CSV row for pair (" + ref_path + ", " + deg_path + ")");
  }

  throw LabelError("no oracle executable and no labels CSV configured");
}

std::vector<FoldSplit> split_folds(const Manifest& manifest, int k, uint64_t seed) {
  if (k < 2) throw ArgumentError("split_folds: need k >= 2");
  std::vector<std::string> ids = manifest.excerpt_ids();
  if (static_cast<int>(ids.size()) < k)
    throw ArgumentError("split_folds: need at least k distinct excerpt ids, have " +
                        std::to_string(ids.size()));

  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);

  const std::size_t n = ids.size();
  const std::size_t base = n / static_cast<std::size_t>(k);
  const std::size_t extra = n % static_cast<std::size_t>(k);

  std::vector<FoldSplit> folds;
  folds.reserve(k);
  std::size_t pos = 0;
  for (int f = 0; f < k; ++f) {
    const std::size_t len = base + (static_cast<std::size_t>(f) < extra ? 1 : 0);
    FoldSplit fold;
    fold.fold_index = f;
    fold.val_ids.assign(ids.begin() + pos, ids.begin() + pos + len);
    fold.train_ids.reserve(n - len);
    fold.train_ids.insert(fold.train_ids.end(), ids.begin(), ids.begin() + pos);
    fold.train_ids.insert(fold.train_ids.end(), ids.begin() + pos + len, ids.end());
    std::sort(fold.val_ids.begin(), fold.val_ids.end());
    std::sort(fold.train_ids.begin(), fold.train_ids.end());
    folds.push_back(std::move(fold));
    pos += len;
  }
  return folds;
}

}  // namespace inse
