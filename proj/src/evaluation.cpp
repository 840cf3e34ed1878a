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

#include "inse/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "inse/errors.hpp"

namespace inse {

namespace {

std::string format_metric(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::map<std::string, double> load_subjective_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open subjective scores CSV: " + path);
  std::map<std::string, double> scores;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.rfind("deg_path", 0) == 0) continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos)
      throw IoError("bad subjective score row: " + line);
    scores[line.substr(0, comma)] = std::stod(line.substr(comma + 1));
  }
  return scores;
}

}  // namespace

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ArgumentError("pearson: length mismatch");
  const std::size_t n = x.size();
  if (n < 2) throw ArgumentError("pearson: need at least 2 samples");

  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);

  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw UndefinedCorrelationError("pearson: constant input vector");
  return sxy / std::sqrt(sxx * syy);
}

std::vector<double> average_ranks(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&x](std::size_t a, std::size_t b) { return x[a] < x[b]; });

  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    const double mean_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mean_rank;
    i = j + 1;
  }
  return ranks;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ArgumentError("spearman: length mismatch");
  if (x.size() < 2) throw ArgumentError("spearman: need at least 2 samples");
  return pearson(average_ranks(x), average_ranks(y));
}

double predict_file_pair(Model<float>& model, const NormStats& stats,
                         const std::string& ref_path, const std::string& deg_path,
                         const GammatoneConfig& config) {
  AudioBuffer ref = read_wav(ref_path);
  AudioBuffer deg = read_wav(deg_path);
  if (ref.channel_count() == 2) ref = downmix_mid(ref);
  if (deg.channel_count() == 2) deg = downmix_mid(deg);
  if (ref.sample_rate != kPipelineSampleRate || deg.sample_rate != kPipelineSampleRate)
    throw ArgumentError("predict: both files must be 48 kHz");

  const std::size_t n = std::min(ref.frame_count(), deg.frame_count());
  const std::size_t win = static_cast<std::size_t>(
      std::llround(7.2 * kPipelineSampleRate));
  if (n < win)
    throw ArgumentError("predict: signals shorter than one 7.2 s window: " + deg_path);

  // Consecutive 7.2 s windows, last one right-aligned.
  std::vector<std::size_t> offsets;
  for (std::size_t off = 0; off + win <= n; off += win) offsets.push_back(off);
  if (offsets.back() + win < n) offsets.push_back(n - win);

  std::vector<PairedInput> windows;
  windows.reserve(offsets.size());
  for (const std::size_t off : offsets) {
    AudioBuffer ref_win(kPipelineSampleRate, win, 1);
    AudioBuffer deg_win(kPipelineSampleRate, win, 1);
    std::copy_n(ref.samples[0].begin() + off, win, ref_win.samples[0].begin());
    std::copy_n(deg.samples[0].begin() + off, win, deg_win.samples[0].begin());
    windows.push_back(normalize_pair(
        pair_spectrograms(gammatone_spectrogram(ref_win, config),
                          gammatone_spectrogram(deg_win, config)),
        stats));
  }

  std::vector<const PairedInput*> ptrs;
  for (const auto& w : windows) ptrs.push_back(&w);
  const std::vector<double> scores = predict_mos_batch(model, ptrs, /*clamp=*/false);
  const double mean =
      std::accumulate(scores.begin(), scores.end(), 0.0) / scores.size();
  return std::clamp(mean, model.spec.clamp_min, model.spec.clamp_max);
}

std::vector<CorrelationReport> correlation_reports(
    const std::vector<PredictionRow>& rows, const std::vector<std::string>& groupings,
    std::vector<std::string>* warnings) {
  std::vector<CorrelationReport> reports;
  auto emit = [&reports, warnings](const std::string& key, const std::string& value,
                                   const std::vector<const PredictionRow*>& group) {
    if (group.size() < 2) {
      if (warnings)
        warnings->push_back("group " + key + "=" + value + " has fewer than 2 entries; skipped");
      return;
    }
    std::vector<double> preds, labels;
    for (const auto* r : group) {
      preds.push_back(r->prediction);
      labels.push_back(r->label);
    }
    CorrelationReport report;
    report.group_key = key;
    report.group_value = value;
    report.n = static_cast<int>(group.size());
    double mse = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      const double d = preds[i] - labels[i];
      mse += d * d;
    }
    report.mse = mse / static_cast<double>(preds.size());
    try {
      report.rp = pearson(preds, labels);
      report.rs = spearman(preds, labels);
    } catch (const UndefinedCorrelationError& e) {
      if (warnings)
        warnings->push_back("group " + key + "=" + value +
                            " has an undefined correlation (" + e.what() + "); skipped");
      return;
    }
    reports.push_back(std::move(report));
  };

  for (const std::string& key : groupings) {
    if (key == "overall") {
      std::vector<const PredictionRow*> all;
      for (const auto& r : rows) all.push_back(&r);
      emit("overall", "", all);
    } else if (key == "codec" || key == "bitrate") {
      std::map<std::string, std::vector<const PredictionRow*>> groups;
      for (const auto& r : rows) {
        const std::string value =
            key == "codec"
                ? r.codec
                : (r.bitrate_kbps ? std::to_string(*r.bitrate_kbps) : "none");
        groups[value].push_back(&r);
      }
      for (const auto& [value, group] : groups) emit(key, value, group);
    } else {
      throw ArgumentError("unknown grouping '" + key + "'");
    }
  }
  return reports;
}

EvaluationResult evaluate(const std::string& checkpoint_path, const Manifest& manifest,
                          const EvaluateOptions& options) {
  LoadedCheckpoint ckpt = load_checkpoint(checkpoint_path);

  std::map<std::string, double> subjective;
  if (!options.subjective_csv.empty())
    subjective = load_subjective_csv(options.subjective_csv);

  EvaluationResult result;
  for (const auto& e : manifest.entries) {
    if (!options.include_anchors && e.codec.rfind("anchor", 0) == 0) continue;
    PredictionRow row;
    row.deg_path = e.deg_path;
    row.excerpt_id = e.excerpt_id;
    row.codec = e.codec;
    row.bitrate_kbps = e.bitrate_kbps;
    if (!options.subjective_csv.empty()) {
      auto it = subjective.find(e.deg_path);
      if (it == subjective.end()) {
        if (options.warnings)
          options.warnings->push_back("no subjective score for " + e.deg_path +
                                      "; skipped");
        continue;
      }
      row.label = it->second;
    } else {
      row.label = e.label;
    }
    row.prediction = predict_file_pair(ckpt.model, ckpt.norm_stats, e.ref_path,
                                       e.deg_path, options.frontend);
    result.predictions.push_back(std::move(row));
  }

  result.reports =
      correlation_reports(result.predictions, options.groupings, options.warnings);
  result.ranking_violations = ranking_violation_rate(result.predictions);
  return result;
}

std::optional<double> ranking_violation_rate(const std::vector<PredictionRow>& rows,
                                             double tolerance) {
  std::map<std::string, std::vector<const PredictionRow*>> by_excerpt;
  for (const auto& r : rows)
    if (r.bitrate_kbps) by_excerpt[r.excerpt_id].push_back(&r);

  std::size_t pairs = 0, violations = 0;
  for (auto& [id, group] : by_excerpt) {
    std::stable_sort(group.begin(), group.end(),
                     [](const PredictionRow* a, const PredictionRow* b) {
                       return *a->bitrate_kbps < *b->bitrate_kbps;
                     });
    for (std::size_t i = 0; i + 1 < group.size(); ++i) {
      ++pairs;
      if (group[i + 1]->prediction < group[i]->prediction - tolerance) ++violations;
    }
  }
  if (pairs == 0) return std::nullopt;
  return static_cast<double>(violations) / static_cast<double>(pairs);
}

void write_report_csv(const std::string& path,
                      const std::vector<CorrelationReport>& reports) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot create report: " + path);
  out << "group_key,group_value,n,rp,rs,mse\n";
  for (const auto& r : reports) {
    out << r.group_key << ',' << r.group_value << ',' << r.n << ','
        << format_metric(r.rp) << ',' << format_metric(r.rs) << ','
        << format_metric(r.mse) << "\n";
  }
}

std::string format_report_table(const std::vector<CorrelationReport>& reports) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-10s %-12s %6s %10s %10s %10s\n", "group",
                "value", "n", "rp", "rs", "mse");
  out << line;
  for (const auto& r : reports) {
    std::snprintf(line, sizeof(line), "%-10s %-12s %6d %10.4f %10.4f %10.4f\n",
                  r.group_key.c_str(), r.group_value.c_str(), r.n, r.rp, r.rs, r.mse);
    out << line;
  }
  return out.str();
}

}  // namespace inse
