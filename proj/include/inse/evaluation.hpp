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

#ifndef INSE_EVALUATION_HPP_
#define INSE_EVALUATION_HPP_

#include <optional>
#include <string>
#include <vector>

#include "inse/dataset.hpp"
#include "inse/frontend.hpp"
#include "inse/model.hpp"

namespace inse {

// Pearson product-moment correlation. Constant input is an
// UndefinedCorrelationError, never a silent zero.
double pearson(const std::vector<double>& x, const std::vector<double>& y);

// Spearman rank correlation; ties receive the mean of their rank span.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

// Average ranks (1-based) with tie handling, the Spearman building block.
std::vector<double> average_ranks(const std::vector<double>& x);

struct CorrelationReport {
  std::string group_key;    // "overall" | "codec" | "bitrate"
  std::string group_value;  // "" | codec id | bitrate
  int n = 0;
  double rp = 0;
  double rs = 0;
  double mse = 0;
};

struct PredictionRow {
  std::string deg_path;
  std::string excerpt_id;
  std::string codec;
  std::optional<int> bitrate_kbps;
  double label = 0;
  double prediction = 0;
};

struct EvaluateOptions {
  std::vector<std::string> groupings = {"overall"};
  bool include_anchors = true;      // codecs named "anchor*" stay in by default
  std::string subjective_csv;       // deg_path,score; replaces manifest labels
  GammatoneConfig frontend;
  std::vector<std::string>* warnings = nullptr;
};

struct EvaluationResult {
  std::vector<CorrelationReport> reports;
  std::vector<PredictionRow> predictions;
  std::optional<double> ranking_violations;  // absent when no ladder pairs exist
};

// Scores an arbitrary-length ref/deg file pair: consecutive 7.2 s windows
// (the last one right-aligned), averaged, clamped to the MOS range.
double predict_file_pair(Model<float>& model, const NormStats& stats,
                         const std::string& ref_path, const std::string& deg_path,
                         const GammatoneConfig& config = {});

// Runs the checkpointed model over a manifest and reports R_p / R_s / MSE
// per requested grouping. Groups with fewer than two entries are skipped
// with a warning.
EvaluationResult evaluate(const std::string& checkpoint_path, const Manifest& manifest,
                          const EvaluateOptions& options = {});

// Same, against already-computed predictions (used internally and by tests).
std::vector<CorrelationReport> correlation_reports(
    const std::vector<PredictionRow>& rows, const std::vector<std::string>& groupings,
    std::vector<std::string>* warnings = nullptr);

inline constexpr double kRankingToleranceMos = 0.05;

// Fraction of adjacent same-excerpt bitrate steps where the prediction
// drops by more than `tolerance` as the bitrate increases. Absent when no
// excerpt has two bitrates.
std::optional<double> ranking_violation_rate(const std::vector<PredictionRow>& rows,
                                             double tolerance = kRankingToleranceMos);

void write_report_csv(const std::string& path,
                      const std::vector<CorrelationReport>& reports);
std::string format_report_table(const std::vector<CorrelationReport>& reports);

}  // namespace inse

#endif  // INSE_EVALUATION_HPP_
