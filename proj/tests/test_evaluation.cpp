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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "inse/errors.hpp"
#include "inse/evaluation.hpp"
#include "test_util.hpp"

using namespace inse;

namespace {

std::vector<PredictionRow> ladder_rows(const std::vector<double>& predictions,
                                       const std::string& excerpt = "ex0") {
  std::vector<PredictionRow> rows;
  const std::vector<int> bitrates = {16, 24, 32, 48, 80};
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    PredictionRow r;
    r.deg_path = excerpt + "_" + std::to_string(i);
    r.excerpt_id = excerpt;
    r.codec = "heaac";
    r.bitrate_kbps = bitrates.at(i);
    r.prediction = predictions[i];
    r.label = 1.0 + static_cast<double>(i);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace

TEST_CASE("pearson endpoints and the naive-formula oracle") {
  const std::vector<double> x = {1.0, 2.0, 3.0, 4.0};
  CHECK(pearson(x, x) == doctest::Approx(1.0));
  std::vector<double> neg = x;
  for (double& v : neg) v = -v;
  CHECK(pearson(x, neg) == doctest::Approx(-1.0));

  const std::vector<double> y = {2.0, 4.0, 5.0, 4.0};
  CHECK(pearson(x, y) == doctest::Approx(test::naive_pearson(x, y)).epsilon(1e-12));

  CHECK_THROWS_AS(pearson({1.0, 1.0, 1.0}, {1.0, 2.0, 3.0}), UndefinedCorrelationError);
  CHECK_THROWS_AS(pearson({1.0, 2.0}, {7.0, 7.0}), UndefinedCorrelationError);
  CHECK_THROWS_AS(pearson({1.0}, {2.0}), ArgumentError);
  CHECK_THROWS_AS(pearson({1.0, 2.0}, {1.0, 2.0, 3.0}), ArgumentError);
}

TEST_CASE("pearson is affine invariant") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> dist(0.0, 2.0);
  std::vector<double> x(40), y(40);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = dist(rng);
    y[i] = 0.3 * x[i] + dist(rng);
  }
  const double base = pearson(x, y);
  std::vector<double> ax = x, cy = y;
  for (double& v : ax) v = 2.5 * v + 7.0;
  for (double& v : cy) v = 0.1 * v - 3.0;
  CHECK(pearson(ax, cy) == doctest::Approx(base).epsilon(1e-12));
  for (double& v : ax) v = -v;  // one negative scale flips the sign
  CHECK(pearson(ax, cy) == doctest::Approx(-base).epsilon(1e-12));
}

TEST_CASE("spearman rank behavior") {
  const std::vector<double> x = {0.3, 1.8, 2.1, 5.0, 9.9};
  std::vector<double> monotone = x;
  for (double& v : monotone) v = std::exp(v) + 3.0;  // strictly increasing map
  CHECK(spearman(x, monotone) == doctest::Approx(1.0));

  std::vector<double> reversed = x;
  std::reverse(reversed.begin(), reversed.end());
  CHECK(spearman(x, reversed) == doctest::Approx(-1.0));

  const std::vector<double> with_ties = {1.0, 2.0, 2.0, 3.0, 2.0, 1.0};
  const std::vector<double> other = {4.0, 4.0, 5.0, 9.0, 1.0, 1.0};
  CHECK(average_ranks(with_ties) == test::brute_force_ranks(with_ties));
  CHECK(spearman(with_ties, other) ==
        doctest::Approx(test::naive_spearman(with_ties, other)).epsilon(1e-12));
}

TEST_CASE("metric oracles agree on many random vectors with ties") {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> quant(-8, 8);
  std::uniform_int_distribution<int> len_dist(5, 60);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = len_dist(rng);
    std::vector<double> x(n), y(n);
    for (int i = 0; i < n; ++i) {
      x[i] = quant(rng) * 0.5;  // coarse grid forces ties
      y[i] = quant(rng) * 0.5 + 0.1 * x[i];
    }
    try {
      const double lib_p = pearson(x, y);
      CHECK(lib_p == doctest::Approx(test::naive_pearson(x, y)).epsilon(1e-10));
      const double lib_s = spearman(x, y);
      CHECK(lib_s == doctest::Approx(test::naive_spearman(x, y)).epsilon(1e-10));
    } catch (const UndefinedCorrelationError&) {
      // Constant draws are legitimately undefined; the oracle would divide
      // by zero on them too.
    }
  }
}

TEST_CASE("correlation reports: self-evaluation and grouping contract") {
  std::vector<PredictionRow> rows;
  for (int i = 0; i < 6; ++i) {
    PredictionRow r;
    r.deg_path = "p" + std::to_string(i);
    r.excerpt_id = "e" + std::to_string(i / 3);
    r.codec = i % 2 ? "heaac" : "aac";
    r.bitrate_kbps = 16 * (i + 1);
    r.label = 1.0 + 0.7 * i;
    r.prediction = r.label;  // identical to labels
    rows.push_back(r);
  }

  const auto reports = correlation_reports(rows, {"overall", "codec"});
  REQUIRE(reports.size() == 3);  // overall + {aac, heaac}
  for (const auto& r : reports) {
    CHECK(r.rp == doctest::Approx(1.0));
    CHECK(r.rs == doctest::Approx(1.0));
    CHECK(r.mse == doctest::Approx(0.0));
  }
  CHECK(reports[0].group_key == "overall");
  CHECK(reports[0].n == 6);

  // Row order never matters.
  std::vector<PredictionRow> shuffled = rows;
  std::reverse(shuffled.begin(), shuffled.end());
  const auto reports2 = correlation_reports(shuffled, {"overall", "codec"});
  REQUIRE(reports2.size() == reports.size());
  for (std::size_t i = 0; i < reports.size(); ++i) {
    CHECK(reports[i].group_value == reports2[i].group_value);
    CHECK(reports[i].rp == doctest::Approx(reports2[i].rp).epsilon(1e-12));
    CHECK(reports[i].mse == doctest::Approx(reports2[i].mse).epsilon(1e-12));
  }

  // Tiny groups are skipped with a warning.
  std::vector<std::string> warnings;
  std::vector<PredictionRow> one_each = {rows[0], rows[1]};
  one_each[0].codec = "usac";
  const auto skipped = correlation_reports(one_each, {"codec"}, &warnings);
  CHECK(skipped.empty());
  CHECK(warnings.size() == 2);

  CHECK_THROWS_AS(correlation_reports(rows, {"loudness"}), ArgumentError);
}

TEST_CASE("ranking violation rate counts adjacent inversions") {
  CHECK(ranking_violation_rate(ladder_rows({1.0, 2.0, 3.0, 4.0, 5.0})).value() == 0.0);
  CHECK(ranking_violation_rate(ladder_rows({5.0, 4.0, 3.0, 2.0, 1.0})).value() == 1.0);
  // One inversion among four adjacent pairs.
  CHECK(ranking_violation_rate(ladder_rows({1.0, 2.0, 1.5, 3.0, 4.0})).value() ==
        doctest::Approx(0.25));
  // Dips inside the tolerance are not violations.
  CHECK(ranking_violation_rate(ladder_rows({1.0, 2.0, 1.96, 3.0, 4.0})).value() == 0.0);

  // Labels were constructed monotone in bitrate, so the oracle itself
  // never violates the ranking.
  auto rows = ladder_rows({1.0, 2.0, 3.0, 4.0, 5.0});
  for (auto& r : rows) r.prediction = r.label;
  CHECK(ranking_violation_rate(rows).value() == 0.0);

  // No bitrate metadata -> no ladder -> absent.
  std::vector<PredictionRow> no_ladder(2);
  no_ladder[0].excerpt_id = no_ladder[1].excerpt_id = "x";
  CHECK(!ranking_violation_rate(no_ladder).has_value());
}

TEST_CASE("report CSV and table formatting") {
  test::TempDir dir("report");
  std::vector<CorrelationReport> reports(2);
  reports[0] = {"overall", "", 10, 0.93, 0.91, 0.12};
  reports[1] = {"codec", "heaac", 5, 0.88, 0.86, 0.2};
  const std::string path = dir.file("report.csv");
  write_report_csv(path, reports);

  std::ifstream in(path);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header == "group_key,group_value,n,rp,rs,mse");
  CHECK(row == "overall,,10,0.930000,0.910000,0.120000");

  const std::string table = format_report_table(reports);
  CHECK(table.find("heaac") != std::string::npos);
  CHECK(table.find("0.8800") != std::string::npos);
}

TEST_CASE("evaluate scores a manifest against a checkpoint, with optional "
          "subjective scores") {
  test::TempDir dir("evaluate");
  Model<float> model = build_model<float>(ModelSpec::reduced(4), 9, /*validate=*/false);
  NormStats stats{std::vector<double>(32, -60.0), std::vector<double>(32, 20.0)};
  const std::string ckpt = dir.file("model.ckpt");
  save_checkpoint(ckpt, model, stats, CheckpointMeta{});

  Manifest manifest;
  for (int i = 0; i < 3; ++i) {
    const std::string ref = dir.file("ref" + std::to_string(i) + ".wav");
    const std::string deg = dir.file("deg" + std::to_string(i) + ".wav");
    write_wav(ref, test::random_audio(345600, 100 + i, 0.3));
    write_wav(deg, test::random_audio(345600, 200 + i, 0.3));
    DatasetEntry e;
    e.ref_path = ref;
    e.deg_path = deg;
    e.label = 2.0 + i;
    e.codec = "testc";
    e.bitrate_kbps = 16 * (i + 1);
    e.content_type = "music";
    e.excerpt_id = "only";
    manifest.entries.push_back(e);
  }

  EvaluateOptions options;
  options.groupings = {"overall"};
  std::vector<std::string> warnings;
  options.warnings = &warnings;
  const EvaluationResult by_label = evaluate(ckpt, manifest, options);
  CHECK(by_label.predictions.size() == 3);
  CHECK(by_label.ranking_violations.has_value());
  for (const auto& r : by_label.predictions) {
    CHECK(r.prediction >= 1.0);
    CHECK(r.prediction <= 5.0);
  }

  // Subjective CSV replaces the manifest labels; missing rows are skipped.
  const std::string subjective = dir.file("subjective.csv");
  {
    std::ofstream out(subjective);
    out << "deg_path,score\n";
    out << manifest.entries[0].deg_path << ",81.5\n";
    out << manifest.entries[1].deg_path << ",44.0\n";
  }
  options.subjective_csv = subjective;
  const EvaluationResult by_subjective = evaluate(ckpt, manifest, options);
  REQUIRE(by_subjective.predictions.size() == 2);
  CHECK(by_subjective.predictions[0].label == doctest::Approx(81.5));
  bool skipped_warning = false;
  for (const auto& w : warnings)
    if (w.find("no subjective score") != std::string::npos) skipped_warning = true;
  CHECK(skipped_warning);
}

TEST_CASE("file-pair prediction windows arbitrary-length audio") {
  test::TempDir dir("predict");
  Model<float> model = build_model<float>(ModelSpec::reduced(4), 3, /*validate=*/false);
  NormStats stats{std::vector<double>(32, -60.0), std::vector<double>(32, 20.0)};

  // 7.2 s: single window.
  const std::string a = dir.file("a.wav");
  write_wav(a, test::random_audio(345600, 1, 0.3));
  const double single = predict_file_pair(model, stats, a, a);
  CHECK(single >= 1.0);
  CHECK(single <= 5.0);

  // 18 s: windows at 0 s, 7.2 s, and right-aligned 10.8 s.
  const std::string b = dir.file("b.wav");
  write_wav(b, test::random_audio(48000 * 18, 2, 0.3));
  CHECK_NOTHROW(predict_file_pair(model, stats, b, b));

  // Stereo is downmixed before scoring.
  const std::string c = dir.file("c.wav");
  write_wav(c, test::random_audio(345600, 3, 0.3, 2));
  CHECK_NOTHROW(predict_file_pair(model, stats, c, c));

  // Shorter than one window is rejected.
  const std::string d = dir.file("d.wav");
  write_wav(d, test::random_audio(48000, 4, 0.3));
  CHECK_THROWS_AS(predict_file_pair(model, stats, d, d), ArgumentError);
}
