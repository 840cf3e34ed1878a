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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

#include "inse/dataset.hpp"
#include "inse/errors.hpp"
#include "test_util.hpp"

using namespace inse;
namespace fs = std::filesystem;

#ifndef FAKE_CODEC_PATH
#define FAKE_CODEC_PATH "fake_codec"
#endif
#ifndef FAKE_ORACLE_PATH
#define FAKE_ORACLE_PATH "fake_oracle"
#endif

namespace {

DatasetEntry make_entry(const std::string& ref, const std::string& deg,
                        double label = 3.0, const std::string& codec = "testc") {
  DatasetEntry e;
  e.ref_path = ref;
  e.deg_path = deg;
  e.label = label;
  e.codec = codec;
  e.content_type = "music";
  e.excerpt_id = "ex1";
  return e;
}

Manifest manifest_with_ids(int count) {
  Manifest m;
  for (int i = 0; i < count; ++i) {
    DatasetEntry e = make_entry("r.wav", "d.wav");
    e.excerpt_id = "ex" + std::to_string(i);
    m.entries.push_back(e);
  }
  return m;
}

}  // namespace

TEST_CASE("dataset entries validate their fields") {
  CHECK_NOTHROW(make_entry("a.wav", "b.wav").validate());
  CHECK_THROWS_AS(make_entry("a.wav", "b.wav", 0.5).validate(), ArgumentError);
  CHECK_THROWS_AS(make_entry("a.wav", "b.wav", 5.5).validate(), ArgumentError);
  CHECK_THROWS_AS(make_entry("a,b.wav", "b.wav").validate(), ArgumentError);
  DatasetEntry bad_type = make_entry("a.wav", "b.wav");
  bad_type.content_type = "podcast";
  CHECK_THROWS_AS(bad_type.validate(), ArgumentError);
  DatasetEntry no_id = make_entry("a.wav", "b.wav");
  no_id.excerpt_id = "";
  CHECK_THROWS_AS(no_id.validate(), ArgumentError);
}

TEST_CASE("manifest round trips and forces ref-ref labels to 5") {
  test::TempDir dir("manifest");
  const std::string wav_a = dir.file("a.wav");
  const std::string wav_b = dir.file("b.wav");
  write_wav(wav_a, test::random_audio(4800, 1));
  write_wav(wav_b, test::random_audio(4800, 2));

  Manifest m;
  m.entries.push_back(make_entry(wav_a, wav_b, 3.21));
  m.entries.back().bitrate_kbps = 24;
  DatasetEntry self = make_entry(wav_a, wav_a, 5.0, "none");
  self.content_type = "speech";
  m.entries.push_back(self);

  const std::string path = dir.file("manifest.csv");
  m.save(path);
  const Manifest loaded = Manifest::load(path);
  REQUIRE(loaded.entries.size() == 2);
  CHECK(loaded.entries[0].label == doctest::Approx(3.21));
  CHECK(loaded.entries[0].bitrate_kbps.value() == 24);
  CHECK(loaded.entries[1].label == 5.0);
  CHECK(loaded.entries[1].is_ref_ref());

  // A ref-ref row whose label was hand-edited still loads as 5.
  {
    std::ofstream out(path, std::ios::app);
    out << wav_a << "," << wav_a << ",4.1,none,,speech,ex9\n";
  }
  const Manifest reloaded = Manifest::load(path);
  CHECK(reloaded.entries.back().label == 5.0);
}

TEST_CASE("manifest loading checks paths and header") {
  test::TempDir dir("manifest_bad");
  const std::string path = dir.file("manifest.csv");
  {
    std::ofstream out(path);
    out << "ref_path,deg_path,label,codec,bitrate_kbps,content_type,excerpt_id\n";
    out << dir.file("missing.wav") << "," << dir.file("missing.wav")
        << ",5,none,,music,ex0\n";
  }
  CHECK_THROWS_AS(Manifest::load(path), IoError);
  CHECK_NOTHROW(Manifest::load(path, /*check_paths=*/false));

  const std::string bad_header = dir.file("bad.csv");
  {
    std::ofstream out(bad_header);
    out << "nope\n";
  }
  CHECK_THROWS_AS(Manifest::load(bad_header, false), IoError);
}

TEST_CASE("segment_excerpts cuts 7.2 s chunks and drops the remainder") {
  const auto five = segment_excerpts(test::random_audio(5 * 345600, 3));
  REQUIRE(five.size() == 5);
  for (const auto& seg : five) CHECK(seg.frame_count() == 345600);

  // 40 s -> 5 segments, 4 s dropped.
  const auto with_tail = segment_excerpts(test::random_audio(40 * 48000, 4));
  CHECK(with_tail.size() == 5);

  CHECK(segment_excerpts(test::random_audio(1000, 5)).empty());

  // Segments are verbatim slices.
  const AudioBuffer audio = test::random_audio(2 * 345600 + 100, 6);
  const auto segs = segment_excerpts(audio);
  REQUIRE(segs.size() == 2);
  CHECK(segs[1].samples[0][0] == audio.samples[0][345600]);
}

TEST_CASE("split_folds covers every id exactly once") {
  const auto folds = split_folds(manifest_with_ids(100), 5, 7);
  REQUIRE(folds.size() == 5);
  std::set<std::string> seen;
  for (const auto& fold : folds) {
    CHECK(fold.val_ids.size() == 20);
    CHECK(fold.train_ids.size() == 80);
    for (const auto& id : fold.val_ids) {
      CHECK(!seen.count(id));
      seen.insert(id);
      CHECK(!std::binary_search(fold.train_ids.begin(), fold.train_ids.end(), id));
    }
  }
  CHECK(seen.size() == 100);
}

TEST_CASE("split_folds distributes remainders and is deterministic") {
  const auto folds = split_folds(manifest_with_ids(101), 5, 11);
  std::multiset<std::size_t> sizes;
  for (const auto& f : folds) sizes.insert(f.val_ids.size());
  CHECK(sizes == std::multiset<std::size_t>({21, 20, 20, 20, 20}));

  const auto again = split_folds(manifest_with_ids(101), 5, 11);
  for (int f = 0; f < 5; ++f) CHECK(folds[f].val_ids == again[f].val_ids);

  const auto other_seed = split_folds(manifest_with_ids(101), 5, 12);
  bool any_diff = false;
  for (int f = 0; f < 5; ++f)
    if (folds[f].val_ids != other_seed[f].val_ids) any_diff = true;
  CHECK(any_diff);

  CHECK_THROWS_AS(split_folds(manifest_with_ids(3), 5, 1), ArgumentError);
}

TEST_CASE("tool config resolves cli > env > file") {
  test::TempDir dir("config");
  const std::string path = dir.file("tools.conf");
  {
    std::ofstream out(path);
    out << "# comment\n";
    out << "codec.testc.exe = /from/file\n";
    out << "codec.testc.bitrates = 48, 16,24\n";
    out << "oracle.exe = /oracle/file\n";
  }
  ToolConfig config = ToolConfig::load_file(path);
  CHECK(config.codec_exe("testc").value() == "/from/file");
  CHECK(config.codec_bitrates("testc") == std::vector<int>({16, 24, 48}));
  CHECK(config.configured_codecs() == std::vector<std::string>({"testc"}));

  ::setenv("INSE_CODEC_TESTC_EXE", "/from/env", 1);
  CHECK(config.codec_exe("testc").value() == "/from/env");
  config.set_override("codec.testc.exe", "/from/cli");
  CHECK(config.codec_exe("testc").value() == "/from/cli");
  ::unsetenv("INSE_CODEC_TESTC_EXE");

  CHECK(!config.codec_exe("other").has_value());

  // Codecs configured only through the environment are discovered too.
  ::setenv("INSE_CODEC_ENVONLY_EXE", "/env/codec", 1);
  ToolConfig env_config;
  CHECK(env_config.configured_codecs() == std::vector<std::string>({"envonly"}));
  CHECK(env_config.codec_exe("envonly").value() == "/env/codec");
  ::unsetenv("INSE_CODEC_ENVONLY_EXE");
}

TEST_CASE("run_command captures output and exit codes") {
  const CommandResult ok = run_command({"/bin/sh", "-c", "echo hello"});
  CHECK(ok.exit_code == 0);
  CHECK(ok.output == "hello\n");

  const CommandResult fail = run_command({"/bin/sh", "-c", "echo oops >&2; exit 7"});
  CHECK(fail.exit_code == 7);
  CHECK(fail.output == "oops\n");
}

TEST_CASE("xcorr_lag recovers synthetic shifts") {
  const AudioBuffer base = test::random_audio(20000, 21, 0.5);
  for (long shift : {0L, 313L, -200L, 4000L}) {
    std::vector<float> delayed(base.frame_count(), 0.0f);
    for (std::size_t i = 0; i < delayed.size(); ++i) {
      const long j = static_cast<long>(i) - shift;
      if (j >= 0 && j < static_cast<long>(base.frame_count()))
        delayed[i] = base.samples[0][j];
    }
    CHECK(xcorr_lag(base.samples[0], delayed, kCodecAlignMaxLag) == shift);
  }
}

TEST_CASE("encode_decode aligns the decode to the reference length") {
  test::TempDir dir("codec");
  const std::string ref_path = dir.file("ref.wav");
  write_wav(ref_path, test::random_audio(48000, 33, 0.4));

  ToolConfig tools;
  tools.set_override("codec.testc.exe", FAKE_CODEC_PATH);
  tools.set_override("codec.testc.bitrates", "16,24,48,999");

  const std::string deg_path = encode_decode(ref_path, "testc", 48, dir.str(), tools);
  const AudioBuffer ref = read_wav(ref_path);
  const AudioBuffer deg = read_wav(deg_path);
  REQUIRE(deg.frame_count() == ref.frame_count());

  // After alignment the decode sits on top of the reference.
  CHECK(xcorr_lag(ref.samples[0], deg.samples[0], kCodecAlignMaxLag) == 0);
  double err = 0.0, sig = 0.0;
  for (std::size_t i = 0; i < ref.frame_count(); ++i) {
    const double d = deg.samples[0][i] - 0.98 * ref.samples[0][i];
    err += d * d;
    sig += ref.samples[0][i] * ref.samples[0][i];
  }
  CHECK(err / sig < 1e-3);

  CHECK_THROWS_AS(encode_decode(ref_path, "nosuch", 48, dir.str(), tools), ConfigError);
  CHECK_THROWS_AS(encode_decode(ref_path, "testc", 17, dir.str(), tools), ArgumentError);
  CHECK_THROWS_AS(encode_decode(ref_path, "testc", 999, dir.str(), tools), CodecError);
}

TEST_CASE("WAV formats round trip at their native precision") {
  test::TempDir dir("wav");
  const AudioBuffer mono = test::random_audio(4800, 51, 0.7);
  const AudioBuffer stereo = test::random_audio(4800, 52, 0.7, 2);

  struct Case {
    WavFormat format;
    double tolerance;
  };
  for (const Case c : {Case{WavFormat::kPcm16, 1.0 / 32768},
                       Case{WavFormat::kPcm24, 1.0 / 8388608},
                       Case{WavFormat::kFloat32, 0.0}}) {
    for (const AudioBuffer* audio : {&mono, &stereo}) {
      const std::string path = dir.file("x.wav");
      write_wav(path, *audio, c.format);
      const AudioBuffer loaded = read_wav(path);
      REQUIRE(loaded.sample_rate == audio->sample_rate);
      REQUIRE(loaded.channel_count() == audio->channel_count());
      REQUIRE(loaded.frame_count() == audio->frame_count());
      for (int ch = 0; ch < loaded.channel_count(); ++ch)
        for (std::size_t i = 0; i < loaded.frame_count(); ++i)
          CHECK(std::abs(loaded.samples[ch][i] - audio->samples[ch][i]) <=
                c.tolerance);
    }
  }
  CHECK_THROWS_AS(read_wav(dir.file("nope.wav")), IoError);
}

TEST_CASE("encode_decode aligns stereo decodes on the mid signal") {
  test::TempDir dir("codec_stereo");
  const std::string ref_path = dir.file("ref.wav");
  write_wav(ref_path, test::random_audio(48000, 35, 0.4, 2));

  ToolConfig tools;
  tools.set_override("codec.testc.exe", FAKE_CODEC_PATH);
  tools.set_override("codec.testc.bitrates", "48");

  const std::string deg_path = encode_decode(ref_path, "testc", 48, dir.str(), tools);
  const AudioBuffer ref = read_wav(ref_path);
  const AudioBuffer deg = read_wav(deg_path);
  REQUIRE(deg.channel_count() == 2);
  REQUIRE(deg.frame_count() == ref.frame_count());
  for (int ch = 0; ch < 2; ++ch)
    CHECK(xcorr_lag(ref.samples[ch], deg.samples[ch], kCodecAlignMaxLag) == 0);
}

TEST_CASE("label_with_oracle: self pairs, executable and CSV fallback") {
  test::TempDir dir("oracle");
  const std::string ref_path = dir.file("ref.wav");
  write_wav(ref_path, test::random_audio(48000, 41, 0.4));

  ToolConfig none;
  CHECK(label_with_oracle(ref_path, ref_path, none) == 5.0);
  CHECK_THROWS_AS(label_with_oracle(ref_path, dir.file("other.wav"), none), LabelError);

  ToolConfig tools;
  tools.set_override("codec.testc.exe", FAKE_CODEC_PATH);
  tools.set_override("codec.testc.bitrates", "16,128");
  tools.set_override("oracle.exe", FAKE_ORACLE_PATH);

  const std::string low = encode_decode(ref_path, "testc", 16, dir.str(), tools);
  const std::string high = encode_decode(ref_path, "testc", 128, dir.str(), tools);
  const double mos_low = label_with_oracle(ref_path, low, tools);
  const double mos_high = label_with_oracle(ref_path, high, tools);
  CHECK(mos_low >= 1.0);
  CHECK(mos_high <= 5.0);
  CHECK(mos_high > mos_low);  // quality increases with bitrate

  const std::string csv = dir.file("labels.csv");
  {
    std::ofstream out(csv);
    out << "ref_path,deg_path,mos\n";
    out << ref_path << "," << low << ",3.21\n";
  }
  ToolConfig with_csv;
  with_csv.set_override("oracle.labels_csv", csv);
  CHECK(label_with_oracle(ref_path, low, with_csv) == doctest::Approx(3.21));
  CHECK_THROWS_AS(label_with_oracle(ref_path, high, with_csv), LabelError);
}
