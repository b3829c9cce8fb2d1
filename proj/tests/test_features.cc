// Copyright (c) 2026 The h2nh-vc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <fstream>

#include <gtest/gtest.h>

#include "h2nh/config.hpp"
#include "h2nh/errors.hpp"
#include "h2nh/features.hpp"
#include "test_util.hpp"

namespace h2nh {
namespace {

features::FeaturePipeline make_pipeline() {
  return features::FeaturePipeline(features::PipelineConfig{},
                                   std::make_shared<linguistic::StubSslBackend>(0));
}

TEST(Features, AllTracksShareTheFrameGrid) {
  auto pipeline = make_pipeline();
  for (int64_t len : {22000, 44100}) {
    auto clip = test::voice(len / 44100.0, 1);
    clip.samples.resize(len);
    auto f = pipeline.extract(clip, 3);
    const int64_t T = 1 + len / 220;
    EXPECT_EQ(f.num_frames(), T);
    EXPECT_EQ(f.x_linear.size(0), 442);
    EXPECT_EQ(f.mel.size(0), 128);
    EXPECT_EQ(f.mel.size(1), T);
    EXPECT_EQ(f.energy.size(0), T);
    EXPECT_EQ(f.ling.size(0), 1024);
    EXPECT_EQ(f.ling.size(1), T);
    EXPECT_EQ(f.wave.size(0), T * 220);
    EXPECT_EQ(f.num_samples, len);
  }
}

TEST(Features, PerturbationOnlyTouchesContentTrack) {
  auto pipeline = make_pipeline();
  auto clip = test::voice(0.5, 2);
  auto a = pipeline.extract(clip, 1);
  auto b = pipeline.extract(clip, 1);
  auto c = pipeline.extract(clip, 2);
  auto plain = pipeline.extract_unperturbed(clip);
  EXPECT_TRUE(torch::equal(a.ling, b.ling));
  EXPECT_FALSE(torch::equal(a.ling, c.ling));
  EXPECT_FALSE(torch::equal(a.ling, plain.ling));
  EXPECT_TRUE(torch::equal(a.x_linear, plain.x_linear));
  EXPECT_TRUE(torch::equal(a.energy, plain.energy));
}

TEST(Features, ResamplesOnIngest) {
  auto pipeline = make_pipeline();
  auto clip = test::voice(0.5, 3, 150.0, 22050);
  auto f = pipeline.extract_unperturbed(clip);
  EXPECT_EQ(f.num_samples, 22050);
  EXPECT_EQ(f.num_frames(), 1 + 22050 / 220);
  EXPECT_THROW(pipeline.extract_unperturbed(AudioClip{}), DomainError);
}

TEST(Cache, RoundTripWithHeader) {
  auto pipeline = make_pipeline();
  auto clip = test::voice(0.3, 4);
  clip.source_path = "/data/x.wav";
  clip.category = ClipCategory::kAnimal;
  auto f = pipeline.extract(clip, 9);
  auto dir = test::temp_dir("cache");
  features::write_cache(dir / "x.h2nf", f, "abc123");
  EXPECT_FALSE(std::filesystem::exists(dir / "x.h2nf.tmp"));
  auto header = features::read_cache_header(dir / "x.h2nf");
  EXPECT_EQ(header["config_hash"], "abc123");
  EXPECT_EQ(header["version"], features::kCacheVersion);
  EXPECT_EQ(header["frames"], f.num_frames());
  EXPECT_EQ(header["category"], "animal");
  std::set<std::string> names;
  for (const auto& a : header["arrays"]) names.insert(a["name"].get<std::string>());
  EXPECT_EQ(names, (std::set<std::string>{"wave", "x_linear", "mel", "energy", "ling"}));

  auto entry = features::read_cache(dir / "x.h2nf");
  EXPECT_TRUE(torch::equal(entry.features.x_linear, f.x_linear));
  EXPECT_TRUE(torch::equal(entry.features.mel, f.mel));
  EXPECT_TRUE(torch::equal(entry.features.energy, f.energy));
  EXPECT_TRUE(torch::equal(entry.features.ling, f.ling));
  EXPECT_TRUE(torch::equal(entry.features.wave, f.wave));
  EXPECT_EQ(entry.features.num_samples, f.num_samples);
  EXPECT_EQ(entry.features.source_path, "/data/x.wav");
  EXPECT_EQ(entry.features.category, ClipCategory::kAnimal);
}

TEST(Cache, RejectsCorruptFiles) {
  auto dir = test::temp_dir("cache_bad");
  std::ofstream(dir / "bad.h2nf") << "not a cache";
  EXPECT_THROW(features::read_cache(dir / "bad.h2nf"), FormatError);
  EXPECT_THROW(features::read_cache(dir / "missing.h2nf"), FormatError);
}

}  // namespace
}  // namespace h2nh
