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


#include <gtest/gtest.h>

#include "h2nh/conversion.hpp"
#include "h2nh/errors.hpp"
#include "h2nh/training.hpp"
#include "model_util.hpp"
#include "test_util.hpp"

namespace h2nh {
namespace {

using conversion::ConversionRequest;
using conversion::VoiceModel;

VoiceModel tiny_voice_model() {
  training::TrainState state(RunConfig::tiny());
  test::randomize_flow(state.generator());
  return VoiceModel::from_state(state);
}

TEST(Convert, OutputLengthFollowsSourceFrames) {
  auto model = tiny_voice_model();
  ConversionRequest req{test::voice(6.0, 1), test::voice(1.0, 2, 300.0), 0.667, 1};
  ASSERT_EQ(req.source.size(), 264600);
  auto out = model.convert(req);
  EXPECT_EQ(out.size(), 1203 * 220);
  EXPECT_EQ(out.size(), 264660);
  EXPECT_EQ(out.sample_rate, 44100);
}

TEST(Convert, ResamplesForeignRates) {
  auto model = tiny_voice_model();
  ConversionRequest req{test::voice(0.5, 1, 150.0, 16000), test::voice(0.5, 2), 0.667, 1};
  auto out = model.convert(req);
  EXPECT_EQ(out.size(), (1 + 22050 / 220) * 220);
}

TEST(Convert, Determinism) {
  auto model = tiny_voice_model();
  ConversionRequest req{test::voice(0.5, 1), test::voice(0.5, 2, 250.0), 0.667, 7};
  EXPECT_EQ(model.convert(req).samples, model.convert(req).samples);
  auto other_seed = req;
  other_seed.seed = 8;
  EXPECT_NE(model.convert(req).samples, model.convert(other_seed).samples);
  req.temperature = 0.0;
  other_seed.temperature = 0.0;
  EXPECT_EQ(model.convert(req).samples, model.convert(other_seed).samples);
}

TEST(Convert, ReferenceChangesOutputNotLength) {
  auto model = tiny_voice_model();
  auto source = test::voice(0.5, 1);
  auto a = model.convert({source, test::voice(0.7, 2, 120.0), 0.0, 1});
  auto b = model.convert({source, test::noise(30000, 3), 0.0, 1});
  ASSERT_EQ(a.size(), b.size());
  const auto& pipe = model.pipeline();
  auto ma = pipe.reference_mel(pipe.linear(a)).frames;
  auto mb = pipe.reference_mel(pipe.linear(b)).frames;
  EXPECT_GT((ma - mb).pow(2).sum().item<double>(), 0.0);
}

TEST(Convert, Errors) {
  VoiceModel empty;
  EXPECT_FALSE(empty.ready());
  ConversionRequest req{test::voice(0.2, 1), test::voice(0.2, 2), 0.667, 0};
  EXPECT_THROW(empty.convert(req), StateError);
  EXPECT_THROW(empty.reconstruct(req.source), StateError);
  auto model = tiny_voice_model();
  auto bad = req;
  bad.source = AudioClip{};
  EXPECT_THROW(model.convert(bad), DomainError);
  bad = req;
  bad.temperature = -1.0;
  EXPECT_THROW(model.convert(bad), DomainError);
  EXPECT_THROW(VoiceModel::from_checkpoint("/nonexistent/ckpt.pt"), StateError);
}

TEST(Reconstruct, LengthAndMeanDeterminism) {
  auto model = tiny_voice_model();
  auto clip = test::voice(0.5, 4);
  auto a = model.reconstruct(clip, 0.0, 1);
  auto b = model.reconstruct(clip, 0.0, 2);
  EXPECT_EQ(a.size(), (1 + clip.size() / 220) * 220);
  EXPECT_EQ(a.samples, b.samples);
  EXPECT_NE(model.reconstruct(clip, 1.0, 1).samples, a.samples);
}

TEST(VoiceModel, SnapshotIsIndependentOfTraining) {
  auto cfg = RunConfig::tiny();
  training::TrainState state(cfg);
  auto model = VoiceModel::from_state(state);
  auto clip = test::voice(0.3, 5);
  auto before = model.reconstruct(clip, 0.0);
  {
    torch::NoGradGuard no_grad;
    for (auto& p : state.generator()->parameters()) p.add_(0.1);
  }
  EXPECT_EQ(model.reconstruct(clip, 0.0).samples, before.samples);
}

TEST(VoiceModel, LoadsFromCheckpoint) {
  auto cfg = RunConfig::tiny();
  training::TrainState state(cfg);
  test::randomize_flow(state.generator());
  auto dir = test::temp_dir("vm");
  training::save_checkpoint(state, dir / "c.pt");
  auto a = VoiceModel::from_state(state);
  auto b = VoiceModel::from_checkpoint(dir / "c.pt");
  ConversionRequest req{test::voice(0.3, 1), test::voice(0.3, 2), 0.5, 3};
  EXPECT_EQ(a.convert(req).samples, b.convert(req).samples);
}

}  // namespace
}  // namespace h2nh
