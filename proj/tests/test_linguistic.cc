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


#include <cstdlib>
#include <fstream>

#include <gtest/gtest.h>

#include "h2nh/errors.hpp"
#include "h2nh/linguistic.hpp"
#include "test_util.hpp"

namespace h2nh {
namespace {

using linguistic::LinguisticFeatures;

TEST(Ssl, FrameCountFormula) {
  EXPECT_EQ(linguistic::ssl_frame_count(16000), (16000 - 400) / 320 + 1);
  EXPECT_EQ(linguistic::ssl_frame_count(96000), 299);
  EXPECT_EQ(linguistic::ssl_frame_count(400), 1);
  EXPECT_EQ(linguistic::ssl_frame_count(100), 1);
}

TEST(StubBackend, ShapeAndDeterminism) {
  linguistic::StubSslBackend a(3), b(3), c(4);
  auto clip = dsp::resample(test::voice(1.0, 1), 16000);
  auto fa = linguistic::extract_features(clip, a);
  EXPECT_EQ(fa.dim(), 1024);
  EXPECT_EQ(fa.num_frames(), linguistic::ssl_frame_count(clip.size()));
  EXPECT_DOUBLE_EQ(fa.stride_ms, 20.0);
  EXPECT_DOUBLE_EQ(fa.window_ms, 25.0);
  EXPECT_TRUE(torch::equal(fa.frames, linguistic::extract_features(clip, b).frames));
  EXPECT_FALSE(torch::equal(fa.frames, linguistic::extract_features(clip, c).frames));
  EXPECT_NE(a.id(), c.id());
}

TEST(StubBackend, SilenceMapsToZero) {
  linguistic::StubSslBackend stub;
  AudioClip silence;
  silence.sample_rate = 16000;
  silence.samples.assign(8000, 0.0f);
  auto f = stub.encode(silence);
  EXPECT_EQ(f.abs().max().item<float>(), 0.0f);
}

TEST(Extract, RequiresSixteenKilohertz) {
  linguistic::StubSslBackend stub;
  EXPECT_THROW(linguistic::extract_features(test::voice(0.2), stub), ConfigError);
}

TEST(Retime, LinearAlignCornersOracle) {
  LinguisticFeatures f;
  f.frames = torch::tensor({{0.0f, 10.0f, 20.0f}, {1.0f, 1.0f, 4.0f}});
  auto r = linguistic::retime_to_hop(f, 5);
  ASSERT_EQ(r.size(0), 2);
  ASSERT_EQ(r.size(1), 5);
  // Target position j maps to source position j * (3 - 1) / (5 - 1).
  for (int d = 0; d < 2; ++d)
    for (int j = 0; j < 5; ++j) {
      const double pos = j * 2.0 / 4.0;
      const int lo = static_cast<int>(std::floor(pos));
      const int hi = std::min(lo + 1, 2);
      const double w = pos - lo;
      const double expected = (1 - w) * f.frames[d][lo].item<double>() +
                              w * f.frames[d][hi].item<double>();
      EXPECT_NEAR(r[d][j].item<double>(), expected, 1e-6);
    }
  EXPECT_THROW(linguistic::retime_to_hop(f, 0), DomainError);
}

TEST(Retime, SingleFrameIsBroadcast) {
  LinguisticFeatures f;
  f.frames = torch::tensor({{2.0f}, {3.0f}});
  auto r = linguistic::retime_to_hop(f, 4);
  EXPECT_TRUE(torch::equal(r, torch::tensor({{2.0f, 2.0f, 2.0f, 2.0f},
                                             {3.0f, 3.0f, 3.0f, 3.0f}})));
}

TEST(Backend, FactoryRejectsUnknown) {
  linguistic::LinguisticConfig cfg;
  EXPECT_EQ(linguistic::make_backend(cfg)->feature_dim(), 1024);
  cfg.backend = "nope";
  EXPECT_THROW(linguistic::make_backend(cfg), ConfigError);
  cfg.backend = "torchscript";
  cfg.weights_path = "/nonexistent/model.pt";
  EXPECT_THROW(linguistic::make_backend(cfg), ConfigError);
}

// Scripted model returning 13 hidden states where state i is the framed
// waveform mean plus i, so the selected layer is visible in the output.
constexpr const char* kScript = R"(
import sys, torch
class M(torch.nn.Module):
    def forward(self, x: torch.Tensor):
        frames = x.unfold(1, 400, 320)
        base = frames.mean(-1, keepdim=True).repeat(1, 1, 8)
        return [base + float(i) for i in range(13)]
torch.jit.script(M()).save(sys.argv[1])
)";

TEST(TorchScriptBackend, SelectsRequestedLayer) {
  auto dir = test::temp_dir("ts");
  const auto script = dir / "make.py";
  const auto model = dir / "ssl.pt";
  std::ofstream(script) << kScript;
  const std::string cmd = std::string(H2NH_PYTHON) + " " + script.string() + " " +
                          model.string() + " > /dev/null 2>&1";
  if (std::string(H2NH_PYTHON).empty() || std::system(cmd.c_str()) != 0)
    GTEST_SKIP() << "python with torch is not available";

  linguistic::TorchScriptSslBackend backend(model, 12);
  EXPECT_EQ(backend.feature_dim(), 8);
  AudioClip clip;
  clip.sample_rate = 16000;
  clip.samples.assign(16000, 0.0f);
  auto f = linguistic::extract_features(clip, backend);
  EXPECT_EQ(f.num_frames(), linguistic::ssl_frame_count(16000));
  EXPECT_NEAR(f.frames.mean().item<double>(), 12.0, 1e-6);

  linguistic::TorchScriptSslBackend layer3(model, 3);
  EXPECT_NEAR(layer3.encode(clip).mean().item<double>(), 3.0, 1e-6);
  EXPECT_THROW(linguistic::TorchScriptSslBackend(model, 20), ConfigError);
}

}  // namespace
}  // namespace h2nh
