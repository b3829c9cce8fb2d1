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
#include <random>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>

#include "h2nh/errors.hpp"
#include "h2nh/evaluation.hpp"
#include "test_util.hpp"

namespace h2nh {
namespace {

using evaluation::pcc_energy;
using evaluation::rmse_energy;
using V = std::vector<double>;

TEST(Pcc, TabulatedExamples) {
  V a{0.3, -1.2, 0.8, 2.0, -0.1};
  EXPECT_NEAR(*pcc_energy(a, a), 1.0, 1e-12);
  V neg;
  for (double x : a) neg.push_back(-x);
  EXPECT_NEAR(*pcc_energy(a, neg), -1.0, 1e-12);
  EXPECT_NEAR(*pcc_energy(V{1, 2, 3}, V{2, 4, 6}), 1.0, 1e-12);
}

TEST(Pcc, MatchesTextbookFormula) {
  V a{1, 2, 3, 4, 5}, b{2, 1, 4, 3, 5};
  // Sum of products of deviations 8, both sums of squares 10.
  EXPECT_NEAR(*pcc_energy(a, b), 0.8, 1e-12);
}

TEST(Pcc, AffineInvariance) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  std::uniform_real_distribution<double> u(0.01, 10.0);
  for (int trial = 0; trial < 50; ++trial) {
    V a(40), b(40), c(40);
    for (auto& x : a) x = n(rng);
    for (auto& x : b) x = n(rng);
    const double scale = u(rng), shift = 5 * n(rng);
    for (size_t i = 0; i < b.size(); ++i) c[i] = scale * b[i] + shift;
    EXPECT_NEAR(*pcc_energy(a, c), *pcc_energy(a, b), 1e-9);
  }
}

TEST(Pcc, UndefinedAndErrors) {
  EXPECT_FALSE(pcc_energy(V{1, 1, 1}, V{1, 2, 3}));
  EXPECT_FALSE(pcc_energy(V{1, 2, 3}, V{4, 4, 4}));
  EXPECT_THROW(pcc_energy(V{1, 2}, V{1, 2, 3}), DimensionError);
  EXPECT_THROW(pcc_energy(V{1}, V{1}), DomainError);
}

TEST(Rmse, TabulatedExamples) {
  V a{0.5, -2.0, 3.0};
  EXPECT_EQ(rmse_energy(a, a), 0.0);
  EXPECT_NEAR(rmse_energy(V{0, 0}, V{1, 1}), 1.0, 1e-12);
  EXPECT_NEAR(rmse_energy(V{0, 2}, V{2, 0}), 2.0, 1e-12);
  EXPECT_THROW(rmse_energy(V{0, 2}, V{2}), DimensionError);
}

TEST(Rmse, TriangleInequality) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 100; ++trial) {
    V a(30), b(30), c(30);
    for (auto* v : {&a, &b, &c})
      for (auto& x : *v) x = n(rng);
    EXPECT_LE(rmse_energy(a, c), rmse_energy(a, b) + rmse_energy(b, c) + 1e-12);
  }
}

TEST(ErrorRates, EditDistance) {
  EXPECT_EQ(evaluation::character_error_rate("kitten", "kitten"), 0.0);
  EXPECT_NEAR(evaluation::character_error_rate("kitten", "sitting"), 3.0 / 6.0, 1e-12);
  EXPECT_NEAR(evaluation::word_error_rate("the cat sat", "the bat sat down"), 2.0 / 3.0, 1e-12);
  EXPECT_EQ(evaluation::word_error_rate("", ""), 0.0);
}

std::vector<evaluation::EvalPair> identical_pairs() {
  std::vector<evaluation::EvalPair> pairs;
  for (int i = 0; i < 2; ++i) {
    auto clip = test::voice(0.4, i);
    pairs.push_back({"p" + std::to_string(i), clip, clip, i == 0});
  }
  return pairs;
}

TEST(EvaluatePairs, IdenticalClips) {
  auto report = evaluation::evaluate_pairs(identical_pairs());
  EXPECT_EQ(report.count, 2);
  EXPECT_NEAR(*report.mean_pcc_e, 1.0, 1e-12);
  EXPECT_NEAR(*report.mean_rmse_e, 0.0, 1e-12);
  EXPECT_FALSE(report.mean_cer);
}

TEST(EvaluatePairs, EmptyList) {
  auto report = evaluation::evaluate_pairs({});
  EXPECT_EQ(report.count, 0);
  EXPECT_FALSE(report.mean_pcc_e);
  EXPECT_FALSE(report.mean_rmse_e);
}

TEST(EvaluatePairs, ConstantEnergyPairLeavesPccAggregate) {
  auto pairs = identical_pairs();
  // A stationary tone has (nearly) constant frame energy; exact silence
  // has exactly constant energy.
  AudioClip silence;
  silence.samples.assign(8800, 0.0f);
  pairs.push_back({"flat", silence, silence, false});
  auto report = evaluation::evaluate_pairs(pairs);
  EXPECT_EQ(report.count, 3);
  EXPECT_EQ(report.pcc_count, 2);
  EXPECT_FALSE(report.pairs[2].pcc_e);
  EXPECT_EQ(report.pairs[2].rmse_e, 0.0);
  EXPECT_NEAR(*report.mean_rmse_e, 0.0, 1e-12);
}

TEST(EvaluatePairs, ToleratesOneFrameOfPadding) {
  auto src = test::voice(0.5, 3);
  auto conv = src;
  conv.samples.resize((1 + src.size() / 220) * 220, 0.0f);
  auto report = evaluation::evaluate_pairs({{"pad", src, conv, false}});
  EXPECT_EQ(report.pairs[0].frames, 1 + src.size() / 220);
  auto longer = src;
  longer.samples.resize(src.size() + 1000, 0.0f);
  EXPECT_THROW(evaluation::evaluate_pairs({{"long", src, longer, false}}), DimensionError);
}

class FixedAsr : public evaluation::AsrPlugin {
 public:
  std::string transcribe(const AudioClip& clip) override {
    return clip.size() > 20000 ? "hello there" : "hello";
  }
};

class BrokenAsr : public evaluation::AsrPlugin {
 public:
  std::string transcribe(const AudioClip&) override { throw Error("offline"); }
};

TEST(EvaluatePairs, AsrScoresOnlyLinguisticPairs) {
  FixedAsr asr;
  auto report = evaluation::evaluate_pairs(identical_pairs(), &asr);
  EXPECT_EQ(report.asr_count, 1);
  EXPECT_EQ(*report.pairs[0].cer, 0.0);
  EXPECT_FALSE(report.pairs[1].cer);
}

TEST(EvaluatePairs, AsrFailureFallsBackToEnergy) {
  BrokenAsr asr;
  auto report = evaluation::evaluate_pairs(identical_pairs(), &asr);
  EXPECT_TRUE(report.asr_error);
  EXPECT_FALSE(report.mean_cer);
  EXPECT_NEAR(*report.mean_pcc_e, 1.0, 1e-12);
  auto j = evaluation::to_json(report);
  EXPECT_EQ(j["aggregate"]["count"], 2);
  EXPECT_TRUE(j["aggregate"]["mean_cer"].is_null());
}

TEST(AsrPlugins, HttpEndpoint) {
  httplib::Server server;
  server.Post("/asr", [](const httplib::Request& req, httplib::Response& res) {
    auto clip = dsp::decode_wav(std::vector<uint8_t>(req.body.begin(), req.body.end()));
    res.set_content(nlohmann::json{{"text", std::to_string(clip.size())}}.dump(),
                    "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  evaluation::HttpAsrPlugin asr("http://127.0.0.1:" + std::to_string(port) + "/asr");
  EXPECT_EQ(asr.transcribe(test::sine(440, 1234)), "1234");
  evaluation::HttpAsrPlugin missing("http://127.0.0.1:" + std::to_string(port) + "/nope");
  EXPECT_THROW(missing.transcribe(test::sine(440, 100)), Error);
  server.stop();
  t.join();
  EXPECT_THROW(evaluation::HttpAsrPlugin("ftp://x"), ConfigError);
}

TEST(AsrPlugins, ExternalCommand) {
  auto dir = test::temp_dir("asr_cmd");
  const auto script = dir / "asr.sh";
  std::ofstream(script) << "#!/bin/sh\ntest -s \"$1\" && echo '  some words  '\n";
  std::filesystem::permissions(script, std::filesystem::perms::owner_all);
  evaluation::CommandAsrPlugin asr(script.string());
  EXPECT_EQ(asr.transcribe(test::sine(440, 1000)), "some words");
  evaluation::CommandAsrPlugin failing("false");
  EXPECT_THROW(failing.transcribe(test::sine(440, 10)), Error);
}

TEST(Report, WritesJson) {
  auto report = evaluation::evaluate_pairs(identical_pairs());
  auto dir = test::temp_dir("report");
  evaluation::write_report(report, dir / "r.json", "feedbeef");
  std::ifstream in(dir / "r.json");
  auto j = nlohmann::json::parse(in);
  EXPECT_EQ(j["config_hash"], "feedbeef");
  EXPECT_EQ(j["pairs"].size(), 2u);
  EXPECT_NEAR(j["aggregate"]["mean_pcc_e"].get<double>(), 1.0, 1e-12);
}

}  // namespace
}  // namespace h2nh
