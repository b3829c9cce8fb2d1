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


#include <cmath>

#include <gtest/gtest.h>

#include "h2nh/errors.hpp"
#include "h2nh/losses.hpp"
#include "test_util.hpp"

namespace h2nh {
namespace {

TEST(KlAnneal, KnownPointsAndMonotone) {
  EXPECT_NEAR(losses::kl_anneal_weight(0, 50000), 0.0, 1e-12);
  EXPECT_NEAR(losses::kl_anneal_weight(25000, 50000), 0.5, 1e-12);
  EXPECT_NEAR(losses::kl_anneal_weight(50000, 50000), 1.0, 1e-12);
  EXPECT_NEAR(losses::kl_anneal_weight(90000, 50000), 1.0, 1e-12);
  // Closed form at a quarter of the ramp: 0.5 * (cos(-3 pi / 4) + 1).
  EXPECT_NEAR(losses::kl_anneal_weight(12500, 50000), 0.5 * (1 - std::sqrt(0.5)), 1e-12);
  double prev = -1.0;
  for (int64_t t = 0; t <= 60000; t += 37) {
    const double w = losses::kl_anneal_weight(t, 50000);
    EXPECT_GE(w, prev);
    prev = w;
  }
  EXPECT_THROW(losses::kl_anneal_weight(-1, 50000), DomainError);
  EXPECT_THROW(losses::kl_anneal_weight(0, 0), DomainError);
}

// Analytic KL(N(mq, sq) || N(mp, sp)) averaged over elements.
double analytic_kl(const torch::Tensor& mq, const torch::Tensor& lq, const torch::Tensor& mp,
                   const torch::Tensor& lp) {
  auto sq2 = torch::exp(2 * lq), sp2 = torch::exp(2 * lp);
  return (lp - lq + (sq2 + (mq - mp).pow(2)) / (2 * sp2) - 0.5).mean().item<double>();
}

TEST(KlLoss, MonteCarloMatchesAnalytic) {
  torch::manual_seed(0);
  for (int set = 0; set < 5; ++set) {
    auto mq = torch::randn({1, 4, 6}, torch::kFloat64);
    auto mp = torch::randn({1, 4, 6}, torch::kFloat64);
    auto lq = torch::rand({1, 4, 6}, torch::kFloat64) * 2 - 1;
    auto lp = torch::rand({1, 4, 6}, torch::kFloat64) * 2 - 1;
    const int64_t draws = 4000;
    model::GaussianFrames q{mq.expand({draws, 4, 6}), lq.expand({draws, 4, 6})};
    model::GaussianFrames p{mp.expand({draws, 4, 6}), lp.expand({draws, 4, 6})};
    auto z = q.sample(1.0);
    auto est = losses::kl_loss(q, z, p, z, torch::zeros({draws}, torch::kFloat64));
    const double exact = analytic_kl(mq, lq, mp, lp);
    EXPECT_NEAR(est.item<double>(), exact, 0.03 * exact) << set;
  }
}

TEST(KlLoss, LogDetEntersPerElement) {
  model::GaussianFrames q{torch::zeros({2, 3, 5}), torch::zeros({2, 3, 5})};
  auto z = torch::zeros({2, 3, 5});
  auto base = losses::kl_loss(q, z, q, z, torch::zeros({2})).item<double>();
  auto shifted = losses::kl_loss(q, z, q, z, torch::full({2}, 30.0)).item<double>();
  EXPECT_NEAR(base - shifted, 30.0 / 15.0, 1e-6);
  q.log_sigma[0][0][0] = std::numeric_limits<float>::quiet_NaN();
  EXPECT_THROW(losses::kl_loss(q, z, q, z, torch::zeros({2})), NumericError);
}

TEST(Fdrl, ConfigDefaults) {
  losses::FdrlLoss loss;
  const auto& scales = loss.scales();
  ASSERT_EQ(scales.size(), 5u);
  const int64_t hops[] = {882, 441, 220, 110, 55};
  for (size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(scales[i].hop, hops[i]);
    EXPECT_EQ(scales[i].window, 4 * hops[i]);
    EXPECT_EQ(scales[i].mel.size(0), 80);
    EXPECT_EQ(scales[i].mel.size(1), 2 * hops[i] + 1);
  }
}

TEST(Fdrl, ZeroOnIdenticalAndPositiveOtherwise) {
  auto a = test::voice(0.3, 1);
  auto b = test::voice(0.3, 2, 180.0);
  EXPECT_EQ(losses::fdrl(a, a), 0.0);
  EXPECT_GT(losses::fdrl(a, b), 0.0);
  auto short_b = b;
  short_b.samples.pop_back();
  EXPECT_THROW(losses::fdrl(a, short_b), DimensionError);
}

TEST(Fdrl, GradientMatchesFiniteDifferences) {
  losses::FdrlLoss loss;
  torch::manual_seed(4);
  auto ref = torch::randn({2200}, torch::kFloat64) * 0.2;
  auto gen = (torch::randn({2200}, torch::kFloat64) * 0.2).requires_grad_();
  auto value = loss(ref, gen);
  value.backward();
  auto grad = gen.grad().clone();
  auto x = gen.detach();
  const double h = 1e-6;
  auto f = [&](const torch::Tensor& v) { return loss(ref, v).item<double>(); };
  for (int k = 0; k < 5; ++k) {
    auto dir = torch::randn({2200}, torch::kFloat64);
    dir /= dir.norm();
    const double fd = (f(x + h * dir) - f(x - h * dir)) / (2 * h);
    const double ad = (grad * dir).sum().item<double>();
    EXPECT_NEAR(fd, ad, 1e-3 * std::abs(ad)) << k;
  }
  const double scale = grad.abs().max().item<double>();
  for (int64_t i : {0, 1, 100, 1099, 2000, 2199}) {
    auto e = torch::zeros({2200}, torch::kFloat64);
    e[i] = 1.0;
    const double fd = (f(x + h * e) - f(x - h * e)) / (2 * h);
    EXPECT_NEAR(fd, grad[i].item<double>(), 1e-3 * scale) << i;
  }
}

TEST(Adversarial, LeastSquaresValues) {
  std::vector<torch::Tensor> ones{torch::ones({2, 5}), torch::ones({2, 3})};
  std::vector<torch::Tensor> zeros{torch::zeros({2, 5}), torch::zeros({2, 3})};
  std::vector<torch::Tensor> halves{torch::full({2, 5}, 0.5), torch::full({2, 3}, 0.5)};
  EXPECT_NEAR(losses::discriminator_adversarial_loss(ones, zeros).item<double>(), 0.0, 1e-12);
  EXPECT_NEAR(losses::discriminator_adversarial_loss(zeros, ones).item<double>(), 4.0, 1e-6);
  EXPECT_NEAR(losses::generator_adversarial_loss(halves).item<double>(), 0.5, 1e-6);
  EXPECT_NEAR(losses::generator_adversarial_loss(ones).item<double>(), 0.0, 1e-12);
}

TEST(FeatureMatching, NormalizedL1) {
  auto r = torch::randn({3, 4});
  std::vector<std::vector<torch::Tensor>> real{{r, r * 2}};
  EXPECT_NEAR(losses::feature_matching_loss(real, real).item<double>(), 0.0, 1e-12);
  std::vector<std::vector<torch::Tensor>> fake{{r * 2, r * 3}};
  // |r - 2r| / |r| = 1 and |2r - 3r| / |2r| = 0.5.
  EXPECT_NEAR(losses::feature_matching_loss(real, fake).item<double>(), 1.5, 1e-4);
  std::vector<std::vector<torch::Tensor>> wrong{{r}};
  EXPECT_THROW(losses::feature_matching_loss(real, wrong), DimensionError);
}

TEST(TotalLoss, WeightsAndAbort) {
  losses::LossParts p{torch::tensor(2.0), torch::tensor(1.0), torch::tensor(3.0),
                      torch::tensor(4.0)};
  losses::LossWeights w;
  EXPECT_NEAR(losses::total_generator_loss(p, w, 0.5).item<double>(),
              0.5 * 2 + 45 * 1 + 2 * 3 + 1 * 4, 1e-6);
  EXPECT_NEAR(losses::total_generator_loss(p, w, 0.0).item<double>(), 45 + 6 + 4, 1e-6);
  p.rec = torch::tensor(std::numeric_limits<double>::infinity());
  EXPECT_THROW(losses::total_generator_loss(p, w, 1.0), TrainingAbort);
}

}  // namespace
}  // namespace h2nh
