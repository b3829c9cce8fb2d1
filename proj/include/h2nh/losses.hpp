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

#ifndef H2NH_LOSSES_HPP_
#define H2NH_LOSSES_HPP_

#include <cstdint>
#include <vector>

#include <torch/torch.h>

#include "h2nh/discriminator.hpp"
#include "h2nh/dsp.hpp"
#include "h2nh/model.hpp"

namespace h2nh::losses {

struct LossWeights {
  double rec = 45.0;
  double fm = 2.0;
  double adv = 1.0;

  void validate() const;
  bool operator==(const LossWeights&) const = default;
};

// Cosine ramp 0.5 * (cos(pi * (min(t, T) / T - 1)) + 1): 0 at t = 0, 1 from
// t = T onwards.
double kl_anneal_weight(int64_t t_cur, int64_t t_anneal);

// One-sample estimate of KL(q(z | x_linear) || p(z | ling, style)) with the
// prior density pulled back through the flow:
//   mean[log N(z; mu_q, sigma_q) - log N(z'; mu_p, sigma_p)]
//     - log_det / (T * C),
// averaged over frames, channels and the batch.
torch::Tensor kl_loss(const model::GaussianFrames& posterior,
                      const torch::Tensor& z,
                      const model::GaussianFrames& prior,
                      const torch::Tensor& z_prime,
                      const torch::Tensor& log_det);

struct FdrlConfig {
  std::vector<int64_t> hops{882, 441, 220, 110, 55};
  int64_t window_factor = 4;
  int n_mels = 80;
  int sample_rate = kSampleRate;
  double f_min = 0.0;
  double f_max = kSampleRate / 2.0;
  bool include_linear = false;  // add L1 on log linear magnitudes

  void validate() const;
  bool operator==(const FdrlConfig&) const = default;
};

// Multi-resolution log-mel L1 reconstruction loss. Filterbanks are built once
// per instance.
class FdrlLoss {
 public:
  explicit FdrlLoss(FdrlConfig cfg = {});

  // ref and gen: [B, 1, N], [B, N] or [N] with identical shapes.
  torch::Tensor operator()(const torch::Tensor& ref, const torch::Tensor& gen) const;

  const FdrlConfig& config() const { return cfg_; }
  struct Scale {
    int64_t hop;
    int64_t window;
    torch::Tensor mel;  // [n_mels, window / 2 + 1]
  };
  const std::vector<Scale>& scales() const { return scales_; }

 private:
  FdrlConfig cfg_;
  std::vector<Scale> scales_;
};

double fdrl(const AudioClip& ref, const AudioClip& gen, const FdrlConfig& cfg = {});

torch::Tensor generator_adversarial_loss(
    const std::vector<torch::Tensor>& fake_logits);
torch::Tensor discriminator_adversarial_loss(
    const std::vector<torch::Tensor>& real_logits,
    const std::vector<torch::Tensor>& fake_logits);

struct AdversarialLosses {
  torch::Tensor generator;
  torch::Tensor discriminator;
};
AdversarialLosses adversarial_losses(const std::vector<torch::Tensor>& real_logits,
                                     const std::vector<torch::Tensor>& fake_logits);

std::vector<torch::Tensor> logits_of(
    const std::vector<model::DiscriminatorOutput>& outputs);

// Sum over layers of mean|real - fake| / mean|real|.
torch::Tensor feature_matching_loss(
    const std::vector<std::vector<torch::Tensor>>& real_features,
    const std::vector<std::vector<torch::Tensor>>& fake_features);
torch::Tensor feature_matching_loss(
    const std::vector<model::DiscriminatorOutput>& real,
    const std::vector<model::DiscriminatorOutput>& fake);

struct LossParts {
  torch::Tensor kl;
  torch::Tensor rec;
  torch::Tensor fm;
  torch::Tensor adv;
};

// kl_weight * kl + rec * L_rec + fm * L_fm + adv * L_adv. Throws
// TrainingAbort when any part is not finite.
torch::Tensor total_generator_loss(const LossParts& parts,
                                   const LossWeights& weights,
                                   double kl_weight);

}  // namespace h2nh::losses

#endif  // H2NH_LOSSES_HPP_
