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

#include "h2nh/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "h2nh/errors.hpp"

namespace h2nh::losses {

namespace {

torch::Tensor as_batch(const torch::Tensor& wave) {
  if (wave.dim() == 1) return wave.unsqueeze(0);
  if (wave.dim() == 2) return wave;
  if (wave.dim() == 3 && wave.size(1) == 1) return wave.squeeze(1);
  throw DimensionError("fdrl: expected waveform [B, 1, N], [B, N] or [N]");
}

bool is_finite(const torch::Tensor& t) {
  return torch::isfinite(t.detach()).all().item<bool>();
}

}  // namespace

void LossWeights::validate() const {
  if (rec < 0.0 || fm < 0.0 || adv < 0.0)
    throw ConfigError("loss weights must be >= 0");
}

double kl_anneal_weight(int64_t t_cur, int64_t t_anneal) {
  if (t_anneal <= 0) throw DomainError("kl_anneal_weight: t_anneal must be > 0");
  if (t_cur < 0) throw DomainError("kl_anneal_weight: t_cur must be >= 0");
  const double progress =
      static_cast<double>(std::min(t_cur, t_anneal)) / static_cast<double>(t_anneal);
  return 0.5 * (std::cos(std::numbers::pi * (progress - 1.0)) + 1.0);
}

torch::Tensor kl_loss(const model::GaussianFrames& posterior,
                      const torch::Tensor& z,
                      const model::GaussianFrames& prior,
                      const torch::Tensor& z_prime,
                      const torch::Tensor& log_det) {
  if (!is_finite(posterior.log_sigma) || !is_finite(prior.log_sigma))
    throw NumericError("kl_loss: sigma must be positive and finite");
  if (z.sizes() != posterior.mu.sizes() || z_prime.sizes() != prior.mu.sizes())
    throw DimensionError("kl_loss: latent and distribution shapes differ");
  // The 0.5 * log(2 pi) terms cancel.
  auto log_q = -posterior.log_sigma -
               0.5 * ((z - posterior.mu) * torch::exp(-posterior.log_sigma)).pow(2);
  auto log_p = -prior.log_sigma -
               0.5 * ((z_prime - prior.mu) * torch::exp(-prior.log_sigma)).pow(2);
  const double per_sequence = static_cast<double>(z.size(1) * z.size(2));
  return (log_q - log_p).mean() - log_det.mean() / per_sequence;
}

void FdrlConfig::validate() const {
  if (hops.empty()) throw ConfigError("fdrl: no hops configured");
  for (int64_t h : hops)
    if (h <= 0) throw ConfigError("fdrl: hops must be positive");
  if (window_factor < 1) throw ConfigError("fdrl: window_factor must be >= 1");
  if (n_mels < 1) throw ConfigError("fdrl: n_mels must be >= 1");
}

FdrlLoss::FdrlLoss(FdrlConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  for (int64_t hop : cfg_.hops) {
    const int64_t window = cfg_.window_factor * hop;
    dsp::StftConfig stft{cfg_.sample_rate, static_cast<int>(window),
                         static_cast<int>(hop), static_cast<int>(window), true};
    auto fb = dsp::mel_filterbank(stft, cfg_.n_mels, cfg_.f_min, cfg_.f_max);
    scales_.push_back({hop, window, fb.weights});
  }
}

torch::Tensor FdrlLoss::operator()(const torch::Tensor& ref,
                                   const torch::Tensor& gen) const {
  if (ref.sizes() != gen.sizes())
    throw DimensionError("fdrl: reference and generated shapes differ");
  auto r = as_batch(ref);
  auto g = as_batch(gen);
  torch::Tensor total = torch::zeros({}, g.options());
  for (const auto& s : scales_) {
    auto mag_r = dsp::stft_magnitude(r, s.window, s.hop, s.window);
    auto mag_g = dsp::stft_magnitude(g, s.window, s.hop, s.window);
    auto mel = s.mel.to(g.options());
    auto log_r = torch::log(torch::matmul(mel, mag_r) + dsp::kMelEpsilon);
    auto log_g = torch::log(torch::matmul(mel, mag_g) + dsp::kMelEpsilon);
    total = total + (log_r - log_g).abs().mean();
    if (cfg_.include_linear)
      total = total + (torch::log(mag_r + dsp::kMelEpsilon) -
                       torch::log(mag_g + dsp::kMelEpsilon))
                          .abs()
                          .mean();
  }
  return total;
}

double fdrl(const AudioClip& ref, const AudioClip& gen, const FdrlConfig& cfg) {
  if (ref.size() != gen.size())
    throw DimensionError("fdrl: clips differ in length (" +
                         std::to_string(ref.size()) + " vs " +
                         std::to_string(gen.size()) + ")");
  if (ref.sample_rate != gen.sample_rate)
    throw DimensionError("fdrl: clips differ in sample rate");
  if (ref.sample_rate != cfg.sample_rate)
    throw ConfigError("fdrl: clip sample rate does not match the loss config");
  torch::NoGradGuard no_grad;
  return FdrlLoss(cfg)(ref.tensor(), gen.tensor()).item<double>();
}

torch::Tensor generator_adversarial_loss(
    const std::vector<torch::Tensor>& fake_logits) {
  torch::Tensor total;
  for (const auto& f : fake_logits) {
    auto l = (f - 1.0).pow(2).mean();
    total = total.defined() ? total + l : l;
  }
  return total.defined() ? total : torch::zeros({});
}

torch::Tensor discriminator_adversarial_loss(
    const std::vector<torch::Tensor>& real_logits,
    const std::vector<torch::Tensor>& fake_logits) {
  if (real_logits.size() != fake_logits.size())
    throw DimensionError("adversarial loss: logit set sizes differ");
  torch::Tensor total;
  for (size_t i = 0; i < real_logits.size(); ++i) {
    auto l = (real_logits[i] - 1.0).pow(2).mean() + fake_logits[i].pow(2).mean();
    total = total.defined() ? total + l : l;
  }
  return total.defined() ? total : torch::zeros({});
}

AdversarialLosses adversarial_losses(const std::vector<torch::Tensor>& real_logits,
                                     const std::vector<torch::Tensor>& fake_logits) {
  return {generator_adversarial_loss(fake_logits),
          discriminator_adversarial_loss(real_logits, fake_logits)};
}

std::vector<torch::Tensor> logits_of(
    const std::vector<model::DiscriminatorOutput>& outputs) {
  std::vector<torch::Tensor> out;
  out.reserve(outputs.size());
  for (const auto& o : outputs) out.push_back(o.logits);
  return out;
}

torch::Tensor feature_matching_loss(
    const std::vector<std::vector<torch::Tensor>>& real_features,
    const std::vector<std::vector<torch::Tensor>>& fake_features) {
  if (real_features.size() != fake_features.size())
    throw DimensionError("feature matching: sub-discriminator counts differ");
  torch::Tensor total;
  for (size_t d = 0; d < real_features.size(); ++d) {
    if (real_features[d].size() != fake_features[d].size())
      throw DimensionError("feature matching: layer counts differ");
    for (size_t l = 0; l < real_features[d].size(); ++l) {
      const auto& r = real_features[d][l];
      const auto& f = fake_features[d][l];
      if (r.sizes() != f.sizes())
        throw DimensionError("feature matching: feature map shapes differ");
      auto term = (r - f).abs().mean() / (r.abs().mean() + 1e-6);
      total = total.defined() ? total + term : term;
    }
  }
  return total.defined() ? total : torch::zeros({});
}

torch::Tensor feature_matching_loss(
    const std::vector<model::DiscriminatorOutput>& real,
    const std::vector<model::DiscriminatorOutput>& fake) {
  std::vector<std::vector<torch::Tensor>> r, f;
  for (const auto& o : real) r.push_back(o.features);
  for (const auto& o : fake) f.push_back(o.features);
  return feature_matching_loss(r, f);
}

torch::Tensor total_generator_loss(const LossParts& parts,
                                   const LossWeights& weights,
                                   double kl_weight) {
  for (const auto* p : {&parts.kl, &parts.rec, &parts.fm, &parts.adv}) {
    if (!p->defined()) throw DomainError("total_generator_loss: missing part");
    if (!is_finite(*p))
      throw TrainingAbort("total_generator_loss: non-finite loss part");
  }
  auto total = weights.rec * parts.rec + weights.fm * parts.fm +
               weights.adv * parts.adv;
  // The KL term is dropped entirely while its weight is zero.
  if (kl_weight != 0.0) total = total + kl_weight * parts.kl;
  return total;
}

}  // namespace h2nh::losses
