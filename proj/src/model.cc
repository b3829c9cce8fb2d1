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

#include "h2nh/model.hpp"

#include <cmath>
#include <numeric>

#include "h2nh/errors.hpp"

namespace h2nh::model {

namespace F = torch::nn::functional;

void DiscriminatorConfig::validate() const {
  if (periods.empty() && fft_sizes.empty())
    throw ConfigError("discriminator: no sub-discriminators configured");
  if (period_channels.empty())
    throw ConfigError("discriminator: period_channels must not be empty");
  for (const auto& [lo, hi] : bands)
    if (!(0.0 <= lo && lo < hi && hi <= 1.0))
      throw ConfigError("discriminator: band edges must satisfy 0 <= lo < hi <= 1");
  if (!fft_sizes.empty() && bands.empty())
    throw ConfigError("discriminator: STFT sub-discriminators need bands");
}

void ModelConfig::validate() const {
  if (latent_dim != hidden_dim)
    throw ConfigError("model: latent_dim must equal hidden_dim");
  if (latent_dim % 2 != 0) throw ConfigError("model: latent_dim must be even");
  if (upsample_rates.empty()) throw ConfigError("model: no upsample rates");
  const int64_t stages = static_cast<int64_t>(upsample_rates.size());
  if (decoder_initial_channels % (int64_t{1} << stages) != 0)
    throw ConfigError(
        "model: decoder_initial_channels must halve cleanly at every stage");
  if (resblock_kernels.empty() || resblock_dilations.empty())
    throw ConfigError("model: decoder needs residual blocks");
  if (ref_hidden % ref_heads != 0)
    throw ConfigError("model: ref_hidden must be divisible by ref_heads");
  if (flow_layers < 1) throw ConfigError("model: flow_layers must be >= 1");
  for (int64_t v : {hidden_dim, style_dim, ref_hidden, n_mels_ref, ssl_dim,
                    d_ling, spec_channels, posterior_layers, flow_wavenet_layers})
    if (v < 1) throw ConfigError("model: dimensions must be positive");
  discriminator.validate();
}

int64_t ModelConfig::hop_samples() const {
  return std::accumulate(upsample_rates.begin(), upsample_rates.end(),
                         int64_t{1}, std::multiplies<>());
}

ModelConfig ModelConfig::tiny() {
  ModelConfig c;
  c.hidden_dim = 64;
  c.latent_dim = 64;
  c.style_dim = 64;
  c.ref_hidden = 64;
  c.d_ling = 64;
  c.posterior_layers = 4;
  c.flow_layers = 2;
  c.flow_wavenet_layers = 2;
  c.decoder_initial_channels = 128;
  c.resblock_kernels = {3, 7};
  c.resblock_dilations = {1, 3};
  c.discriminator.period_channels = {8, 16, 32, 32, 32};
  c.discriminator.band_channels = 8;
  return c;
}

torch::Tensor GaussianFrames::sample(double temperature,
                                     std::optional<at::Generator> gen) const {
  if (temperature == 0.0) return mu;
  auto noise = torch::randn(mu.sizes(), gen, mu.options());
  return mu + temperature * sigma() * noise;
}

PosteriorEncoderImpl::PosteriorEncoderImpl(const ModelConfig& cfg)
    : in_channels_(cfg.spec_channels) {
  pre_ = register_module("pre", torch::nn::Conv1d(torch::nn::Conv1dOptions(
                                    cfg.spec_channels, cfg.hidden_dim, 1)));
  enc_ = register_module(
      "enc", nn::WaveNet(cfg.hidden_dim, cfg.posterior_kernel,
                         cfg.posterior_dilation, cfg.posterior_layers));
  proj_ = register_module("proj", torch::nn::Conv1d(torch::nn::Conv1dOptions(
                                      cfg.hidden_dim, 2 * cfg.latent_dim, 1)));
}

GaussianFrames PosteriorEncoderImpl::forward(const torch::Tensor& x_linear) {
  if (x_linear.dim() != 3 || x_linear.size(1) != in_channels_)
    throw DimensionError("posterior_encode: expected [B, " +
                         std::to_string(in_channels_) + ", T] spectrogram");
  if (x_linear.size(2) < 1) throw DimensionError("posterior_encode: T must be >= 1");
  auto stats = proj_(enc_(pre_(x_linear)));
  auto parts = stats.chunk(2, 1);
  return {parts[0], parts[1]};
}

ReferenceEncoderImpl::ReferenceEncoderImpl(const ModelConfig& cfg)
    : n_mels_(cfg.n_mels_ref) {
  const int64_t h = cfg.ref_hidden;
  spectral1_ = register_module("spectral1", torch::nn::Linear(cfg.n_mels_ref, h));
  spectral2_ = register_module("spectral2", torch::nn::Linear(h, h));
  temporal1_ = register_module("temporal1",
                               nn::replicate_conv(h, 2 * h, cfg.ref_kernel));
  temporal2_ = register_module("temporal2",
                               nn::replicate_conv(h, 2 * h, cfg.ref_kernel));
  attention_ = register_module(
      "attention", torch::nn::MultiheadAttention(
                       torch::nn::MultiheadAttentionOptions(h, cfg.ref_heads)
                           .dropout(cfg.ref_dropout)));
  fc_ = register_module("fc", torch::nn::Linear(h, cfg.style_dim));
  dropout_ = register_module("dropout", torch::nn::Dropout(cfg.ref_dropout));
}

torch::Tensor ReferenceEncoderImpl::forward(const torch::Tensor& mel) {
  if (mel.dim() != 3 || mel.size(1) != n_mels_)
    throw DimensionError("reference_encode: expected [B, " +
                         std::to_string(n_mels_) + ", T] mel");
  if (mel.size(2) < 1) throw DomainError("reference_encode: empty mel");
  auto x = mel.transpose(1, 2);  // [B, T, n_mels]
  x = dropout_(torch::mish(spectral1_(x)));
  x = dropout_(torch::mish(spectral2_(x)));

  x = x.transpose(1, 2);  // [B, H, T]
  for (auto* conv : {&temporal1_, &temporal2_}) {
    auto h = F::glu((*conv)(x), F::GLUFuncOptions(1));
    x = x + dropout_(h);
  }

  auto seq = x.permute({2, 0, 1});  // [T, B, H]
  auto attended = std::get<0>(attention_(seq, seq, seq));
  seq = seq + attended;
  auto out = fc_(seq.permute({1, 0, 2}));  // [B, T, S]
  return out.mean(1);
}

EnergyEncoderImpl::EnergyEncoderImpl(const ModelConfig& cfg) {
  const int64_t h = cfg.hidden_dim;
  const int64_t k = cfg.energy_kernel;
  conv1_ = register_module(
      "conv1", torch::nn::Conv1d(
                   torch::nn::Conv1dOptions(1, h, k).padding(nn::same_padding(k))));
  conv2_ = register_module(
      "conv2", torch::nn::Conv1d(
                   torch::nn::Conv1dOptions(h, h, k).padding(nn::same_padding(k))));
  conv3_ = register_module("conv3",
                           torch::nn::Conv1d(torch::nn::Conv1dOptions(h, h, 1)));
}

torch::Tensor EnergyEncoderImpl::forward(const torch::Tensor& energy) {
  if (energy.dim() != 2)
    throw DimensionError("energy_encode: expected [B, T] contour");
  auto x = energy.unsqueeze(1);
  x = torch::relu(conv1_(x));
  x = torch::relu(conv2_(x));
  return conv3_(x);
}

PriorFusionImpl::PriorFusionImpl(const ModelConfig& cfg) {
  const int64_t in = cfg.d_ling + cfg.hidden_dim + cfg.style_dim;
  conv_ = register_module(
      "conv", torch::nn::Conv1d(
                  torch::nn::Conv1dOptions(in, 2 * cfg.latent_dim, cfg.fusion_kernel)
                      .padding(nn::same_padding(cfg.fusion_kernel))));
}

GaussianFrames PriorFusionImpl::forward(const torch::Tensor& ling,
                                        const torch::Tensor& energy,
                                        const torch::Tensor& style) {
  if (ling.size(2) != energy.size(2))
    throw DimensionError("fuse_prior: linguistic and energy frame counts differ (" +
                         std::to_string(ling.size(2)) + " vs " +
                         std::to_string(energy.size(2)) + ")");
  if (style.dim() != 2 || style.size(0) != ling.size(0))
    throw DimensionError("fuse_prior: style must be [B, style_dim]");
  auto s = style.unsqueeze(-1).expand({style.size(0), style.size(1), ling.size(2)});
  auto stats = conv_(torch::cat({ling, energy, s}, 1));
  auto parts = stats.chunk(2, 1);
  return {parts[0], parts[1]};
}

FlowImpl::FlowImpl(const ModelConfig& cfg) {
  for (int64_t i = 0; i < cfg.flow_layers; ++i) {
    layers_.push_back(register_module(
        "coupling" + std::to_string(i),
        nn::AffineCoupling(cfg.latent_dim, cfg.hidden_dim, cfg.flow_kernel,
                           /*dilation_rate=*/1, cfg.flow_wavenet_layers,
                           cfg.style_dim, cfg.flow_mean_only,
                           static_cast<int>(i % 2))));
  }
}

FlowResult FlowImpl::forward(const torch::Tensor& z, const torch::Tensor& style) {
  auto x = z;
  auto log_det = torch::zeros({z.size(0)}, z.options());
  for (auto& layer : layers_) {
    auto r = layer->forward(x, style);
    x = r.z;
    log_det = log_det + r.log_det;
  }
  return {x, log_det};
}

torch::Tensor FlowImpl::inverse(const torch::Tensor& z_prime,
                                const torch::Tensor& style) {
  auto x = z_prime;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it)
    x = (*it)->inverse(x, style);
  return x;
}

DecoderImpl::DecoderImpl(const ModelConfig& cfg)
    : n_kernels_(static_cast<int64_t>(cfg.resblock_kernels.size())) {
  const int64_t c0 = cfg.decoder_initial_channels;
  conv_pre_ = register_module(
      "conv_pre", torch::nn::Conv1d(
                      torch::nn::Conv1dOptions(cfg.latent_dim, c0, 7).padding(3)));
  ups_ = register_module("ups", torch::nn::ModuleList());
  resblocks_ = register_module("resblocks", torch::nn::ModuleList());
  int64_t ch = c0;
  for (int64_t rate : cfg.upsample_rates) {
    // Odd rates get an odd kernel so the padding stays integral; the output
    // length is exactly rate * input length.
    const int64_t kernel = 2 * rate + rate % 2;
    ups_->push_back(torch::nn::ConvTranspose1d(
        torch::nn::ConvTranspose1dOptions(ch, ch / 2, kernel)
            .stride(rate)
            .padding((kernel - rate) / 2)));
    ch /= 2;
    for (int64_t k : cfg.resblock_kernels)
      resblocks_->push_back(nn::ResBlock(ch, k, cfg.resblock_dilations));
  }
  conv_post_ = register_module(
      "conv_post",
      torch::nn::Conv1d(torch::nn::Conv1dOptions(ch, 1, 7).padding(3).bias(false)));
  torch::NoGradGuard no_grad;
  for (auto& up : *ups_)
    up->as<torch::nn::ConvTranspose1d>()->weight.normal_(0.0, 0.01);
}

torch::Tensor DecoderImpl::forward(const torch::Tensor& z) {
  auto leaky = F::LeakyReLUFuncOptions().negative_slope(nn::kLeakySlope);
  auto x = conv_pre_(z);
  for (size_t i = 0; i < ups_->size(); ++i) {
    x = F::leaky_relu(x, leaky);
    x = ups_[i]->as<torch::nn::ConvTranspose1d>()->forward(x);
    torch::Tensor sum;
    for (int64_t j = 0; j < n_kernels_; ++j) {
      auto r = resblocks_[i * n_kernels_ + j]->as<nn::ResBlock>()->forward(x);
      sum = sum.defined() ? sum + r : r;
    }
    x = sum / static_cast<double>(n_kernels_);
  }
  x = F::leaky_relu(x);
  return torch::tanh(conv_post_(x));
}

SynthesizerImpl::SynthesizerImpl(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  posterior_ = register_module("posterior", PosteriorEncoder(cfg_));
  reference_ = register_module("reference", ReferenceEncoder(cfg_));
  energy_ = register_module("energy", EnergyEncoder(cfg_));
  ling_proj_ = register_module(
      "ling_proj",
      torch::nn::Conv1d(torch::nn::Conv1dOptions(cfg_.ssl_dim, cfg_.d_ling, 1)));
  fusion_ = register_module("fusion", PriorFusion(cfg_));
  flow_ = register_module("flow", Flow(cfg_));
  decoder_ = register_module("decoder", Decoder(cfg_));
}

GaussianFrames SynthesizerImpl::posterior_encode(const torch::Tensor& x_linear) {
  return posterior_(x_linear);
}

torch::Tensor SynthesizerImpl::reference_encode(const torch::Tensor& mel) {
  return reference_(mel);
}

torch::Tensor SynthesizerImpl::energy_encode(const torch::Tensor& energy) {
  return energy_(energy);
}

torch::Tensor SynthesizerImpl::linguistic_project(const torch::Tensor& ssl_retimed) {
  if (ssl_retimed.dim() != 3 || ssl_retimed.size(1) != cfg_.ssl_dim)
    throw DimensionError("linguistic_project: expected [B, " +
                         std::to_string(cfg_.ssl_dim) + ", T] features");
  return ling_proj_(ssl_retimed);
}

GaussianFrames SynthesizerImpl::fuse_prior(const torch::Tensor& ling,
                                           const torch::Tensor& energy_embedding,
                                           const torch::Tensor& style) {
  return fusion_(ling, energy_embedding, style);
}

GaussianFrames SynthesizerImpl::prior(const torch::Tensor& ssl_retimed,
                                      const torch::Tensor& energy,
                                      const torch::Tensor& style) {
  return fuse_prior(linguistic_project(ssl_retimed), energy_encode(energy), style);
}

FlowResult SynthesizerImpl::flow_forward(const torch::Tensor& z,
                                         const torch::Tensor& style) {
  return flow_(z, style);
}

torch::Tensor SynthesizerImpl::flow_inverse(const torch::Tensor& z_prime,
                                            const torch::Tensor& style) {
  return flow_->inverse(z_prime, style);
}

torch::Tensor SynthesizerImpl::decode(const torch::Tensor& z) {
  if (z.dim() != 3 || z.size(1) != cfg_.latent_dim)
    throw DimensionError("decode: expected [B, " +
                         std::to_string(cfg_.latent_dim) + ", T] latent");
  return decoder_(z);
}

GeneratorOutput SynthesizerImpl::forward(const torch::Tensor& x_linear,
                                         const torch::Tensor& ssl_retimed,
                                         const torch::Tensor& energy,
                                         const torch::Tensor& style,
                                         std::optional<at::Generator> gen) {
  GeneratorOutput out;
  out.posterior = posterior_encode(x_linear);
  out.z = out.posterior.sample(1.0, gen);
  auto flowed = flow_forward(out.z, style);
  out.z_prime = flowed.z;
  out.log_det = flowed.log_det;
  out.prior = prior(ssl_retimed, energy, style);
  out.wave = decode(out.z);
  return out;
}

std::vector<std::pair<std::string, torch::nn::Module*>>
SynthesizerImpl::components() {
  return {{"posterior", posterior_.get()},  {"reference", reference_.get()},
          {"energy", energy_.get()},        {"ling_proj", ling_proj_.get()},
          {"fusion", fusion_.get()},        {"flow", flow_.get()},
          {"decoder", decoder_.get()}};
}

}  // namespace h2nh::model
