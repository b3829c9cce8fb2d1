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

#ifndef H2NH_MODEL_HPP_
#define H2NH_MODEL_HPP_

#include <optional>
#include <utility>
#include <vector>

#include <torch/torch.h>

#include "h2nh/modules.hpp"

namespace h2nh::model {

struct DiscriminatorConfig {
  std::vector<int64_t> periods{2, 3, 5, 7, 11};
  std::vector<int64_t> period_channels{32, 128, 512, 1024, 1024};
  std::vector<int64_t> fft_sizes{2048, 1024, 512};
  int64_t band_channels = 32;
  std::vector<std::pair<double, double>> bands{
      {0.0, 0.1}, {0.1, 0.25}, {0.25, 0.5}, {0.5, 0.75}, {0.75, 1.0}};

  void validate() const;
  bool operator==(const DiscriminatorConfig&) const = default;
};

struct ModelConfig {
  int64_t spec_channels = 442;  // fft_size / 2 + 1
  int64_t hidden_dim = 192;
  int64_t latent_dim = 192;
  int64_t style_dim = 128;
  int64_t ref_hidden = 128;
  int64_t ref_kernel = 5;
  int64_t ref_heads = 2;
  double ref_dropout = 0.1;
  int64_t n_mels_ref = 128;
  int64_t ssl_dim = 1024;
  int64_t d_ling = 192;
  int64_t posterior_layers = 16;
  int64_t posterior_kernel = 5;
  int64_t posterior_dilation = 1;
  int64_t energy_kernel = 3;
  int64_t fusion_kernel = 3;
  int64_t flow_layers = 4;
  int64_t flow_wavenet_layers = 4;
  int64_t flow_kernel = 5;
  bool flow_mean_only = false;
  std::vector<int64_t> upsample_rates{11, 5, 2, 2};
  int64_t decoder_initial_channels = 1024;
  std::vector<int64_t> resblock_kernels{3, 7, 11};
  std::vector<int64_t> resblock_dilations{1, 3, 5};
  DiscriminatorConfig discriminator;
  uint64_t seed = 1234;

  void validate() const;
  int64_t hop_samples() const;
  bool operator==(const ModelConfig&) const = default;

  // Reduced widths for CPU smoke runs: hidden 64, two flow layers.
  static ModelConfig tiny();
};

// Diagonal Gaussian per frame; sigma = exp(log_sigma).
struct GaussianFrames {
  torch::Tensor mu;         // [B, C, T]
  torch::Tensor log_sigma;  // [B, C, T]

  torch::Tensor sigma() const { return torch::exp(log_sigma); }
  // mu + temperature * sigma * n, n ~ N(0, I).
  torch::Tensor sample(double temperature = 1.0,
                       std::optional<at::Generator> gen = std::nullopt) const;
};

struct FlowResult {
  torch::Tensor z;        // [B, C, T]
  torch::Tensor log_det;  // [B], log |det dz'/dz|
};

class PosteriorEncoderImpl : public torch::nn::Module {
 public:
  explicit PosteriorEncoderImpl(const ModelConfig& cfg);
  GaussianFrames forward(const torch::Tensor& x_linear);

 private:
  int64_t in_channels_;
  torch::nn::Conv1d pre_{nullptr};
  nn::WaveNet enc_{nullptr};
  torch::nn::Conv1d proj_{nullptr};
};
TORCH_MODULE(PosteriorEncoder);

// Mel-style encoder: per-frame spectral MLP, gated temporal convolutions,
// self-attention, projection, then the mean over time. Temporal convolutions
// replicate edges and there is no positional encoding, so a time-constant
// mel yields the same vector at any length.
class ReferenceEncoderImpl : public torch::nn::Module {
 public:
  explicit ReferenceEncoderImpl(const ModelConfig& cfg);
  torch::Tensor forward(const torch::Tensor& mel);  // [B, n_mels, T] -> [B, S]

 private:
  int64_t n_mels_;
  torch::nn::Linear spectral1_{nullptr}, spectral2_{nullptr};
  torch::nn::Conv1d temporal1_{nullptr}, temporal2_{nullptr};
  torch::nn::MultiheadAttention attention_{nullptr};
  torch::nn::Linear fc_{nullptr};
  torch::nn::Dropout dropout_{nullptr};
};
TORCH_MODULE(ReferenceEncoder);

class EnergyEncoderImpl : public torch::nn::Module {
 public:
  explicit EnergyEncoderImpl(const ModelConfig& cfg);
  torch::Tensor forward(const torch::Tensor& energy);  // [B, T] -> [B, H, T]

 private:
  torch::nn::Conv1d conv1_{nullptr}, conv2_{nullptr}, conv3_{nullptr};
};
TORCH_MODULE(EnergyEncoder);

// Single convolution over [linguistic | energy | broadcast style].
class PriorFusionImpl : public torch::nn::Module {
 public:
  explicit PriorFusionImpl(const ModelConfig& cfg);
  GaussianFrames forward(const torch::Tensor& ling, const torch::Tensor& energy,
                         const torch::Tensor& style);

 private:
  torch::nn::Conv1d conv_{nullptr};
};
TORCH_MODULE(PriorFusion);

class FlowImpl : public torch::nn::Module {
 public:
  explicit FlowImpl(const ModelConfig& cfg);
  FlowResult forward(const torch::Tensor& z, const torch::Tensor& style);
  torch::Tensor inverse(const torch::Tensor& z_prime,
                        const torch::Tensor& style);

  std::vector<nn::AffineCoupling>& layers() { return layers_; }

 private:
  std::vector<nn::AffineCoupling> layers_;
};
TORCH_MODULE(Flow);

// Transposed-convolution waveform generator; T frames -> T * prod(rates)
// samples in [-1, 1].
class DecoderImpl : public torch::nn::Module {
 public:
  explicit DecoderImpl(const ModelConfig& cfg);
  torch::Tensor forward(const torch::Tensor& z);  // [B, C, T] -> [B, 1, N]

 private:
  int64_t n_kernels_;
  torch::nn::Conv1d conv_pre_{nullptr};
  torch::nn::ModuleList ups_;
  torch::nn::ModuleList resblocks_;
  torch::nn::Conv1d conv_post_{nullptr};
};
TORCH_MODULE(Decoder);

struct GeneratorOutput {
  GaussianFrames posterior;
  GaussianFrames prior;
  torch::Tensor z;        // posterior sample
  torch::Tensor z_prime;  // flow(z, style)
  torch::Tensor log_det;
  torch::Tensor wave;     // decode(z), [B, 1, T * hop]
};

// The generator. Style reaches only the prior fusion and the flow; the
// posterior encoder and the decoder take no style argument.
class SynthesizerImpl : public torch::nn::Module {
 public:
  explicit SynthesizerImpl(const ModelConfig& cfg);

  GaussianFrames posterior_encode(const torch::Tensor& x_linear);
  torch::Tensor reference_encode(const torch::Tensor& mel);
  torch::Tensor energy_encode(const torch::Tensor& energy);
  torch::Tensor linguistic_project(const torch::Tensor& ssl_retimed);
  GaussianFrames fuse_prior(const torch::Tensor& ling,
                            const torch::Tensor& energy_embedding,
                            const torch::Tensor& style);
  // Projection, energy encoding and fusion in one call.
  GaussianFrames prior(const torch::Tensor& ssl_retimed,
                       const torch::Tensor& energy, const torch::Tensor& style);
  FlowResult flow_forward(const torch::Tensor& z, const torch::Tensor& style);
  torch::Tensor flow_inverse(const torch::Tensor& z_prime,
                             const torch::Tensor& style);
  torch::Tensor decode(const torch::Tensor& z);

  // Training graph: posterior sample, flow, prior and decoded waveform.
  GeneratorOutput forward(const torch::Tensor& x_linear,
                          const torch::Tensor& ssl_retimed,
                          const torch::Tensor& energy,
                          const torch::Tensor& style,
                          std::optional<at::Generator> gen = std::nullopt);

  const ModelConfig& config() const { return cfg_; }
  Flow& flow() { return flow_; }

  // Parameter groups, used by tests that inspect gradients.
  std::vector<std::pair<std::string, torch::nn::Module*>> components();

 private:
  ModelConfig cfg_;
  PosteriorEncoder posterior_{nullptr};
  ReferenceEncoder reference_{nullptr};
  EnergyEncoder energy_{nullptr};
  torch::nn::Conv1d ling_proj_{nullptr};
  PriorFusion fusion_{nullptr};
  Flow flow_{nullptr};
  Decoder decoder_{nullptr};
};
TORCH_MODULE(Synthesizer);

}  // namespace h2nh::model

#endif  // H2NH_MODEL_HPP_
