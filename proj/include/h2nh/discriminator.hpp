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

#ifndef H2NH_DISCRIMINATOR_HPP_
#define H2NH_DISCRIMINATOR_HPP_

#include <vector>

#include <torch/torch.h>

#include "h2nh/model.hpp"

namespace h2nh::model {

struct DiscriminatorOutput {
  torch::Tensor logits;
  std::vector<torch::Tensor> features;  // intermediate activations
};

// Folds the waveform into [N / period, period] and applies 2-D convolutions
// along the folded time axis.
class PeriodDiscriminatorImpl : public torch::nn::Module {
 public:
  PeriodDiscriminatorImpl(int64_t period, const std::vector<int64_t>& channels);
  DiscriminatorOutput forward(const torch::Tensor& wave);  // [B, 1, N]

 private:
  int64_t period_;
  torch::nn::ModuleList convs_;
  torch::nn::Conv2d post_{nullptr};
};
TORCH_MODULE(PeriodDiscriminator);

// Complex STFT (real and imaginary parts as channels) split into frequency
// bands, each band with its own convolution stack; the band outputs are
// joined along frequency before the final projection.
class BandDiscriminatorImpl : public torch::nn::Module {
 public:
  BandDiscriminatorImpl(int64_t fft_size, int64_t channels,
                        const std::vector<std::pair<double, double>>& bands);
  DiscriminatorOutput forward(const torch::Tensor& wave);  // [B, 1, N]

 private:
  int64_t fft_size_;
  std::vector<std::pair<int64_t, int64_t>> band_bins_;
  std::vector<torch::nn::ModuleList> band_convs_;
  torch::nn::Conv2d post_{nullptr};
};
TORCH_MODULE(BandDiscriminator);

// Unconditional ensemble of period and band sub-discriminators.
class DiscriminatorImpl : public torch::nn::Module {
 public:
  explicit DiscriminatorImpl(const DiscriminatorConfig& cfg);
  std::vector<DiscriminatorOutput> forward(const torch::Tensor& wave);

  size_t size() const { return periods_.size() + bands_.size(); }

 private:
  std::vector<PeriodDiscriminator> periods_;
  std::vector<BandDiscriminator> bands_;
};
TORCH_MODULE(Discriminator);

}  // namespace h2nh::model

#endif  // H2NH_DISCRIMINATOR_HPP_
