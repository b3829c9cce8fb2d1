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

#ifndef H2NH_MODULES_HPP_
#define H2NH_MODULES_HPP_

#include <vector>

#include <torch/torch.h>

namespace h2nh::nn {

inline constexpr double kLeakySlope = 0.1;

int64_t same_padding(int64_t kernel, int64_t dilation = 1);

// Non-causal gated residual stack (WaveNet style). An optional global
// conditioning vector g [B, cond_channels] is added to every gate.
class WaveNetImpl : public torch::nn::Module {
 public:
  WaveNetImpl(int64_t hidden, int64_t kernel, int64_t dilation_rate,
              int64_t n_layers, int64_t cond_channels = 0);

  torch::Tensor forward(torch::Tensor x, const torch::Tensor& g = {});

  int64_t cond_channels() const { return cond_channels_; }

 private:
  int64_t hidden_;
  int64_t n_layers_;
  int64_t cond_channels_;
  torch::nn::ModuleList in_layers_;
  torch::nn::ModuleList res_skip_layers_;
  torch::nn::Conv1d cond_layer_{nullptr};
};
TORCH_MODULE(WaveNet);

struct CouplingResult {
  torch::Tensor z;        // [B, C, T]
  torch::Tensor log_det;  // [B]
};

// Affine coupling: one half of the channels (selected by `parity`) is
// transformed with a shift and log-scale predicted from the other half and
// the conditioning vector. The output projection starts at zero, so a fresh
// layer is the identity.
class AffineCouplingImpl : public torch::nn::Module {
 public:
  AffineCouplingImpl(int64_t channels, int64_t hidden, int64_t kernel,
                     int64_t dilation_rate, int64_t n_layers,
                     int64_t cond_channels, bool mean_only, int parity);

  CouplingResult forward(const torch::Tensor& z, const torch::Tensor& g);
  torch::Tensor inverse(const torch::Tensor& z, const torch::Tensor& g);

  torch::nn::Conv1d& post() { return post_; }
  bool mean_only() const { return mean_only_; }

 private:
  std::pair<torch::Tensor, torch::Tensor> stats(const torch::Tensor& context,
                                                const torch::Tensor& g);
  std::pair<torch::Tensor, torch::Tensor> split(const torch::Tensor& z) const;
  torch::Tensor merge(const torch::Tensor& fixed,
                      const torch::Tensor& moved) const;

  int64_t half_;
  bool mean_only_;
  int parity_;
  torch::nn::Conv1d pre_{nullptr};
  WaveNet net_{nullptr};
  torch::nn::Conv1d post_{nullptr};
};
TORCH_MODULE(AffineCoupling);

// Multi-receptive-field residual block of the waveform decoder.
class ResBlockImpl : public torch::nn::Module {
 public:
  ResBlockImpl(int64_t channels, int64_t kernel,
               const std::vector<int64_t>& dilations);
  torch::Tensor forward(torch::Tensor x);

 private:
  torch::nn::ModuleList convs1_;
  torch::nn::ModuleList convs2_;
};
TORCH_MODULE(ResBlock);

// Convolution over time with a kernel of size k that keeps the length,
// padding by edge replication.
torch::nn::Conv1d replicate_conv(int64_t in, int64_t out, int64_t kernel);

}  // namespace h2nh::nn

#endif  // H2NH_MODULES_HPP_
