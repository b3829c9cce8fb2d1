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

#include "h2nh/modules.hpp"

namespace h2nh::nn {

namespace F = torch::nn::functional;

int64_t same_padding(int64_t kernel, int64_t dilation) {
  return (kernel * dilation - dilation) / 2;
}

torch::nn::Conv1d replicate_conv(int64_t in, int64_t out, int64_t kernel) {
  return torch::nn::Conv1d(torch::nn::Conv1dOptions(in, out, kernel)
                               .padding(same_padding(kernel))
                               .padding_mode(torch::kReplicate));
}

WaveNetImpl::WaveNetImpl(int64_t hidden, int64_t kernel, int64_t dilation_rate,
                         int64_t n_layers, int64_t cond_channels)
    : hidden_(hidden), n_layers_(n_layers), cond_channels_(cond_channels) {
  in_layers_ = register_module("in_layers", torch::nn::ModuleList());
  res_skip_layers_ = register_module("res_skip_layers", torch::nn::ModuleList());
  if (cond_channels > 0) {
    cond_layer_ = register_module(
        "cond_layer", torch::nn::Conv1d(torch::nn::Conv1dOptions(
                          cond_channels, 2 * hidden * n_layers, 1)));
  }
  int64_t dilation = 1;
  for (int64_t i = 0; i < n_layers; ++i) {
    in_layers_->push_back(torch::nn::Conv1d(
        torch::nn::Conv1dOptions(hidden, 2 * hidden, kernel)
            .dilation(dilation)
            .padding(same_padding(kernel, dilation))));
    const int64_t out = i + 1 < n_layers ? 2 * hidden : hidden;
    res_skip_layers_->push_back(
        torch::nn::Conv1d(torch::nn::Conv1dOptions(hidden, out, 1)));
    dilation *= dilation_rate;
  }
}

torch::Tensor WaveNetImpl::forward(torch::Tensor x, const torch::Tensor& g) {
  auto output = torch::zeros_like(x);
  torch::Tensor cond;
  if (cond_layer_ && g.defined()) cond = cond_layer_(g.unsqueeze(-1));
  for (int64_t i = 0; i < n_layers_; ++i) {
    auto h = in_layers_[i]->as<torch::nn::Conv1d>()->forward(x);
    if (cond.defined())
      h = h + cond.narrow(1, 2 * hidden_ * i, 2 * hidden_);
    auto parts = h.chunk(2, 1);
    auto acts = torch::tanh(parts[0]) * torch::sigmoid(parts[1]);
    auto rs = res_skip_layers_[i]->as<torch::nn::Conv1d>()->forward(acts);
    if (i + 1 < n_layers_) {
      x = x + rs.narrow(1, 0, hidden_);
      output = output + rs.narrow(1, hidden_, hidden_);
    } else {
      output = output + rs;
    }
  }
  return output;
}

AffineCouplingImpl::AffineCouplingImpl(int64_t channels, int64_t hidden,
                                       int64_t kernel, int64_t dilation_rate,
                                       int64_t n_layers, int64_t cond_channels,
                                       bool mean_only, int parity)
    : half_(channels / 2), mean_only_(mean_only), parity_(parity) {
  TORCH_CHECK(channels % 2 == 0, "coupling channels must be even");
  pre_ = register_module(
      "pre", torch::nn::Conv1d(torch::nn::Conv1dOptions(half_, hidden, 1)));
  net_ = register_module(
      "net", WaveNet(hidden, kernel, dilation_rate, n_layers, cond_channels));
  post_ = register_module(
      "post", torch::nn::Conv1d(torch::nn::Conv1dOptions(
                  hidden, half_ * (mean_only ? 1 : 2), 1)));
  torch::NoGradGuard no_grad;
  post_->weight.zero_();
  post_->bias.zero_();
}

std::pair<torch::Tensor, torch::Tensor> AffineCouplingImpl::split(
    const torch::Tensor& z) const {
  auto a = z.narrow(1, 0, half_);
  auto b = z.narrow(1, half_, half_);
  return parity_ == 0 ? std::make_pair(a, b) : std::make_pair(b, a);
}

torch::Tensor AffineCouplingImpl::merge(const torch::Tensor& fixed,
                                        const torch::Tensor& moved) const {
  return parity_ == 0 ? torch::cat({fixed, moved}, 1)
                      : torch::cat({moved, fixed}, 1);
}

std::pair<torch::Tensor, torch::Tensor> AffineCouplingImpl::stats(
    const torch::Tensor& context, const torch::Tensor& g) {
  auto h = net_(pre_(context), g);
  auto s = post_(h);
  if (mean_only_) return {s, torch::zeros_like(s)};
  auto parts = s.chunk(2, 1);
  return {parts[0], parts[1]};
}

CouplingResult AffineCouplingImpl::forward(const torch::Tensor& z,
                                           const torch::Tensor& g) {
  auto [fixed, moved] = split(z);
  auto [shift, log_scale] = stats(fixed, g);
  auto out = shift + moved * torch::exp(log_scale);
  return {merge(fixed, out), log_scale.sum({1, 2})};
}

torch::Tensor AffineCouplingImpl::inverse(const torch::Tensor& z,
                                          const torch::Tensor& g) {
  auto [fixed, moved] = split(z);
  auto [shift, log_scale] = stats(fixed, g);
  auto out = (moved - shift) * torch::exp(-log_scale);
  return merge(fixed, out);
}

ResBlockImpl::ResBlockImpl(int64_t channels, int64_t kernel,
                           const std::vector<int64_t>& dilations) {
  convs1_ = register_module("convs1", torch::nn::ModuleList());
  convs2_ = register_module("convs2", torch::nn::ModuleList());
  for (int64_t d : dilations) {
    convs1_->push_back(torch::nn::Conv1d(
        torch::nn::Conv1dOptions(channels, channels, kernel)
            .dilation(d)
            .padding(same_padding(kernel, d))));
    convs2_->push_back(torch::nn::Conv1d(
        torch::nn::Conv1dOptions(channels, channels, kernel)
            .padding(same_padding(kernel))));
  }
  torch::NoGradGuard no_grad;
  for (auto& p : parameters()) {
    if (p.dim() > 1) p.normal_(0.0, 0.01);
  }
}

torch::Tensor ResBlockImpl::forward(torch::Tensor x) {
  auto leaky = F::LeakyReLUFuncOptions().negative_slope(kLeakySlope);
  for (size_t i = 0; i < convs1_->size(); ++i) {
    auto h = F::leaky_relu(x, leaky);
    h = convs1_[i]->as<torch::nn::Conv1d>()->forward(h);
    h = F::leaky_relu(h, leaky);
    h = convs2_[i]->as<torch::nn::Conv1d>()->forward(h);
    x = x + h;
  }
  return x;
}

}  // namespace h2nh::nn
