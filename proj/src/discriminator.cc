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

#include "h2nh/discriminator.hpp"

#include "h2nh/dsp.hpp"
#include "h2nh/errors.hpp"

namespace h2nh::model {

namespace F = torch::nn::functional;

namespace {

torch::Tensor leaky(const torch::Tensor& x) {
  return F::leaky_relu(x, F::LeakyReLUFuncOptions().negative_slope(nn::kLeakySlope));
}

torch::Tensor as_batch_wave(const torch::Tensor& wave) {
  if (wave.dim() == 1) return wave.view({1, 1, -1});
  if (wave.dim() == 2) return wave.unsqueeze(1);
  if (wave.dim() == 3 && wave.size(1) == 1) return wave;
  throw DimensionError("discriminate: expected waveform [B, 1, N]");
}

}  // namespace

PeriodDiscriminatorImpl::PeriodDiscriminatorImpl(
    int64_t period, const std::vector<int64_t>& channels)
    : period_(period) {
  convs_ = register_module("convs", torch::nn::ModuleList());
  int64_t in = 1;
  for (size_t i = 0; i < channels.size(); ++i) {
    const int64_t stride = i + 1 < channels.size() ? 3 : 1;
    convs_->push_back(torch::nn::Conv2d(
        torch::nn::Conv2dOptions(in, channels[i], {5, 1})
            .stride({stride, 1})
            .padding({2, 0})));
    in = channels[i];
  }
  post_ = register_module(
      "post", torch::nn::Conv2d(
                  torch::nn::Conv2dOptions(in, 1, {3, 1}).padding({1, 0})));
}

DiscriminatorOutput PeriodDiscriminatorImpl::forward(const torch::Tensor& wave) {
  auto x = wave;
  const int64_t n = x.size(-1);
  if (n % period_ != 0) {
    const int64_t pad = period_ - n % period_;
    x = n > pad ? F::pad(x, F::PadFuncOptions({0, pad}).mode(torch::kReflect))
                : F::pad(x, F::PadFuncOptions({0, pad}));
  }
  x = x.view({x.size(0), 1, x.size(-1) / period_, period_});
  DiscriminatorOutput out;
  for (auto& conv : *convs_) {
    x = leaky(conv->as<torch::nn::Conv2d>()->forward(x));
    out.features.push_back(x);
  }
  x = post_(x);
  out.features.push_back(x);
  out.logits = x.flatten(1);
  return out;
}

BandDiscriminatorImpl::BandDiscriminatorImpl(
    int64_t fft_size, int64_t channels,
    const std::vector<std::pair<double, double>>& bands)
    : fft_size_(fft_size) {
  const int64_t n_bins = fft_size / 2 + 1;
  for (size_t b = 0; b < bands.size(); ++b) {
    const auto lo = static_cast<int64_t>(bands[b].first * n_bins);
    const auto hi = static_cast<int64_t>(bands[b].second * n_bins);
    band_bins_.emplace_back(lo, std::max(hi, lo + 1));
    torch::nn::ModuleList convs;
    convs->push_back(torch::nn::Conv2d(
        torch::nn::Conv2dOptions(2, channels, {3, 9}).padding({1, 4})));
    for (int i = 0; i < 3; ++i)
      convs->push_back(torch::nn::Conv2d(
          torch::nn::Conv2dOptions(channels, channels, {3, 9})
              .stride({1, 2})
              .padding({1, 4})));
    convs->push_back(torch::nn::Conv2d(
        torch::nn::Conv2dOptions(channels, channels, {3, 3}).padding({1, 1})));
    band_convs_.push_back(register_module("band" + std::to_string(b), convs));
  }
  post_ = register_module(
      "post", torch::nn::Conv2d(
                  torch::nn::Conv2dOptions(channels, 1, {3, 3}).padding({1, 1})));
}

DiscriminatorOutput BandDiscriminatorImpl::forward(const torch::Tensor& wave) {
  auto spec = dsp::stft_complex(wave.squeeze(1), fft_size_, fft_size_ / 4,
                                fft_size_);                     // [B, F, T]
  auto x = torch::view_as_real(spec).permute({0, 3, 2, 1});    // [B, 2, T, F]
  DiscriminatorOutput out;
  std::vector<torch::Tensor> joined;
  for (size_t b = 0; b < band_bins_.size(); ++b) {
    const auto [lo, hi] = band_bins_[b];
    auto h = x.narrow(3, lo, hi - lo);
    for (auto& conv : *band_convs_[b]) {
      h = leaky(conv->as<torch::nn::Conv2d>()->forward(h));
      out.features.push_back(h);
    }
    joined.push_back(h);
  }
  auto h = post_(torch::cat(joined, 3));
  out.features.push_back(h);
  out.logits = h.flatten(1);
  return out;
}

DiscriminatorImpl::DiscriminatorImpl(const DiscriminatorConfig& cfg) {
  cfg.validate();
  for (int64_t p : cfg.periods)
    periods_.push_back(register_module("period" + std::to_string(p),
                                       PeriodDiscriminator(p, cfg.period_channels)));
  for (int64_t n : cfg.fft_sizes)
    bands_.push_back(register_module(
        "stft" + std::to_string(n),
        BandDiscriminator(n, cfg.band_channels, cfg.bands)));
}

std::vector<DiscriminatorOutput> DiscriminatorImpl::forward(
    const torch::Tensor& wave) {
  auto x = as_batch_wave(wave);
  // DC removal and peak normalization.
  x = x - x.mean(-1, /*keepdim=*/true);
  x = 0.8 * x / (std::get<0>(x.abs().max(-1, /*keepdim=*/true)) + 1e-9);
  std::vector<DiscriminatorOutput> out;
  for (auto& d : periods_) out.push_back(d(x));
  for (auto& d : bands_) out.push_back(d(x));
  return out;
}

}  // namespace h2nh::model
