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

#include "h2nh/linguistic.hpp"

#include <ATen/CPUGeneratorImpl.h>

#include "h2nh/errors.hpp"

namespace h2nh::linguistic {
namespace {

constexpr int kStubFft = 512;
constexpr int kStubMels = 80;

}  // namespace

int64_t ssl_frame_count(int64_t num_samples) {
  if (num_samples < kSslWindow) return 1;
  return (num_samples - kSslWindow) / kSslStride + 1;
}

StubSslBackend::StubSslBackend(uint64_t seed, int64_t feature_dim)
    : seed_(seed) {
  if (feature_dim < 1) throw ConfigError("stub backend: feature_dim must be >= 1");
  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  projection_ = torch::randn({feature_dim, kStubMels}, gen, torch::kFloat32) /
                std::sqrt(static_cast<double>(kStubMels));
  dsp::StftConfig cfg{kSslSampleRate, kSslWindow, kSslStride, kStubFft, true};
  mel_weights_ =
      dsp::mel_filterbank(cfg, kStubMels, 0.0, kSslSampleRate / 2.0).weights;
  window_ = torch::hann_window(kSslWindow, torch::kFloat32);
}

std::string StubSslBackend::id() const {
  return "stub-" + std::to_string(seed_) + "-" +
         std::to_string(feature_dim());
}

torch::Tensor StubSslBackend::encode(const AudioClip& clip16k) const {
  torch::NoGradGuard no_grad;
  auto wave = clip16k.tensor();
  if (wave.numel() < kSslWindow)
    wave = torch::constant_pad_nd(wave, {0, kSslWindow - wave.numel()});
  auto frames = wave.unfold(0, kSslWindow, kSslStride) * window_;  // [T, 400]
  auto mag = torch::fft::rfft(frames, kStubFft).abs();              // [T, 257]
  auto mel = torch::log1p(torch::matmul(mag, mel_weights_.t()));    // [T, 80]
  return torch::matmul(projection_, mel.t()).contiguous();          // [D, T]
}

TorchScriptSslBackend::TorchScriptSslBackend(const std::filesystem::path& path,
                                             int layer)
    : layer_(layer) {
  try {
    module_ = torch::jit::load(path.string());
  } catch (const c10::Error& e) {
    throw ConfigError("cannot load SSL model " + path.string() + ": " +
                      e.what_without_backtrace());
  }
  module_.eval();
  id_ = "torchscript:" + path.filename().string() + ":layer" +
        std::to_string(layer);
  // One window of silence reveals the feature width.
  feature_dim_ = run(torch::zeros({1, kSslWindow})).size(0);
}

torch::Tensor TorchScriptSslBackend::run(const torch::Tensor& wave) const {
  torch::NoGradGuard no_grad;
  std::lock_guard<std::mutex> lock(mutex_);
  auto out = module_.forward({wave});
  torch::Tensor hidden;
  if (out.isTensor()) {
    hidden = out.toTensor();
  } else if (out.isTensorList() || out.isList() || out.isTuple()) {
    std::vector<torch::Tensor> layers;
    if (out.isTuple()) {
      for (const auto& v : out.toTupleRef().elements())
        layers.push_back(v.toTensor());
    } else {
      for (const auto& v : out.toList()) layers.push_back(v.get().toTensor());
    }
    if (layer_ < 0 || layer_ >= static_cast<int>(layers.size()))
      throw ConfigError("SSL model has " + std::to_string(layers.size()) +
                        " hidden states; layer " + std::to_string(layer_) +
                        " requested");
    hidden = layers[layer_];
  } else {
    throw ConfigError("SSL model returned an unsupported value");
  }
  if (hidden.dim() != 3 || hidden.size(0) != 1)
    throw DimensionError("SSL hidden state must be [1, T, D]");
  return hidden[0].t().to(torch::kFloat32).contiguous();
}

torch::Tensor TorchScriptSslBackend::encode(const AudioClip& clip16k) const {
  auto wave = clip16k.tensor();
  if (wave.numel() < kSslWindow)
    wave = torch::constant_pad_nd(wave, {0, kSslWindow - wave.numel()});
  return run(wave.unsqueeze(0));
}

std::unique_ptr<SslBackend> make_backend(const LinguisticConfig& cfg) {
  if (cfg.backend == "stub")
    return std::make_unique<StubSslBackend>(cfg.seed, cfg.feature_dim);
  if (cfg.backend == "torchscript") {
    if (cfg.weights_path.empty())
      throw ConfigError("torchscript backend needs linguistic.weights_path");
    return std::make_unique<TorchScriptSslBackend>(cfg.weights_path, cfg.layer);
  }
  throw ConfigError("unknown linguistic backend '" + cfg.backend + "'");
}

LinguisticFeatures extract_features(const AudioClip& clip16k,
                                    const SslBackend& backend) {
  if (clip16k.sample_rate != kSslSampleRate)
    throw ConfigError("extract_features: expected 16000 Hz input, got " +
                      std::to_string(clip16k.sample_rate));
  LinguisticFeatures out;
  out.frames = backend.encode(clip16k);
  out.backend_id = backend.id();
  if (!torch::isfinite(out.frames).all().item<bool>())
    throw NumericError("SSL backend produced non-finite features");
  return out;
}

torch::Tensor retime_to_hop(const LinguisticFeatures& feats,
                            int64_t target_frames) {
  if (target_frames < 1)
    throw DomainError("retime_to_hop: target frame count must be >= 1");
  if (!feats.frames.defined() || feats.frames.dim() != 2 ||
      feats.num_frames() < 1)
    throw DomainError("retime_to_hop: need at least one SSL frame");
  if (feats.num_frames() == 1)
    return feats.frames.expand({feats.dim(), target_frames}).contiguous();
  namespace F = torch::nn::functional;
  auto out = F::interpolate(feats.frames.unsqueeze(0),
                            F::InterpolateFuncOptions()
                                .size(std::vector<int64_t>{target_frames})
                                .mode(torch::kLinear)
                                .align_corners(true));
  return out[0].contiguous();
}

}  // namespace h2nh::linguistic
