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

#ifndef H2NH_LINGUISTIC_HPP_
#define H2NH_LINGUISTIC_HPP_

#include <filesystem>
#include <memory>
#include <mutex>
#include <string>

#include <torch/script.h>
#include <torch/torch.h>

#include "h2nh/dsp.hpp"

namespace h2nh::linguistic {

inline constexpr int kSslSampleRate = 16000;
inline constexpr int kSslWindow = 400;  // 25 ms
inline constexpr int kSslStride = 320;  // 20 ms

struct LinguisticFeatures {
  torch::Tensor frames;  // [D, T_ssl]
  double stride_ms = 20.0;
  double window_ms = 25.0;
  std::string backend_id;

  int64_t num_frames() const { return frames.size(1); }
  int64_t dim() const { return frames.size(0); }
};

// floor((len - 400) / 320) + 1, and 1 for inputs shorter than a window.
int64_t ssl_frame_count(int64_t num_samples);

// Content encoder operating on 16 kHz audio. Implementations must be
// deterministic and safe to call from several threads.
class SslBackend {
 public:
  virtual ~SslBackend() = default;
  virtual int64_t feature_dim() const = 0;
  virtual std::string id() const = 0;
  // Returns [D, T_ssl].
  virtual torch::Tensor encode(const AudioClip& clip16k) const = 0;
};

// Hermetic stand-in: log1p-compressed 80-band mel statistics of each
// 25 ms / 20 ms frame, mapped through a seeded Gaussian projection (no bias,
// so silence maps to zeros).
class StubSslBackend : public SslBackend {
 public:
  explicit StubSslBackend(uint64_t seed = 0, int64_t feature_dim = 1024);

  int64_t feature_dim() const override { return projection_.size(0); }
  std::string id() const override;
  torch::Tensor encode(const AudioClip& clip16k) const override;

 private:
  uint64_t seed_;
  torch::Tensor projection_;  // [D, n_mels]
  torch::Tensor mel_weights_;  // [n_mels, 257]
  torch::Tensor window_;
};

// Pretrained SSL model exported with TorchScript. The scripted forward takes
// a [1, N] float waveform at 16 kHz and returns either a list of hidden
// states ([1, T, D] each, index 0 being the feature projection) from which
// `layer` is selected, or a single [1, T, D] tensor.
class TorchScriptSslBackend : public SslBackend {
 public:
  TorchScriptSslBackend(const std::filesystem::path& path, int layer = 12);

  int64_t feature_dim() const override { return feature_dim_; }
  std::string id() const override { return id_; }
  torch::Tensor encode(const AudioClip& clip16k) const override;

 private:
  torch::Tensor run(const torch::Tensor& wave) const;

  mutable torch::jit::Module module_;
  mutable std::mutex mutex_;
  int layer_;
  int64_t feature_dim_ = 0;
  std::string id_;
};

struct LinguisticConfig {
  std::string backend = "stub";  // "stub" | "torchscript"
  std::string weights_path;
  int layer = 12;
  int64_t feature_dim = 1024;  // stub only; real backends report their own
  uint64_t seed = 0;

  bool operator==(const LinguisticConfig&) const = default;
};

std::unique_ptr<SslBackend> make_backend(const LinguisticConfig& cfg);

LinguisticFeatures extract_features(const AudioClip& clip16k,
                                    const SslBackend& backend);

// Linear interpolation onto target_frames positions spanning the first to
// the last SSL frame. Returns [D, target_frames].
torch::Tensor retime_to_hop(const LinguisticFeatures& feats,
                            int64_t target_frames);

}  // namespace h2nh::linguistic

#endif  // H2NH_LINGUISTIC_HPP_
