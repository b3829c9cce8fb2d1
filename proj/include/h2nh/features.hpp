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

#ifndef H2NH_FEATURES_HPP_
#define H2NH_FEATURES_HPP_

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "h2nh/dsp.hpp"
#include "h2nh/linguistic.hpp"
#include "h2nh/perturbation.hpp"

namespace h2nh::features {

// All tracks of one clip on the shared 220-sample frame grid.
struct ClipFeatures {
  torch::Tensor wave;      // [T * hop], zero-padded past the clip end
  torch::Tensor x_linear;  // [n_bins, T] linear magnitudes
  torch::Tensor mel;       // [n_mels, T] log mel (reference encoder input)
  torch::Tensor energy;    // [T] log-mean normalized frame energy
  torch::Tensor ling;      // [D_ssl, T] retimed SSL features
  int64_t num_samples = 0;  // length before padding
  std::string source_path;
  std::optional<ClipCategory> category;

  int64_t num_frames() const { return x_linear.size(1); }
};

struct PipelineConfig {
  dsp::StftConfig stft;
  int n_mels = 128;
  double mel_f_min = 0.0;
  double mel_f_max = kSampleRate / 2.0;
  perturb::PerturbConfig perturb;
};

class FeaturePipeline {
 public:
  FeaturePipeline(PipelineConfig cfg,
                  std::shared_ptr<const linguistic::SslBackend> backend);

  // Training features: SSL features come from a timbre-perturbed copy whose
  // parameters are drawn from perturb.seed mixed with `perturb_seed`.
  ClipFeatures extract(const AudioClip& clip, uint64_t perturb_seed) const;
  // Conversion features: the source is not perturbed.
  ClipFeatures extract_unperturbed(const AudioClip& clip) const;

  AudioClip ingest(const AudioClip& clip) const;  // resample to the STFT rate
  dsp::LinearSpectrogram linear(const AudioClip& clip) const;
  dsp::MelSpectrogram reference_mel(const dsp::LinearSpectrogram& linear) const;
  dsp::EnergyContour energy(const dsp::LinearSpectrogram& linear) const;
  torch::Tensor linguistic(const AudioClip& clip, int64_t frames) const;

  const PipelineConfig& config() const { return cfg_; }
  const linguistic::SslBackend& backend() const { return *backend_; }
  const dsp::MelFilterbank& filterbank() const { return filterbank_; }

 private:
  ClipFeatures build(const AudioClip& clip, const AudioClip& content) const;

  PipelineConfig cfg_;
  std::shared_ptr<const linguistic::SslBackend> backend_;
  dsp::MelFilterbank filterbank_;
};

// Feature cache container: "H2NF", a little-endian u32 version, a u64 header
// length, a JSON header, then float32 arrays at the offsets the header lists
// (relative to the start of the data block). Header fields: format, version,
// config_hash, source_path, category, frames, num_samples, sample_rate,
// arrays[{name, shape, dtype, offset}].
inline constexpr uint32_t kCacheVersion = 1;

struct CacheEntry {
  nlohmann::json header;
  ClipFeatures features;
};

// Written to a temporary name and renamed into place.
void write_cache(const std::filesystem::path& path, const ClipFeatures& f,
                 const std::string& config_hash);
nlohmann::json read_cache_header(const std::filesystem::path& path);
CacheEntry read_cache(const std::filesystem::path& path);

}  // namespace h2nh::features

#endif  // H2NH_FEATURES_HPP_
