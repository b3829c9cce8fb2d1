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


#ifndef H2NH_CONVERSION_HPP_
#define H2NH_CONVERSION_HPP_

#include <filesystem>
#include <memory>

#include <torch/torch.h>

#include "h2nh/config.hpp"
#include "h2nh/dsp.hpp"
#include "h2nh/features.hpp"
#include "h2nh/model.hpp"

namespace h2nh::training {
class TrainState;
}

namespace h2nh::conversion {

inline constexpr double kDefaultTemperature = 0.667;

struct ConversionRequest {
  AudioClip source;     // content and energy
  AudioClip reference;  // timbre, used whole
  double temperature = kDefaultTemperature;
  uint64_t seed = 0;
};

// Frozen generator snapshot plus the feature pipeline it was trained with.
// Const methods are safe to call from several threads.
class VoiceModel {
 public:
  VoiceModel() = default;  // not ready; every call throws StateError
  VoiceModel(RunConfig cfg, model::Synthesizer generator,
             std::shared_ptr<const linguistic::SslBackend> backend);

  // Copies the current generator weights out of a training state.
  static VoiceModel from_state(training::TrainState& state,
                               std::shared_ptr<const linguistic::SslBackend> backend = nullptr);
  static VoiceModel from_checkpoint(const std::filesystem::path& path,
                                    std::shared_ptr<const linguistic::SslBackend> backend = nullptr);

  bool ready() const { return static_cast<bool>(generator_); }
  const RunConfig& config() const { return cfg_; }
  const features::FeaturePipeline& pipeline() const;
  model::Synthesizer& generator();

  AudioClip convert(const ConversionRequest& req) const;
  // decode(z) with z drawn from the posterior of the clip's own spectrogram.
  // temperature 0 decodes the posterior mean.
  AudioClip reconstruct(const AudioClip& clip, double temperature = 1.0,
                        uint64_t seed = 0) const;

 private:
  void require_ready() const;

  RunConfig cfg_;
  model::Synthesizer generator_{nullptr};
  std::shared_ptr<const features::FeaturePipeline> pipeline_;
};

AudioClip convert(const ConversionRequest& req, const VoiceModel& model);
AudioClip reconstruct(const AudioClip& clip, const VoiceModel& model,
                      double temperature = 1.0, uint64_t seed = 0);

}  // namespace h2nh::conversion

#endif  // H2NH_CONVERSION_HPP_
