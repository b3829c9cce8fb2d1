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

#ifndef H2NH_PERTURBATION_HPP_
#define H2NH_PERTURBATION_HPP_

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "h2nh/dsp.hpp"

namespace h2nh::perturb {

// Maxima are multiplicative ratios; each ratio is drawn log-uniformly from
// [1 / max, max].
struct PerturbConfig {
  double formant_shift_max = 1.8;
  double pitch_shift_max = 3.0;
  double pitch_range_max = 2.0;
  int peq_bands = 8;
  double peq_gain_db_range = 12.0;
  uint64_t seed = 0;

  void validate() const;
  bool operator==(const PerturbConfig&) const = default;
};

struct PerturbRatios {
  double formant = 1.0;
  double pitch = 1.0;
  double range = 1.0;

  bool is_identity() const {
    return formant == 1.0 && pitch == 1.0 && range == 1.0;
  }
};

struct PeakingBand {
  double centre_hz = 1000.0;
  double gain_db = 0.0;
  double q = 1.0;
};

PerturbRatios sample_ratios(const PerturbConfig& cfg, std::mt19937_64& rng);

// Random peaking-EQ bands; empty when the gain range is zero.
std::vector<PeakingBand> sample_peq(const PerturbConfig& cfg, int sample_rate,
                                    std::mt19937_64& rng);

// Cascade of RBJ peaking biquads.
std::vector<float> apply_peq(std::span<const float> x, int sample_rate,
                             std::span<const PeakingBand> bands);

// Frame-wise f0 estimate from normalized autocorrelation; 0 marks unvoiced
// frames. One value per `hop` samples.
struct PitchTrack {
  std::vector<double> f0;
  int hop = 441;
  int sample_rate = kSampleRate;

  double at(double sample) const;  // nearest frame
  double median_voiced() const;    // 0 when nothing is voiced
};

PitchTrack estimate_pitch(std::span<const float> x, int sample_rate,
                          double min_f0 = 60.0, double max_f0 = 1000.0);

// TD-PSOLA resynthesis: formants scaled by ratios.formant (by resampling the
// grains' source signal), f0 deviations about the median scaled by
// ratios.range in the log domain, then f0 multiplied by ratios.pitch.
// Duration is preserved exactly.
std::vector<float> shift_formant_and_pitch(std::span<const float> x,
                                           int sample_rate,
                                           const PerturbRatios& ratios);

// EQ -> formant -> pitch -> range with explicit parameters.
AudioClip perturb_with(const AudioClip& clip, std::span<const PeakingBand> eq,
                       const PerturbRatios& ratios);

// Draws parameters from cfg.seed and applies perturb_with.
AudioClip perturb_timbre(const AudioClip& clip, const PerturbConfig& cfg);

}  // namespace h2nh::perturb

#endif  // H2NH_PERTURBATION_HPP_
