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

#include "h2nh/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "h2nh/errors.hpp"

namespace h2nh::perturb {
namespace {

constexpr double kPitchAnalysisRate = 11025.0;
constexpr double kUnvoicedStepSeconds = 0.01;

double log_uniform(double max_ratio, std::mt19937_64& rng) {
  if (max_ratio == 1.0) return 1.0;
  const double lim = std::log(max_ratio);
  std::uniform_real_distribution<double> u(-lim, lim);
  return std::exp(u(rng));
}

}  // namespace

void PerturbConfig::validate() const {
  if (formant_shift_max < 1.0 || pitch_shift_max < 1.0 || pitch_range_max < 1.0)
    throw ConfigError("perturb: ratio maxima must be >= 1");
  if (peq_bands < 0) throw ConfigError("perturb: peq_bands must be >= 0");
  if (peq_gain_db_range < 0.0)
    throw ConfigError("perturb: peq_gain_db_range must be >= 0");
}

PerturbRatios sample_ratios(const PerturbConfig& cfg, std::mt19937_64& rng) {
  PerturbRatios r;
  r.formant = log_uniform(cfg.formant_shift_max, rng);
  r.pitch = log_uniform(cfg.pitch_shift_max, rng);
  r.range = log_uniform(cfg.pitch_range_max, rng);
  return r;
}

std::vector<PeakingBand> sample_peq(const PerturbConfig& cfg, int sample_rate,
                                    std::mt19937_64& rng) {
  std::vector<PeakingBand> bands;
  if (cfg.peq_gain_db_range == 0.0) return bands;
  std::uniform_real_distribution<double> log_f(std::log(60.0),
                                               std::log(0.45 * sample_rate));
  std::uniform_real_distribution<double> gain(-cfg.peq_gain_db_range,
                                              cfg.peq_gain_db_range);
  std::uniform_real_distribution<double> log_q(std::log(0.7), std::log(4.0));
  for (int i = 0; i < cfg.peq_bands; ++i) {
    PeakingBand b;
    b.centre_hz = std::exp(log_f(rng));
    b.gain_db = gain(rng);
    b.q = std::exp(log_q(rng));
    bands.push_back(b);
  }
  return bands;
}

std::vector<float> apply_peq(std::span<const float> x, int sample_rate,
                             std::span<const PeakingBand> bands) {
  std::vector<double> y(x.begin(), x.end());
  for (const auto& band : bands) {
    const double a = std::pow(10.0, band.gain_db / 40.0);
    const double w0 = 2.0 * std::numbers::pi * band.centre_hz / sample_rate;
    const double alpha = std::sin(w0) / (2.0 * band.q);
    const double cw = std::cos(w0);
    const double a0 = 1.0 + alpha / a;
    const double b0 = (1.0 + alpha * a) / a0, b1 = -2.0 * cw / a0,
                 b2 = (1.0 - alpha * a) / a0;
    const double a1 = -2.0 * cw / a0, a2 = (1.0 - alpha / a) / a0;
    // Transposed direct form II.
    double s1 = 0.0, s2 = 0.0;
    for (double& v : y) {
      const double in = v;
      const double out = b0 * in + s1;
      s1 = b1 * in - a1 * out + s2;
      s2 = b2 * in - a2 * out;
      v = out;
    }
  }
  return {y.begin(), y.end()};
}

double PitchTrack::at(double sample) const {
  if (f0.empty()) return 0.0;
  const auto i = static_cast<int64_t>(std::lround(sample / hop));
  return f0[std::clamp<int64_t>(i, 0, static_cast<int64_t>(f0.size()) - 1)];
}

double PitchTrack::median_voiced() const {
  std::vector<double> v;
  for (double f : f0)
    if (f > 0.0) v.push_back(f);
  if (v.empty()) return 0.0;
  std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
  return v[v.size() / 2];
}

PitchTrack estimate_pitch(std::span<const float> x, int sample_rate,
                          double min_f0, double max_f0) {
  PitchTrack track;
  track.sample_rate = sample_rate;
  track.hop = std::max(1, sample_rate / 100);
  const auto n = static_cast<int64_t>(x.size());
  const int64_t n_frames = n / track.hop + 1;
  track.f0.assign(static_cast<size_t>(n_frames), 0.0);
  if (n == 0) return track;

  const double rate = std::min<double>(sample_rate, kPitchAnalysisRate);
  const double ratio = rate / sample_rate;
  std::vector<float> y =
      ratio < 1.0 ? dsp::resample_signal(
                        x, ratio, static_cast<int64_t>(std::ceil(n * ratio)))
                  : std::vector<float>(x.begin(), x.end());
  const auto ny = static_cast<int64_t>(y.size());

  const auto lag_min = std::max<int64_t>(2, static_cast<int64_t>(rate / max_f0));
  const auto lag_max = static_cast<int64_t>(std::ceil(rate / min_f0));
  const int64_t win = 2 * lag_max;

  auto sample = [&](int64_t i) -> double {
    return (i >= 0 && i < ny) ? y[i] : 0.0;
  };

  std::vector<double> rms(track.f0.size(), 0.0);
  double peak_rms = 0.0;
  for (int64_t f = 0; f < n_frames; ++f) {
    const int64_t start = static_cast<int64_t>(f * track.hop * ratio) - win / 2;
    double e = 0.0;
    for (int64_t i = 0; i < win; ++i) e += sample(start + i) * sample(start + i);
    rms[f] = std::sqrt(e / win);
    peak_rms = std::max(peak_rms, rms[f]);
  }

  std::vector<double> r(static_cast<size_t>(lag_max + 2), 0.0);
  for (int64_t f = 0; f < n_frames; ++f) {
    if (rms[f] < 1e-5 || rms[f] < 0.02 * peak_rms) continue;
    const int64_t start =
        static_cast<int64_t>(f * track.hop * ratio) - (win + lag_max) / 2;
    double best = 0.0;
    for (int64_t lag = lag_min - 1; lag <= lag_max + 1; ++lag) {
      double xy = 0.0, xx = 0.0, yy = 0.0;
      for (int64_t i = 0; i < win; ++i) {
        const double a = sample(start + i), b = sample(start + i + lag);
        xy += a * b;
        xx += a * a;
        yy += b * b;
      }
      r[lag] = (xx > 0.0 && yy > 0.0) ? xy / std::sqrt(xx * yy) : 0.0;
      if (lag >= lag_min && lag <= lag_max) best = std::max(best, r[lag]);
    }
    if (best < 0.5) continue;
    // The shortest lag close to the best peak avoids sub-harmonic picks.
    for (int64_t lag = lag_min; lag <= lag_max; ++lag) {
      if (r[lag] >= 0.9 * best && r[lag] >= r[lag - 1] && r[lag] >= r[lag + 1]) {
        const double denom = r[lag - 1] - 2.0 * r[lag] + r[lag + 1];
        const double delta =
            denom != 0.0 ? 0.5 * (r[lag - 1] - r[lag + 1]) / denom : 0.0;
        track.f0[f] = rate / (lag + std::clamp(delta, -0.5, 0.5));
        break;
      }
    }
  }
  return track;
}

std::vector<float> shift_formant_and_pitch(std::span<const float> x,
                                           int sample_rate,
                                           const PerturbRatios& ratios) {
  if (ratios.is_identity()) return {x.begin(), x.end()};
  const auto n = static_cast<int64_t>(x.size());
  if (n == 0) return {};

  const PitchTrack track = estimate_pitch(x, sample_rate);
  const double median = track.median_voiced();
  const double unvoiced_step = kUnvoicedStepSeconds * sample_rate;
  const double rf = ratios.formant;

  auto target_f0 = [&](double t) {
    double f = track.at(t);
    if (f <= 0.0) return 0.0;
    if (median > 0.0) f = median * std::pow(f / median, ratios.range);
    return f * ratios.pitch;
  };

  // Source signal for the grains: time-compressed by rf, which scales every
  // spectral feature (formants included) by rf.
  std::vector<float> u =
      rf == 1.0 ? std::vector<float>(x.begin(), x.end())
                : dsp::resample_signal(
                      x, 1.0 / rf,
                      std::max<int64_t>(1, std::lround(n / rf)));
  const auto nu = static_cast<int64_t>(u.size());

  auto analysis_period = [&](double tau) {
    const double f = track.at(tau * rf) * rf;
    return f > 0.0 ? sample_rate / f : unvoiced_step;
  };

  std::vector<double> marks, periods;
  for (double tau = 0.0; tau < nu;) {
    const double p = std::max(2.0, analysis_period(tau));
    marks.push_back(tau);
    periods.push_back(p);
    tau += p;
  }

  std::vector<double> acc(static_cast<size_t>(n), 0.0);
  std::vector<double> wsum(static_cast<size_t>(n), 0.0);
  for (double t = 0.0; t < n;) {
    const double tau = t / rf;
    auto it = std::lower_bound(marks.begin(), marks.end(), tau);
    size_t i = static_cast<size_t>(it - marks.begin());
    if (i == marks.size() ||
        (i > 0 && tau - marks[i - 1] < marks[i] - tau))
      i = i == 0 ? 0 : i - 1;
    const auto half = std::max<int64_t>(1, std::lround(periods[i]));
    const auto src = std::lround(marks[i]);
    const auto dst = std::lround(t);
    for (int64_t k = -half; k <= half; ++k) {
      const int64_t si = src + k, di = dst + k;
      if (di < 0 || di >= n) continue;
      const double w =
          0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(k) / half));
      wsum[di] += w;
      if (si >= 0 && si < nu) acc[di] += w * u[si];
    }
    const double f = target_f0(t);
    t += f > 0.0 ? std::max(2.0, sample_rate / f) : unvoiced_step;
  }

  std::vector<float> out(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i)
    out[i] = static_cast<float>(acc[i] / std::max(wsum[i], 1.0));
  return out;
}

AudioClip perturb_with(const AudioClip& clip, std::span<const PeakingBand> eq,
                       const PerturbRatios& ratios) {
  AudioClip out = clip;
  if (clip.empty()) return out;
  if (!eq.empty()) out.samples = apply_peq(out.samples, clip.sample_rate, eq);
  if (!ratios.is_identity())
    out.samples =
        shift_formant_and_pitch(out.samples, clip.sample_rate, ratios);
  float peak = 0.0f;
  for (float s : out.samples) peak = std::max(peak, std::abs(s));
  if (peak > 1.0f)
    for (float& s : out.samples) s /= peak;
  return out;
}

AudioClip perturb_timbre(const AudioClip& clip, const PerturbConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  const PerturbRatios ratios = sample_ratios(cfg, rng);
  const auto eq = sample_peq(cfg, clip.sample_rate, rng);
  return perturb_with(clip, eq, ratios);
}

}  // namespace h2nh::perturb
