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

#include "h2nh/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "h2nh/errors.hpp"

namespace h2nh {

std::string_view to_string(ClipCategory c) {
  switch (c) {
    case ClipCategory::kExclamation:
      return "exclamation";
    case ClipCategory::kDesigned:
      return "designed";
    case ClipCategory::kAnimal:
      return "animal";
  }
  return "unknown";
}

std::optional<ClipCategory> parse_category(std::string_view s) {
  if (s == "exclamation") return ClipCategory::kExclamation;
  if (s == "designed") return ClipCategory::kDesigned;
  if (s == "animal") return ClipCategory::kAnimal;
  return std::nullopt;
}

torch::Tensor AudioClip::tensor() const {
  return torch::from_blob(const_cast<float*>(samples.data()),
                          {static_cast<int64_t>(samples.size())},
                          torch::kFloat32)
      .clone();
}

AudioClip AudioClip::from_tensor(const torch::Tensor& wave, int sample_rate) {
  auto flat = wave.detach().reshape({-1}).to(torch::kFloat32).contiguous();
  AudioClip clip;
  clip.sample_rate = sample_rate;
  clip.samples.assign(flat.data_ptr<float>(),
                      flat.data_ptr<float>() + flat.numel());
  return clip;
}

namespace dsp {
namespace {

double kaiser(double u, double beta) {
  if (std::abs(u) > 1.0) return 0.0;
  return std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - u * u)) /
         std::cyl_bessel_i(0.0, beta);
}

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

}  // namespace

std::vector<float> resample_signal(std::span<const float> input, double ratio,
                                   int64_t n_out) {
  const auto n_in = static_cast<int64_t>(input.size());
  // Anti-aliasing cutoff relative to the input Nyquist, with a small rolloff.
  const double cutoff = std::min(1.0, ratio) * 0.97;
  const int64_t half_width = static_cast<int64_t>(std::ceil(16.0 / cutoff));
  constexpr double kBeta = 8.6;

  // Kernel tabulated on a fine grid and linearly interpolated; evaluating the
  // Bessel window per tap is far too slow for long clips.
  constexpr int kTableDensity = 1024;
  const int64_t table_size = half_width * kTableDensity + 2;
  std::vector<double> table(static_cast<size_t>(table_size));
  for (int64_t i = 0; i < table_size; ++i) {
    const double d = static_cast<double>(i) / kTableDensity;
    table[i] = cutoff * sinc(cutoff * d) * kaiser(d / half_width, kBeta);
  }
  auto kernel = [&](double d) {
    const double pos = std::abs(d) * kTableDensity;
    const auto i = static_cast<int64_t>(pos);
    if (i + 1 >= table_size) return 0.0;
    const double frac = pos - static_cast<double>(i);
    return table[i] + frac * (table[i + 1] - table[i]);
  };

  std::vector<float> out(static_cast<size_t>(std::max<int64_t>(n_out, 0)));
  for (int64_t n = 0; n < n_out; ++n) {
    const double t = static_cast<double>(n) / ratio;
    const int64_t centre = static_cast<int64_t>(std::floor(t));
    const int64_t lo = std::max<int64_t>(0, centre - half_width + 1);
    const int64_t hi = std::min<int64_t>(n_in - 1, centre + half_width);
    double acc = 0.0;
    for (int64_t k = lo; k <= hi; ++k)
      acc += input[k] * kernel(t - static_cast<double>(k));
    out[n] = static_cast<float>(acc);
  }
  return out;
}

AudioClip resample(const AudioClip& clip, int target_rate) {
  if (target_rate <= 0) throw DomainError("resample: target rate must be > 0");
  if (clip.sample_rate <= 0) throw DomainError("resample: bad source rate");
  if (target_rate == clip.sample_rate) return clip;

  const int64_t src = clip.sample_rate;
  const int64_t n_out = (2 * clip.size() * target_rate + src) / (2 * src);
  AudioClip out;
  out.sample_rate = target_rate;
  out.source_path = clip.source_path;
  out.category = clip.category;
  out.samples = resample_signal(
      clip.samples, static_cast<double>(target_rate) / src, n_out);
  for (auto& s : out.samples) s = std::clamp(s, -1.0f, 1.0f);
  return out;
}

void StftConfig::validate() const {
  if (sample_rate <= 0) throw ConfigError("stft: sample_rate must be > 0");
  if (hop_samples <= 0 || win_samples <= 0 || fft_size <= 0)
    throw ConfigError("stft: sizes must be positive");
  if (!(hop_samples <= win_samples && win_samples <= fft_size))
    throw ConfigError("stft: require hop <= win <= fft_size");
}

int64_t StftConfig::num_frames(int64_t num_samples) const {
  if (center) return 1 + num_samples / hop_samples;
  if (num_samples < fft_size) return 0;
  return 1 + (num_samples - fft_size) / hop_samples;
}

torch::Tensor reflect_pad(const torch::Tensor& x, int64_t pad) {
  if (pad == 0) return x;
  const int64_t n = x.size(-1);
  if (n < 1) throw DomainError("reflect_pad: empty input");
  auto idx = torch::empty({n + 2 * pad}, torch::kLong);
  auto* p = idx.data_ptr<int64_t>();
  const int64_t period = 2 * (n - 1);
  for (int64_t i = -pad; i < n + pad; ++i) {
    int64_t m = 0;
    if (period > 0) {
      m = ((i % period) + period) % period;
      if (m >= n) m = period - m;
    }
    p[i + pad] = m;
  }
  return x.index_select(x.dim() - 1, idx.to(x.device()));
}

torch::Tensor stft_complex(const torch::Tensor& wave, int64_t n_fft,
                           int64_t hop, int64_t win_length) {
  auto lead = wave.sizes().vec();
  lead.pop_back();
  auto flat = wave.reshape({-1, wave.size(-1)});
  flat = reflect_pad(flat, n_fft / 2);
  auto window = torch::hann_window(
      win_length, torch::TensorOptions().dtype(wave.dtype()).device(wave.device()));
  auto spec = torch::stft(flat, n_fft, hop, win_length, window,
                          /*normalized=*/false, /*onesided=*/true,
                          /*return_complex=*/true);
  lead.push_back(spec.size(-2));
  lead.push_back(spec.size(-1));
  return spec.reshape(lead);
}

torch::Tensor stft_magnitude(const torch::Tensor& wave, int64_t n_fft,
                             int64_t hop, int64_t win_length) {
  auto spec = torch::view_as_real(stft_complex(wave, n_fft, hop, win_length));
  auto power = spec.pow(2).sum(-1);
  return power.clamp_min(1e-10).sqrt();
}

LinearSpectrogram stft(const AudioClip& clip, const StftConfig& cfg) {
  cfg.validate();
  if (clip.sample_rate != cfg.sample_rate)
    throw ConfigError("stft: clip sample rate " +
                      std::to_string(clip.sample_rate) +
                      " does not match config " +
                      std::to_string(cfg.sample_rate));
  if (clip.empty()) throw DomainError("stft: empty clip");
  if (!cfg.center)
    throw ConfigError("stft: only centered analysis is supported");
  torch::NoGradGuard no_grad;
  auto spec = stft_complex(clip.tensor(), cfg.fft_size, cfg.hop_samples,
                           cfg.win_samples);
  return LinearSpectrogram{spec.abs().contiguous(), cfg};
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

MelFilterbank mel_filterbank(const StftConfig& cfg, int n_mels, double f_min,
                             double f_max, bool area_normalized) {
  cfg.validate();
  const double nyquist = cfg.sample_rate / 2.0;
  if (!(0.0 <= f_min && f_min < f_max && f_max <= nyquist))
    throw ConfigError("mel_filterbank: require 0 <= f_min < f_max <= sr/2");
  const int n_bins = cfg.n_bins();
  if (n_mels < 1 || n_mels > n_bins)
    throw ConfigError("mel_filterbank: n_mels " + std::to_string(n_mels) +
                      " exceeds " + std::to_string(n_bins) + " linear bins");

  const double mel_lo = hz_to_mel(f_min);
  const double mel_hi = hz_to_mel(f_max);
  std::vector<double> edges(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i)
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (n_mels + 1));

  auto w = torch::zeros({n_mels, n_bins}, torch::kFloat64);
  auto acc = w.accessor<double, 2>();
  const double bin_hz = static_cast<double>(cfg.sample_rate) / cfg.fft_size;
  for (int m = 0; m < n_mels; ++m) {
    const double left = edges[m], centre = edges[m + 1], right = edges[m + 2];
    for (int k = 0; k < n_bins; ++k) {
      const double f = k * bin_hz;
      const double up = (f - left) / (centre - left);
      const double down = (right - f) / (right - centre);
      acc[m][k] = std::max(0.0, std::min(up, down));
    }
  }
  if (area_normalized) {
    auto sums = w.sum(1, /*keepdim=*/true).clamp_min(1e-12);
    w = w / sums;
  }
  return MelFilterbank{w.to(torch::kFloat32), f_min, f_max, n_mels,
                       area_normalized};
}

MelSpectrogram mel_spectrogram(const LinearSpectrogram& linear,
                               const MelFilterbank& fb, bool log_scale) {
  if (fb.weights.size(1) != linear.num_bins())
    throw DimensionError("mel_spectrogram: filterbank expects " +
                         std::to_string(fb.weights.size(1)) + " bins, got " +
                         std::to_string(linear.num_bins()));
  auto mel = torch::matmul(fb.weights.to(linear.frames.dtype()), linear.frames);
  if (log_scale) mel = torch::log(mel + kMelEpsilon);
  return MelSpectrogram{mel, fb, log_scale};
}

EnergyContour frame_energy(const LinearSpectrogram& linear) {
  auto e = linear.frames.to(torch::kFloat64).pow(2).sum(0).sqrt().contiguous();
  EnergyContour out;
  out.values.assign(e.data_ptr<double>(), e.data_ptr<double>() + e.numel());
  return out;
}

EnergyContour normalize_energy(const EnergyContour& e, double epsilon) {
  if (e.values.empty()) throw DomainError("normalize_energy: empty contour");
  if (e.normalized)
    throw DomainError("normalize_energy: contour is already normalized");
  const double mean =
      std::accumulate(e.values.begin(), e.values.end(), 0.0) / e.size();
  const double log_mean = std::log(mean + epsilon);
  EnergyContour out;
  out.normalized = true;
  out.epsilon = epsilon;
  out.values.reserve(e.values.size());
  for (double x : e.values) out.values.push_back(std::log(x + epsilon) - log_mean);
  return out;
}

}  // namespace dsp
}  // namespace h2nh
