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

#ifndef H2NH_DSP_HPP_
#define H2NH_DSP_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <torch/torch.h>

namespace h2nh {

inline constexpr int kSampleRate = 44100;
inline constexpr int kHopSamples = 220;

enum class ClipCategory { kExclamation, kDesigned, kAnimal };

std::string_view to_string(ClipCategory c);
std::optional<ClipCategory> parse_category(std::string_view s);

// Mono waveform with amplitudes in [-1, 1].
struct AudioClip {
  std::vector<float> samples;
  int sample_rate = kSampleRate;
  std::optional<std::string> source_path;
  std::optional<ClipCategory> category;

  int64_t size() const { return static_cast<int64_t>(samples.size()); }
  bool empty() const { return samples.empty(); }
  double duration() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }

  // 1-D float32 tensor holding a copy of the samples.
  torch::Tensor tensor() const;
  static AudioClip from_tensor(const torch::Tensor& wave, int sample_rate);
};

namespace dsp {

// ---------------------------------------------------------------------------
// WAV I/O

// Reads 16-bit integer or 32-bit float PCM. Multichannel input is averaged
// down to mono.
AudioClip load_wav(const std::filesystem::path& path);
AudioClip decode_wav(const std::vector<uint8_t>& bytes);

// Writes 16-bit PCM, clipping to [-1, 1].
void save_wav(const AudioClip& clip, const std::filesystem::path& path);
std::vector<uint8_t> encode_wav(const AudioClip& clip);

// Band-limited (Kaiser-windowed sinc) resampling. Output length is
// round(len * target / source); equal rates return the input unchanged.
AudioClip resample(const AudioClip& clip, int target_rate);

// Reads `input` at positions n / ratio for n in [0, n_out), i.e. the signal
// is resampled by `ratio` (output rate / input rate) with a low-pass at
// min(1, ratio) of the input Nyquist.
std::vector<float> resample_signal(std::span<const float> input, double ratio,
                                   int64_t n_out);

// ---------------------------------------------------------------------------
// Time-frequency analysis

struct StftConfig {
  int sample_rate = kSampleRate;
  int win_samples = 882;  // 20 ms
  int hop_samples = kHopSamples;
  int fft_size = 882;
  bool center = true;  // reflection padding of fft_size / 2 on each side

  void validate() const;
  int n_bins() const { return fft_size / 2 + 1; }
  // 1 + floor(len / hop) when centered.
  int64_t num_frames(int64_t num_samples) const;
  bool operator==(const StftConfig&) const = default;
};

struct LinearSpectrogram {
  torch::Tensor frames;  // [n_bins, T] magnitudes
  StftConfig config;

  int64_t num_frames() const { return frames.size(1); }
  int64_t num_bins() const { return frames.size(0); }
};

struct MelFilterbank {
  torch::Tensor weights;  // [n_mels, n_linear_bins]
  double f_min = 0.0;
  double f_max = kSampleRate / 2.0;
  int n_mels = 0;
  bool area_normalized = false;
};

inline constexpr double kMelEpsilon = 1e-5;
inline constexpr double kEnergyEpsilon = 1e-5;

struct MelSpectrogram {
  torch::Tensor frames;  // [n_mels, T]
  MelFilterbank filterbank;
  bool log_scaled = false;

  int64_t num_frames() const { return frames.size(1); }
};

struct EnergyContour {
  std::vector<double> values;
  bool normalized = false;
  double epsilon = 0.0;

  int64_t size() const { return static_cast<int64_t>(values.size()); }
};

LinearSpectrogram stft(const AudioClip& clip, const StftConfig& cfg);

// HTK mel scale, 2595 * log10(1 + f / 700). Triangles have unit peak unless
// area_normalized is set, in which case each row sums to one.
double hz_to_mel(double hz);
double mel_to_hz(double mel);
MelFilterbank mel_filterbank(const StftConfig& cfg, int n_mels, double f_min,
                             double f_max, bool area_normalized = false);

MelSpectrogram mel_spectrogram(const LinearSpectrogram& linear,
                               const MelFilterbank& fb, bool log_scale);

// L2 norm of each spectrogram frame.
EnergyContour frame_energy(const LinearSpectrogram& linear);

// log(x + eps) - log(mean(x) + eps), mean over the whole contour.
EnergyContour normalize_energy(const EnergyContour& e,
                               double epsilon = kEnergyEpsilon);

// ---------------------------------------------------------------------------
// Differentiable tensor kernels shared by the losses and the discriminator.

// Reflection padding along the last dimension. Lengths shorter than the pad
// are handled by repeated reflection; a single sample is replicated.
torch::Tensor reflect_pad(const torch::Tensor& x, int64_t pad);

// Centered complex STFT of wave [..., N] with a Hann window of win_length
// (zero-padded to n_fft). Returns [..., n_fft / 2 + 1, T].
torch::Tensor stft_complex(const torch::Tensor& wave, int64_t n_fft,
                           int64_t hop, int64_t win_length);

// Magnitude of stft_complex, clamped away from zero so the gradient stays
// finite.
torch::Tensor stft_magnitude(const torch::Tensor& wave, int64_t n_fft,
                             int64_t hop, int64_t win_length);

}  // namespace dsp
}  // namespace h2nh

#endif  // H2NH_DSP_HPP_
