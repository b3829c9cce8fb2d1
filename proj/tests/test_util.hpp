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


#ifndef H2NH_TESTS_TEST_UTIL_HPP_
#define H2NH_TESTS_TEST_UTIL_HPP_

#include <cmath>
#include <unistd.h>

#include <algorithm>
#include <complex>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "h2nh/dsp.hpp"

namespace h2nh::test {

inline constexpr double kPi = 3.14159265358979323846;

inline AudioClip sine(double freq, int64_t n, int sr = kSampleRate, double amp = 0.5) {
  AudioClip c;
  c.sample_rate = sr;
  c.samples.resize(n);
  for (int64_t i = 0; i < n; ++i)
    c.samples[i] = static_cast<float>(amp * std::sin(2 * kPi * freq * i / sr));
  return c;
}

inline AudioClip noise(int64_t n, uint64_t seed, int sr = kSampleRate, double amp = 0.3) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, amp);
  AudioClip c;
  c.sample_rate = sr;
  c.samples.resize(n);
  for (auto& s : c.samples) s = static_cast<float>(std::clamp(d(rng), -1.0, 1.0));
  return c;
}

// Harmonic source with a gliding f0, syllable-rate amplitude envelope and a
// light noise floor.
inline AudioClip voice(double seconds, uint64_t seed = 0, double f0 = 150.0,
                       int sr = kSampleRate) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  const int64_t n = static_cast<int64_t>(seconds * sr);
  AudioClip c;
  c.sample_rate = sr;
  c.samples.resize(n);
  double phase = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sr;
    const double f = f0 * (1.0 + 0.25 * std::sin(2 * kPi * 0.7 * t));
    phase += 2 * kPi * f / sr;
    double x = 0.0;
    for (int k = 1; k * f < 5000.0; ++k) x += std::sin(k * phase) / k;
    const double env = 0.25 * std::pow(1.0 + std::sin(2 * kPi * 3.0 * t), 2.0);
    c.samples[i] = static_cast<float>(0.25 * env * x + 0.002 * d(rng));
  }
  return c;
}

// Direct DFT magnitude at one frequency (Hz).
inline double dft_magnitude(const std::vector<float>& x, double freq, int sr,
                            int64_t start = 0, int64_t len = -1) {
  if (len < 0) len = static_cast<int64_t>(x.size()) - start;
  std::complex<double> acc = 0.0;
  for (int64_t i = 0; i < len; ++i)
    acc += static_cast<double>(x[start + i]) *
           std::polar(1.0, -2 * kPi * freq * static_cast<double>(i) / sr);
  return std::abs(acc);
}

// Frequency of the strongest DFT component in [lo, hi] on a 0.5 Hz grid.
inline double peak_frequency(const std::vector<float>& x, int sr, double lo, double hi,
                             int64_t start = 0, int64_t len = -1) {
  double best = lo, best_mag = -1.0;
  for (double f = lo; f <= hi; f += 0.5) {
    const double m = dft_magnitude(x, f, sr, start, len);
    if (m > best_mag) {
      best_mag = m;
      best = f;
    }
  }
  return best;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() /
           ("h2nh_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace h2nh::test

#endif  // H2NH_TESTS_TEST_UTIL_HPP_
