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


#ifndef H2NH_PLOT_HPP_
#define H2NH_PLOT_HPP_

#include <cstdint>
#include <filesystem>
#include <vector>

#include "h2nh/dsp.hpp"

namespace h2nh::plot {

struct PlotOptions {
  double max_freq = 0.0;  // <= 0: Nyquist
  int n_mels = 128;
  dsp::StftConfig stft;
};

// 8-bit grayscale image: one column per frame, one row per mel band with the
// lowest band at the bottom. Intensity maps log mel magnitude from the fixed
// floor log(1e-5) (black) to the image maximum (white), so silence is a
// uniform black image.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> pixels;  // row-major, top row first
  double seconds_per_column = 0.0;
  double max_freq = 0.0;

  uint8_t at(int x, int y) const { return pixels[static_cast<size_t>(y) * width + x]; }
};

Image render_mel(const AudioClip& clip, const PlotOptions& options = {});
void write_png(const Image& image, const std::filesystem::path& path);
Image plot_mel(const AudioClip& clip, const std::filesystem::path& path,
               const PlotOptions& options = {});

}  // namespace h2nh::plot

#endif  // H2NH_PLOT_HPP_
