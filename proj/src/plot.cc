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


#include "h2nh/plot.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <string>

#include "h2nh/errors.hpp"

namespace h2nh::plot {

Image render_mel(const AudioClip& clip, const PlotOptions& options) {
  const auto& stft = options.stft;
  const double nyquist = stft.sample_rate / 2.0;
  const double f_max = options.max_freq > 0.0 ? options.max_freq : nyquist;
  if (f_max > nyquist) throw ConfigError("max-freq exceeds the Nyquist frequency");
  auto audio = dsp::resample(clip, stft.sample_rate);
  auto lin = dsp::stft(audio, stft);
  auto fb = dsp::mel_filterbank(stft, options.n_mels, 0.0, f_max);
  auto mel = dsp::mel_spectrogram(lin, fb, /*log_scale=*/true).frames.contiguous();

  const float lo = std::log(static_cast<float>(dsp::kMelEpsilon));
  const float top = std::max(mel.max().item<float>(), lo);
  const float span = top - lo;
  Image img;
  img.height = static_cast<int>(mel.size(0));
  img.width = static_cast<int>(mel.size(1));
  img.seconds_per_column = static_cast<double>(stft.hop_samples) / stft.sample_rate;
  img.max_freq = f_max;
  img.pixels.assign(static_cast<size_t>(img.width) * img.height, 0);
  auto m = mel.accessor<float, 2>();
  for (int band = 0; band < img.height; ++band) {
    const int row = img.height - 1 - band;
    for (int t = 0; t < img.width; ++t) {
      const float v = span > 0.0f ? (std::max(m[band][t], lo) - lo) / span : 0.0f;
      img.pixels[static_cast<size_t>(row) * img.width + t] =
          static_cast<uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
    }
  }
  return img;
}

void write_png(const Image& image, const std::filesystem::path& path) {
  if (image.width == 0 || image.height == 0) throw DomainError("empty image");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "wb"), std::fclose);
  if (!fp) throw Error("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("libpng failed writing " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, image.width, image.height, 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  const std::string x_axis = "time, " + std::to_string(image.seconds_per_column) + " s/px";
  const std::string y_axis = "mel frequency, 0 to " + std::to_string(image.max_freq) + " Hz";
  png_text text[2] = {};
  text[0].compression = PNG_TEXT_COMPRESSION_NONE;
  text[0].key = const_cast<char*>("x-axis");
  text[0].text = const_cast<char*>(x_axis.c_str());
  text[1].compression = PNG_TEXT_COMPRESSION_NONE;
  text[1].key = const_cast<char*>("y-axis");
  text[1].text = const_cast<char*>(y_axis.c_str());
  png_set_text(png, info, text, 2);
  png_write_info(png, info);
  for (int y = 0; y < image.height; ++y)
    png_write_row(png, const_cast<png_bytep>(&image.pixels[static_cast<size_t>(y) * image.width]));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image plot_mel(const AudioClip& clip, const std::filesystem::path& path,
               const PlotOptions& options) {
  auto img = render_mel(clip, options);
  write_png(img, path);
  return img;
}

}  // namespace h2nh::plot
