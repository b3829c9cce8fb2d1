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


#include <png.h>

#include <cstdio>

#include <gtest/gtest.h>

#include "h2nh/errors.hpp"
#include "h2nh/plot.hpp"
#include "test_util.hpp"

namespace h2nh {
namespace {

struct PngInfo {
  uint32_t width = 0, height = 0;
  std::vector<uint8_t> pixels;
};

PngInfo read_png(const std::filesystem::path& path) {
  PngInfo info;
  FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) return info;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop pinfo = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &pinfo, nullptr);
    std::fclose(fp);
    return {};
  }
  png_init_io(png, fp);
  png_read_info(png, pinfo);
  info.width = png_get_image_width(png, pinfo);
  info.height = png_get_image_height(png, pinfo);
  info.pixels.resize(static_cast<size_t>(info.width) * info.height);
  for (uint32_t y = 0; y < info.height; ++y) png_read_row(png, &info.pixels[y * info.width], nullptr);
  png_destroy_read_struct(&png, &pinfo, nullptr);
  std::fclose(fp);
  return info;
}

TEST(Plot, SilenceIsUniformMinimum) {
  AudioClip silence;
  silence.samples.assign(44100, 0.0f);
  auto img = plot::render_mel(silence);
  for (uint8_t p : img.pixels) ASSERT_EQ(p, 0);
}

TEST(Plot, TimeAxisSpansTheClip) {
  auto clip = test::voice(6.0, 1);
  auto dir = test::temp_dir("plot");
  auto img = plot::plot_mel(clip, dir / "mel.png");
  EXPECT_EQ(img.width, 1203);
  EXPECT_EQ(img.height, 128);
  EXPECT_NEAR(img.width * img.seconds_per_column, 6.0, img.seconds_per_column);
  auto png = read_png(dir / "mel.png");
  EXPECT_EQ(png.width, 1203u);
  EXPECT_EQ(png.height, 128u);
  EXPECT_EQ(png.pixels, img.pixels);
}

TEST(Plot, LowFrequenciesAtTheBottom) {
  auto img = plot::render_mel(test::sine(200.0, 44100));
  // The brightest row of a 200 Hz tone sits in the lower part of the image.
  int best_row = 0, best = -1;
  for (int y = 0; y < img.height; ++y)
    if (img.at(img.width / 2, y) > best) {
      best = img.at(img.width / 2, y);
      best_row = y;
    }
  EXPECT_GT(best_row, img.height * 3 / 4);
}

TEST(Plot, MaxFrequencyOption) {
  plot::PlotOptions opts;
  opts.max_freq = 4000.0;
  auto img = plot::render_mel(test::sine(2000.0, 22050), opts);
  EXPECT_DOUBLE_EQ(img.max_freq, 4000.0);
  // 2 kHz is about 60% of the way up the mel axis between 0 and 4 kHz.
  int best_row = 0, best = -1;
  for (int y = 0; y < img.height; ++y)
    if (img.at(img.width / 2, y) > best) {
      best = img.at(img.width / 2, y);
      best_row = y;
    }
  const double mel_pos = dsp::hz_to_mel(2000.0) / dsp::hz_to_mel(4000.0);
  EXPECT_NEAR(1.0 - static_cast<double>(best_row) / img.height, mel_pos, 0.03);
  opts.max_freq = 30000.0;
  EXPECT_THROW(plot::render_mel(test::sine(2000.0, 2205), opts), ConfigError);
}

}  // namespace
}  // namespace h2nh
