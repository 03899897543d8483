#pragma once

#include <cstddef>
#include <vector>

#include "scenemem/corpus/image.hpp"

namespace scenemem::features {

// Planar float image: channel c, row y, column x at data[(c*height + y)*width + x].
struct FloatImage {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<double> data;

  FloatImage() = default;
  FloatImage(int w, int h, int c, double fill = 0.0)
      : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {}

  double& at(int x, int y, int c = 0) {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  double at(int x, int y, int c = 0) const {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
};

// RGB in [0, 1] (scale = 1/255) or [0, 255] (scale = 1).
FloatImage to_float(const corpus::RgbImage& image, double scale = 1.0 / 255.0);

// Luma with fixed coefficients 0.299 R + 0.587 G + 0.114 B.
FloatImage to_gray(const FloatImage& rgb);

// Bilinear resampling with pixel-center alignment: output pixel x samples
// the source at (x + 0.5) * src_w / dst_w - 0.5, clamped to the border.
FloatImage resize_bilinear(const FloatImage& image, int width, int height);

}  // namespace scenemem::features
