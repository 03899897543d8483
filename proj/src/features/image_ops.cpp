#include "scenemem/features/image_ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace scenemem::features {

FloatImage to_float(const corpus::RgbImage& image, double scale) {
  if (image.empty()) throw std::invalid_argument("to_float: degenerate image");
  FloatImage out(image.width, image.height, 3);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = image.at(x, y, c) * scale;
    }
  }
  return out;
}

FloatImage to_gray(const FloatImage& rgb) {
  if (rgb.channels == 1) return rgb;
  if (rgb.channels != 3) throw std::invalid_argument("to_gray: expected 1 or 3 channels");
  FloatImage out(rgb.width, rgb.height, 1);
  for (int y = 0; y < rgb.height; ++y) {
    for (int x = 0; x < rgb.width; ++x) {
      out.at(x, y) = 0.299 * rgb.at(x, y, 0) + 0.587 * rgb.at(x, y, 1) + 0.114 * rgb.at(x, y, 2);
    }
  }
  return out;
}

namespace {

struct Tap {
  int lo;
  int hi;
  double frac;
};

std::vector<Tap> taps(int src, int dst) {
  std::vector<Tap> out(static_cast<std::size_t>(dst));
  const double ratio = static_cast<double>(src) / dst;
  for (int i = 0; i < dst; ++i) {
    double pos = std::clamp((i + 0.5) * ratio - 0.5, 0.0, static_cast<double>(src - 1));
    const int lo = static_cast<int>(std::floor(pos));
    out[i] = {lo, std::min(lo + 1, src - 1), pos - lo};
  }
  return out;
}

}  // namespace

FloatImage resize_bilinear(const FloatImage& image, int width, int height) {
  if (image.width < 1 || image.height < 1 || width < 1 || height < 1) {
    throw std::invalid_argument("resize_bilinear: degenerate size");
  }
  if (image.width == width && image.height == height) return image;
  const auto tx = taps(image.width, width);
  const auto ty = taps(image.height, height);
  FloatImage out(width, height, image.channels);
  for (int c = 0; c < image.channels; ++c) {
    for (int y = 0; y < height; ++y) {
      const auto& v = ty[y];
      for (int x = 0; x < width; ++x) {
        const auto& h = tx[x];
        const double top = image.at(h.lo, v.lo, c) + h.frac * (image.at(h.hi, v.lo, c) - image.at(h.lo, v.lo, c));
        const double bottom = image.at(h.lo, v.hi, c) + h.frac * (image.at(h.hi, v.hi, c) - image.at(h.lo, v.hi, c));
        out.at(x, y, c) = top + v.frac * (bottom - top);
      }
    }
  }
  return out;
}

}  // namespace scenemem::features
