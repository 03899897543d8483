#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

namespace scenemem::corpus {

// 8-bit RGB image, interleaved, row-major.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  RgbImage() = default;
  RgbImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, fill) {}

  std::uint8_t& at(int x, int y, int c) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  std::uint8_t at(int x, int y, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  bool empty() const { return width <= 0 || height <= 0; }
};

class ImageDecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Decodes PNG or JPEG (detected by signature) into 8-bit RGB. Grayscale,
// palette, 16-bit and alpha inputs are converted; alpha is dropped.
RgbImage decode_image(const std::filesystem::path& path);

void write_png(const std::filesystem::path& path, const RgbImage& image);

}  // namespace scenemem::corpus
