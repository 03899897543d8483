#include "scenemem/features/saliency.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "scenemem/features/fft.hpp"

namespace scenemem::features {

std::vector<double> pqft_raw(const FloatImage& rgb) {
  if (rgb.channels != 3) throw std::invalid_argument("pqft: expected an RGB image");
  const int w = rgb.width;
  const int h = rgb.height;
  const std::size_t n = static_cast<std::size_t>(w) * h;
  std::vector<std::complex<double>> part1(n), part2(n);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double r = rgb.at(x, y, 0), g = rgb.at(x, y, 1), b = rgb.at(x, y, 2);
      const double big_r = r - (g + b) / 2.0;
      const double big_g = g - (r + b) / 2.0;
      const double big_b = b - (r + g) / 2.0;
      const double big_y = (r + g) / 2.0 - std::abs(r - g) / 2.0 - b;
      const double rg = big_r - big_g;
      const double by = big_b - big_y;
      const double intensity = (r + g + b) / 3.0;
      const double motion = 0.0;
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      part1[i] = {motion, rg};
      part2[i] = {by, intensity};
    }
  }
  fft2d(part1, w, h, false);
  fft2d(part2, w, h, false);
  for (std::size_t i = 0; i < n; ++i) {
    const double modulus = std::sqrt(std::norm(part1[i]) + std::norm(part2[i]));
    if (modulus > 0.0) {
      part1[i] /= modulus;
      part2[i] /= modulus;
    } else {
      part1[i] = part2[i] = 0.0;
    }
  }
  fft2d(part1, w, h, true);
  fft2d(part2, w, h, true);
  std::vector<double> out(n);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = (std::norm(part1[i]) + std::norm(part2[i])) * scale * scale;
  }
  return out;
}

std::vector<double> gaussian_blur_circular(const std::vector<double>& grid, int width, int height,
                                           double sigma) {
  if (sigma <= 0.0) return grid;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    total += kernel[i + radius];
  }
  for (double& k : kernel) k /= total;
  auto wrap = [](int i, int n) { return ((i % n) + n) % n; };

  std::vector<double> tmp(grid.size()), out(grid.size());
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double sum = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        sum += kernel[k + radius] * grid[static_cast<std::size_t>(y) * width + wrap(x + k, width)];
      }
      tmp[static_cast<std::size_t>(y) * width + x] = sum;
    }
  }
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double sum = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        sum += kernel[k + radius] * tmp[static_cast<std::size_t>(wrap(y + k, height)) * width + x];
      }
      out[static_cast<std::size_t>(y) * width + x] = sum;
    }
  }
  return out;
}

SaliencyMap pqft_saliency(const FloatImage& rgb, const PqftConfig& config) {
  const int n = config.map_size;
  const FloatImage resized = resize_bilinear(rgb, n, n);
  SaliencyMap map;
  map.width = n;
  map.height = n;
  map.values = gaussian_blur_circular(pqft_raw(resized), n, n, config.sigma);
  const auto [lo, hi] = std::minmax_element(map.values.begin(), map.values.end());
  const double low = *lo;
  const double range = *hi - *lo;
  if (!(range > 1e-12 * std::max(std::abs(*hi), 1e-300))) {
    map.degenerate = true;
    std::fill(map.values.begin(), map.values.end(), 0.0);
    return map;
  }
  for (double& v : map.values) v = (v - low) / range;
  return map;
}

SaliencyMap pqft_saliency(const corpus::RgbImage& image, const PqftConfig& config) {
  return pqft_saliency(to_float(image), config);
}

FeatureVector grid_sample_saliency(const SaliencyMap& map, int block) {
  if (block < 1 || map.width % block != 0 || map.height % block != 0) {
    throw std::invalid_argument("grid_sample_saliency: block must divide the map size");
  }
  const int cols = map.width / block;
  const int rows = map.height / block;
  FeatureVector out;
  out.kind = FeatureKind::saliency_grid;
  out.values.assign(static_cast<std::size_t>(rows) * cols, 0.0);
  for (int y = 0; y < map.height; ++y) {
    for (int x = 0; x < map.width; ++x) {
      out.values[static_cast<std::size_t>(y / block) * cols + x / block] += map.at(x, y);
    }
  }
  for (double& v : out.values) v /= static_cast<double>(block) * block;
  return out;
}

}  // namespace scenemem::features
