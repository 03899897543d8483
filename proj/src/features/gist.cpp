#include "scenemem/features/gist.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include "scenemem/features/fft.hpp"

namespace scenemem::features {

double gist_filter_response(int scale, int orientation, int orientations, double fx, double fy,
                            int n) {
  if (fx == 0.0 && fy == 0.0) return 0.0;
  constexpr double kPi = std::numbers::pi;
  const double peak = 0.3 / std::pow(1.85, scale);
  const double angular = 16.0 * orientations * orientations / (32.0 * 32.0);
  const double theta = kPi / orientations * orientation;
  const double radius = std::hypot(fx, fy) / n;
  double delta = std::atan2(fy, fx) + theta;
  if (delta < -kPi) {
    delta += 2.0 * kPi;
  } else if (delta > kPi) {
    delta -= 2.0 * kPi;
  }
  const double r = radius / peak - 1.0;
  return std::exp(-10.0 * 0.35 * r * r - 2.0 * angular * kPi * delta * delta);
}

FeatureVector gist_from_gray(const FloatImage& gray, const GistConfig& config) {
  const int n = config.image_size;
  if (gray.channels != 1 || gray.width != n || gray.height != n) {
    throw std::invalid_argument("gist_from_gray: expected a single-channel " + std::to_string(n) +
                                "x" + std::to_string(n) + " image");
  }
  if (n % config.grid != 0) throw std::invalid_argument("gist: grid must divide image size");

  double mean = 0.0;
  for (double v : gray.data) mean += v;
  mean /= static_cast<double>(gray.data.size());
  std::vector<std::complex<double>> spectrum(gray.data.size());
  for (std::size_t i = 0; i < spectrum.size(); ++i) spectrum[i] = gray.data[i] - mean;
  fft2d(spectrum, n, n, false);

  const int cells = config.grid * config.grid;
  const int block = n / config.grid;
  FeatureVector out;
  out.kind = FeatureKind::gist;
  out.values.assign(static_cast<std::size_t>(config.scales) * config.orientations * cells, 0.0);
  std::vector<std::complex<double>> filtered(spectrum.size());
  const double inv_n2 = 1.0 / (static_cast<double>(n) * n);

  for (int s = 0; s < config.scales; ++s) {
    for (int o = 0; o < config.orientations; ++o) {
      for (int v = 0; v < n; ++v) {
        const double fy = v < n / 2 ? v : v - n;
        for (int u = 0; u < n; ++u) {
          const double fx = u < n / 2 ? u : u - n;
          const std::size_t i = static_cast<std::size_t>(v) * n + u;
          filtered[i] = spectrum[i] * gist_filter_response(s, o, config.orientations, fx, fy, n);
        }
      }
      fft2d(filtered, n, n, true);
      double* dst = out.values.data() + static_cast<std::size_t>(s * config.orientations + o) * cells;
      for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
          const double energy = std::abs(filtered[static_cast<std::size_t>(y) * n + x]) * inv_n2;
          dst[(y / block) * config.grid + x / block] += energy;
        }
      }
      for (int c = 0; c < cells; ++c) dst[c] /= static_cast<double>(block) * block;
    }
  }
  return out;
}

FeatureVector gist_descriptor(const corpus::RgbImage& image, const GistConfig& config) {
  const FloatImage gray = resize_bilinear(to_gray(to_float(image)), config.image_size, config.image_size);
  return gist_from_gray(gray, config);
}

}  // namespace scenemem::features
