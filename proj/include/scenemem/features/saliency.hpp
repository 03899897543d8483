#pragma once

#include <vector>

#include "scenemem/corpus/image.hpp"
#include "scenemem/features/feature_vector.hpp"
#include "scenemem/features/image_ops.hpp"

namespace scenemem::features {

struct SaliencyMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;  // row-major, in [0, 1]
  // Set when the raw map had no dynamic range; values are then all zero.
  bool degenerate = false;

  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

struct PqftConfig {
  int map_size = 256;
  double sigma = 8.0;  // Gaussian smoothing, pixels
};

// Phase spectrum of the quaternion Fourier transform. The quaternion image
// is motion + RG i + BY j + intensity k, with
//   R = r-(g+b)/2, G = g-(r+b)/2, B = b-(r+g)/2, Y = (r+g)/2-|r-g|/2-b,
//   RG = R-G, BY = B-Y, I = (r+g+b)/3
// and motion = 0 for still images. Its transform is computed as two complex
// FFTs of the symplectic parts (motion + RG i) and (BY + I i); every
// coefficient is divided by its quaternion modulus, the result is inverted,
// and the squared modulus is smoothed by a circular Gaussian and min-max
// normalized.
SaliencyMap pqft_saliency(const corpus::RgbImage& image, const PqftConfig& config = {});
// Same, on a float RGB image (any scale), resampled to map_size.
SaliencyMap pqft_saliency(const FloatImage& rgb, const PqftConfig& config = {});
// Squared modulus of the phase-only reconstruction before smoothing and
// normalization, at the input's own resolution. Exposed for tests.
std::vector<double> pqft_raw(const FloatImage& rgb);

// Circular Gaussian blur of a row-major grid (kernel radius ceil(3 sigma)).
std::vector<double> gaussian_blur_circular(const std::vector<double>& grid, int width, int height,
                                           double sigma);

// Mean of each block x block tile, row-major; a 256x256 map with 8x8 tiles
// gives the 1024-dim grid feature.
FeatureVector grid_sample_saliency(const SaliencyMap& map, int block = 8);

}  // namespace scenemem::features
