#pragma once

#include <vector>

#include "scenemem/corpus/image.hpp"
#include "scenemem/features/feature_vector.hpp"
#include "scenemem/features/image_ops.hpp"

namespace scenemem::features {

struct GistConfig {
  int image_size = 256;
  int scales = 4;
  int orientations = 8;
  int grid = 4;
};

// Frequency response of filter (scale, orientation) at integer frequency
// (fx, fy) of an n x n DFT. Scale s peaks at radial frequency
// 0.3 / 1.85^s cycles/pixel; orientation o is centred at angle -o*pi/O in
// the frequency plane, so each filter is one-sided and responds to one
// direction of travel. The DC term is always 0.
double gist_filter_response(int scale, int orientation, int orientations, double fx, double fy,
                            int n);

// Oriented multi-scale energy: the 256x256 grayscale image (mean removed) is
// filtered by each of the scales x orientations frequency-domain Gabor
// filters, and the response magnitude is averaged over a grid x grid layout.
// Layout: index = (scale * orientations + orientation) * grid^2 + cell,
// cells row-major. dim = 4 * 8 * 16 = 512 by default.
FeatureVector gist_descriptor(const corpus::RgbImage& image, const GistConfig& config = {});
// Same, on a grayscale image already at config.image_size.
FeatureVector gist_from_gray(const FloatImage& gray, const GistConfig& config = {});

}  // namespace scenemem::features
