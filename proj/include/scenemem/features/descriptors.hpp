#pragma once

#include <vector>

#include "scenemem/corpus/image.hpp"
#include "scenemem/features/feature_vector.hpp"
#include "scenemem/features/image_ops.hpp"

namespace scenemem::features {

enum class DescriptorKind { sift, hog };

struct DescriptorConfig {
  int patch = 16;       // SIFT patch side, pixels
  int stride = 8;       // SIFT grid step, pixels
  int hog_cell = 8;     // HOG cell side, pixels
  double sift_clamp = 0.2;
};

// Local descriptors on a dense grid, with patch centers in normalized image
// coordinates [0, 1) for spatial-pyramid pooling.
struct DescriptorSet {
  DescriptorKind kind = DescriptorKind::sift;
  std::size_t dim = 0;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<std::vector<double>> values;

  std::size_t size() const { return values.size(); }
};

constexpr std::size_t kSiftDim = 128;      // 4x4 cells x 8 orientations
constexpr std::size_t kHogCellDim = 31;    // 18 signed + 9 unsigned + 4 energy
constexpr std::size_t kHog2x2Dim = 4 * kHogCellDim;

// SIFT: 4x4 cells x 8 orientation bins of gradient magnitude over each
// patch, L2 normalized, clamped at 0.2, renormalized. Grid origins run
// 0, stride, ... while the patch fits, so a 256x256 image yields 31x31.
//
// HOG: 31-dim cell features of the deformable-parts construction (contrast
// sensitive and insensitive orientation channels under four 2x2-block
// normalizations, plus four texture energies), then every 2x2 neighborhood
// of cells concatenated into one 124-dim descriptor.
//
// Input is RGB in [0, 1]. Throws std::invalid_argument if the image is
// smaller than one patch.
DescriptorSet dense_descriptors(const FloatImage& rgb, DescriptorKind kind,
                                const DescriptorConfig& config = {});

// Per-cell HOG feature map (rows x cols x 31, row-major) of an RGB image in
// [0, 255]. Exposed for tests.
struct HogMap {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;
  const double* cell(int row, int col) const {
    return values.data() + (static_cast<std::size_t>(row) * cols + col) * kHogCellDim;
  }
};
HogMap hog_cells(const FloatImage& rgb255, int cell_size);

}  // namespace scenemem::features
