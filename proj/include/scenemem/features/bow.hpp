#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "scenemem/features/descriptors.hpp"
#include "scenemem/features/feature_vector.hpp"

namespace scenemem::features {

struct Codebook {
  DescriptorKind kind = DescriptorKind::sift;
  std::size_t k = 0;
  std::size_t dim = 0;
  std::uint64_t seed = 0;
  std::vector<double> centers;  // k x dim, row-major

  const double* center(std::size_t i) const { return centers.data() + i * dim; }
  // Index of the closest center in squared Euclidean distance; ties go to the
  // lowest index.
  std::size_t nearest(const std::vector<double>& descriptor) const;
};

struct KMeansConfig {
  std::size_t k = 200;
  int max_iterations = 50;
};

// Lloyd's k-means with k-means++ seeding. Deterministic for a given seed and
// sample order. An emptied cluster is re-seeded with the sample farthest from
// its center. Throws std::invalid_argument when k < 2 or there are fewer
// samples than k.
Codebook train_codebook(const std::vector<std::vector<double>>& samples, DescriptorKind kind,
                        std::uint64_t seed, const KMeansConfig& config = {});

// `codebook_<kind>.bin`: container with header {kind, K, descriptor_dim,
// seed} and the centers as float32.
void save_codebook(const std::filesystem::path& path, const Codebook& codebook);
Codebook load_codebook(const std::filesystem::path& path);

// Spatial-pyramid bag of words: hard assignment of each descriptor to its
// nearest center, one histogram per cell (levels 0..pyramid_levels-1 with
// 4^l cells each), each cell L1-normalized (empty cells stay zero), cells
// concatenated coarse to fine. dim = K * sum 4^l (5K for two levels).
//
// Throws std::invalid_argument on an empty descriptor set or a dim mismatch.
FeatureVector encode_bow(const DescriptorSet& descriptors, const Codebook& codebook,
                         int pyramid_levels = 2);

}  // namespace scenemem::features
