#pragma once

#include <cstdint>

#include "scenemem/corpus/annotation.hpp"
#include "scenemem/corpus/corpus.hpp"
#include "scenemem/features/bow.hpp"
#include "scenemem/features/feature_vector.hpp"
#include "scenemem/features/gist.hpp"
#include "scenemem/features/saliency.hpp"

namespace scenemem::features {

// 32x32 bilinear thumbnail in [0, 1], channel planes R, G, B concatenated,
// each row-major: dim 3072. Throws std::invalid_argument on a 0-area image.
FeatureVector pixels_feature(const corpus::RgbImage& image);

// Multi-hot over the vocabulary. Throws std::invalid_argument for an empty
// category set or an id outside the vocabulary.
FeatureVector category_feature(const corpus::ImageRecord& record,
                               const corpus::CategoryVocabulary& vocab);

struct ExtractionConfig {
  int bow_image_size = 256;  // images are resampled to this square first
  int pyramid_levels = 2;
  DescriptorConfig descriptors;
  KMeansConfig kmeans;
  // Descriptors sampled per training image for codebook fitting.
  std::size_t codebook_samples_per_image = 200;
  GistConfig gist;
  PqftConfig pqft;
  int saliency_block = 8;
};

// Dense descriptors of an image after resampling to bow_image_size.
DescriptorSet image_descriptors(const corpus::RgbImage& image, DescriptorKind kind,
                                const ExtractionConfig& config = {});

// Codebook fit on a seeded subsample of the descriptors of `images`.
Codebook fit_codebook(const std::vector<corpus::RgbImage>& images, DescriptorKind kind,
                      std::uint64_t seed, const ExtractionConfig& config = {});

// Optional inputs some kinds need: a codebook for the bag-of-words kinds and
// the vocabulary for the category kind.
struct ExtractionInputs {
  const Codebook* sift_codebook = nullptr;
  const Codebook* hog_codebook = nullptr;
  const corpus::CategoryVocabulary* vocabulary = nullptr;
};

// One feature of `kind` for a decoded image. Throws std::invalid_argument
// when a required input is missing; the deep kind comes from the network
// module and is rejected here.
FeatureVector extract_feature(const corpus::ImageRecord& record, const corpus::RgbImage& image,
                              FeatureKind kind, const ExtractionConfig& config = {},
                              const ExtractionInputs& inputs = {});

// Features of the listed images, decoded from the corpus, in list order.
FeatureSet extract_feature_set(const corpus::Corpus& corpus, const std::vector<std::string>& ids,
                               FeatureKind kind, const ExtractionConfig& config = {},
                               const ExtractionInputs& inputs = {});

}  // namespace scenemem::features
