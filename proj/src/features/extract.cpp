#include "scenemem/features/extract.hpp"

#include <stdexcept>

#include "scenemem/common/rng.hpp"

namespace scenemem::features {

FeatureVector pixels_feature(const corpus::RgbImage& image) {
  if (image.empty()) throw std::invalid_argument("pixels_feature: degenerate image");
  const FloatImage small = resize_bilinear(to_float(image), 32, 32);
  return {FeatureKind::pixels, small.data};
}

FeatureVector category_feature(const corpus::ImageRecord& record,
                               const corpus::CategoryVocabulary& vocab) {
  if (record.categories.empty()) {
    throw std::invalid_argument("category_feature: image " + record.image_id + " has no category");
  }
  FeatureVector out{FeatureKind::category, std::vector<double>(vocab.size(), 0.0)};
  for (int c : record.categories) {
    if (!vocab.contains(c)) {
      throw std::invalid_argument("category_feature: unknown category id " + std::to_string(c));
    }
    out.values[static_cast<std::size_t>(c)] = 1.0;
  }
  return out;
}

DescriptorSet image_descriptors(const corpus::RgbImage& image, DescriptorKind kind,
                                const ExtractionConfig& config) {
  const FloatImage rgb = resize_bilinear(to_float(image), config.bow_image_size, config.bow_image_size);
  return dense_descriptors(rgb, kind, config.descriptors);
}

Codebook fit_codebook(const std::vector<corpus::RgbImage>& images, DescriptorKind kind,
                      std::uint64_t seed, const ExtractionConfig& config) {
  Rng rng(seed);
  std::vector<std::vector<double>> samples;
  for (const auto& image : images) {
    auto set = image_descriptors(image, kind, config);
    const std::size_t take = std::min(config.codebook_samples_per_image, set.size());
    // partial Fisher-Yates: the first `take` entries become a uniform sample
    for (std::size_t i = 0; i < take; ++i) {
      std::swap(set.values[i], set.values[i + rng.uniform_index(set.size() - i)]);
      samples.push_back(std::move(set.values[i]));
    }
  }
  return train_codebook(samples, kind, rng.fork_seed(), config.kmeans);
}

FeatureVector extract_feature(const corpus::ImageRecord& record, const corpus::RgbImage& image,
                              FeatureKind kind, const ExtractionConfig& config,
                              const ExtractionInputs& inputs) {
  FeatureVector out;
  switch (kind) {
    case FeatureKind::pixels:
      out = pixels_feature(image);
      break;
    case FeatureKind::sift_bow:
    case FeatureKind::hog_bow: {
      const bool sift = kind == FeatureKind::sift_bow;
      const Codebook* book = sift ? inputs.sift_codebook : inputs.hog_codebook;
      if (!book) throw std::invalid_argument(std::string(to_string(kind)) + " needs a codebook");
      out = encode_bow(image_descriptors(image, sift ? DescriptorKind::sift : DescriptorKind::hog, config),
                       *book, config.pyramid_levels);
      out.kind = kind;
      break;
    }
    case FeatureKind::gist:
      out = gist_descriptor(image, config.gist);
      break;
    case FeatureKind::saliency_grid:
      out = grid_sample_saliency(pqft_saliency(image, config.pqft), config.saliency_block);
      break;
    case FeatureKind::category:
      if (!inputs.vocabulary) throw std::invalid_argument("category features need a vocabulary");
      out = category_feature(record, *inputs.vocabulary);
      break;
    case FeatureKind::deep:
      throw std::invalid_argument("deep features are extracted by the network (nsm extract-deep)");
  }
  check_feature(out);
  return out;
}

FeatureSet extract_feature_set(const corpus::Corpus& corpus, const std::vector<std::string>& ids,
                               FeatureKind kind, const ExtractionConfig& config,
                               const ExtractionInputs& inputs) {
  FeatureSet set;
  set.kind = kind;
  for (const auto& id : ids) {
    const auto& record = corpus.at(id);
    // the category kind never looks at pixels
    const auto image = kind == FeatureKind::category ? corpus::RgbImage{} : corpus::decode_image(record.path);
    set.add(id, extract_feature(record, image, kind, config, inputs));
  }
  return set;
}

}  // namespace scenemem::features
