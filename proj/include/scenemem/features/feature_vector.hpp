#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace scenemem::features {

enum class FeatureKind { pixels, sift_bow, hog_bow, gist, saliency_grid, category, deep };

std::string_view to_string(FeatureKind kind);
std::optional<FeatureKind> parse_feature_kind(std::string_view text);
// sift_bow, hog_bow and category must be non-negative.
bool is_histogram(FeatureKind kind);

struct FeatureVector {
  FeatureKind kind = FeatureKind::pixels;
  std::vector<double> values;

  std::size_t dim() const { return values.size(); }
};

// Throws std::domain_error if a value is non-finite, or negative for a
// histogram kind.
void check_feature(const FeatureVector& feature);

// A batch of same-kind vectors keyed by image id.
struct FeatureSet {
  FeatureKind kind = FeatureKind::pixels;
  std::size_t dim = 0;
  std::vector<std::string> image_ids;
  std::vector<std::vector<double>> rows;

  void add(std::string image_id, const FeatureVector& feature);
  // Row of the id, or nullptr.
  const std::vector<double>* find(std::string_view image_id) const;
};

// Container with header {kind, dim, count, image_ids} and count*dim
// little-endian float32 values, row-major.
void save_feature_set(const std::filesystem::path& path, const FeatureSet& set);
FeatureSet load_feature_set(const std::filesystem::path& path);
// `image_id,f0,f1,...` rows with a header.
void export_feature_csv(const std::filesystem::path& path, const FeatureSet& set);

}  // namespace scenemem::features
