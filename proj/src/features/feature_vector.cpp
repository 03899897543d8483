#include "scenemem/features/feature_vector.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <stdexcept>

#include "scenemem/common/container.hpp"

namespace scenemem::features {

std::string_view to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::pixels: return "pixels";
    case FeatureKind::sift_bow: return "sift_bow";
    case FeatureKind::hog_bow: return "hog_bow";
    case FeatureKind::gist: return "gist";
    case FeatureKind::saliency_grid: return "saliency_grid";
    case FeatureKind::category: return "category";
    case FeatureKind::deep: return "deep";
  }
  return "unknown";
}

std::optional<FeatureKind> parse_feature_kind(std::string_view text) {
  for (auto kind : {FeatureKind::pixels, FeatureKind::sift_bow, FeatureKind::hog_bow,
                    FeatureKind::gist, FeatureKind::saliency_grid, FeatureKind::category,
                    FeatureKind::deep}) {
    if (to_string(kind) == text) return kind;
  }
  return std::nullopt;
}

bool is_histogram(FeatureKind kind) {
  return kind == FeatureKind::sift_bow || kind == FeatureKind::hog_bow ||
         kind == FeatureKind::category;
}

void check_feature(const FeatureVector& feature) {
  const bool histogram = is_histogram(feature.kind);
  for (std::size_t i = 0; i < feature.values.size(); ++i) {
    const double v = feature.values[i];
    if (!std::isfinite(v)) {
      throw std::domain_error(std::string(to_string(feature.kind)) + " feature: non-finite value at " +
                              std::to_string(i));
    }
    if (histogram && v < 0.0) {
      throw std::domain_error(std::string(to_string(feature.kind)) +
                              " feature: negative histogram value at " + std::to_string(i));
    }
  }
}

void FeatureSet::add(std::string image_id, const FeatureVector& feature) {
  if (feature.kind != kind) throw std::invalid_argument("FeatureSet::add: kind mismatch");
  if (rows.empty() && dim == 0) dim = feature.dim();
  if (feature.dim() != dim) {
    throw std::invalid_argument("FeatureSet::add: dim " + std::to_string(feature.dim()) +
                                " != " + std::to_string(dim));
  }
  check_feature(feature);
  image_ids.push_back(std::move(image_id));
  rows.push_back(feature.values);
}

const std::vector<double>* FeatureSet::find(std::string_view image_id) const {
  for (std::size_t i = 0; i < image_ids.size(); ++i) {
    if (image_ids[i] == image_id) return &rows[i];
  }
  return nullptr;
}

void save_feature_set(const std::filesystem::path& path, const FeatureSet& set) {
  std::vector<float> payload;
  payload.reserve(set.rows.size() * set.dim);
  for (const auto& row : set.rows) {
    for (double v : row) payload.push_back(static_cast<float>(v));
  }
  write_container(path,
                  {{"kind", to_string(set.kind)},
                   {"dim", set.dim},
                   {"count", set.rows.size()},
                   {"image_ids", set.image_ids}},
                  payload);
}

FeatureSet load_feature_set(const std::filesystem::path& path) {
  auto container = read_container(path);
  const auto& header = container.header;
  FeatureSet set;
  const auto kind = parse_feature_kind(header.at("kind").get<std::string>());
  if (!kind) throw std::runtime_error(path.string() + ": unknown feature kind");
  set.kind = *kind;
  set.dim = header.at("dim").get<std::size_t>();
  set.image_ids = header.at("image_ids").get<std::vector<std::string>>();
  const auto count = header.at("count").get<std::size_t>();
  if (count != set.image_ids.size() || container.payload.size() != count * set.dim) {
    throw std::runtime_error(path.string() + ": header and payload disagree");
  }
  set.rows.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto* begin = container.payload.data() + i * set.dim;
    set.rows[i].assign(begin, begin + set.dim);
  }
  return set;
}

void export_feature_csv(const std::filesystem::path& path, const FeatureSet& set) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << "image_id";
  for (std::size_t d = 0; d < set.dim; ++d) out << ",f" << d;
  out << '\n' << std::setprecision(9);
  for (std::size_t i = 0; i < set.rows.size(); ++i) {
    out << set.image_ids[i];
    for (double v : set.rows[i]) out << ',' << v;
    out << '\n';
  }
}

}  // namespace scenemem::features
