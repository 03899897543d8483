#include "scenemem/features/bow.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "scenemem/common/container.hpp"
#include "scenemem/common/rng.hpp"

namespace scenemem::features {

namespace {

double squared_distance(const double* a, const double* b, std::size_t dim) {
  double sum = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

}  // namespace

std::size_t Codebook::nearest(const std::vector<double>& descriptor) const {
  std::size_t best = 0;
  double best_distance = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < k; ++i) {
    const double d = squared_distance(descriptor.data(), center(i), dim);
    if (d < best_distance) {
      best_distance = d;
      best = i;
    }
  }
  return best;
}

Codebook train_codebook(const std::vector<std::vector<double>>& samples, DescriptorKind kind,
                        std::uint64_t seed, const KMeansConfig& config) {
  const std::size_t k = config.k;
  if (k < 2) throw std::invalid_argument("train_codebook: K must be >= 2");
  if (samples.size() < k) {
    throw std::invalid_argument("train_codebook: " + std::to_string(samples.size()) +
                                " samples for K = " + std::to_string(k));
  }
  const std::size_t dim = samples.front().size();
  for (const auto& s : samples) {
    if (s.size() != dim) throw std::invalid_argument("train_codebook: ragged samples");
  }

  Codebook book;
  book.kind = kind;
  book.k = k;
  book.dim = dim;
  book.seed = seed;
  book.centers.assign(k * dim, 0.0);
  Rng rng(seed);

  // k-means++ seeding
  std::vector<double> closest(samples.size(), std::numeric_limits<double>::infinity());
  std::size_t chosen = rng.uniform_index(samples.size());
  for (std::size_t c = 0; c < k; ++c) {
    std::copy(samples[chosen].begin(), samples[chosen].end(), book.centers.begin() + c * dim);
    double total = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      closest[i] = std::min(closest[i], squared_distance(samples[i].data(), book.center(c), dim));
      total += closest[i];
    }
    if (c + 1 == k) break;
    if (total <= 0.0) {
      chosen = rng.uniform_index(samples.size());
      continue;
    }
    double target = rng.uniform() * total;
    chosen = samples.size() - 1;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      target -= closest[i];
      if (target < 0.0) {
        chosen = i;
        break;
      }
    }
  }

  std::vector<std::size_t> assignment(samples.size(), k);
  std::vector<double> sums(k * dim);
  std::vector<std::size_t> counts(k);
  for (int iteration = 0; iteration < config.max_iterations; ++iteration) {
    bool changed = false;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const std::size_t a = book.nearest(samples[i]);
      if (a != assignment[i]) {
        assignment[i] = a;
        changed = true;
      }
    }
    if (!changed) break;
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const std::size_t a = assignment[i];
      ++counts[a];
      for (std::size_t d = 0; d < dim; ++d) sums[a * dim + d] += samples[i][d];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        for (std::size_t d = 0; d < dim; ++d) {
          book.centers[c * dim + d] = sums[c * dim + d] / static_cast<double>(counts[c]);
        }
        continue;
      }
      std::size_t far = 0;
      double far_distance = -1.0;
      for (std::size_t i = 0; i < samples.size(); ++i) {
        const double d = squared_distance(samples[i].data(), book.center(assignment[i]), dim);
        if (d > far_distance) {
          far_distance = d;
          far = i;
        }
      }
      std::copy(samples[far].begin(), samples[far].end(), book.centers.begin() + c * dim);
      assignment[far] = c;
    }
  }
  return book;
}

void save_codebook(const std::filesystem::path& path, const Codebook& codebook) {
  std::vector<float> payload(codebook.centers.begin(), codebook.centers.end());
  write_container(path,
                  {{"kind", codebook.kind == DescriptorKind::sift ? "sift" : "hog"},
                   {"K", codebook.k},
                   {"descriptor_dim", codebook.dim},
                   {"seed", codebook.seed}},
                  payload);
}

Codebook load_codebook(const std::filesystem::path& path) {
  const auto container = read_container(path);
  Codebook book;
  const auto kind = container.header.at("kind").get<std::string>();
  if (kind != "sift" && kind != "hog") throw std::runtime_error(path.string() + ": bad codebook kind");
  book.kind = kind == "sift" ? DescriptorKind::sift : DescriptorKind::hog;
  book.k = container.header.at("K").get<std::size_t>();
  book.dim = container.header.at("descriptor_dim").get<std::size_t>();
  book.seed = container.header.at("seed").get<std::uint64_t>();
  if (container.payload.size() != book.k * book.dim) {
    throw std::runtime_error(path.string() + ": codebook payload size mismatch");
  }
  book.centers.assign(container.payload.begin(), container.payload.end());
  return book;
}

FeatureVector encode_bow(const DescriptorSet& descriptors, const Codebook& codebook,
                         int pyramid_levels) {
  if (descriptors.size() == 0) throw std::invalid_argument("encode_bow: no descriptors");
  if (descriptors.dim != codebook.dim) {
    throw std::invalid_argument("encode_bow: descriptor dim " + std::to_string(descriptors.dim) +
                                " != codebook dim " + std::to_string(codebook.dim));
  }
  if (pyramid_levels < 1) throw std::invalid_argument("encode_bow: need >= 1 pyramid level");
  if (descriptors.x.size() != descriptors.size() || descriptors.y.size() != descriptors.size()) {
    throw std::invalid_argument("encode_bow: positions and descriptors differ in count");
  }
  for (const auto& d : descriptors.values) {
    if (d.size() != codebook.dim) throw std::invalid_argument("encode_bow: descriptor of wrong length");
  }

  std::size_t cells = 0;
  for (int l = 0; l < pyramid_levels; ++l) cells += std::size_t{1} << (2 * l);
  const std::size_t k = codebook.k;
  FeatureVector out;
  out.kind = descriptors.kind == DescriptorKind::sift ? FeatureKind::sift_bow : FeatureKind::hog_bow;
  out.values.assign(cells * k, 0.0);
  std::vector<double> mass(cells, 0.0);

  for (std::size_t i = 0; i < descriptors.size(); ++i) {
    const std::size_t word = codebook.nearest(descriptors.values[i]);
    std::size_t offset = 0;
    for (int l = 0; l < pyramid_levels; ++l) {
      const int side = 1 << l;
      const int cx = std::clamp(static_cast<int>(descriptors.x[i] * side), 0, side - 1);
      const int cy = std::clamp(static_cast<int>(descriptors.y[i] * side), 0, side - 1);
      const std::size_t cell = offset + static_cast<std::size_t>(cy * side + cx);
      out.values[cell * k + word] += 1.0;
      mass[cell] += 1.0;
      offset += static_cast<std::size_t>(side) * side;
    }
  }
  for (std::size_t c = 0; c < cells; ++c) {
    if (mass[c] == 0.0) continue;
    for (std::size_t w = 0; w < k; ++w) out.values[c * k + w] /= mass[c];
  }
  return out;
}

}  // namespace scenemem::features
