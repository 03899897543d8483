#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "scenemem/corpus/corpus.hpp"

namespace scenemem::corpus {

struct DatasetSplit {
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
  std::uint64_t seed = 0;
};

// Uniform random partition of the target images (sampling without
// replacement), reproducible bit-for-bit for a given seed. Both lists are
// returned in manifest order.
//
// Throws std::invalid_argument unless 0 < train_count < #targets.
DatasetSplit make_split(const Corpus& corpus, std::size_t train_count, std::uint64_t seed);

// Same, over an explicit id list.
DatasetSplit make_split(const std::vector<std::string>& ids, std::size_t train_count,
                        std::uint64_t seed);

// `split.json`: {"seed", "train_ids", "test_ids"}.
void save_split(const std::filesystem::path& path, const DatasetSplit& split);
DatasetSplit load_split(const std::filesystem::path& path);

}  // namespace scenemem::corpus
