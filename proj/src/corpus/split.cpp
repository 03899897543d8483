#include "scenemem/corpus/split.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "scenemem/common/rng.hpp"
#include "scenemem/common/text_io.hpp"

namespace scenemem::corpus {

DatasetSplit make_split(const std::vector<std::string>& ids, std::size_t train_count,
                        std::uint64_t seed) {
  if (train_count == 0 || train_count >= ids.size()) {
    throw std::invalid_argument("make_split: train_count must be in (0, " +
                                std::to_string(ids.size()) + "), got " +
                                std::to_string(train_count));
  }
  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<bool> in_train(ids.size(), false);
  for (std::size_t i = 0; i < train_count; ++i) in_train[order[i]] = true;

  DatasetSplit split;
  split.seed = seed;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    (in_train[i] ? split.train_ids : split.test_ids).push_back(ids[i]);
  }
  return split;
}

DatasetSplit make_split(const Corpus& corpus, std::size_t train_count, std::uint64_t seed) {
  return make_split(corpus.ids(Role::target), train_count, seed);
}

void save_split(const std::filesystem::path& path, const DatasetSplit& split) {
  write_json_file(path, {{"seed", split.seed},
                         {"train_ids", split.train_ids},
                         {"test_ids", split.test_ids}});
}

DatasetSplit load_split(const std::filesystem::path& path) {
  const auto doc = read_json_file(path);
  DatasetSplit split;
  split.seed = doc.at("seed").get<std::uint64_t>();
  split.train_ids = doc.at("train_ids").get<std::vector<std::string>>();
  split.test_ids = doc.at("test_ids").get<std::vector<std::string>>();
  std::set<std::string> train(split.train_ids.begin(), split.train_ids.end());
  for (const auto& id : split.test_ids) {
    if (train.contains(id)) throw std::runtime_error(path.string() + ": id in both sets: " + id);
  }
  return split;
}

}  // namespace scenemem::corpus
