#include "scenemem/corpus/annotation.hpp"

#include <algorithm>
#include <tuple>

#include <json.hpp>

#include "scenemem/common/text_io.hpp"
#include "scenemem/corpus/corpus.hpp"

namespace scenemem::corpus {

using nlohmann::json;

CategoryVocabulary::CategoryVocabulary(std::vector<std::string> names) : names_(std::move(names)) {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i].empty()) throw CorpusError("empty category name at index " + std::to_string(i));
    if (!ids_.emplace(names_[i], static_cast<int>(i)).second) {
      throw CorpusError("duplicate category name: " + names_[i]);
    }
  }
}

const std::string& CategoryVocabulary::name(int id) const {
  if (!contains(id)) throw CorpusError("unknown category id " + std::to_string(id));
  return names_[static_cast<std::size_t>(id)];
}

std::optional<int> CategoryVocabulary::id_of(std::string_view name) const {
  const auto it = ids_.find(name);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

CategoryVocabulary load_vocabulary(const std::filesystem::path& path) {
  const json doc = read_json_file(path);
  const json& list = doc.is_object() ? doc.at("categories") : doc;
  if (!list.is_array()) throw CorpusError(path.string() + ": expected an array of names");
  std::vector<std::string> names;
  for (const auto& entry : list) {
    names.push_back(entry.is_object() ? entry.at("name").get<std::string>()
                                      : entry.get<std::string>());
  }
  return CategoryVocabulary(std::move(names));
}

void save_vocabulary(const std::filesystem::path& path, const CategoryVocabulary& vocab) {
  write_json_file(path, json(vocab.names()));
}

std::vector<AnnotationVote> load_votes(const std::filesystem::path& path) {
  std::vector<AnnotationVote> votes;
  for (const auto& [line, row] : read_json_lines(path)) {
    try {
      AnnotationVote vote;
      vote.image_id = row.at("image_id").get<std::string>();
      vote.annotator_id = row.at("annotator_id").get<std::string>();
      const auto task = row.at("task").get<std::string>();
      if (task == "classification") {
        vote.task = AnnotationTask::classification;
      } else if (task == "verification") {
        vote.task = AnnotationTask::verification;
      } else {
        throw CorpusError("unknown task '" + task + "'", line);
      }
      vote.category_id = row.at("category_id").get<int>();
      vote.answer = row.value("answer", false);
      votes.push_back(std::move(vote));
    } catch (const json::exception& e) {
      throw CorpusError(std::string("bad vote: ") + e.what(), line);
    }
  }
  return votes;
}

AggregationResult aggregate_categories(std::span<const AnnotationVote> votes,
                                       const CategoryVocabulary& vocab,
                                       const std::set<std::string>* known_images) {
  struct Tally {
    int picks = 0;  // Task 1 "yes"
    int yes = 0;    // Task 2 "yes"
    int no = 0;     // Task 2 "no"
  };
  // image -> category -> tally; std::map keeps iteration order canonical.
  std::map<std::string, std::map<int, Tally>> tallies;
  std::set<std::tuple<std::string, std::string, int, int>> seen;

  for (const auto& vote : votes) {
    if (known_images && !known_images->contains(vote.image_id)) {
      throw CorpusError("vote references unknown image '" + vote.image_id + "'");
    }
    if (!vocab.contains(vote.category_id)) {
      throw CorpusError("vote references unknown category id " +
                        std::to_string(vote.category_id) + " (image " + vote.image_id + ")");
    }
    const auto key = std::make_tuple(vote.image_id, vote.annotator_id,
                                     static_cast<int>(vote.task), vote.category_id);
    if (!seen.insert(key).second) {
      throw CorpusError("duplicate vote by '" + vote.annotator_id + "' on (" + vote.image_id +
                        ", " + vocab.name(vote.category_id) + ")");
    }
    auto& tally = tallies[vote.image_id][vote.category_id];
    if (vote.task == AnnotationTask::classification) {
      tally.picks += vote.answer;
    } else if (vote.answer) {
      ++tally.yes;
    } else {
      ++tally.no;
    }
  }

  AggregationResult result;
  for (const auto& [image_id, per_category] : tallies) {
    auto& assigned = result.categories[image_id];
    for (const auto& [category, tally] : per_category) {
      const int verifications = tally.yes + tally.no;
      if (verifications == 0) {
        if (tally.picks > 0) result.unverified.push_back({image_id, category});
        continue;
      }
      if (verifications % 2 == 0) {
        throw CorpusError("even number of verification votes (" + std::to_string(verifications) +
                          ") on (" + image_id + ", " + vocab.name(category) + ")");
      }
      if (tally.yes > tally.no) assigned.insert(category);
    }
    if (assigned.empty()) {
      int best = -1;
      int best_votes = -1;
      for (const auto& [category, tally] : per_category) {
        const int combined = tally.picks + tally.yes;
        if (combined > best_votes) {
          best = category;
          best_votes = combined;
        }
      }
      assigned.insert(best);
      result.repaired.push_back(image_id);
    }
  }
  return result;
}

}  // namespace scenemem::corpus
