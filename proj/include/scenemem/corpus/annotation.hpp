#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace scenemem::corpus {

// Ordered scene-category names; category ids are the dense indices 0..size-1.
class CategoryVocabulary {
 public:
  CategoryVocabulary() = default;
  // Throws CorpusError on empty or duplicate names.
  explicit CategoryVocabulary(std::vector<std::string> names);

  std::size_t size() const { return names_.size(); }
  const std::string& name(int id) const;
  std::optional<int> id_of(std::string_view name) const;
  bool contains(int id) const { return id >= 0 && static_cast<std::size_t>(id) < names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::map<std::string, int, std::less<>> ids_;
};

// `categories.json`: a JSON array of names, or {"categories": [...]}.
CategoryVocabulary load_vocabulary(const std::filesystem::path& path);
void save_vocabulary(const std::filesystem::path& path, const CategoryVocabulary& vocab);

enum class AnnotationTask { classification, verification };

struct AnnotationVote {
  std::string image_id;
  std::string annotator_id;
  AnnotationTask task = AnnotationTask::verification;
  int category_id = 0;
  // Classification: the annotator picked this category. Verification: the
  // annotator answered "yes"; unchecked boxes stay "no".
  bool answer = false;
};

// `votes.jsonl`: one vote per line with keys image_id, annotator_id,
// task ("classification" | "verification"), category_id and optional answer
// (defaults to false).
std::vector<AnnotationVote> load_votes(const std::filesystem::path& path);

struct UnverifiedCandidate {
  std::string image_id;
  int category_id = 0;
};

struct AggregationResult {
  std::map<std::string, std::set<int>> categories;
  // Images that ended with no majority-verified category and received the
  // top-voted one instead.
  std::vector<std::string> repaired;
  // Task 1 picks that never got a Task 2 vote. They are reported, never
  // guessed at.
  std::vector<UnverifiedCandidate> unverified;
};

// Combines Task 1 (classification) and Task 2 (verification) votes.
//
// A category is assigned iff a strict majority of its verification votes is
// "yes". Every (image, category) pair must carry an odd number of
// verification votes so no ties occur. An image left with no category gets
// the one with the most "yes" votes across both tasks (ties: lowest id).
// Result is independent of vote order.
//
// Throws CorpusError for unknown images (when known_images is given), unknown
// category ids, duplicate votes, or an even verification count.
AggregationResult aggregate_categories(std::span<const AnnotationVote> votes,
                                       const CategoryVocabulary& vocab,
                                       const std::set<std::string>* known_images = nullptr);

}  // namespace scenemem::corpus
