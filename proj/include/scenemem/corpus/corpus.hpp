#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace scenemem::corpus {

enum class Role { target, vigilance, filler };

std::string_view to_string(Role role);
std::optional<Role> parse_role(std::string_view text);

struct ImageRecord {
  std::string image_id;
  std::filesystem::path path;
  int width = 0;
  int height = 0;
  Role role = Role::target;
  std::set<int> categories;
};

// Raised for malformed manifests. line() is the 1-based manifest line, or 0
// when the problem is not tied to a single line.
class CorpusError : public std::runtime_error {
 public:
  CorpusError(const std::string& message, std::size_t line = 0)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + message : message),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Immutable collection of image records; safe for concurrent readers.
class Corpus {
 public:
  Corpus() = default;
  // Throws CorpusError on duplicate ids or non-positive dimensions.
  explicit Corpus(std::vector<ImageRecord> records);

  const std::vector<ImageRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  const ImageRecord* find(std::string_view image_id) const;
  const ImageRecord& at(std::string_view image_id) const;

  std::size_t count(Role role) const;
  // Ids of every record with the role, in manifest order.
  std::vector<std::string> ids(Role role) const;

 private:
  std::vector<ImageRecord> records_;
  std::unordered_map<std::string, std::size_t> index_;
};

constexpr int kManifestSchemaVersion = 1;

struct ImportOptions {
  // Decode every image and compare its size against the manifest.
  bool verify_images = true;
};

// Reads a `corpus.jsonl` manifest: an optional header line
// {"schema_version": 1} followed by one record per line with keys
// image_id, path, role, width, height and optionally categories.
// Relative paths resolve against the manifest's directory.
Corpus import_corpus(const std::filesystem::path& manifest_path,
                     const ImportOptions& options = {});

// Writes the header line plus one record per line. Paths are written as
// stored.
void write_manifest(const std::filesystem::path& manifest_path, const Corpus& corpus);

}  // namespace scenemem::corpus
