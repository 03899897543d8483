#include "scenemem/corpus/corpus.hpp"

#include <fstream>

#include <json.hpp>

#include "scenemem/common/text_io.hpp"
#include "scenemem/corpus/image.hpp"

namespace scenemem::corpus {

using nlohmann::json;

std::string_view to_string(Role role) {
  switch (role) {
    case Role::target: return "target";
    case Role::vigilance: return "vigilance";
    case Role::filler: return "filler";
  }
  return "unknown";
}

std::optional<Role> parse_role(std::string_view text) {
  if (text == "target") return Role::target;
  if (text == "vigilance") return Role::vigilance;
  if (text == "filler") return Role::filler;
  return std::nullopt;
}

Corpus::Corpus(std::vector<ImageRecord> records) : records_(std::move(records)) {
  index_.reserve(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& record = records_[i];
    if (record.image_id.empty()) throw CorpusError("empty image_id");
    if (record.width < 1 || record.height < 1) {
      throw CorpusError("image " + record.image_id + " has non-positive dimensions");
    }
    if (!index_.emplace(record.image_id, i).second) {
      throw CorpusError("duplicate image_id: " + record.image_id);
    }
  }
}

const ImageRecord* Corpus::find(std::string_view image_id) const {
  const auto it = index_.find(std::string(image_id));
  return it == index_.end() ? nullptr : &records_[it->second];
}

const ImageRecord& Corpus::at(std::string_view image_id) const {
  const auto* record = find(image_id);
  if (!record) throw CorpusError("unknown image_id: " + std::string(image_id));
  return *record;
}

std::size_t Corpus::count(Role role) const {
  std::size_t n = 0;
  for (const auto& r : records_) n += r.role == role;
  return n;
}

std::vector<std::string> Corpus::ids(Role role) const {
  std::vector<std::string> out;
  for (const auto& r : records_) {
    if (r.role == role) out.push_back(r.image_id);
  }
  return out;
}

namespace {

ImageRecord parse_record(const json& row, std::size_t line, const std::filesystem::path& base) {
  if (!row.is_object()) throw CorpusError("record is not a JSON object", line);
  for (const char* key : {"image_id", "path", "role", "width", "height"}) {
    if (!row.contains(key)) throw CorpusError(std::string("missing key '") + key + "'", line);
  }
  ImageRecord record;
  try {
    record.image_id = row.at("image_id").get<std::string>();
    record.path = row.at("path").get<std::string>();
    record.width = row.at("width").get<int>();
    record.height = row.at("height").get<int>();
    const auto role_text = row.at("role").get<std::string>();
    const auto role = parse_role(role_text);
    if (!role) throw CorpusError("unknown role '" + role_text + "'", line);
    record.role = *role;
    if (row.contains("categories")) {
      for (const auto& c : row.at("categories")) record.categories.insert(c.get<int>());
    }
  } catch (const json::exception& e) {
    throw CorpusError(std::string("bad field type: ") + e.what(), line);
  }
  if (record.image_id.empty()) throw CorpusError("empty image_id", line);
  if (record.width < 1 || record.height < 1) {
    throw CorpusError("width and height must be >= 1 for " + record.image_id, line);
  }
  if (record.path.is_relative()) record.path = base / record.path;
  return record;
}

}  // namespace

Corpus import_corpus(const std::filesystem::path& manifest_path, const ImportOptions& options) {
  if (!std::filesystem::exists(manifest_path)) {
    throw CorpusError("manifest not found: " + manifest_path.string());
  }
  const auto base = manifest_path.parent_path();
  std::vector<ImageRecord> records;
  std::unordered_map<std::string, std::size_t> first_line;
  bool first = true;
  for (const auto& [line, row] : read_json_lines(manifest_path)) {
    if (first && row.is_object() && row.contains("schema_version")) {
      first = false;
      if (row.at("schema_version") != kManifestSchemaVersion) {
        throw CorpusError("unsupported schema_version " + row.at("schema_version").dump(), line);
      }
      continue;
    }
    first = false;
    auto record = parse_record(row, line, base);
    if (const auto [it, inserted] = first_line.emplace(record.image_id, line); !inserted) {
      throw CorpusError("duplicate image_id '" + record.image_id + "' (first seen on line " +
                            std::to_string(it->second) + ")",
                        line);
    }
    if (!std::filesystem::exists(record.path)) {
      throw CorpusError("missing image file " + record.path.string(), line);
    }
    if (options.verify_images) {
      RgbImage image;
      try {
        image = decode_image(record.path);
      } catch (const ImageDecodeError& e) {
        throw CorpusError(std::string("undecodable image: ") + e.what(), line);
      }
      if (image.width != record.width || image.height != record.height) {
        throw CorpusError("image " + record.image_id + " is " + std::to_string(image.width) +
                              "x" + std::to_string(image.height) + " but manifest says " +
                              std::to_string(record.width) + "x" +
                              std::to_string(record.height),
                          line);
      }
    }
    records.push_back(std::move(record));
  }
  return Corpus(std::move(records));
}

void write_manifest(const std::filesystem::path& manifest_path, const Corpus& corpus) {
  std::string text = json{{"schema_version", kManifestSchemaVersion}}.dump() + "\n";
  for (const auto& r : corpus.records()) {
    json row{{"image_id", r.image_id},
             {"path", r.path.string()},
             {"role", to_string(r.role)},
             {"width", r.width},
             {"height", r.height}};
    if (!r.categories.empty()) row["categories"] = r.categories;
    text += row.dump() + "\n";
  }
  write_text_file(manifest_path, text);
}

}  // namespace scenemem::corpus
