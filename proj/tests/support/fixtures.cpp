#include "fixtures.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <random>
#include <stdexcept>

#include <json.hpp>

namespace scenemem::testkit {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
  std::random_device rd;
  for (int attempt = 0; attempt < 100; ++attempt) {
    auto candidate = fs::temp_directory_path() / (tag + "_" + std::to_string(rd()));
    if (fs::create_directory(candidate)) {
      path_ = candidate;
      return;
    }
  }
  throw std::runtime_error("cannot create temp dir");
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

corpus::Corpus synthetic_corpus(int targets, int fillers, int vigilance) {
  std::vector<corpus::ImageRecord> records;
  auto add = [&](const char* prefix, int n, corpus::Role role) {
    for (int i = 0; i < n; ++i) {
      corpus::ImageRecord r;
      r.image_id = prefix + std::to_string(i);
      r.path = "/nonexistent/" + r.image_id + ".png";
      r.width = 64;
      r.height = 64;
      r.role = role;
      records.push_back(r);
    }
  };
  add("t", targets, corpus::Role::target);
  add("f", fillers, corpus::Role::filler);
  add("v", vigilance, corpus::Role::vigilance);
  return corpus::Corpus(std::move(records));
}

corpus::RgbImage random_image(int width, int height, Rng& rng) {
  corpus::RgbImage img(width, height);
  for (int c = 0; c < 3; ++c) {
    const int base = static_cast<int>(rng.uniform_index(256));
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) img.at(x, y, c) = static_cast<std::uint8_t>(base);
    }
  }
  const int blocks = 3 + static_cast<int>(rng.uniform_index(5));
  for (int b = 0; b < blocks; ++b) {
    const int x0 = static_cast<int>(rng.uniform_index(width));
    const int y0 = static_cast<int>(rng.uniform_index(height));
    const int w = 1 + static_cast<int>(rng.uniform_index(width / 2 + 1));
    const int h = 1 + static_cast<int>(rng.uniform_index(height / 2 + 1));
    std::uint8_t color[3];
    for (auto& v : color) v = static_cast<std::uint8_t>(rng.uniform_index(256));
    for (int y = y0; y < std::min(height, y0 + h); ++y) {
      for (int x = x0; x < std::min(width, x0 + w); ++x) {
        for (int c = 0; c < 3; ++c) img.at(x, y, c) = color[c];
      }
    }
  }
  for (auto& p : img.pixels) {
    const int noisy = p + static_cast<int>(rng.uniform_index(9)) - 4;
    p = static_cast<std::uint8_t>(std::clamp(noisy, 0, 255));
  }
  return img;
}

fs::path write_image_corpus(const fs::path& dir, const ImageCorpusOptions& options) {
  fs::create_directories(dir / "images");
  Rng rng(options.seed);
  std::string text = "{\"schema_version\":1}\n";
  auto add = [&](const char* prefix, int n, const char* role) {
    for (int i = 0; i < n; ++i) {
      const std::string id = prefix + std::to_string(i);
      corpus::write_png(dir / "images" / (id + ".png"), random_image(options.width, options.height, rng));
      nlohmann::json rec{{"image_id", id}, {"path", "images/" + id + ".png"}, {"role", role},
                         {"width", options.width}, {"height", options.height}};
      if (options.categories > 0) {
        std::set<int> cats{static_cast<int>(rng.uniform_index(options.categories))};
        if (rng.bernoulli(0.5)) cats.insert(static_cast<int>(rng.uniform_index(options.categories)));
        rec["categories"] = cats;
      }
      text += rec.dump() + "\n";
    }
  };
  add("t", options.targets, "target");
  add("f", options.fillers, "filler");
  add("v", options.vigilance, "vigilance");
  const auto manifest = dir / "corpus.jsonl";
  std::ofstream(manifest) << text;
  return manifest;
}

gamelab::SessionLog simulate_session(const gamelab::LevelPlan& plan, const std::string& session_id,
                                     const std::string& subject_id, const Responder& responder,
                                     Rng& rng, const gamelab::Timing& timing) {
  gamelab::SessionLog log;
  log.session_id = session_id;
  log.subject_id = subject_id;
  log.level_id = plan.level_id;
  log.timing = timing;
  std::map<std::string, int> first_seen;
  for (const auto& slot : plan.slots) {
    gamelab::StimulusEvent s;
    s.slot_index = slot.slot_index;
    s.image_id = slot.image_id;
    s.role = slot.role;
    s.exposure = slot.exposure;
    s.shown_at_ms = static_cast<std::int64_t>(slot.slot_index) * (timing.display_ms + timing.gap_ms);
    s.duration_ms = timing.display_ms;
    log.events.emplace_back(s);
    std::optional<int> interval;
    if (const auto it = first_seen.find(slot.image_id); it != first_seen.end()) {
      interval = slot.slot_index - it->second;
    } else {
      first_seen[slot.image_id] = slot.slot_index;
    }
    log.events.emplace_back(responder(slot, interval, rng));
  }
  return log;
}

}  // namespace scenemem::testkit
