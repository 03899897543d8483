#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "scenemem/common/rng.hpp"
#include "scenemem/corpus/corpus.hpp"
#include "scenemem/corpus/image.hpp"
#include "scenemem/gamelab/level.hpp"
#include "scenemem/gamelab/session_log.hpp"

namespace scenemem::testkit {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "scenemem");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Records t0.., f0.., v0.. with fake paths; enough for scheduling and scoring.
corpus::Corpus synthetic_corpus(int targets, int fillers, int vigilance);

// Random blocky RGB image.
corpus::RgbImage random_image(int width, int height, Rng& rng);

struct ImageCorpusOptions {
  int targets = 6;
  int fillers = 0;
  int vigilance = 0;
  int width = 48;
  int height = 40;
  std::uint64_t seed = 7;
  int categories = 0;  // when > 0 each record gets 1 or 2 random categories
};

// Writes PNG images plus corpus.jsonl into dir; returns the manifest path.
std::filesystem::path write_image_corpus(const std::filesystem::path& dir,
                                         const ImageCorpusOptions& options);

// What a simulated subject does on one slot. `interval` is the slot distance
// to the first exposure, or nullopt on a first exposure.
using Responder = std::function<gamelab::ResponseEvent(const gamelab::Slot& slot,
                                                       std::optional<int> interval, Rng& rng)>;

gamelab::SessionLog simulate_session(const gamelab::LevelPlan& plan, const std::string& session_id,
                                     const std::string& subject_id, const Responder& responder,
                                     Rng& rng, const gamelab::Timing& timing = {});

inline gamelab::ResponseEvent press(const gamelab::Slot& slot, bool pressed, int reaction_ms = 600) {
  gamelab::ResponseEvent r;
  r.slot_index = slot.slot_index;
  r.pressed = pressed;
  if (pressed) r.reaction_ms = reaction_ms;
  return r;
}

}  // namespace scenemem::testkit
