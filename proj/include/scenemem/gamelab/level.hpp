#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "scenemem/corpus/corpus.hpp"

namespace scenemem::gamelab {

using corpus::Role;

enum class Exposure { first, repeat };

std::string_view to_string(Exposure exposure);
Exposure parse_exposure(std::string_view text);

struct GapRange {
  int min = 0;
  int max = 0;
  bool contains(int gap) const { return gap >= min && gap <= max; }
};

// Composition and spacing rules of one level. Defaults give the
// 66*2 + 30 + 12*2 = 186 slot level.
struct LevelShape {
  int targets = 66;
  int fillers = 30;
  int vigilance = 12;
  GapRange target_gap{35, 150};
  GapRange vigilance_gap{1, 7};

  int length() const { return 2 * targets + fillers + 2 * vigilance; }
};

struct Slot {
  int slot_index = 0;
  std::string image_id;
  Role role = Role::target;  // server side only, never sent to clients
  Exposure exposure = Exposure::first;
};

struct LevelPlan {
  std::string level_id;
  std::uint64_t seed = 0;
  std::vector<Slot> slots;
};

class SchedulingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ScheduleOptions {
  LevelShape shape;
  int max_restarts = 1000;
};

// Randomized greedy placement: vigilance pairs first, then target pairs, each
// drawn uniformly from the currently feasible (first, repeat) slot pairs;
// fillers take the remaining slots. A dead end restarts the attempt from
// scratch. Spacing is never relaxed.
//
// Throws std::invalid_argument on wrong list sizes or overlapping ids, and
// SchedulingError when max_restarts attempts all dead-end.
LevelPlan schedule_level(const std::vector<std::string>& targets,
                         const std::vector<std::string>& fillers,
                         const std::vector<std::string>& vigilance, std::uint64_t seed,
                         const ScheduleOptions& options = {}, std::string level_id = {});

struct Violation {
  enum class Kind { length, slot_index, composition, exposure, spacing };
  Kind kind = Kind::composition;
  std::string image_id;
  std::vector<int> slots;
  std::string message;
};

// Every way `plan` breaks the shape; empty iff the plan is valid.
std::vector<Violation> validate_level(const LevelPlan& plan, const LevelShape& shape = {});

// Several levels drawn from one corpus. Targets are dealt from successive
// shuffles of the target pool so coverage stays balanced; fillers and
// vigilance images are sampled per level.
std::vector<LevelPlan> schedule_levels(const corpus::Corpus& corpus, int level_count,
                                       std::uint64_t seed, const ScheduleOptions& options = {});

nlohmann::json to_json(const LevelPlan& plan);
LevelPlan level_from_json(const nlohmann::json& doc);
void save_level(const std::filesystem::path& path, const LevelPlan& plan);
LevelPlan load_level(const std::filesystem::path& path);

}  // namespace scenemem::gamelab
