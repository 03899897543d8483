#include "scenemem/gamelab/level.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_set>

#include "scenemem/common/rng.hpp"
#include "scenemem/common/text_io.hpp"

namespace scenemem::gamelab {

using nlohmann::json;

std::string_view to_string(Exposure exposure) {
  return exposure == Exposure::first ? "first" : "repeat";
}

Exposure parse_exposure(std::string_view text) {
  if (text == "first") return Exposure::first;
  if (text == "repeat") return Exposure::repeat;
  throw std::invalid_argument("unknown exposure '" + std::string(text) + "'");
}

namespace {

struct Entry {
  const std::string* image_id;
  Role role;
};

// Picks one (first, repeat) pair uniformly among free slot pairs whose gap is
// in range. Returns false if none exists.
bool place_pair(std::vector<int>& occupant, int entry, GapRange gap, Rng& rng,
                std::vector<int>& prefix, std::vector<std::size_t>& counts) {
  const int length = static_cast<int>(occupant.size());
  prefix[0] = 0;
  for (int i = 0; i < length; ++i) prefix[i + 1] = prefix[i] + (occupant[i] < 0);
  std::size_t total = 0;
  for (int i = 0; i < length; ++i) {
    counts[i] = 0;
    if (occupant[i] >= 0) continue;
    const int lo = i + gap.min;
    const int hi = std::min(i + gap.max, length - 1);
    if (lo > hi) continue;
    counts[i] = static_cast<std::size_t>(prefix[hi + 1] - prefix[lo]);
    total += counts[i];
  }
  if (total == 0) return false;
  std::size_t pick = rng.uniform_index(total);
  int first = 0;
  while (pick >= counts[first]) pick -= counts[first++];
  int repeat = first + gap.min;
  for (;; ++repeat) {
    if (occupant[repeat] >= 0) continue;
    if (pick == 0) break;
    --pick;
  }
  occupant[first] = entry;
  occupant[repeat] = entry;
  return true;
}

}  // namespace

LevelPlan schedule_level(const std::vector<std::string>& targets,
                         const std::vector<std::string>& fillers,
                         const std::vector<std::string>& vigilance, std::uint64_t seed,
                         const ScheduleOptions& options, std::string level_id) {
  const auto& shape = options.shape;
  auto check_size = [](const char* what, std::size_t got, int want) {
    if (got != static_cast<std::size_t>(want)) {
      throw std::invalid_argument(std::string("schedule_level: expected ") +
                                  std::to_string(want) + " " + what + ", got " +
                                  std::to_string(got));
    }
  };
  check_size("targets", targets.size(), shape.targets);
  check_size("fillers", fillers.size(), shape.fillers);
  check_size("vigilance images", vigilance.size(), shape.vigilance);
  {
    std::unordered_set<std::string> all;
    for (const auto* list : {&targets, &fillers, &vigilance}) {
      for (const auto& id : *list) {
        if (!all.insert(id).second) {
          throw std::invalid_argument("schedule_level: image listed twice: " + id);
        }
      }
    }
  }

  std::vector<Entry> entries;
  for (const auto& id : vigilance) entries.push_back({&id, Role::vigilance});
  for (const auto& id : targets) entries.push_back({&id, Role::target});
  for (const auto& id : fillers) entries.push_back({&id, Role::filler});

  const int length = shape.length();
  Rng rng(seed);
  std::vector<int> occupant(length);
  std::vector<int> prefix(length + 1);
  std::vector<std::size_t> counts(length);

  for (int attempt = 0; attempt <= options.max_restarts; ++attempt) {
    std::fill(occupant.begin(), occupant.end(), -1);
    std::vector<int> vig_order(shape.vigilance), target_order(shape.targets),
        filler_order(shape.fillers);
    for (int i = 0; i < shape.vigilance; ++i) vig_order[i] = i;
    for (int i = 0; i < shape.targets; ++i) target_order[i] = shape.vigilance + i;
    for (int i = 0; i < shape.fillers; ++i) filler_order[i] = shape.vigilance + shape.targets + i;
    rng.shuffle(vig_order);
    rng.shuffle(target_order);
    rng.shuffle(filler_order);

    bool ok = true;
    for (int e : vig_order) {
      if (!(ok = place_pair(occupant, e, shape.vigilance_gap, rng, prefix, counts))) break;
    }
    if (ok) {
      for (int e : target_order) {
        if (!(ok = place_pair(occupant, e, shape.target_gap, rng, prefix, counts))) break;
      }
    }
    if (!ok) continue;

    std::size_t next_filler = 0;
    for (int& o : occupant) {
      if (o < 0) o = filler_order[next_filler++];
    }

    LevelPlan plan;
    plan.level_id = level_id.empty() ? "seed" + std::to_string(seed) : std::move(level_id);
    plan.seed = seed;
    plan.slots.reserve(length);
    std::vector<bool> seen(entries.size(), false);
    for (int i = 0; i < length; ++i) {
      const auto& entry = entries[occupant[i]];
      const bool repeat = seen[occupant[i]];
      seen[occupant[i]] = true;
      plan.slots.push_back(
          {i, *entry.image_id, entry.role, repeat ? Exposure::repeat : Exposure::first});
    }
    return plan;
  }
  throw SchedulingError("schedule_level: no feasible placement after " +
                        std::to_string(options.max_restarts) + " restarts (seed " +
                        std::to_string(seed) + ")");
}

std::vector<Violation> validate_level(const LevelPlan& plan, const LevelShape& shape) {
  using Kind = Violation::Kind;
  std::vector<Violation> violations;
  const int length = static_cast<int>(plan.slots.size());
  if (length != shape.length()) {
    violations.push_back({Kind::length, {}, {},
                          "level has " + std::to_string(length) + " slots, expected " +
                              std::to_string(shape.length())});
  }

  struct Occurrences {
    Role role = Role::target;
    bool mixed_roles = false;
    std::vector<int> slots;
    std::vector<Exposure> exposures;
  };
  std::map<std::string, Occurrences> by_image;
  for (int i = 0; i < length; ++i) {
    const auto& slot = plan.slots[i];
    if (slot.slot_index != i) {
      violations.push_back({Kind::slot_index, slot.image_id, {i},
                            "slot at position " + std::to_string(i) + " carries index " +
                                std::to_string(slot.slot_index)});
    }
    auto [it, inserted] = by_image.try_emplace(slot.image_id);
    auto& occ = it->second;
    if (inserted) {
      occ.role = slot.role;
    } else if (occ.role != slot.role) {
      occ.mixed_roles = true;
    }
    occ.slots.push_back(i);
    occ.exposures.push_back(slot.exposure);
  }

  std::map<Role, int> distinct;
  for (const auto& [image_id, occ] : by_image) {
    if (occ.mixed_roles) {
      violations.push_back({Kind::composition, image_id, occ.slots,
                            "image " + image_id + " appears under more than one role"});
      continue;
    }
    ++distinct[occ.role];
    const std::size_t want = occ.role == Role::filler ? 1 : 2;
    if (occ.slots.size() != want) {
      violations.push_back({Kind::composition, image_id, occ.slots,
                            std::string(corpus::to_string(occ.role)) + " " + image_id +
                                " appears " + std::to_string(occ.slots.size()) +
                                " times, expected " + std::to_string(want)});
      continue;
    }
    if (occ.exposures[0] != Exposure::first ||
        (want == 2 && occ.exposures[1] != Exposure::repeat)) {
      violations.push_back({Kind::exposure, image_id, occ.slots,
                            "exposure labels of " + image_id + " are not first/repeat in order"});
    }
    if (want == 2) {
      const int gap = occ.slots[1] - occ.slots[0];
      const GapRange range = occ.role == Role::target ? shape.target_gap : shape.vigilance_gap;
      if (!range.contains(gap)) {
        violations.push_back({Kind::spacing, image_id, occ.slots,
                              std::string(corpus::to_string(occ.role)) + " " + image_id +
                                  " repeats after " + std::to_string(gap) + " slots, allowed [" +
                                  std::to_string(range.min) + ", " + std::to_string(range.max) +
                                  "]"});
      }
    }
  }

  const std::pair<Role, int> expected[] = {
      {Role::target, shape.targets}, {Role::filler, shape.fillers},
      {Role::vigilance, shape.vigilance}};
  for (const auto& [role, want] : expected) {
    if (distinct[role] != want) {
      violations.push_back({Kind::composition, {}, {},
                            "level has " + std::to_string(distinct[role]) + " distinct " +
                                std::string(corpus::to_string(role)) + " images, expected " +
                                std::to_string(want)});
    }
  }
  return violations;
}

std::vector<LevelPlan> schedule_levels(const corpus::Corpus& corpus, int level_count,
                                       std::uint64_t seed, const ScheduleOptions& options) {
  const auto& shape = options.shape;
  auto pool_targets = corpus.ids(Role::target);
  auto pool_fillers = corpus.ids(Role::filler);
  auto pool_vigilance = corpus.ids(Role::vigilance);
  if (pool_targets.size() < static_cast<std::size_t>(shape.targets) ||
      pool_fillers.size() < static_cast<std::size_t>(shape.fillers) ||
      pool_vigilance.size() < static_cast<std::size_t>(shape.vigilance)) {
    throw std::invalid_argument("schedule_levels: corpus too small for one level");
  }
  Rng rng(seed);
  std::vector<std::string> deck;
  std::vector<LevelPlan> levels;
  for (int level = 0; level < level_count; ++level) {
    std::vector<std::string> targets;
    std::set<std::string> chosen;
    std::vector<std::string> deferred;
    while (static_cast<int>(targets.size()) < shape.targets) {
      if (deck.empty()) {
        auto fresh = pool_targets;
        rng.shuffle(fresh);
        deck.assign(fresh.rbegin(), fresh.rend());
      }
      auto id = std::move(deck.back());
      deck.pop_back();
      if (chosen.insert(id).second) {
        targets.push_back(std::move(id));
      } else {
        deferred.push_back(std::move(id));
      }
    }
    deck.insert(deck.end(), deferred.rbegin(), deferred.rend());

    auto sample = [&](std::vector<std::string> pool, int n) {
      for (int i = 0; i < n; ++i) {
        std::swap(pool[i], pool[i + rng.uniform_index(pool.size() - i)]);
      }
      pool.resize(n);
      return pool;
    };
    auto fillers = sample(pool_fillers, shape.fillers);
    auto vigilance = sample(pool_vigilance, shape.vigilance);
    char name[32];
    std::snprintf(name, sizeof(name), "L%04d", level);
    levels.push_back(
        schedule_level(targets, fillers, vigilance, rng.fork_seed(), options, name));
  }
  return levels;
}

json to_json(const LevelPlan& plan) {
  json slots = json::array();
  for (const auto& s : plan.slots) {
    slots.push_back({{"slot_index", s.slot_index},
                     {"image_id", s.image_id},
                     {"role", corpus::to_string(s.role)},
                     {"exposure", to_string(s.exposure)}});
  }
  return {{"level_id", plan.level_id}, {"seed", plan.seed}, {"slots", std::move(slots)}};
}

LevelPlan level_from_json(const json& doc) {
  LevelPlan plan;
  plan.level_id = doc.at("level_id").get<std::string>();
  plan.seed = doc.value("seed", std::uint64_t{0});
  for (const auto& s : doc.at("slots")) {
    const auto role_text = s.at("role").get<std::string>();
    const auto role = corpus::parse_role(role_text);
    if (!role) throw std::invalid_argument("unknown role '" + role_text + "'");
    plan.slots.push_back({s.at("slot_index").get<int>(), s.at("image_id").get<std::string>(),
                          *role, parse_exposure(s.at("exposure").get<std::string>())});
  }
  return plan;
}

void save_level(const std::filesystem::path& path, const LevelPlan& plan) {
  write_json_file(path, to_json(plan));
}

LevelPlan load_level(const std::filesystem::path& path) {
  return level_from_json(read_json_file(path));
}

}  // namespace scenemem::gamelab
