#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "scenemem/gamelab/level.hpp"

namespace scenemem::gamelab {

// Per-slot presentation timing. 186 * (1000 + 770) ms is about 5.5 minutes.
struct Timing {
  int display_ms = 1000;
  int gap_ms = 770;
};

struct StimulusEvent {
  int slot_index = 0;
  std::string image_id;
  Role role = Role::target;
  Exposure exposure = Exposure::first;
  std::int64_t shown_at_ms = 0;
  int duration_ms = 0;
};

struct ResponseEvent {
  int slot_index = 0;
  bool pressed = false;
  std::optional<int> reaction_ms;  // measured from image onset
};

using SessionEvent = std::variant<StimulusEvent, ResponseEvent>;

struct SessionLog {
  std::string session_id;
  std::string subject_id;
  std::string level_id;
  Timing timing;
  std::vector<SessionEvent> events;
};

// A keypress counts as a hit when it falls inside the slot's display window
// or the inter-stimulus gap that follows it.
bool counts_as_press(const ResponseEvent& response, const Timing& timing);

// Stimulus and (optional) response of one slot, paired by slot_index.
struct SlotOutcome {
  StimulusEvent stimulus;
  std::optional<ResponseEvent> response;
};
// Ordered by slot index. Responses without a stimulus are dropped; when a
// slot has several responses the first one wins.
std::vector<SlotOutcome> collate(const SessionLog& log);

// `session_<id>.jsonl` line encoding. The first line is a header
// {"type":"session", session_id, subject_id, level_id, timing, ...};
// each further line is {"type":"stimulus", ...} or {"type":"response", ...}.
// Unknown line types are skipped on read.
nlohmann::json header_to_json(const SessionLog& log);
nlohmann::json event_to_json(const SessionEvent& event);
SessionEvent event_from_json(const nlohmann::json& line);

void write_session_log(const std::filesystem::path& path, const SessionLog& log);
SessionLog read_session_log(const std::filesystem::path& path);
// Every `session_*.jsonl` in dir, sorted by file name.
std::vector<SessionLog> read_session_logs(const std::filesystem::path& dir);

}  // namespace scenemem::gamelab
