#include "scenemem/gamelab/session_log.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <stdexcept>

#include "scenemem/common/text_io.hpp"

namespace scenemem::gamelab {

using nlohmann::json;

bool counts_as_press(const ResponseEvent& response, const Timing& timing) {
  if (!response.pressed) return false;
  if (!response.reaction_ms) return true;
  return *response.reaction_ms >= 0 && *response.reaction_ms <= timing.display_ms + timing.gap_ms;
}

std::vector<SlotOutcome> collate(const SessionLog& log) {
  std::map<int, SlotOutcome> slots;
  for (const auto& event : log.events) {
    if (const auto* stimulus = std::get_if<StimulusEvent>(&event)) {
      slots.try_emplace(stimulus->slot_index, SlotOutcome{*stimulus, std::nullopt});
    }
  }
  for (const auto& event : log.events) {
    if (const auto* response = std::get_if<ResponseEvent>(&event)) {
      const auto it = slots.find(response->slot_index);
      if (it != slots.end() && !it->second.response) it->second.response = *response;
    }
  }
  std::vector<SlotOutcome> out;
  out.reserve(slots.size());
  for (auto& [_, outcome] : slots) out.push_back(std::move(outcome));
  return out;
}

json header_to_json(const SessionLog& log) {
  return {{"type", "session"},
          {"session_id", log.session_id},
          {"subject_id", log.subject_id},
          {"level_id", log.level_id},
          {"timing", {{"display_ms", log.timing.display_ms}, {"gap_ms", log.timing.gap_ms}}}};
}

json event_to_json(const SessionEvent& event) {
  if (const auto* s = std::get_if<StimulusEvent>(&event)) {
    return {{"type", "stimulus"},
            {"slot_index", s->slot_index},
            {"image_id", s->image_id},
            {"role", corpus::to_string(s->role)},
            {"exposure", to_string(s->exposure)},
            {"shown_at_ms", s->shown_at_ms},
            {"duration_ms", s->duration_ms}};
  }
  const auto& r = std::get<ResponseEvent>(event);
  json line{{"type", "response"}, {"slot_index", r.slot_index}, {"pressed", r.pressed}};
  line["reaction_ms"] = r.reaction_ms ? json(*r.reaction_ms) : json(nullptr);
  return line;
}

SessionEvent event_from_json(const json& line) {
  const auto type = line.at("type").get<std::string>();
  if (type == "stimulus") {
    const auto role = corpus::parse_role(line.at("role").get<std::string>());
    if (!role) throw std::invalid_argument("bad role in stimulus event");
    return StimulusEvent{line.at("slot_index").get<int>(),
                         line.at("image_id").get<std::string>(),
                         *role,
                         parse_exposure(line.at("exposure").get<std::string>()),
                         line.at("shown_at_ms").get<std::int64_t>(),
                         line.at("duration_ms").get<int>()};
  }
  if (type == "response") {
    ResponseEvent r;
    r.slot_index = line.at("slot_index").get<int>();
    r.pressed = line.at("pressed").get<bool>();
    if (line.contains("reaction_ms") && !line.at("reaction_ms").is_null()) {
      r.reaction_ms = line.at("reaction_ms").get<int>();
    }
    return r;
  }
  throw std::invalid_argument("not a stimulus/response event: " + type);
}

void write_session_log(const std::filesystem::path& path, const SessionLog& log) {
  std::string text = header_to_json(log).dump() + "\n";
  for (const auto& event : log.events) text += event_to_json(event).dump() + "\n";
  write_text_file(path, text);
}

SessionLog read_session_log(const std::filesystem::path& path) {
  SessionLog log;
  bool have_header = false;
  for (const auto& [line_number, line] : read_json_lines(path)) {
    try {
      const auto type = line.at("type").get<std::string>();
      if (type == "session") {
        log.session_id = line.at("session_id").get<std::string>();
        log.subject_id = line.at("subject_id").get<std::string>();
        log.level_id = line.value("level_id", std::string{});
        if (line.contains("timing")) {
          log.timing.display_ms = line["timing"].value("display_ms", log.timing.display_ms);
          log.timing.gap_ms = line["timing"].value("gap_ms", log.timing.gap_ms);
        }
        have_header = true;
      } else if (type == "stimulus" || type == "response") {
        log.events.push_back(event_from_json(line));
      }
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_number) + ": " +
                               e.what());
    }
  }
  if (!have_header) throw std::runtime_error(path.string() + ": missing session header line");
  return log;
}

std::vector<SessionLog> read_session_logs(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (entry.is_regular_file() && name.starts_with("session_") && name.ends_with(".jsonl")) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<SessionLog> logs;
  logs.reserve(files.size());
  for (const auto& f : files) logs.push_back(read_session_log(f));
  return logs;
}

}  // namespace scenemem::gamelab
