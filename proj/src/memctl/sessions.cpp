#include "scenemem/memctl/sessions.hpp"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>

#include "scenemem/common/text_io.hpp"

namespace scenemem::memctl {

using nlohmann::json;

std::string to_string(SessionStatus status) {
  switch (status) {
    case SessionStatus::active: return "active";
    case SessionStatus::complete: return "complete";
    case SessionStatus::abandoned: return "abandoned";
  }
  return "?";
}

namespace {

std::optional<SessionStatus> parse_status(const std::string& s) {
  if (s == "active") return SessionStatus::active;
  if (s == "complete") return SessionStatus::complete;
  if (s == "abandoned") return SessionStatus::abandoned;
  return std::nullopt;
}

bool same_event(const gamelab::SessionEvent& a, const gamelab::SessionEvent& b) {
  return event_to_json(a) == event_to_json(b);
}

json header_json(const SessionState& s) {
  gamelab::SessionLog log{s.session_id, s.subject_id, s.plan.level_id, s.timing, {}};
  json h = header_to_json(log);
  h["plan"] = gamelab::to_json(s.plan);
  return h;
}

}  // namespace

gamelab::SessionLog SessionState::to_log() const {
  return {session_id, subject_id, plan.level_id, timing, events};
}

bool SessionState::operator==(const SessionState& o) const {
  if (session_id != o.session_id || subject_id != o.subject_id || cursor != o.cursor ||
      served != o.served || status != o.status || timing.display_ms != o.timing.display_ms ||
      timing.gap_ms != o.timing.gap_ms || gamelab::to_json(plan) != gamelab::to_json(o.plan) ||
      events.size() != o.events.size()) {
    return false;
  }
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (!same_event(events[i], o.events[i])) return false;
  }
  return true;
}

SessionState replay_session(const std::filesystem::path& path) {
  SessionState s;
  bool have_header = false;
  for (const auto& [line_number, line] : read_json_lines(path)) {
    auto fail = [&](const std::string& msg) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_number) + ": " + msg);
    };
    try {
      const auto type = line.at("type").get<std::string>();
      if (type == "session") {
        if (have_header) fail("duplicate session header");
        s.session_id = line.at("session_id").get<std::string>();
        s.subject_id = line.at("subject_id").get<std::string>();
        s.timing.display_ms = line.at("timing").at("display_ms").get<int>();
        s.timing.gap_ms = line.at("timing").at("gap_ms").get<int>();
        s.plan = gamelab::level_from_json(line.at("plan"));
        have_header = true;
        continue;
      }
      if (!have_header) fail("event before session header");
      if (type == "stimulus") {
        const auto ev = std::get<gamelab::StimulusEvent>(gamelab::event_from_json(line));
        if (ev.slot_index != s.served || s.served >= s.length() || s.served > s.cursor) {
          fail("stimulus for slot " + std::to_string(ev.slot_index) + " out of order");
        }
        if (ev.image_id != s.plan.slots[ev.slot_index].image_id) fail("stimulus does not match the plan");
        s.events.push_back(ev);
        ++s.served;
      } else if (type == "response") {
        const auto ev = std::get<gamelab::ResponseEvent>(gamelab::event_from_json(line));
        if (ev.slot_index != s.cursor || s.cursor >= s.served) {
          fail("response for slot " + std::to_string(ev.slot_index) + " out of order");
        }
        s.events.push_back(ev);
        ++s.cursor;
      } else if (type == "status") {
        const auto st = parse_status(line.at("status").get<std::string>());
        if (!st) fail("unknown status");
        s.status = *st;
      }
    } catch (const nlohmann::json::exception& e) {
      fail(e.what());
    } catch (const std::bad_variant_access&) {
      fail("malformed event");
    }
  }
  if (!have_header) throw std::runtime_error(path.string() + ": missing session header");
  if (s.status == SessionStatus::complete && s.cursor != s.length()) {
    throw std::runtime_error(path.string() + ": marked complete with missing responses");
  }
  // a crash between the last response and its status line loses nothing
  if (s.cursor == s.length()) s.status = SessionStatus::complete;
  return s;
}

SessionManager::SessionManager(std::filesystem::path data_dir, std::vector<gamelab::LevelPlan> levels,
                               ServiceOptions options, std::map<std::string, std::string> assignments)
    : data_dir_(std::move(data_dir)),
      levels_(std::move(levels)),
      options_(std::move(options)),
      assignments_(std::move(assignments)) {
  if (levels_.empty()) throw std::invalid_argument("session service needs at least one level");
  for (std::size_t i = 0; i < levels_.size(); ++i) {
    if (levels_[i].slots.empty()) throw std::invalid_argument("level " + levels_[i].level_id + " is empty");
    if (!level_index_.emplace(levels_[i].level_id, i).second) {
      throw std::invalid_argument("duplicate level id " + levels_[i].level_id);
    }
  }
  for (const auto& [subject, level] : assignments_) {
    if (!level_index_.count(level)) {
      throw std::invalid_argument("assignment of " + subject + " names unknown level " + level);
    }
  }
  if (!options_.clock) {
    options_.clock = [] {
      return std::chrono::duration_cast<std::chrono::milliseconds>(
                 std::chrono::system_clock::now().time_since_epoch())
          .count();
    };
  }
  std::filesystem::create_directories(data_dir_);

  // Resume every session already on disk.
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(data_dir_)) {
    const auto name = e.path().filename().string();
    if (e.is_regular_file() && name.starts_with("session_") && name.ends_with(".jsonl")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    auto entry = std::make_shared<Entry>();
    entry->state = replay_session(f);
    const auto& id = entry->state.session_id;
    if (log_path(id) != f) throw std::runtime_error(f.string() + ": file name does not match session id " + id);
    if (id.size() > 1 && id[0] == 'S') {
      try {
        next_id_ = std::max<std::uint64_t>(next_id_, std::stoull(id.substr(1)) + 1);
      } catch (const std::exception&) {
      }
    }
    sessions_.emplace(id, std::move(entry));
  }
  round_robin_ = sessions_.size();
}

SessionManager::~SessionManager() {
  for (auto& [id, entry] : sessions_) {
    if (entry->file) std::fclose(entry->file);
  }
}

std::filesystem::path SessionManager::log_path(const std::string& session_id) const {
  return data_dir_ / ("session_" + session_id + ".jsonl");
}

void SessionManager::append(Entry& entry, const json& line) {
  if (!entry.file) {
    entry.file = std::fopen(log_path(entry.state.session_id).c_str(), "ab");
    if (!entry.file) throw std::runtime_error("cannot open session log " + log_path(entry.state.session_id).string());
  }
  const std::string text = line.dump() + "\n";
  if (std::fwrite(text.data(), 1, text.size(), entry.file) != text.size() || std::fflush(entry.file) != 0) {
    throw std::runtime_error("write to session log failed");
  }
  ::fsync(::fileno(entry.file));
}

std::shared_ptr<SessionManager::Entry> SessionManager::find(const std::string& session_id) {
  std::shared_lock lock(map_mutex_);
  const auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw SessionError(404, "unknown session " + session_id);
  return it->second;
}

std::int64_t SessionManager::now_ms(const SessionState& state) {
  std::int64_t t = options_.clock();
  for (auto it = state.events.rbegin(); it != state.events.rend(); ++it) {
    if (const auto* s = std::get_if<gamelab::StimulusEvent>(&*it)) {
      t = std::max(t, s->shown_at_ms + 1);  // keep shown_at_ms strictly increasing
      break;
    }
  }
  return t;
}

SessionState SessionManager::create(const std::string& subject_id, const std::optional<std::string>& level_id) {
  if (subject_id.empty()) throw SessionError(400, "subject_id is required");
  auto entry = std::make_shared<Entry>();
  std::unique_lock lock(map_mutex_);
  std::size_t level = 0;
  if (level_id) {
    const auto it = level_index_.find(*level_id);
    if (it == level_index_.end()) throw SessionError(400, "unknown level " + *level_id);
    level = it->second;
  } else if (const auto it = assignments_.find(subject_id); it != assignments_.end()) {
    level = level_index_.at(it->second);
  } else {
    level = round_robin_ % levels_.size();
  }
  ++round_robin_;
  char id[32];
  std::snprintf(id, sizeof id, "S%06llu", static_cast<unsigned long long>(next_id_++));
  auto& s = entry->state;
  s.session_id = id;
  s.subject_id = subject_id;
  s.plan = levels_[level];
  s.timing = options_.timing;
  append(*entry, header_json(s));
  sessions_.emplace(s.session_id, entry);
  return s;
}

NextSlot SessionManager::next(const std::string& session_id) {
  auto entry = find(session_id);
  std::lock_guard lock(entry->mutex);
  auto& s = entry->state;
  NextSlot out;
  if (s.status != SessionStatus::active || s.cursor >= s.length()) {
    out.done = true;
    return out;
  }
  if (s.served == s.cursor) {
    const auto& slot = s.plan.slots[s.served];
    gamelab::StimulusEvent ev{slot.slot_index, slot.image_id, slot.role, slot.exposure, now_ms(s),
                              s.timing.display_ms};
    append(*entry, gamelab::event_to_json(ev));
    s.events.push_back(ev);
    ++s.served;
  }
  // served == cursor + 1 here: the slot awaiting a response is re-served as is
  const int slot = s.served - 1;
  out.slot_index = slot;
  out.image_id = s.plan.slots[slot].image_id;
  for (int k = 1; k <= options_.prefetch && slot + k < s.length(); ++k) {
    out.upcoming.push_back(s.plan.slots[slot + k].image_id);
  }
  return out;
}

ResponseAck SessionManager::respond(const std::string& session_id, const gamelab::ResponseEvent& response) {
  auto entry = find(session_id);
  std::lock_guard lock(entry->mutex);
  auto& s = entry->state;
  ResponseAck ack;
  ack.slot_index = response.slot_index;
  if (response.slot_index < 0 || response.slot_index >= s.length()) {
    throw SessionError(400, "slot_index " + std::to_string(response.slot_index) + " outside the level");
  }
  if (response.reaction_ms && *response.reaction_ms < 0) throw SessionError(400, "reaction_ms must be >= 0");
  if (response.slot_index < s.cursor) {
    ack.duplicate = true;  // first write wins
    ack.complete = s.status == SessionStatus::complete;
    return ack;
  }
  if (s.status == SessionStatus::abandoned) throw SessionError(409, "session was abandoned");
  if (response.slot_index != s.cursor || s.served <= s.cursor) {
    throw SessionError(409, "slot " + std::to_string(response.slot_index) + " has not been served (next expected " +
                                std::to_string(s.cursor) + ", served " + std::to_string(s.served) + ")");
  }
  append(*entry, gamelab::event_to_json(response));
  s.events.push_back(response);
  ++s.cursor;
  const auto& slot = s.plan.slots[response.slot_index];
  const bool pressed = gamelab::counts_as_press(response, s.timing);
  if (options_.feedback_vigilance_miss && slot.role == corpus::Role::vigilance &&
      slot.exposure == gamelab::Exposure::repeat && !pressed) {
    ack.feedback = "vigilance_miss";
  } else if (options_.feedback_false_alarm && slot.exposure == gamelab::Exposure::first && pressed) {
    ack.feedback = "false_alarm";
  }
  if (s.cursor == s.length()) {
    append(*entry, {{"type", "status"}, {"status", "complete"}});
    s.status = SessionStatus::complete;
  }
  ack.complete = s.status == SessionStatus::complete;
  return ack;
}

SessionState SessionManager::abandon(const std::string& session_id) {
  auto entry = find(session_id);
  std::lock_guard lock(entry->mutex);
  auto& s = entry->state;
  if (s.status == SessionStatus::active) {
    append(*entry, {{"type", "status"}, {"status", "abandoned"}});
    s.status = SessionStatus::abandoned;
  }
  return s;
}

SessionState SessionManager::state(const std::string& session_id) {
  auto entry = find(session_id);
  std::lock_guard lock(entry->mutex);
  return entry->state;
}

SessionSummary SessionManager::summary(const std::string& session_id) {
  const SessionState s = state(session_id);
  return {s.session_id, s.subject_id, s.plan.level_id, s.status, s.cursor, s.length(),
          gamelab::vigilance_filter(s.to_log(), options_.vigilance)};
}

std::vector<std::string> SessionManager::session_ids() {
  std::shared_lock lock(map_mutex_);
  std::vector<std::string> out;
  for (const auto& [id, e] : sessions_) out.push_back(id);
  return out;
}

json to_json(const SessionSummary& s) {
  const auto& v = s.vigilance;
  return {{"session_id", s.session_id},
          {"subject_id", s.subject_id},
          {"level_id", s.level_id},
          {"status", to_string(s.status)},
          {"responses", s.cursor},
          {"level_length", s.length},
          {"vigilance",
           {{"pass", v.pass},
            {"reason", v.reason},
            {"vigilance_repeats", v.vigilance_repeats},
            {"vigilance_hits", v.vigilance_hits},
            {"first_exposures", v.first_exposures},
            {"false_alarms", v.false_alarms},
            {"hit_rate", v.hit_rate},
            {"false_alarm_rate", v.false_alarm_rate}}}};
}

}  // namespace scenemem::memctl
