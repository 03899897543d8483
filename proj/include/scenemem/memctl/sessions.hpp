#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "scenemem/gamelab/level.hpp"
#include "scenemem/gamelab/scoring.hpp"
#include "scenemem/gamelab/session_log.hpp"

namespace scenemem::memctl {

enum class SessionStatus { active, complete, abandoned };
std::string to_string(SessionStatus status);

// Everything the service knows about one session. `served` slots have been
// handed to the client; `cursor` is the next slot awaiting a response.
// 0 <= cursor <= served <= cursor + 1 <= length + 1, and
// status == complete iff cursor == plan length.
struct SessionState {
  std::string session_id;
  std::string subject_id;
  gamelab::LevelPlan plan;
  gamelab::Timing timing;
  int cursor = 0;
  int served = 0;
  std::vector<gamelab::SessionEvent> events;
  SessionStatus status = SessionStatus::active;

  int length() const { return static_cast<int>(plan.slots.size()); }
  gamelab::SessionLog to_log() const;
  bool operator==(const SessionState& other) const;
};

// Error with an HTTP-like status: 400 bad request, 404 unknown session,
// 409 ordering conflict.
class SessionError : public std::runtime_error {
 public:
  SessionError(int status, const std::string& what) : std::runtime_error(what), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

struct NextSlot {
  bool done = false;
  int slot_index = 0;
  std::string image_id;
  std::vector<std::string> upcoming;  // prefetch hints, ids only
};

struct ResponseAck {
  int slot_index = 0;
  bool duplicate = false;
  bool complete = false;
  std::string feedback;  // "", "vigilance_miss" or "false_alarm"
};

struct SessionSummary {
  std::string session_id;
  std::string subject_id;
  std::string level_id;
  SessionStatus status = SessionStatus::active;
  int cursor = 0;
  int length = 0;
  gamelab::VigilanceVerdict vigilance;
};

struct ServiceOptions {
  gamelab::Timing timing;
  gamelab::VigilanceThresholds vigilance;
  bool feedback_vigilance_miss = true;
  bool feedback_false_alarm = false;
  int prefetch = 2;
  // Milliseconds used for shown_at_ms; defaults to the system clock.
  std::function<std::int64_t()> clock;
};

// Rebuilds a session from its append-only log. Throws std::runtime_error on
// a log that is inconsistent with its plan.
SessionState replay_session(const std::filesystem::path& path);

// Owns all sessions. Each session is mutated under its own lock and every
// event is appended (and flushed) to data_dir/session_<id>.jsonl before the
// call returns, so a restarted manager sees exactly the acknowledged state.
class SessionManager {
 public:
  SessionManager(std::filesystem::path data_dir, std::vector<gamelab::LevelPlan> levels,
                 ServiceOptions options = {}, std::map<std::string, std::string> assignments = {});
  ~SessionManager();
  SessionManager(const SessionManager&) = delete;
  SessionManager& operator=(const SessionManager&) = delete;

  // Level choice: explicit level_id, else the subject's assignment, else
  // round robin over the loaded levels.
  SessionState create(const std::string& subject_id, const std::optional<std::string>& level_id = {});
  NextSlot next(const std::string& session_id);
  ResponseAck respond(const std::string& session_id, const gamelab::ResponseEvent& response);
  SessionSummary summary(const std::string& session_id);
  SessionState abandon(const std::string& session_id);
  SessionState state(const std::string& session_id);

  std::vector<std::string> session_ids();
  const std::filesystem::path& data_dir() const { return data_dir_; }
  std::filesystem::path log_path(const std::string& session_id) const;
  const ServiceOptions& options() const { return options_; }

 private:
  struct Entry {
    std::mutex mutex;
    SessionState state;
    std::FILE* file = nullptr;
  };
  std::shared_ptr<Entry> find(const std::string& session_id);
  void append(Entry& entry, const nlohmann::json& line);
  std::int64_t now_ms(const SessionState& state);

  std::filesystem::path data_dir_;
  std::vector<gamelab::LevelPlan> levels_;
  std::map<std::string, std::size_t> level_index_;
  ServiceOptions options_;
  std::map<std::string, std::string> assignments_;

  std::shared_mutex map_mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::uint64_t next_id_ = 1;
  std::size_t round_robin_ = 0;
};

nlohmann::json to_json(const SessionSummary& summary);

}  // namespace scenemem::memctl
