#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "scenemem/corpus/corpus.hpp"
#include "scenemem/memctl/sessions.hpp"

namespace httplib {
class Server;
}

namespace scenemem::memctl {

// HTTP front end of a SessionManager:
//
//   POST /sessions                  {subject_id, level_id?} -> {session_id, level_id, level_length, timing}
//   GET  /sessions/{id}/next        -> {slot_index, image_url, display_ms, gap_ms, prefetch} | {done: true}
//   POST /sessions/{id}/response    {slot_index, pressed, reaction_ms?} -> {ok, slot_index, duplicate, complete, feedback?}
//   POST /sessions/{id}/abandon     -> {status}
//   GET  /sessions/{id}/summary     -> status, counts and vigilance verdict
//   GET  /images/{image_id}         image bytes from the corpus
//   GET  /healthz
//
// Errors are {"error": message} with status 400, 404 or 409. When ui_dir is
// non-empty it is mounted at "/".
class ApiServer {
 public:
  ApiServer(SessionManager& sessions, const corpus::Corpus* corpus, std::filesystem::path ui_dir = {});
  ~ApiServer();

  // Binds to `port`, or to a free port when port == 0; returns the bound port.
  int bind(const std::string& host, int port);
  // Blocks serving requests until stop().
  void listen();
  void stop();
  bool is_running() const;

  std::string image_url(const std::string& image_id) const;

 private:
  void install_routes();

  SessionManager& sessions_;
  const corpus::Corpus* corpus_;
  std::filesystem::path ui_dir_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace scenemem::memctl
