#include "scenemem/memctl/http_api.hpp"

#include <httplib.h>

#include <fstream>
#include <sstream>

namespace scenemem::memctl {

using nlohmann::json;

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, {{"error", message}});
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  auto body = json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) throw SessionError(400, "request body must be a JSON object");
  return body;
}

std::string url_encode(const std::string& s) {
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out += static_cast<char>(c);
    } else {
      char buf[4];
      std::snprintf(buf, sizeof buf, "%%%02X", c);
      out += buf;
    }
  }
  return out;
}

std::string content_type(const std::filesystem::path& p) {
  auto ext = p.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  return "application/octet-stream";
}

// Runs a handler, mapping exceptions onto HTTP errors.
template <typename F>
void guarded(httplib::Response& res, F&& f) {
  try {
    f();
  } catch (const SessionError& e) {
    send_error(res, e.status(), e.what());
  } catch (const json::exception& e) {
    send_error(res, 400, std::string("bad request: ") + e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, e.what());
  }
}

}  // namespace

ApiServer::ApiServer(SessionManager& sessions, const corpus::Corpus* corpus, std::filesystem::path ui_dir)
    : sessions_(sessions), corpus_(corpus), ui_dir_(std::move(ui_dir)), server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

ApiServer::~ApiServer() { stop(); }

std::string ApiServer::image_url(const std::string& image_id) const { return "/images/" + url_encode(image_id); }

void ApiServer::install_routes() {
  auto& srv = *server_;

  srv.Get("/healthz", [](const httplib::Request&, httplib::Response& res) { send_json(res, 200, {{"ok", true}}); });

  srv.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto body = parse_body(req);
      if (!body.contains("subject_id") || !body["subject_id"].is_string()) {
        throw SessionError(400, "subject_id (string) is required");
      }
      std::optional<std::string> level;
      if (body.contains("level_id")) level = body["level_id"].get<std::string>();
      const auto s = sessions_.create(body["subject_id"].get<std::string>(), level);
      send_json(res, 201,
                {{"session_id", s.session_id},
                 {"level_id", s.plan.level_id},
                 {"level_length", s.length()},
                 {"timing", {{"display_ms", s.timing.display_ms}, {"gap_ms", s.timing.gap_ms}}}});
    });
  });

  srv.Get(R"(/sessions/([^/]+)/next)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto next = sessions_.next(req.matches[1]);
      if (next.done) {
        send_json(res, 200, {{"done", true}});
        return;
      }
      json prefetch = json::array();
      for (const auto& id : next.upcoming) prefetch.push_back(image_url(id));
      const auto& timing = sessions_.options().timing;
      send_json(res, 200,
                {{"slot_index", next.slot_index},
                 {"image_url", image_url(next.image_id)},
                 {"display_ms", timing.display_ms},
                 {"gap_ms", timing.gap_ms},
                 {"prefetch", prefetch}});
    });
  });

  srv.Post(R"(/sessions/([^/]+)/response)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto body = parse_body(req);
      if (!body.contains("slot_index") || !body["slot_index"].is_number_integer()) {
        throw SessionError(400, "slot_index (integer) is required");
      }
      if (!body.contains("pressed") || !body["pressed"].is_boolean()) {
        throw SessionError(400, "pressed (boolean) is required");
      }
      gamelab::ResponseEvent r;
      r.slot_index = body["slot_index"].get<int>();
      r.pressed = body["pressed"].get<bool>();
      if (body.contains("reaction_ms") && !body["reaction_ms"].is_null()) {
        if (!body["reaction_ms"].is_number()) throw SessionError(400, "reaction_ms must be a number");
        r.reaction_ms = static_cast<int>(body["reaction_ms"].get<double>() + 0.5);
      }
      const auto ack = sessions_.respond(req.matches[1], r);
      json out{{"ok", true}, {"slot_index", ack.slot_index}, {"duplicate", ack.duplicate}, {"complete", ack.complete}};
      if (!ack.feedback.empty()) out["feedback"] = ack.feedback;
      send_json(res, 200, out);
    });
  });

  srv.Post(R"(/sessions/([^/]+)/abandon)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto s = sessions_.abandon(req.matches[1]);
      send_json(res, 200, {{"session_id", s.session_id}, {"status", to_string(s.status)}});
    });
  });

  srv.Get(R"(/sessions/([^/]+)/summary)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, to_json(sessions_.summary(req.matches[1]))); });
  });

  srv.Get(R"(/images/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string id = req.matches[1];
      const auto* record = corpus_ ? corpus_->find(id) : nullptr;
      if (!record) throw SessionError(404, "unknown image " + id);
      std::ifstream in(record->path, std::ios::binary);
      if (!in) throw std::runtime_error("cannot read image " + record->path.string());
      std::ostringstream bytes;
      bytes << in.rdbuf();
      res.set_header("Cache-Control", "max-age=3600");
      res.set_content(bytes.str(), content_type(record->path));
    });
  });

  if (!ui_dir_.empty()) srv.set_mount_point("/", ui_dir_.string());
}

int ApiServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = server_->bind_to_any_port(host);
    if (bound < 0) throw std::runtime_error("cannot bind " + host);
    return bound;
  }
  if (!server_->bind_to_port(host, port)) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void ApiServer::listen() { server_->listen_after_bind(); }

void ApiServer::stop() {
  if (server_) server_->stop();
}

bool ApiServer::is_running() const { return server_->is_running(); }

}  // namespace scenemem::memctl
