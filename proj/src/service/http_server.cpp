#include <httplib.h>

#include <nlohmann/json.hpp>

#include "peavs/error.hpp"
#include "peavs/media.hpp"
#include "peavs/service.hpp"
#include "peavs/textio.hpp"

namespace peavs::service {

namespace {

int status_for(Errc code) {
  switch (code) {
    case Errc::UnknownAnnotator: return 403;
    case Errc::UnknownTask:
    case Errc::UnknownVideoId:
    case Errc::MissingFile: return 404;
    case Errc::DuplicateSubmission:
    case Errc::TaskNotAssigned: return 409;
    case Errc::ScoreOutOfRange:
    case Errc::InvalidConfig:
    case Errc::MalformedHeader: return 400;
    default: return 500;
  }
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message) {
  res.status = status;
  res.set_content(nlohmann::json{{"error", code}, {"message", message}}.dump(), "application/json");
}

void send_json(httplib::Response& res, const nlohmann::json& j) { res.set_content(j.dump(), "application/json"); }

template <typename F>
void guarded(httplib::Response& res, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    send_error(res, status_for(e.code()), errc_name(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    send_error(res, 400, "MalformedRequest", e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, "Internal", e.what());
  }
}

bool safe_id(const std::string& id) {
  return !id.empty() && id != "." && id != ".." && id.find_first_of("/\\") == std::string::npos;
}

}  // namespace

HttpServer::HttpServer(AnnotationService& service, std::filesystem::path media_root)
    : service_(service), media_root_(std::move(media_root)), server_(std::make_unique<httplib::Server>()) {
  auto& s = *server_;

  s.Get("/task", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      if (!req.has_param("annotator")) throw Error(Errc::InvalidConfig, "missing annotator parameter");
      const auto task = service_.assign_task(req.get_param_value("annotator"));
      if (!task) {
        res.status = 204;
        return;
      }
      send_json(res, to_json(*task));
    });
  });

  s.Post("/rating", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto body = nlohmann::json::parse(req.body);
      std::string annotator = body.value("annotator", std::string());
      if (annotator.empty() && req.has_param("annotator")) annotator = req.get_param_value("annotator");
      if (annotator.empty()) throw Error(Errc::InvalidConfig, "missing annotator");
      if (body.contains("played") && !body.at("played").get<bool>()) {
        throw Error(Errc::InvalidConfig, "rating submitted before the video was played");
      }
      const auto ack = service_.submit_rating(annotator, body.at("task_id").get<std::string>(),
                                              datakit::slot_from_name(body.at("slot").get<std::string>()),
                                              body.at("score").get<int>());
      send_json(res, {{"ok", true},
                      {"task_id", ack.task_id},
                      {"slot", datakit::slot_name(ack.slot)},
                      {"revision", ack.revision},
                      {"assignment_complete", ack.assignment_complete},
                      {"task_state", state_name(ack.task_state)}});
    });
  });

  s.Get("/progress", [this](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { send_json(res, to_json(service_.progress())); });
  });

  s.Get("/guidelines", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(std::string(guidelines_text()), "text/plain; charset=utf-8");
  });

  s.Get(R"(/media/([^/]+)/(audio\.wav|video\.y4m|meta\.json))", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string id = req.matches[1];
      const std::string file = req.matches[2];
      if (!safe_id(id)) throw Error(Errc::UnknownVideoId, id);
      const auto dir = media_root_ / id;
      if (!std::filesystem::is_directory(dir)) throw Error(Errc::UnknownVideoId, id);
      const auto path = dir / file;
      std::vector<std::uint8_t> bytes;
      if (std::filesystem::exists(path)) {
        bytes = media::read_file(path);
      } else if (file == "video.y4m") {
        // Gray clips are stored as PGM frames; serve them as a single Y4M stream.
        bytes = media::encode_y4m(media::load_bundle(dir).video);
      } else {
        throw Error(Errc::MissingFile, (std::filesystem::path(id) / file).string());
      }
      const char* type = file == "audio.wav" ? "audio/wav" : (file == "meta.json" ? "application/json" : "video/x-yuv4mpeg");
      res.set_content(std::string(bytes.begin(), bytes.end()), type);
    });
  });
}

HttpServer::~HttpServer() = default;

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int p = server_->bind_to_any_port(host);
    if (p < 0) throw Error(Errc::IoFailure, "cannot bind " + host);
    return p;
  }
  if (!server_->bind_to_port(host, port)) throw Error(Errc::IoFailure, "cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void HttpServer::serve() { server_->listen_after_bind(); }

void HttpServer::stop() { server_->stop(); }

}  // namespace peavs::service
