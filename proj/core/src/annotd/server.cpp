#include "swct/annotd/server.hpp"

#include <httplib.h>

#include <nlohmann/json.hpp>

#include "swct/evalkit/report.hpp"

namespace swct::annotd {

using json = nlohmann::json;

namespace {

constexpr const char* kJson = "application/json";

void send_error(httplib::Response& res, int status, const std::string& name, const std::string& message) {
  res.status = status;
  res.set_content(json{{"error", name}, {"message", message}}.dump(), kJson);
}

int status_of(const Error& e) {
  if (e.name() == "case_not_found" || e.name() == "file_not_found") return 404;
  switch (e.kind()) {
    case ErrorKind::usage:
    case ErrorKind::data: return 400;
    case ErrorKind::algorithm: return 422;
  }
  return 500;
}

std::string param(const httplib::Request& req, const char* key) {
  if (!req.has_param(key)) throw UsageError("missing_parameter", std::string("query parameter '") + key + "' is required");
  return req.get_param_value(key);
}

int int_param(const httplib::Request& req, const char* key) {
  const auto s = param(req, key);
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw UsageError("invalid_parameter", std::string("'") + key + "' must be an integer");
}

double double_param(const httplib::Request& req, const char* key, double fallback) {
  if (!req.has_param(key)) return fallback;
  const auto s = req.get_param_value(key);
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw UsageError("invalid_parameter", std::string("'") + key + "' must be a number");
}

}  // namespace

struct Server::Impl {
  SessionStore store;
  httplib::Server http;

  Impl(std::filesystem::path root, int jobs) : store(std::move(root), jobs) { routes(); }

  // Runs `fn` with the session named in the path, mapping errors to JSON.
  template <typename Fn>
  void with_session(const httplib::Request& req, httplib::Response& res, bool mutating, Fn&& fn) {
    const auto id = req.matches[1].str();
    auto s = store.find(id);
    if (!s) return send_error(res, 404, "unknown_session", "no session '" + id + "'");
    if (mutating && !store.token_matches(id, req.get_header_value(kEditTokenHeader)))
      return send_error(res, 403, "edit_token_required",
                        std::string("mutations need the session's ") + kEditTokenHeader + " header");
    guarded(res, [&] { fn(*s); });
  }

  template <typename Fn>
  void guarded(httplib::Response& res, Fn&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      send_error(res, status_of(e), e.name(), e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "internal_error", e.what());
    }
  }

  void routes() {
    http.Get("/sessions", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(store.list_json(), kJson);
    });

    http.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        std::string case_path;
        try {
          case_path = json::parse(req.body).at("case").get<std::string>();
        } catch (const json::exception&) {
          throw UsageError("invalid_request", "body must be {\"case\": \"<dir under the data root>\"}");
        }
        const auto opened = store.open(case_path);
        res.status = 201;
        res.set_content(json{{"id", opened.id}, {"edit_token", opened.edit_token}}.dump(), kJson);
      });
    });

    http.Get(R"(/s/([^/]+)/meta)", [this](const httplib::Request& req, httplib::Response& res) {
      with_session(req, res, false, [&](Session& s) { res.set_content(s.meta_json(), kJson); });
    });

    http.Get(R"(/s/([^/]+)/slice)", [this](const httplib::Request& req, httplib::Response& res) {
      with_session(req, res, false, [&](Session& s) {
        const auto axis = parse_axis(req.has_param("axis") ? req.get_param_value("axis") : "axial");
        const auto img = s.slice(int_param(req, "frame"), axis, int_param(req, "index"),
                                 double_param(req, "wc", 40.0), double_param(req, "ww", 400.0));
        res.set_content(encode_gray_png(img), "image/png");
      });
    });

    http.Get(R"(/s/([^/]+)/labels/slice)", [this](const httplib::Request& req, httplib::Response& res) {
      with_session(req, res, false, [&](Session& s) {
        const auto axis = parse_axis(req.has_param("axis") ? req.get_param_value("axis") : "axial");
        const auto img = s.label_slice(int_param(req, "frame"), axis, int_param(req, "index"));
        res.set_content(encode_indexed_png(img, region_palette()), "image/png");
      });
    });

    http.Post(R"(/s/([^/]+)/edit)", [this](const httplib::Request& req, httplib::Response& res) {
      with_session(req, res, true, [&](Session& s) {
        json body;
        try {
          body = json::parse(req.body);
        } catch (const json::exception&) {
          throw DataError("invalid_edit", "edit is not valid JSON");
        }
        const auto r = body.is_object() && body.value("type", "") == "undo" ? s.undo() : s.apply(parse_edit(req.body));
        res.set_content(result_to_json(r), kJson);
      });
    });

    http.Post(R"(/s/([^/]+)/undo)", [this](const httplib::Request& req, httplib::Response& res) {
      with_session(req, res, true, [&](Session& s) { res.set_content(result_to_json(s.undo()), kJson); });
    });

    http.Post(R"(/s/([^/]+)/save)", [this](const httplib::Request& req, httplib::Response& res) {
      with_session(req, res, true, [&](Session& s) {
        s.save();
        res.set_content(json{{"saved", true}, {"frames", s.frame_count()}}.dump(), kJson);
      });
    });

    http.Get(R"(/s/([^/]+)/mesh)", [this](const httplib::Request& req, httplib::Response& res) {
      with_session(req, res, false, [&](Session& s) {
        const auto m = s.mesh(int_param(req, "frame"), volcore::parse_region(param(req, "region")));
        res.set_content(segkit::obj_text(m), "model/obj");
      });
    });

    http.Get(R"(/s/([^/]+)/dice)", [this](const httplib::Request& req, httplib::Response& res) {
      with_session(req, res, false, [&](Session& s) {
        const auto report = s.dice_panel(store.resolve_case(param(req, "ref")));
        res.set_content(evalkit::report_to_json(report), kJson);
      });
    });

    http.Get(R"(/s/([^/]+)/cage)", [this](const httplib::Request& req, httplib::Response& res) {
      // Creating the cage on first read does not touch labels, so no token is needed.
      with_session(req, res, false, [&](Session& s) {
        const auto c = s.cage(int_param(req, "frame"), volcore::parse_region(param(req, "region")));
        res.set_content(segkit::cage_to_json(c), kJson);
      });
    });

    http.Put(R"(/s/([^/]+)/cage)", [this](const httplib::Request& req, httplib::Response& res) {
      with_session(req, res, true, [&](Session& s) {
        const auto c = segkit::cage_from_json(req.body);
        const auto r = s.put_cage(int_param(req, "frame"), volcore::parse_region(param(req, "region")), c);
        res.set_content(result_to_json(r), kJson);
      });
    });
  }
};

Server::Server(std::filesystem::path data_root, int jobs) : impl_(std::make_unique<Impl>(std::move(data_root), jobs)) {}

Server::~Server() { stop(); }

void Server::mount_static(const std::filesystem::path& dir) {
  if (!impl_->http.set_mount_point("/", dir.string()))
    throw DataError("file_not_found", "static directory " + dir.string() + " does not exist");
}

int Server::bind(const std::string& host, int port) {
  if (port == 0) return impl_->http.bind_to_any_port(host);
  return impl_->http.bind_to_port(host, port) ? port : -1;
}

bool Server::serve() { return impl_->http.listen_after_bind(); }

void Server::stop() {
  if (impl_) impl_->http.stop();
}

SessionStore& Server::store() { return impl_->store; }

}  // namespace swct::annotd
