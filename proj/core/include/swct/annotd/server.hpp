#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "swct/annotd/session.hpp"

namespace swct::annotd {

/// Header carrying the session's edit token on every mutating request.
inline constexpr const char* kEditTokenHeader = "X-Edit-Token";

/// HTTP front end over a SessionStore.
///
///   GET  /sessions                       POST /sessions {"case": DIR}
///   GET  /s/{id}/meta                    GET  /s/{id}/slice?frame=&axis=&index=&wc=&ww=
///   GET  /s/{id}/labels/slice?...        POST /s/{id}/edit   POST /s/{id}/undo   POST /s/{id}/save
///   GET  /s/{id}/mesh?frame=&region=     GET  /s/{id}/dice?ref=DIR
///   GET|PUT /s/{id}/cage?frame=&region=
///
/// Errors are {"error": name, "message": text} with 400 (bad request or
/// data), 403 (missing edit token), 404 (unknown session or case), 422
/// (algorithm failure) or 500.
class Server {
 public:
  Server(std::filesystem::path data_root, int jobs = 1);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Serves files under `dir` at "/" (the annotation UI bundle).
  void mount_static(const std::filesystem::path& dir);
  /// Binds host:port (0 picks a free port) and returns the port, or -1.
  int bind(const std::string& host, int port);
  /// Blocks serving requests until stop().
  bool serve();
  void stop();
  SessionStore& store();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace swct::annotd
