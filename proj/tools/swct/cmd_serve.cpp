#include <spdlog/spdlog.h>

#include <csignal>
#include <memory>

#include "common.hpp"
#include "swct/annotd/server.hpp"

namespace swct::cli {

namespace {

annotd::Server* g_server = nullptr;

extern "C" void on_signal(int) {
  if (g_server) g_server->stop();
}

struct ServeOpts {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string data;
  std::string static_dir;
};

}  // namespace

void add_serve(CLI::App& app, Globals& g, Action& action) {
  auto o = std::make_shared<ServeOpts>();
  auto* serve = app.add_subcommand("serve", "Annotation session server");
  serve->add_option("--host", o->host, "Listen address")->capture_default_str();
  serve->add_option("--port", o->port, "Listen port (0 picks a free one)")->capture_default_str();
  serve->add_option("--data", o->data, "Root directory holding case directories")->required()->check(CLI::ExistingDirectory);
  serve->add_option("--static", o->static_dir, "UI bundle served at /")->check(CLI::ExistingDirectory);
  serve->callback([&g, &action, o] {
    action = [&g, o] {
      annotd::Server server(o->data, g.jobs);
      if (!o->static_dir.empty()) server.mount_static(o->static_dir);
      const int port = server.bind(o->host, o->port);
      if (port < 0) throw DataError("bind_failed", "cannot listen on " + o->host + ":" + std::to_string(o->port));
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      spdlog::info("serving {} on http://{}:{}", o->data, o->host, port);
      const bool ok = server.serve();
      g_server = nullptr;
      return ok ? 0 : static_cast<int>(ErrorKind::data);
    };
  });
}

}  // namespace swct::cli
