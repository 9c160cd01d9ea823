#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>

#include "common.hpp"
#include "swct/volcore/parallel.hpp"

namespace {

void setup_logging(bool quiet) {
  auto logger = spdlog::stderr_color_mt("swct");
  logger->set_pattern("%^%l%$: %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("SWCT_LOG")) {
    const auto level = spdlog::level::from_str(env);
    if (level != spdlog::level::off || std::string(env) == "off") spdlog::set_level(level);
  }
  if (quiet) spdlog::set_level(spdlog::level::err);
}

}  // namespace

int main(int argc, char** argv) {
  using namespace swct;
  CLI::App app{"Segmentation, evaluation and motion tools for swallowing 4D-CT", "swct"};
  app.set_version_flag("--version", SWCT_VERSION);
  app.require_subcommand(1);
  app.fallthrough();

  cli::Globals g;
  g.jobs = default_jobs();
  app.add_option("--jobs,-j", g.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--quiet,-q", g.quiet, "Only report errors");
  app.add_option("--out,-o", g.out, "Output file or directory");
  app.add_option("--seed", g.seed, "Random seed");

  cli::Action action;
  cli::add_phantom(app, g, action);
  cli::add_seg(app, g, action);
  cli::add_eval(app, g, action);
  cli::add_predict(app, g, action);
  cli::add_mesh(app, g, action);
  cli::add_motion(app, g, action);
  cli::add_serve(app, g, action);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return static_cast<int>(ErrorKind::usage);
  }

  setup_logging(g.quiet);
  if (!action) {
    std::cerr << app.help();
    return static_cast<int>(ErrorKind::usage);
  }
  try {
    return action();
  } catch (const Error& e) {
    spdlog::error("{}: {}", e.name(), e.what());
    return static_cast<int>(e.kind());
  } catch (const std::exception& e) {
    spdlog::error("internal_error: {}", e.what());
    return static_cast<int>(ErrorKind::algorithm);
  }
}
