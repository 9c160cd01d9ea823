#include <spdlog/spdlog.h>

#include <memory>

#include "common.hpp"
#include "swct/phantom/phantom.hpp"

namespace swct::cli {

void add_phantom(CLI::App& app, Globals& g, Action& action) {
  auto* group = app.add_subcommand("phantom", "Synthetic swallow phantom");
  group->require_subcommand(1);

  struct Opts {
    std::string config;
  };
  auto o = std::make_shared<Opts>();
  auto* gen = group->add_subcommand("gen", "Render a phantom case directory (frames, labels, truth.json)");
  gen->add_option("--config,-c", o->config, "PhantomConfig JSON; defaults when omitted")->check(CLI::ExistingFile);
  gen->callback([&g, &action, o] {
    action = [&g, o] {
      auto cfg = o->config.empty() ? phantom::PhantomConfig{} : phantom::read_config(o->config);
      if (g.seed) cfg.rng_seed = *g.seed;
      const auto out = require_out(g);
      spdlog::info("rendering {} frames of {}x{}x{}", cfg.n_frames, cfg.dims[0], cfg.dims[1], cfg.dims[2]);
      const auto c = phantom::generate(cfg, g.jobs);
      phantom::write_case(c, cfg, out, g.jobs);
      spdlog::info("wrote {}", out.string());
      return 0;
    };
  });
}

}  // namespace swct::cli
