#include <spdlog/spdlog.h>

#include <iostream>
#include <memory>

#include "common.hpp"
#include "swct/evalkit/baseline.hpp"
#include "swct/evalkit/boxplot.hpp"
#include "swct/evalkit/loocv.hpp"
#include "swct/volcore/sequence.hpp"

namespace swct::cli {

namespace fs = std::filesystem;

namespace {

std::vector<volcore::LabelMap> truth_labels(const fs::path& case_dir, int jobs) {
  std::vector<volcore::LabelMap> out;
  const auto labels = volcore::load_case_labels(case_dir, jobs);
  for (std::size_t f = 0; f < labels.size(); ++f) {
    if (!labels[f])
      throw DataError("missing_labels", "frame " + std::to_string(f) + " of " + case_dir.string() + " has no labels");
    out.push_back(*labels[f]);
  }
  return out;
}

void show_table(const Globals& g, const evalkit::DiceReport& r) {
  if (!g.quiet) std::cerr << evalkit::format_aggregate_table(r);
}

struct DiceOpts {
  std::string gt, pred, regions;
};

int run_dice(const Globals& g, const DiceOpts& o) {
  const auto out = require_out(g);
  const auto gt = truth_labels(o.gt, g.jobs);
  const auto pred = evalkit::read_predictions(o.pred, gt.size());
  auto regions = parse_regions(o.regions);
  if (regions.empty()) {
    auto all = gt;
    all.insert(all.end(), pred.begin(), pred.end());
    regions = evalkit::regions_present(all);
  }
  const auto report = evalkit::dice_report(volcore::read_manifest(o.gt).case_id, gt, pred, regions, g.jobs);
  evalkit::write_report(report, out);
  show_table(g, report);
  return 0;
}

struct LoocvOpts {
  std::string cases, predictor, regions, work;
  double timeout = 3600.0;
};

int run_loocv(const Globals& g, const LoocvOpts& o) {
  const auto out = require_out(g);
  auto spec = evalkit::PredictorSpec::parse(o.predictor);
  spec.timeout_s = o.timeout;
  evalkit::LoocvOptions opts;
  opts.jobs = g.jobs;
  opts.regions = parse_regions(o.regions);
  opts.work_dir = o.work.empty() ? fs::path(out).parent_path() / (fs::path(out).stem().string() + "_folds") : fs::path(o.work);
  const auto report = evalkit::run_loocv(evalkit::read_case_list(o.cases), spec, opts);
  evalkit::write_report(report, out);
  for (const auto& f : report.folds)
    if (!f.ok) spdlog::warn("fold {} ({}) failed: {}: {}", f.fold, f.test_case, f.error_name, f.error_message);
  show_table(g, report);
  return 0;
}

struct BoxOpts {
  std::string report;
};

struct PredictOpts {
  std::string train, test;
};

}  // namespace

void add_eval(CLI::App& app, Globals& g, Action& action) {
  auto* group = app.add_subcommand("eval", "Dice evaluation");
  group->require_subcommand(1);

  auto d = std::make_shared<DiceOpts>();
  auto* dice = group->add_subcommand("dice", "Per-frame, per-region Dice of a prediction against ground truth");
  dice->add_option("--gt", d->gt, "Ground-truth case directory")->required();
  dice->add_option("--pred", d->pred, "Predicted case or fNNN_labels.nrrd directory")->required();
  dice->add_option("--regions", d->regions, "Comma-separated codes or names (default: all present)");
  dice->callback([&g, &action, d] { action = [&g, d] { return run_dice(g, *d); }; });

  auto l = std::make_shared<LoocvOpts>();
  auto* loocv = group->add_subcommand("loocv", "Leave-one-out cross-validation over a case list");
  loocv->add_option("--cases", l->cases, "JSON {\"cases\": [dir, ...]}")->required()->check(CLI::ExistingFile);
  loocv->add_option("--predictor", l->predictor,
                    "\"CMD {train} {test} {out}\", builtin:baseline or builtin:copy-truth")
      ->required();
  loocv->add_option("--regions", l->regions, "Comma-separated codes or names (default: all present)");
  loocv->add_option("--work", l->work, "Fold working directory (default: next to --out)");
  loocv->add_option("--timeout", l->timeout, "Per-fold predictor timeout (s)")->capture_default_str();
  loocv->callback([&g, &action, l] { action = [&g, l] { return run_loocv(g, *l); }; });

  auto b = std::make_shared<BoxOpts>();
  auto* box = group->add_subcommand("boxplot", "Box-plot CSV from a report");
  box->add_option("--report", b->report, "report.json")->required()->check(CLI::ExistingFile);
  box->callback([&g, &action, b] {
    action = [&g, b] {
      evalkit::write_boxplot(evalkit::read_report(b->report), require_out(g));
      return 0;
    };
  });
}

void add_predict(CLI::App& app, Globals& g, Action& action) {
  auto* group = app.add_subcommand("predict", "Built-in predictors usable as LOOCV commands");
  group->require_subcommand(1);

  auto p = std::make_shared<PredictOpts>();
  auto* base = group->add_subcommand("baseline", "Threshold, tracking and growth baseline");
  base->add_option("--train", p->train, "Training case list JSON")->required()->check(CLI::ExistingFile);
  base->add_option("--test", p->test, "Test case directory")->required();
  base->callback([&g, &action, p] {
    action = [&g, p] {
      const auto labels = evalkit::predict_baseline(evalkit::read_case_list(p->train), p->test, g.jobs);
      evalkit::write_predictions(labels, require_out(g));
      return 0;
    };
  });

  auto c = std::make_shared<PredictOpts>();
  auto* copy = group->add_subcommand("copy-truth", "Copies the test case's own labels");
  copy->add_option("--train", c->train, "Ignored");
  copy->add_option("--test", c->test, "Test case directory")->required();
  copy->callback([&g, &action, c] {
    action = [&g, c] {
      evalkit::write_predictions(truth_labels(c->test, g.jobs), require_out(g));
      return 0;
    };
  });
}

}  // namespace swct::cli
