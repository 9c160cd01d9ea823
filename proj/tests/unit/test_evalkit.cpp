#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "helpers.hpp"
#include "swct/evalkit/baseline.hpp"
#include "swct/evalkit/boxplot.hpp"
#include "swct/evalkit/loocv.hpp"
#include "swct/phantom/phantom.hpp"

using namespace swct;
using namespace swct::volcore;
using namespace swct::evalkit;
using namespace testutil;

namespace {

LabelMap labels_from(const Geometry& g, std::initializer_list<std::pair<Mask, RegionCode>> parts) {
  std::vector<std::uint8_t> codes(g.voxel_count(), 0);
  for (const auto& [m, r] : parts)
    for (std::size_t v = 0; v < codes.size(); ++v)
      if (m[v]) codes[v] = static_cast<std::uint8_t>(r);
  return {g, std::move(codes)};
}

// Small phantom cases written under `dir`, returned in order.
std::vector<fs::path> phantom_cases(const fs::path& dir, int n) {
  std::vector<fs::path> out;
  for (int c = 0; c < n; ++c) {
    phantom::PhantomConfig cfg;
    cfg.case_id = "case_" + std::to_string(c);
    cfg.dims = {48, 48, 48};
    cfg.n_frames = 3;
    cfg.rng_seed = 100 + c;
    const auto path = dir / cfg.case_id;
    phantom::write_case(phantom::generate(cfg, 1), cfg, path, 1);
    out.push_back(path);
  }
  return out;
}

}  // namespace

TEST_SUITE("evalkit") {

TEST_CASE("dice examples") {
  const auto g = cube(20);
  const auto a = box(g, {2, 2, 2}, {12, 12, 12});
  CHECK(dice(a, a).dice == 1.0);
  CHECK(dice(a, box(g, {13, 0, 0}, {20, 5, 5})).dice == 0.0);
  const auto half = dice(a, box(g, {7, 2, 2}, {17, 12, 12}));
  CHECK(half.intersection == 500);
  CHECK(half.dice == 0.5);

  const auto none = dice(Mask(g, 0), Mask(g, 0));
  CHECK(none.both_empty);
  CHECK(none.dice == 1.0);
  CHECK(dice(a, Mask(g, 0)).dice == 0.0);
  CHECK_THROWS_NAMED(dice(a, Mask(cube(21), 0)), "geometry_mismatch");
}

TEST_CASE("dice matches counting and is symmetric") {
  const auto g = cube(32);
  std::mt19937_64 rng(17);
  for (int n = 0; n < 20; ++n) {
    const double pa = std::uniform_real_distribution<double>(0.05, 0.6)(rng);
    const double pb = std::uniform_real_distribution<double>(0.05, 0.6)(rng);
    std::bernoulli_distribution ba(pa), bb(pb);
    std::vector<std::uint8_t> va(g.voxel_count()), vb(g.voxel_count());
    std::size_t na = 0, nb = 0, both = 0;
    for (std::size_t v = 0; v < va.size(); ++v) {
      va[v] = ba(rng);
      vb[v] = bb(rng);
      na += va[v];
      nb += vb[v];
      both += va[v] && vb[v];
    }
    const Mask a(g, va), b(g, vb);
    CHECK(dice(a, b).dice == 2.0 * double(both) / double(na + nb));
    CHECK(dice(a, b).dice == dice(b, a).dice);
  }
}

TEST_CASE("dice reports") {
  const auto g = cube(16);
  const auto tongue = box(g, {0, 0, 0}, {8, 8, 8});
  const auto hyoid = box(g, {10, 10, 10}, {14, 14, 14});
  const std::vector<LabelMap> gt{labels_from(g, {{tongue, RegionCode::tongue}, {hyoid, RegionCode::hyoid}}),
                                 labels_from(g, {{tongue, RegionCode::tongue}})};
  const auto regions = regions_present(gt);
  CHECK(regions == std::vector<RegionCode>{RegionCode::tongue, RegionCode::hyoid});

  const auto same = dice_report("c", gt, gt, regions);
  CHECK(same.entries.size() == 4);
  for (const auto& e : same.entries) CHECK(e.dice == 1.0);
  for (const auto& a : same.aggregates) CHECK(a.below_guideline.empty());
  CHECK(same.aggregate(RegionCode::hyoid)->both_empty == 1);
  CHECK(same.aggregate(RegionCode::hyoid)->n == 1);

  const std::vector<LabelMap> empty{LabelMap(g, 0), LabelMap(g, 0)};
  const auto zero = dice_report("c", gt, empty, regions);
  for (const auto& e : zero.entries)
    if (!e.both_empty) CHECK(e.dice == 0.0);
  CHECK(zero.aggregate(RegionCode::tongue)->below_guideline.size() == 2);

  CHECK_THROWS_NAMED(dice_report("c", gt, {gt[0]}, regions), "frame_count_mismatch");
}

TEST_CASE("statistics conventions") {
  CHECK(median({3, 1, 2}) == 2.0);
  CHECK(median({4, 1, 3, 2}) == 2.5);
  CHECK(population_std({2, 4, 4, 4, 5, 5, 7, 9}) == 2.0);
  CHECK(population_std({}) == 0.0);

  DiceReport r;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 1);
  for (int f = 0; f < 37; ++f)
    for (auto reg : {RegionCode::bolus, RegionCode::hyoid}) r.entries.push_back({"c", f, reg, u(rng), 10, 10, false});
  r.entries.push_back({"c", 40, RegionCode::bolus, 1.0, 0, 0, true});
  r.recompute_aggregates();
  const auto back = report_from_json(report_to_json(r));
  for (auto reg : {RegionCode::bolus, RegionCode::hyoid}) {
    std::vector<double> vals;
    for (const auto& e : r.entries)
      if (e.region == reg && !e.both_empty) vals.push_back(e.dice);
    const auto* a = back.aggregate(reg);
    REQUIRE(a);
    CHECK(a->n == 37);
    CHECK(std::abs(a->median - median(vals)) < 1e-12);
    CHECK(std::abs(a->stddev - population_std(vals)) < 1e-12);
  }
  CHECK(back.entries.size() == r.entries.size());
  CHECK(report_to_json(back) == report_to_json(r));

  const auto j = nlohmann::json::parse(report_to_json(r));
  CHECK(j.at("guideline").get<double>() == 0.7);
}

TEST_CASE("formatting published aggregates") {
  const std::string text = R"({"aggregates": {
    "bolus": {"code": 9, "n": 129, "median": 0.80, "std": 0.31},
    "hyoid": {"code": 6, "n": 129, "median": 0.78, "std": 0.14},
    "thyroid_cartilage": {"code": 7, "n": 129, "median": 0.59, "std": 0.12},
    "epiglottis": {"code": 8, "n": 129, "median": 0.32, "std": 0.24},
    "tongue": {"code": 1, "n": 129, "median": 0.85, "std": 0.08},
    "soft_palate": {"code": 2, "n": 129, "median": 0.72, "std": 0.05}}})";
  const auto table = format_aggregate_table(report_from_json(text));
  const std::vector<std::pair<std::string, std::string>> rows{
      {"bolus", "0.80 0.31"},      {"hyoid", "0.78 0.14"},  {"thyroid_cartilage", "0.59 0.12"},
      {"epiglottis", "0.32 0.24"}, {"tongue", "0.85 0.08"}, {"soft_palate", "0.72 0.05"}};
  for (const auto& [name, cells] : rows) {
    const auto at = table.find(name + " ");
    REQUIRE(at != std::string::npos);
    std::istringstream line(table.substr(at, table.find('\n', at) - at));
    std::string region, code, n, med, sd;
    line >> region >> code >> n >> med >> sd;
    CHECK(med + " " + sd == cells);
  }
  CHECK(table.find("guideline 0.7") != std::string::npos);
  CHECK_THROWS_NAMED(report_from_json(R"({"aggregates": {"x": {"code": 12, "median": 1, "std": 0}}})"), "invalid_report");
  CHECK_THROWS_NAMED(report_from_json("[1, 2]"), "invalid_report");
}

TEST_CASE("box statistics") {
  const auto s = box_stats({1.0, 0.75, 0.5, 0.25, 0.0});
  CHECK(s.median == 0.5);
  CHECK(s.q1 == 0.25);
  CHECK(s.q3 == 0.75);
  CHECK(s.min == 0.0);
  CHECK(s.max == 1.0);
  CHECK(s.outliers.empty());

  const auto one = box_stats({0.42});
  for (double v : {one.min, one.q1, one.median, one.q3, one.max}) CHECK(v == 0.42);

  const auto far = box_stats({0.9, 0.91, 0.92, 0.93, 0.94, 0.1});
  CHECK(far.outliers == std::vector<double>{0.1});
  CHECK(far.min == 0.9);
  CHECK_THROWS_NAMED(box_stats({}), "empty_sample");

  DiceReport r;
  for (double d : {0.0, 0.25, 0.5, 0.75, 1.0}) r.entries.push_back({"c", 0, RegionCode::hyoid, d, 1, 1, false});
  r.recompute_aggregates();
  const auto csv = boxplot_csv(r);
  CHECK(csv.rfind("region,n,min,q1,median,q3,max,outliers,guideline\n", 0) == 0);
  CHECK(csv.find("0.7") != std::string::npos);
  CHECK_THROWS_NAMED(boxplot_csv(DiceReport{}), "empty_report");
}

TEST_CASE("leave-one-out plans") {
  for (std::size_t n : {2u, 5u, 9u}) {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back("c" + std::to_string(i));
    const auto plan = loocv_plan(ids);
    REQUIRE(plan.folds.size() == n);
    std::set<std::string> tested;
    for (const auto& f : plan.folds) {
      CHECK(f.train.size() == n - 1);
      CHECK(std::find(f.train.begin(), f.train.end(), f.test) == f.train.end());
      tested.insert(f.test);
    }
    CHECK(tested.size() == n);
  }
  CHECK_THROWS_NAMED(loocv_plan({"a"}), "too_few_cases");
  CHECK_THROWS_NAMED(loocv_plan({"a", "b", "a"}), "duplicate_case");
}

TEST_CASE("predictor specs") {
  CHECK(PredictorSpec::parse("builtin:baseline").kind == PredictorSpec::Kind::baseline);
  CHECK(PredictorSpec::parse("builtin:copy-truth").kind == PredictorSpec::Kind::copy_truth);
  CHECK(PredictorSpec::parse("run {train} {test} {out}").kind == PredictorSpec::Kind::external);
  CHECK_THROWS_NAMED(PredictorSpec::parse("run {test} {out}"), "invalid_predictor");
}

TEST_CASE("case lists") {
  const auto dir = scratch("case_list");
  fs::create_directories(dir / "data" / "a");
  write_case_list({dir / "data" / "a", dir / "data" / "b"}, dir / "list.json");
  const auto j = nlohmann::json::parse(slurp(dir / "list.json"));
  CHECK(j.at("cases").at(0) == "data/a");
  const auto back = read_case_list(dir / "list.json");
  REQUIRE(back.size() == 2);
  CHECK(fs::equivalent(back[0], dir / "data" / "a"));
  spit(dir / "bad.json", "{\"cases\": [1]}");
  CHECK_THROWS_NAMED(read_case_list(dir / "bad.json"), "invalid_case_list");
}

TEST_CASE("leave-one-out runs") {
  const auto dir = scratch("loocv");
  const auto cases = phantom_cases(dir / "cases", 3);
  LoocvOptions opt;
  opt.jobs = 2;
  opt.work_dir = dir / "work";

  const auto truth = run_loocv(cases, PredictorSpec::parse("builtin:copy-truth"), opt);
  CHECK(truth.folds.size() == 3);
  CHECK(truth.entries.size() > 0);
  for (const auto& e : truth.entries) CHECK(e.dice == 1.0);

  // External command: copies truth except for case_1, where it fails.
  const auto ext = PredictorSpec::parse(
      "test -f {train} || exit 9; case {test} in *case_1) exit 7;; esac; cp {test}/f*_labels.nrrd {out}/");
  const auto r = run_loocv(cases, ext, opt);
  REQUIRE(r.folds.size() == 3);
  CHECK(r.folds[0].ok);
  CHECK_FALSE(r.folds[1].ok);
  CHECK(r.folds[1].error_name == "predictor_failed");
  CHECK(r.folds[2].ok);
  for (const auto& e : r.entries) {
    CHECK(e.case_id != "case_1");
    CHECK(e.dice == 1.0);
  }
  CHECK(fs::exists(opt.work_dir / "fold_1" / "predictor.log"));

  auto slow = PredictorSpec::parse("sleep 30; echo {train} {test} {out}");
  slow.timeout_s = 0.2;
  const auto t = run_loocv({cases[0], cases[1]}, slow, opt);
  CHECK(t.folds[0].error_name == "predictor_timeout");

  const auto silent = run_loocv({cases[0], cases[1]}, PredictorSpec::parse("true {train} {test} {out}"), opt);
  CHECK(silent.folds[0].error_name == "missing_prediction");
}

TEST_CASE("baseline predictor") {
  const auto dir = scratch("baseline");
  const auto cases = phantom_cases(dir, 3);
  const int thr = estimate_bone_threshold({cases[0], cases[1]});
  CHECK(thr > 40);
  CHECK(thr < 800);
  const auto pred = predict_baseline({cases[0], cases[1]}, cases[2], 1);
  const auto seq = load_case(cases[2], 1);
  REQUIRE(pred.size() == seq.frame_count());
  for (std::size_t f = 0; f < pred.size(); ++f)
    for (auto r : {RegionCode::mandible, RegionCode::cervical_vertebrae})
      CHECK(dice_region(*seq.frames[f].labels, pred[f], r).dice >= 0.95);
}

}
