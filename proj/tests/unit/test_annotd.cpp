#include <thread>

#include <nlohmann/json.hpp>

#include "helpers.hpp"
#include "swct/annotd/server.hpp"
#include "swct/phantom/phantom.hpp"

// After Eigen: <resolv.h> defines a macro that clashes with Eigen internals.
#include <httplib.h>

using namespace swct;
using namespace swct::volcore;
using namespace swct::annotd;
using namespace testutil;
using nlohmann::json;

namespace {

// Fresh copy of a small phantom case (rendered once per process).
fs::path phantom_copy(const std::string& name) {
  static const fs::path source = [] {
    const auto dir = scratch("annotd_source");
    phantom::PhantomConfig cfg;
    cfg.case_id = "annotd";
    cfg.dims = {64, 64, 64};
    cfg.n_frames = 3;
    phantom::write_case(phantom::generate(cfg, 2), cfg, dir / "case", 2);
    return dir / "case";
  }();
  const auto root = scratch(name);
  fs::copy(source, root / "case", fs::copy_options::recursive);
  return root;
}

std::vector<LabelMap> all_labels(const Session& s) {
  std::vector<LabelMap> out;
  for (std::size_t f = 0; f < s.frame_count(); ++f) out.push_back(s.labels(static_cast<int>(f)));
  return out;
}

PaintEdit erase_left_hyoid(const Session& s, int frame) {
  const auto labels = s.labels(frame);
  const auto c = mask_centroid(extract_region(labels, RegionCode::hyoid));
  const auto& g = labels.geometry();
  PaintEdit e;
  e.frame = frame;
  e.region = RegionCode::hyoid;
  e.erase = true;
  for (std::size_t v = 0; v < labels.size(); ++v)
    if (labels[v] == 6 && voxel_center(g, g.unravel(v)[0], 0, 0).x() < c->x()) e.runs.emplace_back(v, 1);
  return e;
}

}  // namespace

TEST_SUITE("annotd") {

TEST_CASE("png round trips") {
  Raster r;
  r.width = 5;
  r.height = 3;
  for (int i = 0; i < 15; ++i) r.pixels.push_back(static_cast<std::uint8_t>(i * 17));
  const auto gray = decode_png(encode_gray_png(r));
  CHECK_FALSE(gray.indexed);
  CHECK(gray.raster.width == 5);
  CHECK(gray.raster.height == 3);
  CHECK(gray.raster.pixels == r.pixels);

  for (auto& p : r.pixels) p %= 10;
  const auto pal = region_palette();
  CHECK(pal.size() == 10);
  CHECK(pal[0][3] == 0);
  const auto idx = decode_png(encode_indexed_png(r, pal));
  CHECK(idx.indexed);
  CHECK(idx.raster.pixels == r.pixels);
  CHECK(idx.palette == pal);

  CHECK_THROWS_NAMED(decode_png("not a png"), "invalid_png");
}

TEST_CASE("slices and windows") {
  CHECK(window_hu(40, 40, 400) == 128);
  CHECK(window_hu(-1000, 40, 400) == 0);
  CHECK(window_hu(3000, 40, 400) == 255);
  CHECK(parse_axis("coronal") == Axis::coronal);
  CHECK_THROWS_NAMED(parse_axis("oblique"), "invalid_axis");

  Geometry g;
  g.dims = {4, 5, 6};
  std::vector<std::int32_t> hu(g.voxel_count(), -1000);
  hu[g.linear(1, 2, 3)] = 40;
  const Volume3 v(g, hu);
  const auto ax = hu_slice(v, Axis::axial, 3, 40, 400);
  CHECK(ax.width == 4);
  CHECK(ax.height == 5);
  CHECK(ax.pixels[2 * 4 + 1] == 128);
  CHECK(ax.pixels[0] == 0);
  const auto cor = hu_slice(v, Axis::coronal, 2, 40, 400);
  CHECK(cor.width == 4);
  CHECK(cor.height == 6);
  CHECK(cor.pixels[(5 - 3) * 4 + 1] == 128);
  CHECK(slice_count(g, Axis::sagittal) == 4);
  CHECK_THROWS_NAMED(hu_slice(v, Axis::axial, 6, 40, 400), "index_out_of_range");
  CHECK_THROWS_NAMED(hu_slice(v, Axis::sagittal, -1, 40, 400), "index_out_of_range");

  const auto empty = label_slice(LabelMap(g, 0), Axis::axial, 0);
  CHECK(std::all_of(empty.pixels.begin(), empty.pixels.end(), [](auto p) { return p == 0; }));
}

TEST_CASE("session store") {
  const auto root = phantom_copy("store");
  SessionStore store(root);
  const auto a = store.open("case");
  const auto b = store.open("case");
  CHECK(a.id != b.id);
  CHECK(a.edit_token != b.edit_token);
  CHECK(store.find(a.id)->frame_count() == 3);
  CHECK(store.find(a.id) != store.find(b.id));
  CHECK(store.token_matches(a.id, a.edit_token));
  CHECK_FALSE(store.token_matches(a.id, b.edit_token));
  CHECK_THROWS_NAMED(store.open("nowhere"), "case_not_found");
  CHECK_THROWS_NAMED(store.open("../.."), "case_not_found");
  CHECK(json::parse(store.list_json()).size() == 2);
}

TEST_CASE("cage edits and undo") {
  const auto root = phantom_copy("cage_edit");
  Session s("s", root / "case");
  const auto before = all_labels(s);

  const auto c = s.cage(1, RegionCode::tongue);
  CHECK(c.node_count() == 27);
  CageEdit none;
  none.frame = 1;
  none.node = 13;
  const auto r0 = s.apply(none);
  CHECK(r0.changed_voxels == 0);
  CHECK(all_labels(s) == before);

  CageEdit push = none;
  push.delta_mm = Vec3(0, 0, 3);
  const auto r1 = s.apply(push);
  CHECK(r1.applied);
  CHECK(r1.changed_voxels > 0);
  CHECK(r1.frames == std::vector<int>{1});
  CHECK_FALSE(s.labels(1) == before[1]);
  CHECK(s.labels(0) == before[0]);
  CHECK((s.cage(1, RegionCode::tongue).displaced[13] - c.displaced[13] - Vec3(0, 0, 3)).norm() < 1e-12);

  s.undo();
  s.undo();
  CHECK(all_labels(s) == before);
  CHECK(s.cage(1, RegionCode::tongue).displaced == c.displaced);
  CHECK_FALSE(s.undo().applied);

  CageEdit bad = push;
  bad.node = 27;
  CHECK_THROWS_NAMED(s.apply(bad), "invalid_node_index");
  CHECK_THROWS_NAMED(s.cage(0, RegionCode::epiglottis), "empty_region");
}

TEST_CASE("n edits then n undos restore the opening state") {
  const auto root = phantom_copy("undo_chain");
  Session s("s", root / "case");
  const auto before = all_labels(s);

  PaintEdit paint;
  paint.frame = 0;
  paint.region = RegionCode::bolus;
  paint.runs = {{100, 50}, {5000, 300}};
  CageEdit cage;
  cage.frame = 2;
  cage.node = 4;
  cage.delta_mm = Vec3(1.5, -1, 2);
  TrackEdit track;
  track.region = RegionCode::hyoid;
  track.first = 0;
  track.last = 2;
  const std::vector<Edit> edits{paint, cage, track, erase_left_hyoid(s, 1), cage};
  // Edits that change nothing leave no undo step.
  std::size_t steps = 0;
  for (const auto& e : edits) {
    const auto r = s.apply(e);
    if (r.undo_depth > steps) ++steps;
    CHECK(r.undo_depth == steps);
  }
  CHECK(steps >= 4);
  CHECK(s.dirty());
  for (std::size_t i = 0; i < steps; ++i) CHECK(s.undo().applied);
  CHECK_FALSE(s.undo().applied);
  CHECK(all_labels(s) == before);
}

TEST_CASE("leaking growth is rejected") {
  const auto dir = scratch("leak");
  const auto g = cube(32);
  const auto a = ball(g, Vec3(8, 16, 16), 5);
  const auto b = ball(g, Vec3(24, 16, 16), 8);
  const auto bridge = box(g, {8, 15, 15}, {24, 17, 17});
  std::vector<std::int32_t> hu(g.voxel_count());
  for (std::size_t v = 0; v < hu.size(); ++v) hu[v] = a[v] || b[v] || bridge[v] ? 1500 : 40;
  Sequence4D seq;
  seq.case_id = "leak";
  seq.frames.push_back({Volume3(g, hu), LabelMap(g, 0)});
  save_case(dir / "case", seq);

  Session s("s", dir / "case");
  GrowEdit e;
  e.params.seeds = {{8, 16, 16}};
  e.params.hu_lo = 1000;
  e.params.hu_hi = 2000;
  e.params.max_voxels = count_nonzero(a) + 5;
  const auto r = s.apply(e);
  CHECK_FALSE(r.applied);
  CHECK(r.warning == "growth_cap_exceeded");
  CHECK(count_nonzero(s.labels(0)) == 0);
  CHECK(s.undo_depth() == 0);

  e.params.max_voxels = 1'000'000;
  const auto ok = s.apply(e);
  CHECK(ok.applied);
  CHECK(count_nonzero(extract_region(s.labels(0), RegionCode::bolus)) ==
        count_nonzero(mask_where(g, [&](std::size_t v) { return hu[v] == 1500; })));
}

TEST_CASE("save, reopen and dice panel") {
  const auto root = phantom_copy("save");
  const auto reference = phantom_copy("save_reference") / "case";
  std::vector<LabelMap> edited;
  {
    Session s("s", root / "case");
    const auto self = s.dice_panel(reference);
    for (const auto& e : self.entries) CHECK(e.dice == 1.0);

    s.apply(erase_left_hyoid(s, 1));
    const auto panel = s.dice_panel(reference);
    for (const auto& e : panel.entries)
      if (e.region == RegionCode::hyoid) CHECK((e.frame == 1 ? e.dice < 1.0 : e.dice == 1.0));
    const auto* hy = panel.aggregate(RegionCode::hyoid);
    REQUIRE(hy);
    REQUIRE(hy->below_guideline.size() == 1);
    CHECK(hy->below_guideline[0].frame == 1);

    s.cage(2, RegionCode::tongue);
    CageEdit c;
    c.frame = 2;
    c.node = 13;
    c.delta_mm = Vec3(0, 2, 0);
    s.apply(c);
    s.save();
    CHECK_FALSE(s.dirty());
    edited = all_labels(s);
  }
  Session again("t", root / "case");
  CHECK(all_labels(again) == edited);
  CHECK((again.cage(2, RegionCode::tongue).displaced[13] - again.cage(2, RegionCode::tongue).rest[13]).norm() ==
        doctest::Approx(2.0));
}

TEST_CASE("http interface") {
  const auto root = phantom_copy("http");
  Server server(root);
  const int port = server.bind("127.0.0.1", 0);
  REQUIRE(port > 0);
  std::thread loop([&] { server.serve(); });
  httplib::Client cli("127.0.0.1", port);

  auto created = cli.Post("/sessions", R"({"case": "case"})", "application/json");
  REQUIRE(created);
  CHECK(created->status == 201);
  const auto body = json::parse(created->body);
  const auto id = body.at("id").get<std::string>();
  const httplib::Headers token{{kEditTokenHeader, body.at("edit_token").get<std::string>()}};
  const auto base = "/s/" + id;

  auto missing = cli.Post("/sessions", R"({"case": "absent"})", "application/json");
  CHECK(missing->status == 404);
  CHECK(json::parse(missing->body).at("error") == "case_not_found");
  CHECK(cli.Get("/s/nobody/meta")->status == 404);

  auto meta = cli.Get(base + "/meta");
  CHECK(meta->status == 200);
  CHECK(json::parse(meta->body).at("frames") == 3);

  auto slice = cli.Get(base + "/slice?frame=0&axis=axial&index=32");
  CHECK(slice->status == 200);
  CHECK(slice->get_header_value("Content-Type") == "image/png");
  CHECK(decode_png(slice->body).raster.width == 64);
  auto overlay = cli.Get(base + "/labels/slice?frame=0&index=32");
  CHECK(decode_png(overlay->body).indexed);
  CHECK(cli.Get(base + "/slice?frame=0&index=64")->status == 400);
  CHECK(cli.Get(base + "/slice?frame=0")->status == 400);

  const std::string paint = R"({"type": "paint", "frame": 0, "region": 9, "runs": [[0, 10]]})";
  auto denied = cli.Post(base + "/edit", paint, "application/json");
  CHECK(denied->status == 403);
  CHECK(json::parse(denied->body).at("error") == "edit_token_required");
  auto applied = cli.Post(base + "/edit", token, paint, "application/json");
  CHECK(applied->status == 200);
  CHECK(json::parse(applied->body).at("changed_voxels") == 10);
  auto undone = cli.Post(base + "/undo", token, "", "application/json");
  CHECK(json::parse(undone->body).at("status") == "applied");
  CHECK(cli.Post(base + "/edit", token, "{\"type\": \"warp\"}", "application/json")->status == 400);

  auto cage = cli.Get(base + "/cage?frame=0&region=tongue");
  REQUIRE(cage->status == 200);
  auto moved = segkit::cage_from_json(cage->body);
  moved.displaced[13] += Vec3(0, 0, 2);
  CHECK(cli.Put(base + "/cage?frame=0&region=tongue", segkit::cage_to_json(moved), "application/json")->status == 403);
  auto put = cli.Put(base + "/cage?frame=0&region=tongue", token, segkit::cage_to_json(moved), "application/json");
  CHECK(put->status == 200);
  CHECK(json::parse(put->body).at("changed_voxels").get<int>() > 0);

  auto mesh = cli.Get(base + "/mesh?frame=0&region=6");
  CHECK(mesh->status == 200);
  CHECK(mesh->body.find("\nf ") != std::string::npos);

  auto dice = cli.Get(base + "/dice?ref=case");
  CHECK(dice->status == 200);
  CHECK(json::parse(dice->body).contains("aggregates"));
  CHECK(cli.Get(base + "/dice?ref=elsewhere")->status == 404);

  CHECK(cli.Post(base + "/save", token, "", "application/json")->status == 200);
  CHECK(json::parse(cli.Get("/sessions")->body).size() == 1);

  server.stop();
  loop.join();
}

}
