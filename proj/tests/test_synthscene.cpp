// Copyright 2026 The pipegraph Authors
// SPDX-License-Identifier: Apache-2.0

#include "oracles.hpp"
#include "support.hpp"

#include "pipegraph/geometry.hpp"
#include "pipegraph/synthscene.hpp"

#include <doctest.h>

#include <set>

using namespace pipegraph;
using namespace pipegraph::synth;

namespace {

SceneSpec box_scene() {
  SceneSpec spec;
  spec.width = 64;
  spec.height = 48;
  spec.primitives.push_back({Box{Vec3(0, 0, 3), {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()}, Vec3(0.5, 0.5, 0.5)},
                             0, ObjectClass::Pump});
  spec.truth_graph.nodes.push_back({0, ObjectClass::Pump, Vec3(0, 0, 3), {Vec3(0.5, 0, 2.5), Vec3(0, 0, 3.5)}});
  spec.cameras.push_back({CameraPose{}, 90.0});
  return spec;
}

}  // namespace

TEST_CASE("ray intersections") {
  const Cylinder cyl{Vec3(-1, 0, 0), Vec3(1, 0, 0), 0.5};
  CHECK(*intersect(cyl, Vec3(0, 0, -5), Vec3::UnitZ()) == doctest::Approx(4.5));
  CHECK(*intersect(cyl, Vec3(-5, 0, 0), Vec3::UnitX()) == doctest::Approx(4.0));
  CHECK_FALSE(intersect(cyl, Vec3(0, 2, -5), Vec3::UnitZ()));
  CHECK_FALSE(intersect(cyl, Vec3(0, 0, 5), Vec3::UnitZ()));

  const Box box{Vec3(0, 0, 0), {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()}, Vec3(1, 2, 3)};
  CHECK(*intersect(box, Vec3(0, 0, -5), Vec3::UnitZ()) == doctest::Approx(2.0));
  CHECK(*intersect(box, Vec3(-5, 0, 0), Vec3::UnitX()) == doctest::Approx(4.0));
  CHECK_FALSE(intersect(box, Vec3(0, 3, -5), Vec3::UnitZ()));

  const double s = std::sqrt(0.5);
  const Box turned{Vec3(0, 0, 0), {Vec3(s, s, 0), Vec3(-s, s, 0), Vec3::UnitZ()}, Vec3(1, 1, 1)};
  CHECK(*intersect(turned, Vec3(-5, 0, 0), Vec3::UnitX()) == doctest::Approx(5.0 - std::sqrt(2.0)));
}

TEST_CASE("rendered depth is planar and lies on the surface") {
  const auto spec = box_scene();
  const auto r = render_depth(spec, 0);
  const auto intr = spec.intrinsics(0);
  int hits = 0;
  for (int v = 0; v < r.height; ++v) {
    for (int u = 0; u < r.width; ++u) {
      if (r.id_at(u, v) == kBackground) {
        CHECK(std::isinf(r.depth_at(u, v)));
        continue;
      }
      ++hits;
      CHECK(r.depth_at(u, v) == doctest::Approx(2.5));
      const Vec3 p = unproject(pixel_center(u, v), r.depth_at(u, v), intr, CameraPose{});
      CHECK(std::abs(p.x()) <= 0.5 + 1e-9);
      CHECK(std::abs(p.y()) <= 0.5 + 1e-9);
    }
  }
  // Face of 1 m at 2.5 m with f = 32 px covers about 12.8 px squared.
  CHECK(hits >= 144);
  CHECK(hits <= 196);
  const auto depth = r.to_depth_map();
  CHECK_FALSE(depth.valid(0, 0));
}

TEST_CASE("detections from the id map") {
  const auto spec = box_scene();
  const auto r = render_depth(spec, 0);
  const auto dets = render_detections(spec, 0, r, 0);
  REQUIRE(dets.size() == 1);
  CHECK(dets[0].cls == ObjectClass::Pump);
  CHECK(dets[0].confidence == 1.0);
  int u0 = r.width, v0 = r.height, u1 = -1, v1 = -1;
  for (int v = 0; v < r.height; ++v) {
    for (int u = 0; u < r.width; ++u) {
      if (r.id_at(u, v) != 0) continue;
      u0 = std::min(u0, u);
      v0 = std::min(v0, v);
      u1 = std::max(u1, u + 1);
      v1 = std::max(v1, v + 1);
    }
  }
  CHECK(dets[0].bbox.x_min == u0);
  CHECK(dets[0].bbox.y_min == v0);
  CHECK(dets[0].bbox.x_max == u1);
  CHECK(dets[0].bbox.y_max == v1);
  // The back endpoint is hidden by the box itself.
  REQUIRE(dets[0].keypoints.size() == 1);
  const auto proj = project(Vec3(0.5, 0, 2.5), spec.intrinsics(0), CameraPose{});
  CHECK((dets[0].keypoints[0] - proj->pixel).norm() < 1e-12);
}

TEST_CASE("dropping is monotone in the probability") {
  auto spec = build_system1_like();
  const auto r = render_depth(spec, 3);
  std::set<int> previous;
  for (int i = 0; i < (int)render_detections(spec, 3, r, 9).size(); ++i) previous.insert(i);
  for (double p : {0.1, 0.3, 0.6, 1.0}) {
    spec.noise.drop_detection_prob = p;
    std::set<int> ids;
    for (const auto& d : render_detections(spec, 3, r, 9)) ids.insert(d.id);
    CHECK(std::includes(previous.begin(), previous.end(), ids.begin(), ids.end()));
    previous = ids;
  }
  CHECK(previous.empty());
}

TEST_CASE("look_at points the optical axis at the target") {
  const Vec3 eye(1, 2, 3), target(-2, 0.5, 0);
  const auto pose = look_at(eye, target);
  CHECK((pose.rotation() * Vec3::UnitZ() - (target - eye).normalized()).norm() < 1e-12);
  // Image rows run downward in the world.
  CHECK((pose.rotation() * Vec3::UnitY()).z() < 0.0);
  const auto down = look_at(Vec3(0, 0, 5), Vec3::Zero());
  CHECK((down.rotation() * Vec3::UnitZ() - Vec3(0, 0, -1)).norm() < 1e-12);
}

TEST_CASE("system1 truth graph") {
  const auto spec = build_system1_like();
  const auto& g = spec.truth_graph;
  CHECK(g.nodes.size() == 15);
  CHECK(g.edges.size() == 14);
  CHECK(oracle::check_rules(g).ok());
  CHECK(oracle::violating(g).empty());
  std::map<ObjectClass, int> count;
  for (const auto& n : g.nodes) ++count[n.cls];
  CHECK(count[ObjectClass::Tank] == 1);
  CHECK(count[ObjectClass::Pump] == 1);
  CHECK(count[ObjectClass::Valve] == 1);
  CHECK(count[ObjectClass::PipeCrossing] == 3);
  const auto deg = g.degrees();
  for (const auto& n : g.nodes) {
    CAPTURE(to_string(n.cls));
    if (n.cls == ObjectClass::Tank) CHECK(deg.at(n.id) == 1);
    if (n.cls == ObjectClass::Pump || n.cls == ObjectClass::Valve) CHECK(deg.at(n.id) == 2);
    if (n.cls == ObjectClass::PipeCrossing) CHECK(deg.at(n.id) == 3);
    CHECK(n.endpoints.size() <= 3);
  }
  // Truth edges join endpoints no further apart than the default linking
  // distance, and enforcement leaves the truth alone.
  for (const auto& e : g.edges) CHECK(e.weight <= 0.5);
  const auto enforced = enforce(g, hydraulic_ruleset());
  CHECK(export_graph(enforced, GraphFormat::Json) == export_graph(g, GraphFormat::Json));
}

TEST_CASE("system1 objects are each seen by at least two cameras") {
  const auto spec = build_system1_like();
  std::map<int, int> seen;
  for (std::size_t c = 0; c < spec.cameras.size(); ++c) {
    const auto r = render_depth(spec, c);
    std::set<int> here(r.ids.begin(), r.ids.end());
    for (int id : here) {
      if (id != kBackground) ++seen[id];
    }
  }
  for (const auto& n : spec.truth_graph.nodes) CHECK(seen[n.id] >= 2);
}

TEST_CASE("bundles are reproducible from the seed") {
  auto spec = box_scene();
  spec.noise.depth_sigma = 0.01;
  const auto a = generate_bundle(spec, 5);
  const auto b = generate_bundle(spec, 5);
  const auto c = generate_bundle(spec, 6);
  CHECK(a.images[0].depth.values == b.images[0].depth.values);
  CHECK(a.images[0].depth.values != c.images[0].depth.values);

  testing::TempDir d1, d2;
  write_synthetic(spec, 5, d1.path());
  write_synthetic(spec, 5, d2.path());
  for (const char* f : {"scene.json", "cam_00.pgdp", "truth_graph.json"}) {
    CHECK(testing::slurp(d1 / f) == testing::slurp(d2 / f));
  }
  const auto loaded = load_scene(d1.path());
  CHECK(loaded.images.size() == 1);
}

TEST_CASE("scene spec files") {
  const std::string text = R"({
    "width": 32, "height": 24,
    "primitives": [
      {"type": "cylinder", "object_id": 0, "a": [-1, 0, 3], "b": [1, 0, 3], "radius": 0.1},
      {"type": "box", "object_id": 1, "class": "Tank", "center": [0, 1, 4], "half_extents": [0.2, 0.2, 0.2]}
    ],
    "cameras": [{"eye": [0, 0, 0], "target": [0, 0, 1], "fov_deg": 80}],
    "noise": {"depth_sigma": 0.002}
  })";
  const auto spec = parse_scene_spec(text);
  CHECK(spec.width == 32);
  CHECK(spec.primitives.size() == 2);
  CHECK(spec.primitives[1].cls == ObjectClass::Tank);
  CHECK(spec.cameras.size() == 1);
  CHECK(spec.noise.depth_sigma == 0.002);
  REQUIRE(spec.truth_graph.nodes.size() == 2);
  CHECK(spec.truth_graph.nodes[1].position == Vec3(0, 1, 4));

  const auto parse_fails = [](const std::string& t) {
    try {
      parse_scene_spec(t);
    } catch (const Error& e) {
      return e.code() == ErrorCode::ParseError;
    }
    return false;
  };
  CHECK(parse_fails("{"));
  CHECK(parse_fails(R"({"primitives": [{"type": "cone", "object_id": 0}], "cameras": []})"));
  CHECK(parse_fails(R"({"cameras": []})"));

  try {
    resolve_scene_spec("no_such_builtin");
    FAIL("expected UnknownSpec");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownSpec);
  }
}
