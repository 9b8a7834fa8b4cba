// Copyright 2026 The pipegraph Authors
// SPDX-License-Identifier: Apache-2.0

#include "oracles.hpp"
#include "support.hpp"

#include "pipegraph/geometry.hpp"
#include "pipegraph/ingest.hpp"
#include "pipegraph/synthscene.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstring>
#include <limits>

using namespace pipegraph;
using testing::box_detection;
using testing::TempDir;

namespace {

ImageRecord small_image(const std::string& id) {
  ImageRecord image;
  image.image_id = id;
  image.intrinsics = intrinsics_from_fov(8, 6, 90.0);
  image.pose.position = Vec3(1.0, -2.0, 0.5);
  image.pose.orientation = Eigen::Quaterniond(0.5, 0.5, -0.5, 0.5);
  image.depth.width = 8;
  image.depth.height = 6;
  for (int i = 0; i < 48; ++i) image.depth.values.push_back(1.0f + 0.125f * static_cast<float>(i));
  image.depth.values[5] = std::numeric_limits<float>::quiet_NaN();
  image.depth.values[7] = 0.0f;
  Detection tank = box_detection(0, ObjectClass::Tank, 0.8, 1, 1, 5, 4);
  tank.keypoints = {Vec2(2.5, 3.25)};
  Detection pipe = box_detection(3, ObjectClass::Pipe, 0.95, 0, 0, 4, 2);
  pipe.mask = {{Vec2(0, 0), Vec2(4, 0), Vec2(4, 2), Vec2(0, 2)}};
  image.detections = {tank, pipe};
  return image;
}

SceneBundle small_bundle() {
  SceneBundle b;
  b.images = {small_image("left"), small_image("right")};
  b.images[1].pose.position = Vec3(0, 0, 0);
  b.metadata["site"] = "bench";
  return b;
}

void expect_same(const SceneBundle& a, const SceneBundle& b) {
  REQUIRE(a.images.size() == b.images.size());
  CHECK(a.metadata == b.metadata);
  for (std::size_t i = 0; i < a.images.size(); ++i) {
    const auto& x = a.images[i];
    const auto& y = b.images[i];
    CHECK(x.image_id == y.image_id);
    CHECK(x.intrinsics.fx == y.intrinsics.fx);
    CHECK(x.intrinsics.cy == y.intrinsics.cy);
    CHECK(x.pose.position == y.pose.position);
    CHECK(x.pose.orientation.coeffs() == y.pose.orientation.coeffs());
    REQUIRE(x.depth.values.size() == y.depth.values.size());
    CHECK(std::memcmp(x.depth.values.data(), y.depth.values.data(),
                      x.depth.values.size() * sizeof(float)) == 0);
    REQUIRE(x.detections.size() == y.detections.size());
    for (std::size_t k = 0; k < x.detections.size(); ++k) {
      const auto& d = x.detections[k];
      const auto& e = y.detections[k];
      CHECK(d.id == e.id);
      CHECK(d.cls == e.cls);
      CHECK(d.confidence == e.confidence);
      CHECK(d.bbox.x_max == e.bbox.x_max);
      CHECK(d.keypoints == e.keypoints);
      CHECK(d.mask == e.mask);
    }
  }
}

nlohmann::json manifest(const TempDir& dir) {
  return nlohmann::json::parse(testing::slurp(dir / "scene.json"));
}

}  // namespace

TEST_CASE("scene bundles survive a write/load round trip") {
  TempDir dir;
  const SceneBundle bundle = small_bundle();
  write_scene(bundle, dir.path());
  expect_same(bundle, load_scene(dir.path()));
}

TEST_CASE("synthetic bundles round trip bit-exactly") {
  synth::SceneSpec spec;
  spec.width = 64;
  spec.height = 36;
  spec.primitives.push_back({synth::Cylinder{Vec3(-0.5, 0, 0), Vec3(0.5, 0, 0), 0.05}, 0,
                             ObjectClass::Pipe});
  spec.primitives.push_back({synth::Box{Vec3(0, 0.6, 0), {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()},
                                        Vec3(0.2, 0.2, 0.2)},
                             1, ObjectClass::Pump});
  spec.truth_graph.nodes = {{0, ObjectClass::Pipe, Vec3::Zero(), {}},
                            {1, ObjectClass::Pump, Vec3(0, 0.6, 0), {Vec3(0, 0.4, 0)}}};
  spec.cameras.push_back({synth::look_at(Vec3(0, -1, 2), Vec3(0, 0.2, 0)), 90.0});
  spec.cameras.push_back({synth::look_at(Vec3(1, 1, 2), Vec3(0, 0.2, 0)), 90.0});
  spec.noise.depth_sigma = 0.003;
  const SceneBundle bundle = synth::generate_bundle(spec, 11);
  TempDir dir;
  write_scene(bundle, dir.path());
  expect_same(bundle, load_scene(dir.path()));
}

TEST_CASE("load_scene reports broken bundles") {
  TempDir dir;
  write_scene(small_bundle(), dir.path());

  SUBCASE("missing manifest") {
    TempDir empty;
    CHECK_THROWS_AS(load_scene(empty.path()), Error);
    try {
      load_scene(empty.path());
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MissingFile);
    }
  }
  SUBCASE("absent depth file") {
    auto j = manifest(dir);
    j["images"][1]["depth_file"] = "nowhere.pgdp";
    testing::spit(dir / "scene.json", j.dump());
    try {
      load_scene(dir.path());
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MissingFile);
    }
  }
  SUBCASE("depth file one value short") {
    const auto name = manifest(dir)["images"][0]["depth_file"].get<std::string>();
    std::string bytes = testing::slurp(dir / name);
    bytes.resize(bytes.size() - 4);
    testing::spit(dir / name, bytes);
    try {
      load_scene(dir.path());
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DepthDimensionMismatch);
    }
  }
  SUBCASE("depth size differs from the image") {
    auto j = manifest(dir);
    j["images"][0]["width"] = 9;
    testing::spit(dir / "scene.json", j.dump());
    try {
      load_scene(dir.path());
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DepthDimensionMismatch);
    }
  }
  SUBCASE("non-unit quaternion") {
    auto j = manifest(dir);
    j["images"][0]["pose"]["quaternion"] = {1.0, 0.1, 0.0, 0.0};
    testing::spit(dir / "scene.json", j.dump());
    try {
      load_scene(dir.path());
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InvalidQuaternion);
    }
  }
  SUBCASE("schema violations name the field") {
    auto j = manifest(dir);
    j["images"][0]["detections"][0]["keypoints"] = {{1, 1}, {2, 2}};
    testing::spit(dir / "scene.json", j.dump());
    try {
      load_scene(dir.path());
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::SchemaViolation);
      CHECK(std::string(e.what()).find("keypoints") != std::string::npos);
    }
  }
  SUBCASE("bbox outside the image") {
    auto j = manifest(dir);
    j["images"][0]["detections"][0]["bbox"] = {1, 1, 9, 4};
    testing::spit(dir / "scene.json", j.dump());
    CHECK_THROWS_AS(load_scene(dir.path()), Error);
  }
  SUBCASE("duplicate image ids") {
    auto j = manifest(dir);
    j["images"][1]["image_id"] = "left";
    testing::spit(dir / "scene.json", j.dump());
    CHECK_THROWS_AS(load_scene(dir.path()), Error);
  }
  SUBCASE("no images") {
    auto j = manifest(dir);
    j["images"] = nlohmann::json::array();
    testing::spit(dir / "scene.json", j.dump());
    CHECK_THROWS_AS(load_scene(dir.path()), Error);
  }
}

TEST_CASE("fov_deg in the manifest derives the intrinsics") {
  TempDir dir;
  write_scene(small_bundle(), dir.path());
  auto j = manifest(dir);
  auto& image = j["images"][0];
  for (const char* k : {"fx", "fy", "cx", "cy"}) image.erase(k);
  image["fov_deg"] = 90.0;
  testing::spit(dir / "scene.json", j.dump());
  const auto intr = load_scene(dir.path()).images[0].intrinsics;
  CHECK(intr.fx == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(intr.fy == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(intr.cx == 4.0);
  CHECK(intr.cy == 3.0);
}

TEST_CASE("depth files use the PGDP layout") {
  TempDir dir;
  DepthMap d;
  d.width = 3;
  d.height = 2;
  d.values = {1, 2, 3, 4, 5, 6};
  write_depth_file(d, dir / "d.pgdp");
  const std::string bytes = testing::slurp(dir / "d.pgdp");
  REQUIRE(bytes.size() == 4 + 8 + 6 * 4);
  CHECK(bytes.substr(0, 4) == "PGDP");
  std::uint32_t w = 0;
  std::uint32_t h = 0;
  std::memcpy(&w, bytes.data() + 4, 4);
  std::memcpy(&h, bytes.data() + 8, 4);
  CHECK(w == 3);
  CHECK(h == 2);
  float last = 0;
  std::memcpy(&last, bytes.data() + 12 + 20, 4);
  CHECK(last == 6.0f);
  CHECK(read_depth_file(dir / "d.pgdp").values == d.values);
}

TEST_CASE("filter_by_confidence keeps scores at or above the threshold") {
  std::vector<Detection> dets = {box_detection(0, ObjectClass::Pump, 0.9, 0, 0, 1, 1),
                                 box_detection(1, ObjectClass::Pump, 0.69, 0, 0, 1, 1),
                                 box_detection(2, ObjectClass::Pump, 0.70, 0, 0, 1, 1)};
  const auto kept = filter_by_confidence(dets, 0.70);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].id == 0);
  CHECK(kept[1].id == 2);
  CHECK(filter_by_confidence(dets, 0.0).size() == 3);
}

TEST_CASE("filter_by_confidence matches a linear scan, idempotent and order preserving") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Detection> dets;
    for (int i = 0; i < 40; ++i) {
      dets.push_back(box_detection(i, ObjectClass::Valve, std::round(u(rng) * 100) / 100, 0, 0, 1, 1));
    }
    const double thr = 0.70;
    std::vector<int> expected;
    for (const auto& d : dets) {
      if (d.confidence >= thr) expected.push_back(d.id);
    }
    const auto once = filter_by_confidence(dets, thr);
    std::vector<int> got;
    for (const auto& d : once) got.push_back(d.id);
    CHECK(got == expected);
    CHECK(filter_by_confidence(once, thr).size() == once.size());
  }
}

TEST_CASE("bbox_iou") {
  const BBox a{0, 0, 2, 2};
  CHECK(bbox_iou(a, a) == 1.0);
  CHECK(bbox_iou(a, BBox{5, 5, 6, 6}) == 0.0);
  CHECK(bbox_iou(a, BBox{1, 0, 3, 2}) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(rng), y = u(rng), w = u(rng) + 0.1, h = u(rng) + 0.1;
    const double p = u(rng), q = u(rng), s = u(rng) + 0.1, t = u(rng) + 0.1;
    const BBox b1{x, y, x + w, y + h};
    const BBox b2{p, q, p + s, q + t};
    const double v = bbox_iou(b1, b2);
    CHECK(v == bbox_iou(b2, b1));
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("nms examples") {
  // Same-class boxes with IoU 0.6: 10x10 boxes offset by 2.5 px.
  const auto hi = box_detection(0, ObjectClass::Pump, 0.9, 0, 0, 10, 10);
  const auto lo = box_detection(1, ObjectClass::Pump, 0.8, 2.5, 0, 12.5, 10);
  REQUIRE(bbox_iou(hi.bbox, lo.bbox) == doctest::Approx(0.6));
  std::vector<Detection> two{lo, hi};
  auto out = nms(two, 0.5);
  REQUIRE(out.size() == 1);
  CHECK(out[0].id == 0);

  auto other = lo;
  other.cls = ObjectClass::Tank;
  other.bbox = {0.5, 0, 10.5, 10};
  std::vector<Detection> mixed{hi, other};
  CHECK(nms(mixed, 0.5).size() == 2);

  CHECK(nms(std::vector<Detection>{}, 0.5).empty());
}

TEST_CASE("nms properties on random sets") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> pos(0.0, 80.0);
  std::uniform_real_distribution<double> size(5.0, 40.0);
  std::uniform_int_distribution<int> conf(1, 5);
  constexpr ObjectClass kinds[] = {ObjectClass::Pump, ObjectClass::Tank};
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Detection> dets;
    for (int i = 0; i < 30; ++i) {
      const double x = pos(rng), y = pos(rng);
      dets.push_back(box_detection(i, kinds[i % 2], conf(rng) / 5.0, x, y, x + size(rng),
                                   y + size(rng)));
    }
    const double thr = 0.4;
    const auto kept = nms(dets, thr);
    for (std::size_t i = 0; i < kept.size(); ++i) {
      for (std::size_t j = i + 1; j < kept.size(); ++j) {
        if (kept[i].cls == kept[j].cls) CHECK(bbox_iou(kept[i].bbox, kept[j].bbox) <= thr);
      }
    }
    std::vector<int> ids;
    for (const auto& d : kept) ids.push_back(d.id);
    CHECK(ids == oracle::nms(dets, thr));

    // Coarse confidences force ties; the id tie-break makes order irrelevant.
    auto shuffled = dets;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    std::vector<int> again;
    for (const auto& d : nms(shuffled, thr)) again.push_back(d.id);
    CHECK(again == ids);
  }
}
