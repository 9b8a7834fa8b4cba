// Copyright 2026 The pipegraph Authors
// SPDX-License-Identifier: Apache-2.0

#include "support.hpp"

#include "pipegraph/geometry.hpp"
#include "pipegraph/pipe.hpp"
#include "pipegraph/synthscene.hpp"

#include <doctest.h>

using namespace pipegraph;

namespace {

// Straight pipes along x, seen by two cameras from the front.
synth::SceneSpec pipe_scene(const std::vector<synth::Cylinder>& pipes) {
  synth::SceneSpec spec;
  spec.width = 480;
  spec.height = 360;
  for (std::size_t i = 0; i < pipes.size(); ++i) {
    spec.primitives.push_back({pipes[i], static_cast<int>(i), ObjectClass::Pipe});
    spec.truth_graph.nodes.push_back(
        {static_cast<int>(i), ObjectClass::Pipe, (pipes[i].a + pipes[i].b) / 2, {pipes[i].a, pipes[i].b}});
  }
  spec.cameras.push_back({synth::look_at(Vec3(0, -2.0, 0.8), Vec3(0, 0, 0)), 90.0});
  spec.cameras.push_back({synth::look_at(Vec3(0.6, -1.8, 1.0), Vec3(0, 0, 0)), 90.0});
  return spec;
}

double distance_to_segment(const Vec3& p, const Vec3& a, const Vec3& b) {
  const double t = std::clamp((p - a).dot(b - a) / (b - a).squaredNorm(), 0.0, 1.0);
  return (p - (a + t * (b - a))).norm();
}

std::vector<PipeObservation> observe_all(const SceneBundle& bundle) {
  std::vector<PipeObservation> out;
  for (const auto& image : bundle.images) {
    for (const auto& det : image.detections) {
      auto obs = cleanup_observation(det, image.depth, image.intrinsics, image.pose);
      if (!obs) continue;
      obs->image_id = image.image_id;
      out.push_back(std::move(*obs));
    }
  }
  return out;
}

WorldObject object_of(PointCloud cloud) {
  WorldObject o;
  o.cloud = std::move(cloud);
  return o;
}

}  // namespace

TEST_CASE("cleanup_observation keeps points on the pipe surface") {
  const synth::Cylinder pipe{Vec3(-0.6, 0, 0), Vec3(0.6, 0, 0), 0.06};
  const auto bundle = synth::generate_bundle(pipe_scene({pipe}), 0);
  const auto& image = bundle.images[0];
  REQUIRE(image.detections.size() == 1);
  const auto obs = cleanup_observation(image.detections[0], image.depth, image.intrinsics, image.pose);
  REQUIRE(obs.has_value());
  CHECK(obs->cloud.size() > 100);
  for (const auto& p : obs->cloud.points) {
    CHECK(distance_to_segment(p, pipe.a, pipe.b) == doctest::Approx(pipe.radius).epsilon(0.05));
  }
  CHECK(obs->mask.count() > 0);
}

TEST_CASE("cleanup_observation without depth is nullopt") {
  const synth::Cylinder pipe{Vec3(-0.6, 0, 0), Vec3(0.6, 0, 0), 0.06};
  auto bundle = synth::generate_bundle(pipe_scene({pipe}), 0);
  auto& image = bundle.images[0];
  for (auto& d : image.depth.values) d = std::numeric_limits<float>::quiet_NaN();
  CHECK_FALSE(cleanup_observation(image.detections[0], image.depth, image.intrinsics, image.pose));
}

TEST_CASE("overlap fraction and filter") {
  PipeObservation obs;
  for (int k = 0; k < 10; ++k) obs.cloud.points.emplace_back(0.005 + 0.05 * k, 0.005, 0.005);
  PointCloud covering;
  for (int k = 0; k < 3; ++k) covering.points.emplace_back(0.005 + 0.05 * k, 0.005, 0.025);
  const std::vector<WorldObject> objects{object_of(covering),
                                         object_of(PointCloud{{Vec3(5, 5, 5)}})};
  CHECK(max_overlap_fraction(obs, objects) == doctest::Approx(0.3));
  CHECK(overlap_filter(obs, objects, 0.3));
  CHECK_FALSE(overlap_filter(obs, objects, 0.29));
  CHECK(overlap_filter(obs, {}, 0.0));

  const std::vector<WorldObject> self{object_of(obs.cloud)};
  CHECK(max_overlap_fraction(obs, self) == 1.0);
  CHECK_FALSE(overlap_filter(obs, self, 0.99));
}

TEST_CASE("overlap fraction is the maximum over single objects, not the union") {
  PipeObservation obs;
  for (int k = 0; k < 10; ++k) obs.cloud.points.emplace_back(0.005 + 0.05 * k, 0.005, 0.005);
  PointCloud left, right;
  for (int k = 0; k < 5; ++k) left.points.push_back(obs.cloud.points[k]);
  for (int k = 5; k < 10; ++k) right.points.push_back(obs.cloud.points[k]);
  const std::vector<WorldObject> objects{object_of(left), object_of(right)};
  CHECK(max_overlap_fraction(obs, objects) == doctest::Approx(0.5));
}

TEST_CASE("reprojection finds the same pipe in the other image") {
  const synth::Cylinder pipe{Vec3(-0.6, 0, 0), Vec3(0.6, 0, 0), 0.06};
  auto bundle = synth::generate_bundle(pipe_scene({pipe}), 0);
  auto obs = cleanup_observation(bundle.images[0].detections[0], bundle.images[0].depth,
                                 bundle.images[0].intrinsics, bundle.images[0].pose);
  REQUIRE(obs);
  const auto hits = reprojection_candidates(*obs, bundle.images[1]);
  REQUIRE(hits.size() == 1);
  CHECK(hits[0].detection_id == bundle.images[1].detections[0].id);
  CHECK(hits[0].pixels > 50);

  // Depth that disagrees everywhere: nothing is consistent.
  for (auto& d : bundle.images[1].depth.values) d += 1.0f;
  CHECK(reprojection_candidates(*obs, bundle.images[1]).empty());
}

TEST_CASE("match_pipes") {
  SUBCASE("one pipe seen twice") {
    const auto bundle = synth::generate_bundle(pipe_scene({{Vec3(-0.6, 0, 0), Vec3(0.6, 0, 0), 0.06}}), 0);
    const auto obs = observe_all(bundle);
    REQUIRE(obs.size() == 2);
    const auto objects = match_pipes(obs, bundle);
    REQUIRE(objects.size() == 1);
    CHECK(objects[0].id == 0);
    CHECK(objects[0].cls == ObjectClass::Pipe);
    CHECK(objects[0].sources.size() == 2);
  }
  SUBCASE("two separate pipes") {
    const auto bundle = synth::generate_bundle(
        pipe_scene({{Vec3(-0.8, 0, 0), Vec3(-0.2, 0, 0), 0.05}, {Vec3(0.2, 0, 0.4), Vec3(0.8, 0, 0.4), 0.05}}), 0);
    const auto obs = observe_all(bundle);
    const auto objects = match_pipes(obs, bundle);
    REQUIRE(objects.size() == 2);
    for (std::size_t i = 0; i < objects.size(); ++i) {
      CHECK(objects[i].id == static_cast<int>(i));
      CHECK(objects[i].sources.size() == 2);
    }
    CHECK(objects[0].sources < objects[1].sources);
  }
  SUBCASE("no observations") {
    const auto bundle = synth::generate_bundle(pipe_scene({}), 0);
    CHECK(match_pipes({}, bundle).empty());
  }
}

TEST_CASE("classify_shape") {
  std::mt19937_64 rng(31);
  const auto straight = object_of(testing::segment_cloud(Vec3(0, 0, 0), Vec3(1, 0, 0), 0.04, 2000, rng));
  CHECK(classify_shape(straight, 3.0) == PipeShapeClass::Straight);

  auto elbow = testing::segment_cloud(Vec3(0, 0, 0), Vec3(0.5, 0, 0), 0.04, 1000, rng);
  const auto leg = testing::segment_cloud(Vec3(0.5, 0, 0), Vec3(0.5, 0.5, 0), 0.04, 1000, rng);
  elbow.points.insert(elbow.points.end(), leg.points.begin(), leg.points.end());
  CHECK(classify_shape(object_of(elbow), 3.0) == PipeShapeClass::NonStraight);

  // The longest half extent divided by another is at least 1, so any
  // threshold below 1 labels everything straight.
  for (double p : {0.3, 0.99}) {
    CHECK(classify_shape(straight, p) == PipeShapeClass::Straight);
    CHECK(classify_shape(object_of(elbow), p) == PipeShapeClass::Straight);
  }
}

TEST_CASE("straight endpoints lie within a bin of the true ends") {
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> len(0.5, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec3 a(u(rng), u(rng), u(rng));
    const Vec3 b = a + len(rng) * Vec3(u(rng), u(rng), u(rng)).normalized();
    const auto obj = object_of(testing::segment_cloud(a, b, 0.05, 4000, rng));
    const auto ends = endpoints_straight(obj);
    const double tol = std::max(0.02, (b - a).norm() / 20.0);
    const double direct = std::max((ends[0] - a).norm(), (ends[1] - b).norm());
    const double swapped = std::max((ends[0] - b).norm(), (ends[1] - a).norm());
    CHECK(std::min(direct, swapped) <= tol);
  }
}

TEST_CASE("non-straight endpoints are pulled p_w of the way to the neighbors") {
  std::mt19937_64 rng(33);
  auto elbow = testing::segment_cloud(Vec3(0, 0, 0), Vec3(0.4, 0, 0), 0.04, 800, rng);
  const auto leg = testing::segment_cloud(Vec3(0.4, 0, 0), Vec3(0.4, 0.4, 0), 0.04, 800, rng);
  elbow.points.insert(elbow.points.end(), leg.points.begin(), leg.points.end());
  const auto obj = object_of(elbow);
  const Vec3 c = centroid(obj.cloud);

  // Neighbor points sit alone in their 1 cm voxels, so downsampling keeps
  // them unchanged.
  PointCloud west, north, far;
  for (int k = 0; k < 12; ++k) west.points.emplace_back(-0.055 - 0.03 * k, 0.005, 0.005);
  for (int k = 0; k < 6; ++k) north.points.emplace_back(0.405, 0.455 + 0.03 * k, 0.005);
  for (int k = 0; k < 30; ++k) far.points.emplace_back(5.005 + 0.03 * k, 5.005, 0.005);
  const std::vector<WorldObject> others{object_of(far), object_of(north), object_of(west)};

  const auto nearest_of = [&](const PointCloud& cloud) {
    Vec3 best = cloud.points[0];
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& q : cloud.points) {
      for (const auto& p : voxel_downsample(obj.cloud, 0.01).points) {
        const double d = (p - q).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = q;
        }
      }
    }
    return best;
  };

  const auto ends = endpoints_nonstraight(obj, others, 0.5, 0.30);
  // West has more points in reach, so it is picked first.
  for (const auto& [end, cloud] : {std::pair{ends[0], west}, std::pair{ends[1], north}}) {
    const Vec3 q = nearest_of(cloud);
    CHECK((end - (c + 0.30 * (q - c))).norm() < 1e-9);
    CHECK((end - c).norm() == doctest::Approx(0.30 * (q - c).norm()).epsilon(1e-9));
  }

  SUBCASE("a missing neighbor leaves the centroid") {
    const std::vector<WorldObject> one{object_of(west)};
    const auto e = endpoints_nonstraight(obj, one, 0.5, 0.30);
    CHECK((e[1] - c).norm() == 0.0);
    CHECK((e[0] - c).norm() > 0.0);
    const auto none = endpoints_nonstraight(obj, {}, 0.5, 0.30);
    CHECK(none[0] == c);
    CHECK(none[1] == c);
  }
}
