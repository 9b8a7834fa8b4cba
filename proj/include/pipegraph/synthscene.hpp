// Copyright 2026 The pipegraph Authors
// SPDX-License-Identifier: Apache-2.0

// Synthetic scene bundles: analytic ray casting of cylinders and boxes,
// detections derived from the per-pixel object ids, optional noise, and the
// matching ground-truth graph.

#pragma once

#include "pipegraph/graph.hpp"
#include "pipegraph/ingest.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace pipegraph::synth {

/// Capped cylinder around the segment a-b.
struct Cylinder {
  Vec3 a = Vec3::Zero();
  Vec3 b = Vec3::UnitX();
  double radius = 0.05;
};

struct Box {
  Vec3 center = Vec3::Zero();
  std::array<Vec3, 3> axes{Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};
  Vec3 half_extents = Vec3::Constant(0.5);
};

/// Primitives sharing an object id form one object. Negative ids are scene
/// structure (floor, walls) and render as background.
struct Primitive {
  std::variant<Cylinder, Box> shape;
  int object_id = -1;
  ObjectClass cls = ObjectClass::Pipe;
};

struct CameraSpec {
  CameraPose pose;
  double fov_deg = 114.0;
};

struct NoiseSpec {
  double depth_sigma = 0.0;           // meters
  double keypoint_sigma = 0.0;        // pixels
  double mask_boundary_jitter = 0.0;  // pixels
  double drop_detection_prob = 0.0;
  double spurious_detection_rate = 0.0;  // expected count per image
};

struct SceneSpec {
  int width = 480;
  int height = 270;
  std::vector<Primitive> primitives;
  std::vector<CameraSpec> cameras;
  /// Node ids equal primitive object ids; node endpoints are the objects'
  /// true connection points.
  SceneGraph truth_graph;
  NoiseSpec noise;

  CameraIntrinsics intrinsics(std::size_t camera) const;
};

inline constexpr int kBackground = -1;

/// Ray parameter of the nearest hit with t > 0 for the ray origin + t * dir.
std::optional<double> intersect(const Cylinder& cyl, const Vec3& origin, const Vec3& dir);
std::optional<double> intersect(const Box& box, const Vec3& origin, const Vec3& dir);

struct RenderResult {
  int width = 0;
  int height = 0;
  std::vector<double> depth;  // planar depth; +inf where nothing is hit
  std::vector<int> ids;       // object id or kBackground

  int id_at(int u, int v) const { return ids[static_cast<std::size_t>(v) * width + u]; }
  double depth_at(int u, int v) const { return depth[static_cast<std::size_t>(v) * width + u]; }
  DepthMap to_depth_map() const;
};

RenderResult render_depth(const SceneSpec& spec, std::size_t camera);

/// Noise-free detections straight from the id map, then NoiseSpec keypoint
/// jitter, mask boundary jitter, drops and spurious boxes. Every random
/// stream is derived from (seed, camera).
std::vector<Detection> render_detections(const SceneSpec& spec, std::size_t camera,
                                         const RenderResult& render, std::uint64_t seed);

/// Adds Gaussian noise of NoiseSpec::depth_sigma to every valid depth.
void apply_depth_noise(DepthMap& depth, double sigma, std::uint64_t seed, std::size_t camera);

SceneBundle generate_bundle(const SceneSpec& spec, std::uint64_t seed);

/// Writes the bundle plus `truth_graph.json`.
void write_synthetic(const SceneSpec& spec, std::uint64_t seed, const std::filesystem::path& dir);

/// Camera at `eye` looking at `target`; image rows run along -up.
CameraPose look_at(const Vec3& eye, const Vec3& target, const Vec3& up = Vec3::UnitZ());

/// Tank - pipe - pump - pipe - three T-fittings with branch pipes - valve -
/// pipe on a floor, viewed by two rows of eight cameras on either side.
SceneSpec build_system1_like();

/// Builtin by name ("system1") or a SceneSpec JSON file. Throws UnknownSpec.
SceneSpec resolve_scene_spec(const std::string& name_or_path);

SceneSpec parse_scene_spec(const std::string& json_text);

}  // namespace pipegraph::synth
