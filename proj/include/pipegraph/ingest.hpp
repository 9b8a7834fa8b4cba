// Copyright 2026 The pipegraph Authors
// SPDX-License-Identifier: Apache-2.0

// Scene bundles: per-image depth, pose, intrinsics and 2D detections for one
// capture session, plus detection-level filtering (confidence, NMS).

#pragma once

#include "pipegraph/types.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace pipegraph {

struct CameraIntrinsics {
  int width = 0;
  int height = 0;
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
};

/// Camera-to-world rigid transform. Orientation is a unit quaternion stored
/// (w, x, y, z); right-handed; the camera looks along its local +z with +x
/// right and +y down.
struct CameraPose {
  Vec3 position = Vec3::Zero();
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();

  Mat3 rotation() const { return orientation.toRotationMatrix(); }
};

/// Planar depth (distance along the optical axis) in meters, row-major.
/// Non-finite or non-positive values mark missing depth.
struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<float> values;

  float at(int u, int v) const {
    return values[static_cast<std::size_t>(v) * width + u];
  }
  bool valid(int u, int v) const { return is_valid_depth(at(u, v)); }

  static bool is_valid_depth(double d) { return std::isfinite(d) && d > 0.0; }
};

struct BBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
};

/// Closed polygon in continuous pixel coordinates (pixel (i, j) covers
/// [i, i+1) x [j, j+1)).
using Polygon = std::vector<Vec2>;

struct Detection {
  int id = 0;
  ObjectClass cls = ObjectClass::Pipe;
  double confidence = 0.0;
  BBox bbox;
  std::vector<Vec2> keypoints;
  std::vector<Polygon> mask;
};

struct ImageRecord {
  std::string image_id;
  CameraIntrinsics intrinsics;
  CameraPose pose;
  DepthMap depth;
  std::vector<Detection> detections;
};

struct SceneBundle {
  std::vector<ImageRecord> images;
  std::map<std::string, std::string> metadata;
};

/// Reads `scene.json` and the depth files it references; every invariant of
/// the bundle is validated. Throws Error with MissingFile, SchemaViolation,
/// DepthDimensionMismatch or InvalidQuaternion.
SceneBundle load_scene(const std::filesystem::path& dir);

/// Writes `scene.json` plus one `<image_id>.pgdp` depth file per image.
/// Intrinsics are written explicitly (fx, fy, cx, cy).
void write_scene(const SceneBundle& bundle, const std::filesystem::path& dir);

DepthMap read_depth_file(const std::filesystem::path& path);
void write_depth_file(const DepthMap& depth, const std::filesystem::path& path);

/// Throws SchemaViolation describing the first broken invariant.
void validate_image(const ImageRecord& image);

std::vector<Detection> filter_by_confidence(std::span<const Detection> detections,
                                            double threshold);

double bbox_iou(const BBox& a, const BBox& b);

/// Greedy class-wise non-maximum suppression. Candidates are visited by
/// confidence descending, id ascending; the result is returned in that order.
std::vector<Detection> nms(std::span<const Detection> detections, double iou_threshold);

}  // namespace pipegraph
