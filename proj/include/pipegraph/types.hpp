// Copyright 2026 The pipegraph Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pipegraph {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Object categories. The last two are produced only by graph typing.
enum class ObjectClass {
  Pipe,
  Pump,
  Tank,
  Valve,
  Sprinkler,
  PipeCrossing,
  ReducerExpander,
};

std::string_view to_string(ObjectClass cls);
std::optional<ObjectClass> parse_object_class(std::string_view name);

/// Pipe, PipeCrossing and ReducerExpander all describe pipe elements.
inline bool is_pipe_family(ObjectClass cls) {
  return cls == ObjectClass::Pipe || cls == ObjectClass::PipeCrossing ||
         cls == ObjectClass::ReducerExpander;
}

/// Maximum number of connection keypoints a detector reports per class.
int max_keypoints(ObjectClass cls);

enum class ErrorCode {
  MissingFile,
  SchemaViolation,
  DepthDimensionMismatch,
  InvalidQuaternion,
  DomainError,
  InvalidDepth,
  DegenerateCloud,
  TooFewPoints,
  EmptyObservation,
  EmptyCloud,
  NoKeypoints,
  ParseError,
  IoError,
  UnknownSpec,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

struct PointCloud {
  std::vector<Vec3> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

Vec3 centroid(const PointCloud& cloud);

}  // namespace pipegraph
