// Copyright 2026 The pipegraph Authors
// SPDX-License-Identifier: Apache-2.0

#include "pipegraph/types.hpp"

#include <array>
#include <utility>

namespace pipegraph {
namespace {

constexpr std::array<std::pair<ObjectClass, std::string_view>, 7> kClassNames{{
    {ObjectClass::Pipe, "Pipe"},
    {ObjectClass::Pump, "Pump"},
    {ObjectClass::Tank, "Tank"},
    {ObjectClass::Valve, "Valve"},
    {ObjectClass::Sprinkler, "Sprinkler"},
    {ObjectClass::PipeCrossing, "PipeCrossing"},
    {ObjectClass::ReducerExpander, "ReducerExpander"},
}};

}  // namespace

std::string_view to_string(ObjectClass cls) {
  for (const auto& [c, name] : kClassNames) {
    if (c == cls) return name;
  }
  return "Unknown";
}

std::optional<ObjectClass> parse_object_class(std::string_view name) {
  for (const auto& [c, n] : kClassNames) {
    if (n == name) return c;
  }
  // Accepted spelling in hand-written graphs.
  if (name == "Reducer/Expander") return ObjectClass::ReducerExpander;
  return std::nullopt;
}

int max_keypoints(ObjectClass cls) {
  switch (cls) {
    case ObjectClass::Tank:
    case ObjectClass::Sprinkler:
      return 1;
    case ObjectClass::Pump:
    case ObjectClass::Valve:
      return 2;
    default:
      return 0;
  }
}

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::DepthDimensionMismatch: return "DepthDimensionMismatch";
    case ErrorCode::InvalidQuaternion: return "InvalidQuaternion";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::InvalidDepth: return "InvalidDepth";
    case ErrorCode::DegenerateCloud: return "DegenerateCloud";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::EmptyObservation: return "EmptyObservation";
    case ErrorCode::EmptyCloud: return "EmptyCloud";
    case ErrorCode::NoKeypoints: return "NoKeypoints";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::UnknownSpec: return "UnknownSpec";
  }
  return "Unknown";
}

Vec3 centroid(const PointCloud& cloud) {
  Vec3 sum = Vec3::Zero();
  for (const auto& p : cloud.points) sum += p;
  return cloud.empty() ? sum : Vec3(sum / static_cast<double>(cloud.size()));
}

}  // namespace pipegraph
