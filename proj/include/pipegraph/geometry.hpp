// Copyright 2026 The pipegraph Authors
// SPDX-License-Identifier: Apache-2.0

// Pinhole projection, mask rasterization and erosion, voxel downsampling and
// PCA-oriented boxes.
//
// Pixel convention: integer pixel (i, j) covers the continuous square
// [i, i+1) x [j, j+1) and is sampled at its center (i + 0.5, j + 0.5).

#pragma once

#include "pipegraph/ingest.hpp"
#include "pipegraph/types.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace pipegraph {

struct BitMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  BitMask() = default;
  BitMask(int w, int h) : width(w), height(h), bits(static_cast<std::size_t>(w) * h, 0) {}

  bool get(int u, int v) const { return bits[static_cast<std::size_t>(v) * width + u] != 0; }
  void set(int u, int v, bool on = true) {
    bits[static_cast<std::size_t>(v) * width + u] = on ? 1 : 0;
  }
  std::size_t count() const;
};

struct RotatedBox {
  Vec3 center = Vec3::Zero();
  std::array<Vec3, 3> axes{Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};
  /// Sorted descending.
  std::array<double, 3> half_extents{0.0, 0.0, 0.0};

  /// Coordinates of `p` relative to the center, expressed along `axes`.
  Vec3 local(const Vec3& p) const;
};

struct Projection {
  Vec2 pixel;
  double depth = 0.0;
};

inline Vec2 pixel_center(int u, int v) { return {u + 0.5, v + 0.5}; }

/// fx = fy = width / (2 tan(hfov / 2)), principal point at the image center.
CameraIntrinsics intrinsics_from_fov(int width, int height, double hfov_deg);

Vec3 unproject(const Vec2& pixel, double depth, const CameraIntrinsics& intr,
               const CameraPose& pose);

/// std::nullopt when the point is behind the camera (camera-frame z <= 0).
std::optional<Projection> project(const Vec3& world, const CameraIntrinsics& intr,
                                  const CameraPose& pose);

/// Even-odd fill of the polygons, sampled at pixel centers.
BitMask rasterize(std::span<const Polygon> polygons, int width, int height);

/// Rectilinear outline loops whose even-odd fill reproduces `mask` exactly.
/// Collinear vertices are merged.
std::vector<Polygon> polygonize(const BitMask& mask);

/// Morphological erosion with a 3x3 square element, applied `iterations`
/// times. Pixels outside the image count as unset.
BitMask erode(const BitMask& mask, int iterations);

PointCloud mask_to_cloud(const BitMask& mask, const DepthMap& depth,
                         const CameraIntrinsics& intr, const CameraPose& pose, int erosion);

/// One centroid per occupied cell of an origin-anchored grid, ordered by cell
/// key. Throws DomainError when cell <= 0.
PointCloud voxel_downsample(const PointCloud& cloud, double cell);

/// PCA-oriented bounding box. Throws DegenerateCloud for an empty cloud.
RotatedBox rotated_bbox(const PointCloud& cloud);

void write_ply(const PointCloud& cloud, const std::filesystem::path& path);

}  // namespace pipegraph
