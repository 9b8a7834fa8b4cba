// Copyright 2026 The pipegraph Authors
// SPDX-License-Identifier: Apache-2.0

// Pumps, tanks, valves and sprinklers: lifting detections to 3D, matching the
// same object across images, and fusing matched observations.

#pragma once

#include "pipegraph/ingest.hpp"
#include "pipegraph/objects.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace pipegraph {

struct NonPipeObservation {
  std::string image_id;
  int detection_id = 0;
  ObjectClass cls = ObjectClass::Pump;
  PointCloud cloud;
  std::vector<Vec3> keypoints_3d;
};

struct ObservationParams {
  double bbox_shrink = 0.2;  // fraction removed from each side
  int stride = 4;
  std::size_t sor_k = 16;
  double sor_std_ratio = 2.0;
};

/// Each keypoint is unprojected at the median valid depth of the 3x3 pixel
/// window around it; keypoints without valid depth are dropped.
std::vector<Vec3> lift_keypoints(const Detection& det, const DepthMap& depth,
                                 const CameraIntrinsics& intr, const CameraPose& pose);

/// Samples valid depth inside the shrunken bounding box on a stride grid and
/// removes statistical outliers. Throws EmptyObservation when too few samples
/// remain for the outlier filter to run.
PointCloud observation_cloud(const Detection& det, const DepthMap& depth,
                             const CameraIntrinsics& intr, const CameraPose& pose,
                             const ObservationParams& params = {});

/// Exact count behind match_fraction: pairs closer than the distance, and all
/// pairs.
struct PairCount {
  std::uint64_t close = 0;
  std::uint64_t total = 0;

  double fraction() const { return total == 0 ? 0.0 : static_cast<double>(close) / total; }
};

PairCount match_pair_count(const PointCloud& a, const PointCloud& b, double max_distance);

/// Fraction of all |a|*|b| point pairs closer than `max_distance` (strict).
/// Throws EmptyCloud when either cloud is empty.
double match_fraction(const PointCloud& a, const PointCloud& b, double max_distance);

/// Voxel size observation clouds are reduced to before matching.
inline constexpr double kMatchVoxel = 0.02;

/// Connected components of the same-class graph whose edges join pairs with
/// match_fraction > min_percentage. Each group lists observation indices
/// ascending; groups are ordered by their first index.
std::vector<std::vector<std::size_t>> match_objects(
    std::span<const NonPipeObservation> observations, double max_distance,
    double min_percentage);

struct MergeResult {
  WorldObject object;
  std::vector<std::string> warnings;
};

/// Fuses a same-class group: the cloud is the 1 cm downsampled union, and the
/// endpoints are connection-slot averages of the outlier-filtered keypoints.
/// A group without keypoints yields an object with no endpoints and a
/// NoKeypoints warning.
MergeResult merge_group(std::span<const NonPipeObservation> group, double max_distance);

}  // namespace pipegraph
