// Copyright 2026 The pipegraph Authors
// SPDX-License-Identifier: Apache-2.0

// Pipe instances: mask cleanup, filtering against non-pipe objects,
// cross-image matching and endpoint estimation.

#pragma once

#include "pipegraph/geometry.hpp"
#include "pipegraph/ingest.hpp"
#include "pipegraph/objects.hpp"

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pipegraph {

struct PipeObservation {
  std::string image_id;
  int detection_id = 0;
  double confidence = 0.0;
  BitMask mask;
  PointCloud cloud;
};

enum class PipeShapeClass { Straight, NonStraight };

struct PipeParams {
  int erosion = 2;
  double cleanup_eps = 0.05;
  int cleanup_min_pts = 8;
  std::size_t sor_k = 16;
  double sor_std_ratio = 2.0;
  double overlap_distance = 0.03;
  double occlusion_tolerance = 0.05;
  double match_voxel = 0.01;
  double match_eps = 0.10;
  int match_min_pts = 4;
};

/// Erode, back-project, keep the largest DBSCAN cluster, remove statistical
/// outliers. std::nullopt when nothing survives.
std::optional<PipeObservation> cleanup_observation(const Detection& det, const DepthMap& depth,
                                                   const CameraIntrinsics& intr,
                                                   const CameraPose& pose,
                                                   const PipeParams& params = {});

/// Largest fraction of the observation's points lying within
/// params.overlap_distance of any single object's cloud (1 cm grids).
double max_overlap_fraction(const PipeObservation& obs, std::span<const WorldObject> objects,
                            const PipeParams& params = {});

/// True when the observation survives: no single object overlaps more than
/// `p_overlap` of it.
bool overlap_filter(const PipeObservation& obs, std::span<const WorldObject> objects,
                    double p_overlap, const PipeParams& params = {});

struct ReprojectionHit {
  int detection_id = 0;
  std::size_t pixels = 0;
};

/// Rasterized pipe masks of one image, reused across many projections.
struct ImageMasks {
  const ImageRecord* image = nullptr;
  std::vector<int> detection_ids;
  std::vector<BitMask> masks;

  static ImageMasks build(const ImageRecord& image);
};

/// Projects the observation's cloud into another image and intersects the
/// depth-consistent hit pixels with each pipe mask there. Only strictly
/// positive intersections are reported, by detection id ascending.
std::vector<ReprojectionHit> reprojection_candidates(const PipeObservation& obs,
                                                     const ImageMasks& target,
                                                     const PipeParams& params = {});

std::vector<ReprojectionHit> reprojection_candidates(const PipeObservation& obs,
                                                     const ImageRecord& target,
                                                     const PipeParams& params = {});

/// Candidate graph from reprojection overlaps, then per component a 1 cm
/// downsample and DBSCAN; every cluster becomes one Pipe object. Objects are
/// ordered by their sorted provenance and numbered from 0.
std::vector<WorldObject> match_pipes(std::span<const PipeObservation> observations,
                                     const SceneBundle& bundle, const PipeParams& params = {});

PipeShapeClass classify_shape(const WorldObject& obj, double p_threshold);

/// Means of the first and last of 20 equal bins along the box's long axis.
std::array<Vec3, 2> endpoints_straight(const WorldObject& obj);

/// Centroid pulled by `p_w` toward the nearest point of the two neighbors with
/// the most points within `max_dist`; the centroid itself when a neighbor is
/// missing.
std::array<Vec3, 2> endpoints_nonstraight(const WorldObject& obj,
                                          std::span<const WorldObject> others, double max_dist,
                                          double p_w);

}  // namespace pipegraph
