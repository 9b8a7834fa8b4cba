// Copyright 2026 The pipegraph Authors
// SPDX-License-Identifier: Apache-2.0

#include "pipegraph/nonpipe.hpp"

#include "pipegraph/clustering.hpp"
#include "pipegraph/geometry.hpp"

#include "disjoint_sets.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pipegraph {
namespace {

int first_center_at_or_after(double x) { return static_cast<int>(std::ceil(x - 0.5)); }

}  // namespace

std::vector<Vec3> lift_keypoints(const Detection& det, const DepthMap& depth,
                                 const CameraIntrinsics& intr, const CameraPose& pose) {
  std::vector<Vec3> lifted;
  for (const auto& kp : det.keypoints) {
    const int cu = std::clamp(static_cast<int>(std::floor(kp.x())), 0, depth.width - 1);
    const int cv = std::clamp(static_cast<int>(std::floor(kp.y())), 0, depth.height - 1);
    std::vector<double> window;
    for (int v = cv - 1; v <= cv + 1; ++v) {
      for (int u = cu - 1; u <= cu + 1; ++u) {
        if (u < 0 || v < 0 || u >= depth.width || v >= depth.height) continue;
        if (depth.valid(u, v)) window.push_back(depth.at(u, v));
      }
    }
    if (window.empty()) continue;
    std::sort(window.begin(), window.end());
    const std::size_t n = window.size();
    const double median = n % 2 == 1 ? window[n / 2] : 0.5 * (window[n / 2 - 1] + window[n / 2]);
    lifted.push_back(unproject(kp, median, intr, pose));
  }
  return lifted;
}

PointCloud observation_cloud(const Detection& det, const DepthMap& depth,
                             const CameraIntrinsics& intr, const CameraPose& pose,
                             const ObservationParams& params) {
  const double sx = params.bbox_shrink * det.bbox.width();
  const double sy = params.bbox_shrink * det.bbox.height();
  const int u0 = std::max(0, first_center_at_or_after(det.bbox.x_min + sx));
  const int u1 = std::min(depth.width, first_center_at_or_after(det.bbox.x_max - sx));
  const int v0 = std::max(0, first_center_at_or_after(det.bbox.y_min + sy));
  const int v1 = std::min(depth.height, first_center_at_or_after(det.bbox.y_max - sy));

  PointCloud samples;
  for (int v = v0; v < v1; v += params.stride) {
    for (int u = u0; u < u1; u += params.stride) {
      if (depth.valid(u, v)) {
        samples.points.push_back(unproject(pixel_center(u, v), depth.at(u, v), intr, pose));
      }
    }
  }
  if (samples.size() <= params.sor_k) {
    throw Error(ErrorCode::EmptyObservation,
                "detection " + std::to_string(det.id) + " has " + std::to_string(samples.size()) +
                    " valid samples, outlier removal needs more than " +
                    std::to_string(params.sor_k));
  }
  return statistical_outlier_removal(samples, params.sor_k, params.sor_std_ratio);
}

PairCount match_pair_count(const PointCloud& a, const PointCloud& b, double max_distance) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::EmptyCloud, "match_fraction needs non-empty clouds");
  const double limit = max_distance * max_distance;
  PairCount count;
  count.total = static_cast<std::uint64_t>(a.size()) * b.size();
  for (const auto& p : a.points) {
    for (const auto& q : b.points) {
      if ((p - q).squaredNorm() < limit) ++count.close;
    }
  }
  return count;
}

double match_fraction(const PointCloud& a, const PointCloud& b, double max_distance) {
  return match_pair_count(a, b, max_distance).fraction();
}

std::vector<std::vector<std::size_t>> match_objects(
    std::span<const NonPipeObservation> observations, double max_distance,
    double min_percentage) {
  std::vector<PointCloud> reduced;
  reduced.reserve(observations.size());
  for (const auto& obs : observations) reduced.push_back(voxel_downsample(obs.cloud, kMatchVoxel));

  detail::DisjointSets sets(observations.size());
  for (std::size_t i = 0; i < observations.size(); ++i) {
    for (std::size_t j = i + 1; j < observations.size(); ++j) {
      if (observations[i].cls != observations[j].cls) continue;
      if (reduced[i].empty() || reduced[j].empty()) continue;
      if (match_fraction(reduced[i], reduced[j], max_distance) > min_percentage) sets.unite(i, j);
    }
  }

  return sets.groups();
}

MergeResult merge_group(std::span<const NonPipeObservation> group, double max_distance) {
  if (group.empty()) throw Error(ErrorCode::DomainError, "cannot merge an empty group");
  MergeResult result;
  WorldObject& obj = result.object;
  obj.cls = group.front().cls;

  PointCloud all;
  std::vector<Vec3> keypoints;
  for (const auto& obs : group) {
    if (obs.cls != obj.cls) throw Error(ErrorCode::DomainError, "cannot merge mixed classes");
    all.points.insert(all.points.end(), obs.cloud.points.begin(), obs.cloud.points.end());
    keypoints.insert(keypoints.end(), obs.keypoints_3d.begin(), obs.keypoints_3d.end());
    obj.sources.push_back({obs.image_id, obs.detection_id});
  }
  std::sort(obj.sources.begin(), obj.sources.end());
  obj.cloud = voxel_downsample(all, 0.01);

  if (keypoints.empty()) {
    result.warnings.push_back(std::string(to_string(ErrorCode::NoKeypoints)) + ": " +
                              std::string(to_string(obj.cls)) + " observed in " +
                              std::to_string(group.size()) + " image(s) has no lifted keypoints");
    return result;
  }

  // Slots first, then the 2-sigma filter inside each slot: filtering the
  // pooled keypoints of a two-slot object would discard the less observed
  // connection point.
  const ClusterLabels slots = dbscan(keypoints, max_distance, 1);
  std::vector<std::vector<Vec3>> members(static_cast<std::size_t>(slots.cluster_count));
  for (std::size_t i = 0; i < keypoints.size(); ++i) {
    members[static_cast<std::size_t>(slots.labels[i])].push_back(keypoints[i]);
  }
  std::stable_sort(members.begin(), members.end(),
                   [](const auto& a, const auto& b) { return a.size() > b.size(); });
  const auto limit = static_cast<std::size_t>(max_keypoints(obj.cls));
  for (std::size_t s = 0; s < members.size() && s < limit; ++s) {
    Vec3 sum = Vec3::Zero();
    const auto kept = scalar_outlier_filter(members[s], 2.0);
    if (kept.empty()) continue;
    for (std::size_t i : kept) sum += members[s][i];
    obj.endpoints.push_back(sum / static_cast<double>(kept.size()));
  }
  return result;
}

}  // namespace pipegraph
