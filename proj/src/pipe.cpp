// Copyright 2026 The pipegraph Authors
// SPDX-License-Identifier: Apache-2.0

#include "pipegraph/pipe.hpp"

#include "pipegraph/clustering.hpp"

#include "disjoint_sets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace pipegraph {
namespace {

using VoxelKey = std::array<long long, 3>;

VoxelKey voxel_key(const Vec3& p, double cell) {
  return {static_cast<long long>(std::floor(p.x() / cell)),
          static_cast<long long>(std::floor(p.y() / cell)),
          static_cast<long long>(std::floor(p.z() / cell))};
}

double extent_ratio(double longest, double other) {
  if (other <= 0.0) return std::numeric_limits<double>::infinity();
  return longest / other;
}

}  // namespace

std::optional<PipeObservation> cleanup_observation(const Detection& det, const DepthMap& depth,
                                                   const CameraIntrinsics& intr,
                                                   const CameraPose& pose,
                                                   const PipeParams& params) {
  PipeObservation obs;
  obs.detection_id = det.id;
  obs.confidence = det.confidence;
  obs.mask = rasterize(det.mask, depth.width, depth.height);

  const PointCloud raw = mask_to_cloud(obs.mask, depth, intr, pose, params.erosion);
  if (raw.empty()) return std::nullopt;

  const ClusterLabels labels = dbscan(raw.points, params.cleanup_eps, params.cleanup_min_pts);
  if (labels.cluster_count == 0) return std::nullopt;
  std::vector<std::size_t> sizes(static_cast<std::size_t>(labels.cluster_count), 0);
  for (int l : labels.labels) {
    if (l >= 0) ++sizes[static_cast<std::size_t>(l)];
  }
  const int largest = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
  PointCloud cluster;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (labels.labels[i] == largest) cluster.points.push_back(raw.points[i]);
  }
  if (cluster.size() <= params.sor_k) return std::nullopt;

  obs.cloud = statistical_outlier_removal(cluster, params.sor_k, params.sor_std_ratio);
  if (obs.cloud.empty()) return std::nullopt;
  return obs;
}

double max_overlap_fraction(const PipeObservation& obs, std::span<const WorldObject> objects,
                            const PipeParams& params) {
  const PointCloud mine = voxel_downsample(obs.cloud, 0.01);
  if (mine.empty()) return 0.0;
  double worst = 0.0;
  for (const auto& obj : objects) {
    const PointCloud theirs = voxel_downsample(obj.cloud, 0.01);
    if (theirs.empty()) continue;
    const KdTree tree(theirs.points);
    std::size_t close = 0;
    for (const auto& p : mine.points) {
      if (tree.radius_count(p, params.overlap_distance) > 0) ++close;
    }
    worst = std::max(worst, static_cast<double>(close) / static_cast<double>(mine.size()));
  }
  return worst;
}

bool overlap_filter(const PipeObservation& obs, std::span<const WorldObject> objects,
                    double p_overlap, const PipeParams& params) {
  return !(max_overlap_fraction(obs, objects, params) > p_overlap);
}

ImageMasks ImageMasks::build(const ImageRecord& image) {
  ImageMasks out;
  out.image = &image;
  for (const auto& det : image.detections) {
    if (det.cls != ObjectClass::Pipe) continue;
    out.detection_ids.push_back(det.id);
    out.masks.push_back(rasterize(det.mask, image.intrinsics.width, image.intrinsics.height));
  }
  return out;
}

std::vector<ReprojectionHit> reprojection_candidates(const PipeObservation& obs,
                                                     const ImageMasks& target,
                                                     const PipeParams& params) {
  const ImageRecord& image = *target.image;
  const int w = image.intrinsics.width;
  const int h = image.intrinsics.height;
  BitMask hit(w, h);
  std::vector<std::size_t> hit_pixels;
  for (const auto& p : obs.cloud.points) {
    const auto proj = project(p, image.intrinsics, image.pose);
    if (!proj) continue;
    const double fu = std::floor(proj->pixel.x());
    const double fv = std::floor(proj->pixel.y());
    if (fu < 0.0 || fv < 0.0 || fu >= w || fv >= h) continue;
    const int u = static_cast<int>(fu);
    const int v = static_cast<int>(fv);
    if (hit.get(u, v) || !image.depth.valid(u, v)) continue;
    if (std::abs(proj->depth - image.depth.at(u, v)) > params.occlusion_tolerance) continue;
    hit.set(u, v);
    hit_pixels.push_back(static_cast<std::size_t>(v) * w + u);
  }

  std::vector<ReprojectionHit> out;
  for (std::size_t m = 0; m < target.masks.size(); ++m) {
    std::size_t count = 0;
    for (std::size_t idx : hit_pixels) count += target.masks[m].bits[idx];
    if (count > 0) out.push_back({target.detection_ids[m], count});
  }
  std::sort(out.begin(), out.end(), [](const ReprojectionHit& a, const ReprojectionHit& b) {
    return a.detection_id < b.detection_id;
  });
  return out;
}

std::vector<ReprojectionHit> reprojection_candidates(const PipeObservation& obs,
                                                     const ImageRecord& target,
                                                     const PipeParams& params) {
  return reprojection_candidates(obs, ImageMasks::build(target), params);
}

std::vector<WorldObject> match_pipes(std::span<const PipeObservation> observations,
                                     const SceneBundle& bundle, const PipeParams& params) {
  std::map<std::pair<std::string, int>, std::size_t> by_source;
  for (std::size_t i = 0; i < observations.size(); ++i) {
    by_source[{observations[i].image_id, observations[i].detection_id}] = i;
  }

  std::vector<ImageMasks> masks;
  masks.reserve(bundle.images.size());
  for (const auto& image : bundle.images) masks.push_back(ImageMasks::build(image));

  detail::DisjointSets sets(observations.size());
  for (std::size_t i = 0; i < observations.size(); ++i) {
    for (const auto& target : masks) {
      if (target.image->image_id == observations[i].image_id) continue;
      for (const auto& hit : reprojection_candidates(observations[i], target, params)) {
        auto it = by_source.find({target.image->image_id, hit.detection_id});
        if (it != by_source.end()) sets.unite(i, it->second);
      }
    }
  }

  std::vector<WorldObject> objects;
  for (const auto& component : sets.groups()) {
    PointCloud merged;
    for (std::size_t i : component) {
      const auto& pts = observations[i].cloud.points;
      merged.points.insert(merged.points.end(), pts.begin(), pts.end());
    }
    const PointCloud reduced = voxel_downsample(merged, params.match_voxel);
    std::vector<VoxelKey> keys;
    keys.reserve(merged.size());
    for (const auto& p : merged.points) keys.push_back(voxel_key(p, params.match_voxel));
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());

    const ClusterLabels labels = dbscan(reduced.points, params.match_eps, params.match_min_pts);
    std::vector<WorldObject> found(static_cast<std::size_t>(labels.cluster_count));
    for (std::size_t k = 0; k < reduced.size(); ++k) {
      if (labels.labels[k] >= 0) {
        found[static_cast<std::size_t>(labels.labels[k])].cloud.points.push_back(reduced.points[k]);
      }
    }
    for (std::size_t i : component) {
      std::vector<bool> touched(found.size(), false);
      for (const auto& p : observations[i].cloud.points) {
        const auto key = voxel_key(p, params.match_voxel);
        const auto idx = static_cast<std::size_t>(
            std::lower_bound(keys.begin(), keys.end(), key) - keys.begin());
        const int label = labels.labels[idx];
        if (label >= 0) touched[static_cast<std::size_t>(label)] = true;
      }
      for (std::size_t c = 0; c < found.size(); ++c) {
        if (touched[c]) found[c].sources.push_back({observations[i].image_id, observations[i].detection_id});
      }
    }
    for (auto& obj : found) {
      obj.cls = ObjectClass::Pipe;
      std::sort(obj.sources.begin(), obj.sources.end());
      objects.push_back(std::move(obj));
    }
  }

  std::stable_sort(objects.begin(), objects.end(), [](const WorldObject& a, const WorldObject& b) {
    if (a.sources != b.sources) return a.sources < b.sources;
    return a.cloud.points.front().x() < b.cloud.points.front().x();
  });
  for (std::size_t i = 0; i < objects.size(); ++i) objects[i].id = static_cast<int>(i);
  return objects;
}

PipeShapeClass classify_shape(const WorldObject& obj, double p_threshold) {
  const RotatedBox box = rotated_bbox(obj.cloud);
  const double e0 = box.half_extents[0];
  const bool straight = extent_ratio(e0, box.half_extents[1]) > p_threshold &&
                        extent_ratio(e0, box.half_extents[2]) > p_threshold;
  return straight ? PipeShapeClass::Straight : PipeShapeClass::NonStraight;
}

std::array<Vec3, 2> endpoints_straight(const WorldObject& obj) {
  constexpr int kBins = 20;
  const RotatedBox box = rotated_bbox(obj.cloud);
  const Vec3& axis = box.axes[0];

  std::vector<double> s(obj.cloud.size());
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < obj.cloud.size(); ++i) {
    s[i] = obj.cloud.points[i].dot(axis);
    lo = std::min(lo, s[i]);
    hi = std::max(hi, s[i]);
  }
  const double span = hi - lo;
  if (span <= 0.0) {
    const Vec3 c = centroid(obj.cloud);
    return {c, c};
  }
  const double width = span / kBins;
  Vec3 first = Vec3::Zero();
  Vec3 last = Vec3::Zero();
  std::size_t n_first = 0;
  std::size_t n_last = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const int bin = std::min(kBins - 1, static_cast<int>((s[i] - lo) / width));
    if (bin == 0) {
      first += obj.cloud.points[i];
      ++n_first;
    }
    if (bin == kBins - 1) {
      last += obj.cloud.points[i];
      ++n_last;
    }
  }
  return {first / static_cast<double>(n_first), last / static_cast<double>(n_last)};
}

std::array<Vec3, 2> endpoints_nonstraight(const WorldObject& obj,
                                          std::span<const WorldObject> others, double max_dist,
                                          double p_w) {
  const Vec3 c = centroid(obj.cloud);
  const PointCloud mine = voxel_downsample(obj.cloud, 0.01);
  if (mine.empty()) return {c, c};
  const KdTree tree(mine.points);

  struct Candidate {
    std::size_t count = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    Vec3 nearest = Vec3::Zero();
  };
  std::vector<Candidate> candidates(others.size());
  const double limit = max_dist * max_dist;
  for (std::size_t k = 0; k < others.size(); ++k) {
    const PointCloud theirs = voxel_downsample(others[k].cloud, 0.01);
    for (const auto& p : theirs.points) {
      const double d2 = tree.nearest(p).first;
      if (d2 <= limit) ++candidates[k].count;
      if (d2 < candidates[k].best_d2) {
        candidates[k].best_d2 = d2;
        candidates[k].nearest = p;
      }
    }
  }

  std::array<Vec3, 2> endpoints{c, c};
  std::vector<bool> used(others.size(), false);
  for (auto& endpoint : endpoints) {
    std::size_t pick = others.size();
    for (std::size_t k = 0; k < others.size(); ++k) {
      if (used[k] || candidates[k].count == 0) continue;
      if (pick == others.size() || candidates[k].count > candidates[pick].count) pick = k;
    }
    if (pick == others.size()) break;
    used[pick] = true;
    endpoint = (1.0 - p_w) * c + p_w * candidates[pick].nearest;
  }
  return endpoints;
}

}  // namespace pipegraph
