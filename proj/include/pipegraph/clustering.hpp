// Copyright 2026 The pipegraph Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "pipegraph/types.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace pipegraph {

/// Static k-d tree over a borrowed point array. Query results are exact.
class KdTree {
 public:
  explicit KdTree(std::span<const Vec3> points);

  /// Indices of all points with squared distance <= radius^2, ascending.
  std::vector<std::size_t> radius_search(const Vec3& query, double radius) const;

  /// Number of points with squared distance <= radius^2.
  std::size_t radius_count(const Vec3& query, double radius) const;

  /// The `k` nearest points as (squared distance, index), closest first.
  /// Ties are broken by index.
  std::vector<std::pair<double, std::size_t>> knn(const Vec3& query, std::size_t k) const;

  /// Closest point as (squared distance, index); the tree must be non-empty.
  std::pair<double, std::size_t> nearest(const Vec3& query) const;

  std::size_t size() const { return points_.size(); }

 private:
  struct Node {
    std::size_t begin = 0;
    std::size_t end = 0;
    int axis = -1;  // -1 for leaves
    double split = 0.0;
    int left = -1;
    int right = -1;
  };

  int build(std::size_t begin, std::size_t end);

  std::span<const Vec3> points_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

struct ClusterLabels {
  static constexpr int kNoise = -1;

  std::vector<int> labels;
  int cluster_count = 0;
};

/// DBSCAN. A point is core when at least `min_pts` points (itself included)
/// lie within `eps`. Points are scanned in index order; a border point joins
/// the first cluster that reaches it. Throws DomainError on eps <= 0 or
/// min_pts < 1.
ClusterLabels dbscan(std::span<const Vec3> points, double eps, int min_pts);

/// Indices kept by statistical outlier removal: a point survives when the
/// mean distance to its k nearest neighbors is <= mu + std_ratio * sigma over
/// the cloud. Throws TooFewPoints when size <= k.
std::vector<std::size_t> statistical_outlier_indices(std::span<const Vec3> points,
                                                     std::size_t k, double std_ratio);

PointCloud statistical_outlier_removal(const PointCloud& cloud, std::size_t k,
                                       double std_ratio);

/// Indices of values whose every coordinate lies within n_std population
/// standard deviations of that coordinate's mean. A coordinate with zero
/// spread passes everything.
std::vector<std::size_t> scalar_outlier_filter(std::span<const Vec3> values, double n_std);

}  // namespace pipegraph
