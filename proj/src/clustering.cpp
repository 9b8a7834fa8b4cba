// Copyright 2026 The pipegraph Authors
// SPDX-License-Identifier: Apache-2.0

#include "pipegraph/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <queue>

namespace pipegraph {
namespace {

constexpr std::size_t kLeafSize = 12;

}  // namespace

KdTree::KdTree(std::span<const Vec3> points) : points_(points), order_(points.size()) {
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / kLeafSize + 2);
    build(0, points_.size());
  }
}

int KdTree::build(std::size_t begin, std::size_t end) {
  const int index = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{begin, end});
  if (end - begin <= kLeafSize) return index;

  Vec3 lo = points_[order_[begin]];
  Vec3 hi = lo;
  for (std::size_t i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  Eigen::Index axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi[axis] - lo[axis] <= 0.0) return index;  // all points coincide

  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                   order_.begin() + static_cast<std::ptrdiff_t>(mid),
                   order_.begin() + static_cast<std::ptrdiff_t>(end),
                   [&](std::size_t a, std::size_t b) { return points_[a][axis] < points_[b][axis]; });
  const double split = points_[order_[mid]][axis];
  const int left = build(begin, mid);
  const int right = build(mid, end);
  auto& node = nodes_[static_cast<std::size_t>(index)];
  node.axis = static_cast<int>(axis);
  node.split = split;
  node.left = left;
  node.right = right;
  return index;
}

std::vector<std::size_t> KdTree::radius_search(const Vec3& query, double radius) const {
  std::vector<std::size_t> out;
  if (nodes_.empty()) return out;
  const double r2 = radius * radius;
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const Node& node = nodes_[static_cast<std::size_t>(stack.back())];
    stack.pop_back();
    if (node.axis < 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) {
        if ((points_[order_[i]] - query).squaredNorm() <= r2) out.push_back(order_[i]);
      }
      continue;
    }
    // Left holds coordinates <= split, right holds >= split.
    const double diff = query[node.axis] - node.split;
    if (diff <= radius) stack.push_back(node.left);
    if (diff >= -radius) stack.push_back(node.right);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t KdTree::radius_count(const Vec3& query, double radius) const {
  std::size_t count = 0;
  if (nodes_.empty()) return count;
  const double r2 = radius * radius;
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const Node& node = nodes_[static_cast<std::size_t>(stack.back())];
    stack.pop_back();
    if (node.axis < 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) {
        if ((points_[order_[i]] - query).squaredNorm() <= r2) ++count;
      }
      continue;
    }
    const double diff = query[node.axis] - node.split;
    if (diff <= radius) stack.push_back(node.left);
    if (diff >= -radius) stack.push_back(node.right);
  }
  return count;
}

std::vector<std::pair<double, std::size_t>> KdTree::knn(const Vec3& query, std::size_t k) const {
  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry> best;  // max-heap on (distance, index)
  if (nodes_.empty() || k == 0) return {};

  auto visit = [&](auto&& self, int index) -> void {
    const Node& node = nodes_[static_cast<std::size_t>(index)];
    if (node.axis < 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) {
        const Entry e{(points_[order_[i]] - query).squaredNorm(), order_[i]};
        if (best.size() < k) {
          best.push(e);
        } else if (e < best.top()) {
          best.pop();
          best.push(e);
        }
      }
      return;
    }
    const double diff = query[node.axis] - node.split;
    const int near = diff <= 0.0 ? node.left : node.right;
    const int far = diff <= 0.0 ? node.right : node.left;
    self(self, near);
    if (best.size() < k || diff * diff <= best.top().first) self(self, far);
  };
  visit(visit, 0);

  std::vector<Entry> out(best.size());
  for (std::size_t i = out.size(); i-- > 0;) {
    out[i] = best.top();
    best.pop();
  }
  return out;
}

std::pair<double, std::size_t> KdTree::nearest(const Vec3& query) const {
  return knn(query, 1).front();
}

ClusterLabels dbscan(std::span<const Vec3> points, double eps, int min_pts) {
  if (!(eps > 0.0)) throw Error(ErrorCode::DomainError, "dbscan eps must be positive");
  if (min_pts < 1) throw Error(ErrorCode::DomainError, "dbscan min_pts must be >= 1");

  constexpr int kUnvisited = -2;
  ClusterLabels result;
  result.labels.assign(points.size(), kUnvisited);
  const KdTree tree(points);
  const auto min_count = static_cast<std::size_t>(min_pts);

  for (std::size_t seed = 0; seed < points.size(); ++seed) {
    if (result.labels[seed] != kUnvisited) continue;
    auto neighbors = tree.radius_search(points[seed], eps);
    if (neighbors.size() < min_count) {
      result.labels[seed] = ClusterLabels::kNoise;
      continue;
    }
    const int cluster = result.cluster_count++;
    result.labels[seed] = cluster;
    std::deque<std::size_t> frontier(neighbors.begin(), neighbors.end());
    while (!frontier.empty()) {
      const std::size_t p = frontier.front();
      frontier.pop_front();
      if (result.labels[p] == ClusterLabels::kNoise) {
        result.labels[p] = cluster;  // border point
        continue;
      }
      if (result.labels[p] != kUnvisited) continue;
      result.labels[p] = cluster;
      auto reach = tree.radius_search(points[p], eps);
      if (reach.size() >= min_count) {
        frontier.insert(frontier.end(), reach.begin(), reach.end());
      }
    }
  }
  return result;
}

std::vector<std::size_t> statistical_outlier_indices(std::span<const Vec3> points, std::size_t k,
                                                     double std_ratio) {
  if (k < 1) throw Error(ErrorCode::DomainError, "outlier removal needs k >= 1");
  if (points.size() <= k) {
    throw Error(ErrorCode::TooFewPoints, "outlier removal needs more than k = " +
                                             std::to_string(k) + " points, got " +
                                             std::to_string(points.size()));
  }
  const KdTree tree(points);
  std::vector<double> mean_dist(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    // k + 1 because the query point finds itself first.
    const auto nn = tree.knn(points[i], k + 1);
    double sum = 0.0;
    bool skipped_self = false;
    std::size_t used = 0;
    for (const auto& [d2, j] : nn) {
      if (!skipped_self && j == i) {
        skipped_self = true;
        continue;
      }
      if (used == k) break;
      sum += std::sqrt(d2);
      ++used;
    }
    mean_dist[i] = sum / static_cast<double>(k);
  }
  const double n = static_cast<double>(points.size());
  const double mu = std::accumulate(mean_dist.begin(), mean_dist.end(), 0.0) / n;
  double var = 0.0;
  for (double d : mean_dist) var += (d - mu) * (d - mu);
  const double sigma = std::sqrt(var / n);
  const double limit = mu + std_ratio * sigma;

  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (mean_dist[i] <= limit) kept.push_back(i);
  }
  return kept;
}

PointCloud statistical_outlier_removal(const PointCloud& cloud, std::size_t k, double std_ratio) {
  if (!(std_ratio > 0.0)) throw Error(ErrorCode::DomainError, "std_ratio must be positive");
  PointCloud out;
  for (std::size_t i : statistical_outlier_indices(cloud.points, k, std_ratio)) {
    out.points.push_back(cloud.points[i]);
  }
  return out;
}

std::vector<std::size_t> scalar_outlier_filter(std::span<const Vec3> values, double n_std) {
  std::vector<std::size_t> kept;
  if (values.empty()) return kept;
  const double n = static_cast<double>(values.size());
  Vec3 mean = Vec3::Zero();
  for (const auto& v : values) mean += v;
  mean /= n;
  Vec3 var = Vec3::Zero();
  for (const auto& v : values) var += (v - mean).cwiseAbs2();
  const Vec3 sigma = (var / n).cwiseSqrt();

  for (std::size_t i = 0; i < values.size(); ++i) {
    bool ok = true;
    for (int c = 0; c < 3 && ok; ++c) {
      if (sigma[c] == 0.0) continue;
      ok = std::abs(values[i][c] - mean[c]) <= n_std * sigma[c];
    }
    if (ok) kept.push_back(i);
  }
  return kept;
}

}  // namespace pipegraph
