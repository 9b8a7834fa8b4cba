// Copyright 2026 The pipegraph Authors
// SPDX-License-Identifier: Apache-2.0

#include "pipegraph/geometry.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

namespace pipegraph {

std::size_t BitMask::count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

Vec3 RotatedBox::local(const Vec3& p) const {
  const Vec3 d = p - center;
  return {d.dot(axes[0]), d.dot(axes[1]), d.dot(axes[2])};
}

CameraIntrinsics intrinsics_from_fov(int width, int height, double hfov_deg) {
  if (!(hfov_deg > 0.0 && hfov_deg < 180.0)) {
    throw Error(ErrorCode::DomainError, "horizontal field of view must lie in (0, 180) degrees");
  }
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::DomainError, "image dimensions must be positive");
  }
  const double half = hfov_deg * M_PI / 360.0;
  CameraIntrinsics intr;
  intr.width = width;
  intr.height = height;
  intr.fx = intr.fy = width / (2.0 * std::tan(half));
  intr.cx = width / 2.0;
  intr.cy = height / 2.0;
  return intr;
}

Vec3 unproject(const Vec2& pixel, double depth, const CameraIntrinsics& intr,
               const CameraPose& pose) {
  if (!DepthMap::is_valid_depth(depth)) {
    throw Error(ErrorCode::InvalidDepth, "depth must be finite and positive");
  }
  const Vec3 cam((pixel.x() - intr.cx) * depth / intr.fx, (pixel.y() - intr.cy) * depth / intr.fy,
                 depth);
  return pose.orientation * cam + pose.position;
}

std::optional<Projection> project(const Vec3& world, const CameraIntrinsics& intr,
                                  const CameraPose& pose) {
  const Vec3 cam = pose.orientation.conjugate() * (world - pose.position);
  if (!(cam.z() > 0.0)) return std::nullopt;
  Projection out;
  out.pixel = {intr.fx * cam.x() / cam.z() + intr.cx, intr.fy * cam.y() / cam.z() + intr.cy};
  out.depth = cam.z();
  return out;
}

BitMask rasterize(std::span<const Polygon> polygons, int width, int height) {
  BitMask mask(width, height);
  std::vector<double> xs;
  for (int v = 0; v < height; ++v) {
    const double y = v + 0.5;
    xs.clear();
    for (const auto& poly : polygons) {
      const std::size_t n = poly.size();
      for (std::size_t k = 0; k < n; ++k) {
        const Vec2& p = poly[k];
        const Vec2& q = poly[(k + 1) % n];
        const bool crosses = (p.y() <= y && y < q.y()) || (q.y() <= y && y < p.y());
        if (!crosses) continue;
        xs.push_back(p.x() + (y - p.y()) * (q.x() - p.x()) / (q.y() - p.y()));
      }
    }
    std::sort(xs.begin(), xs.end());
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      // Pixel centers u + 0.5 in [xs[k], xs[k+1]).
      const int first = std::max(0, static_cast<int>(std::ceil(xs[k] - 0.5)));
      const int last = std::min(width - 1, static_cast<int>(std::ceil(xs[k + 1] - 0.5)) - 1);
      for (int u = first; u <= last; ++u) mask.set(u, v);
    }
  }
  return mask;
}

std::vector<Polygon> polygonize(const BitMask& mask) {
  using Corner = std::pair<int, int>;
  auto inside = [&](int u, int v) {
    return u >= 0 && v >= 0 && u < mask.width && v < mask.height && mask.get(u, v);
  };

  // Directed boundary edges, one per exposed pixel side, all with the same
  // rotational sense so every corner has equal in- and out-degree.
  std::map<Corner, std::vector<Corner>> outgoing;
  for (int v = 0; v < mask.height; ++v) {
    for (int u = 0; u < mask.width; ++u) {
      if (!mask.get(u, v)) continue;
      if (!inside(u, v - 1)) outgoing[{u + 1, v}].push_back({u, v});
      if (!inside(u - 1, v)) outgoing[{u, v}].push_back({u, v + 1});
      if (!inside(u, v + 1)) outgoing[{u, v + 1}].push_back({u + 1, v + 1});
      if (!inside(u + 1, v)) outgoing[{u + 1, v + 1}].push_back({u + 1, v});
    }
  }

  std::vector<Polygon> loops;
  for (auto& [start, targets] : outgoing) {
    while (!targets.empty()) {
      std::vector<Corner> loop{start};
      Corner at = start;
      do {
        auto& next = outgoing[at];
        const Corner to = next.back();
        next.pop_back();
        at = to;
        loop.push_back(at);
      } while (at != start);
      loop.pop_back();

      // Drop vertices that sit in the middle of a straight run.
      Polygon poly;
      const std::size_t n = loop.size();
      for (std::size_t k = 0; k < n; ++k) {
        const Corner& prev = loop[(k + n - 1) % n];
        const Corner& cur = loop[k];
        const Corner& nxt = loop[(k + 1) % n];
        const bool straight = (prev.first == cur.first && cur.first == nxt.first) ||
                              (prev.second == cur.second && cur.second == nxt.second);
        if (!straight) poly.emplace_back(cur.first, cur.second);
      }
      loops.push_back(std::move(poly));
    }
  }
  return loops;
}

BitMask erode(const BitMask& mask, int iterations) {
  BitMask current = mask;
  for (int it = 0; it < iterations; ++it) {
    BitMask next(current.width, current.height);
    for (int v = 0; v < current.height; ++v) {
      for (int u = 0; u < current.width; ++u) {
        if (!current.get(u, v)) continue;
        bool keep = true;
        for (int dv = -1; dv <= 1 && keep; ++dv) {
          for (int du = -1; du <= 1 && keep; ++du) {
            const int x = u + du;
            const int y = v + dv;
            keep = x >= 0 && y >= 0 && x < current.width && y < current.height && current.get(x, y);
          }
        }
        if (keep) next.set(u, v);
      }
    }
    current = std::move(next);
  }
  return current;
}

PointCloud mask_to_cloud(const BitMask& mask, const DepthMap& depth,
                         const CameraIntrinsics& intr, const CameraPose& pose, int erosion) {
  const BitMask eroded = erode(mask, erosion);
  PointCloud cloud;
  for (int v = 0; v < eroded.height; ++v) {
    for (int u = 0; u < eroded.width; ++u) {
      if (!eroded.get(u, v) || !depth.valid(u, v)) continue;
      cloud.points.push_back(unproject(pixel_center(u, v), depth.at(u, v), intr, pose));
    }
  }
  return cloud;
}

PointCloud voxel_downsample(const PointCloud& cloud, double cell) {
  if (!(cell > 0.0)) throw Error(ErrorCode::DomainError, "voxel size must be positive");
  using Key = std::array<long long, 3>;
  std::vector<std::pair<Key, std::size_t>> keyed;
  keyed.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    keyed.push_back({Key{static_cast<long long>(std::floor(p.x() / cell)),
                         static_cast<long long>(std::floor(p.y() / cell)),
                         static_cast<long long>(std::floor(p.z() / cell))},
                     i});
  }
  std::sort(keyed.begin(), keyed.end());
  PointCloud out;
  for (std::size_t i = 0; i < keyed.size();) {
    std::size_t j = i;
    Vec3 sum = Vec3::Zero();
    while (j < keyed.size() && keyed[j].first == keyed[i].first) {
      sum += cloud.points[keyed[j].second];
      ++j;
    }
    out.points.push_back(sum / static_cast<double>(j - i));
    i = j;
  }
  return out;
}

RotatedBox rotated_bbox(const PointCloud& cloud) {
  if (cloud.empty()) throw Error(ErrorCode::DegenerateCloud, "cannot box an empty cloud");
  const Vec3 mean = centroid(cloud);
  Mat3 cov = Mat3::Zero();
  for (const auto& p : cloud.points) {
    const Vec3 d = p - mean;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(cloud.size());

  Eigen::SelfAdjointEigenSolver<Mat3> solver(cov);
  std::array<Vec3, 3> axes;
  for (int k = 0; k < 3; ++k) {
    Vec3 axis = solver.eigenvectors().col(2 - k).normalized();
    Eigen::Index largest = 0;
    axis.cwiseAbs().maxCoeff(&largest);
    if (axis[largest] < 0.0) axis = -axis;
    axes[k] = axis;
  }

  std::array<double, 3> lo{};
  std::array<double, 3> hi{};
  for (int k = 0; k < 3; ++k) {
    lo[k] = hi[k] = (cloud.points[0] - mean).dot(axes[k]);
  }
  for (const auto& p : cloud.points) {
    const Vec3 d = p - mean;
    for (int k = 0; k < 3; ++k) {
      const double s = d.dot(axes[k]);
      lo[k] = std::min(lo[k], s);
      hi[k] = std::max(hi[k], s);
    }
  }

  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return hi[a] - lo[a] > hi[b] - lo[b]; });
  RotatedBox box;
  box.center = mean;
  for (int k = 0; k < 3; ++k) {
    box.center += axes[k] * (0.5 * (lo[k] + hi[k]));
  }
  for (int k = 0; k < 3; ++k) {
    box.axes[k] = axes[order[k]];
    box.half_extents[k] = 0.5 * (hi[order[k]] - lo[order[k]]);
  }
  return box;
}

void write_ply(const PointCloud& cloud, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << "ply\nformat ascii 1.0\nelement vertex " << cloud.size()
      << "\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
  for (const auto& p : cloud.points) out << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
}

}  // namespace pipegraph
