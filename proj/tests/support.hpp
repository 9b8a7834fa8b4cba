// Copyright 2026 The pipegraph Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "pipegraph/graph.hpp"
#include "pipegraph/ingest.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace testing {

namespace fs = std::filesystem;
using pipegraph::ObjectClass;
using pipegraph::Vec3;

// Removed with its contents on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = fs::temp_directory_path() /
            ("pipegraph_test_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

struct E {
  int a, b;
  double w;
};

// Nodes are numbered in list order and placed on a line.
inline pipegraph::SceneGraph make_graph(const std::vector<ObjectClass>& classes,
                                        const std::vector<E>& edges) {
  pipegraph::SceneGraph g;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    g.nodes.push_back({static_cast<int>(i), classes[i], Vec3(static_cast<double>(i), 0, 0), {}});
  }
  for (const auto& e : edges) g.edges.push_back({std::min(e.a, e.b), std::max(e.a, e.b), e.w});
  return g;
}

inline pipegraph::PointCloud segment_cloud(const Vec3& a, const Vec3& b, double radius,
                                           std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Vec3 axis = (b - a).normalized();
  const Vec3 p = axis.unitOrthogonal();
  const Vec3 q = axis.cross(p);
  pipegraph::PointCloud cloud;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = u(rng);
    const double phi = 2.0 * M_PI * u(rng);
    cloud.points.push_back(a + t * (b - a) + radius * (std::cos(phi) * p + std::sin(phi) * q));
  }
  return cloud;
}

inline pipegraph::Detection box_detection(int id, ObjectClass cls, double conf, double x0,
                                          double y0, double x1, double y1) {
  pipegraph::Detection d;
  d.id = id;
  d.cls = cls;
  d.confidence = conf;
  d.bbox = {x0, y0, x1, y1};
  return d;
}

}  // namespace testing
