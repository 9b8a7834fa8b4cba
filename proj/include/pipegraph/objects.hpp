// Copyright 2026 The pipegraph Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "pipegraph/types.hpp"

#include <string>
#include <tuple>
#include <vector>

namespace pipegraph {

/// Image and detection a fused object was observed in.
struct SourceRef {
  std::string image_id;
  int detection_id = 0;

  friend bool operator==(const SourceRef&, const SourceRef&) = default;
  friend auto operator<=>(const SourceRef& a, const SourceRef& b) {
    return std::tie(a.image_id, a.detection_id) <=> std::tie(b.image_id, b.detection_id);
  }
};

/// A fused 3D object with up to three connection endpoints.
struct WorldObject {
  int id = 0;
  ObjectClass cls = ObjectClass::Pipe;
  PointCloud cloud;
  std::vector<Vec3> endpoints;
  std::vector<SourceRef> sources;
};

}  // namespace pipegraph
