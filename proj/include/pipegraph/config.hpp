// Copyright 2026 The pipegraph Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "pipegraph/graph.hpp"

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace pipegraph {

/// Pipeline hyperparameters. The defaults are tuned for the builtin system1
/// scene.
struct PipelineConfig {
  double np_confidence = 0.70;
  double np_iou = 0.50;
  double np_max_distance = 0.50;
  double np_min_percentage = 0.20;
  double p_overlap = 0.01;
  double p_min_confidence = 0.85;
  double p_threshold = 0.30;
  double p_w = 0.30;
  double graph_endpoints_max_distance = 0.50;
  double graph_connections_max_distance = 1.00;
  EnforcementMode enforcement_mode = EnforcementMode::FixedPoint;

  double cleanup_eps = 0.05;
  int cleanup_min_pts = 8;
  double match_eps = 0.10;
  int match_min_pts = 4;
  int sor_k = 16;
  double sor_std_ratio = 2.0;

  std::uint64_t seed = 0;

  /// Keys that were not given explicitly and kept their default.
  std::set<std::string> defaulted;

  /// All keys in file order.
  static const std::vector<std::string>& keys();

  /// Sets one key from its textual value; throws SchemaViolation naming the
  /// field on unknown keys or out-of-range values.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;

  /// Throws SchemaViolation naming the first invalid field.
  void validate() const;

  /// `key = value` lines for every key.
  std::string to_text() const;
};

/// Flat `key = value` text with `#` comments. Unspecified keys keep their
/// defaults and are listed in `defaulted`.
PipelineConfig parse_config(const std::string& text);
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace pipegraph
