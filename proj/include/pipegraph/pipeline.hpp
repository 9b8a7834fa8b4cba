// Copyright 2026 The pipegraph Authors
// SPDX-License-Identifier: Apache-2.0

// End-to-end orchestration: ingest filtering, the non-pipe and pipe branches,
// endpoint estimation and graph generation.

#pragma once

#include "pipegraph/config.hpp"
#include "pipegraph/graph.hpp"
#include "pipegraph/ingest.hpp"
#include "pipegraph/nonpipe.hpp"
#include "pipegraph/pipe.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace pipegraph {

inline constexpr const char* kVersion = "0.1.0";

/// Fixed IoU for the pipe instance-segmentation NMS.
inline constexpr double kPipeNmsIou = 0.7;

enum class LogLevel { Info, Warning };

using LogSink = std::function<void(LogLevel, const std::string&)>;

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct RunResult {
  std::vector<WorldObject> objects;  // ids match the initial graph's node ids
  SceneGraph initial;
  SceneGraph graph;
  std::vector<StageTiming> timings;
  std::vector<std::string> warnings;
};

struct RunOptions {
  std::optional<std::filesystem::path> dump_ply_dir;
  LogSink log;
};

/// Confidence filtering and NMS for both detection families of one image.
std::vector<Detection> prefilter_detections(std::span<const Detection> detections,
                                            const PipelineConfig& config);

/// Throws Error(EmptyObservation) when no objects are recovered.
RunResult run_pipeline(const SceneBundle& bundle, const PipelineConfig& config,
                       const RunOptions& options = {});

/// Graph JSON with the effective configuration and version under "metadata".
std::string result_json(const SceneGraph& graph, const PipelineConfig& config);

/// Runs `fn(i)` for i in [0, n) on a bounded worker pool capped by
/// PIPEGRAPH_THREADS (default: hardware concurrency).
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

std::size_t worker_count();

}  // namespace pipegraph
