// Copyright 2026 The pipegraph Authors
// SPDX-License-Identifier: Apache-2.0

#include "pipegraph/pipeline.hpp"

#include "pipegraph/geometry.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

namespace pipegraph {
namespace {

using Clock = std::chrono::steady_clock;

class StageClock {
 public:
  StageClock(RunResult& result, const RunOptions& options) : result_(result), options_(options) {}

  void finish(const std::string& stage) {
    const auto now = Clock::now();
    const double seconds = std::chrono::duration<double>(now - start_).count();
    result_.timings.push_back({stage, seconds});
    if (options_.log) {
      options_.log(LogLevel::Info, "stage " + stage + ": " + std::to_string(seconds) + " s");
    }
    start_ = now;
  }

 private:
  RunResult& result_;
  const RunOptions& options_;
  Clock::time_point start_ = Clock::now();
};

void warn(RunResult& result, const RunOptions& options, const std::string& message) {
  result.warnings.push_back(message);
  if (options.log) options.log(LogLevel::Warning, message);
}

std::string source_tag(const std::string& image_id, int detection_id) {
  return image_id + "_det" + std::to_string(detection_id);
}

}  // namespace

std::size_t worker_count() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("PIPEGRAPH_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && cap > 0) n = std::min(n, static_cast<std::size_t>(cap));
  }
  return n;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min(worker_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::size_t error_index = n;
  std::exception_ptr error;
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        // Report the failure with the lowest index so errors are reproducible.
        std::lock_guard lock(error_mutex);
        if (i < error_index) {
          error_index = i;
          error = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t t = 0; t < workers; ++t) threads.emplace_back(work);
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

std::vector<Detection> prefilter_detections(std::span<const Detection> detections,
                                            const PipelineConfig& config) {
  std::vector<Detection> pipes;
  std::vector<Detection> others;
  for (const auto& d : detections) (d.cls == ObjectClass::Pipe ? pipes : others).push_back(d);

  std::vector<Detection> out = nms(filter_by_confidence(others, config.np_confidence), config.np_iou);
  for (auto& d : nms(filter_by_confidence(pipes, config.p_min_confidence), kPipeNmsIou)) {
    out.push_back(std::move(d));
  }
  std::sort(out.begin(), out.end(),
            [](const Detection& a, const Detection& b) { return a.id < b.id; });
  return out;
}

RunResult run_pipeline(const SceneBundle& input, const PipelineConfig& config,
                       const RunOptions& options) {
  config.validate();
  RunResult result;
  StageClock clock(result, options);

  SceneBundle bundle = input;
  parallel_for(bundle.images.size(), [&](std::size_t i) {
    auto& image = bundle.images[i];
    image.detections = prefilter_detections(image.detections, config);
  });
  clock.finish("ingest");

  // Non-pipe branch.
  ObservationParams obs_params;
  obs_params.sor_k = static_cast<std::size_t>(config.sor_k);
  obs_params.sor_std_ratio = config.sor_std_ratio;

  std::vector<std::vector<NonPipeObservation>> per_image_np(bundle.images.size());
  std::vector<std::vector<std::string>> per_image_warn(bundle.images.size());
  parallel_for(bundle.images.size(), [&](std::size_t i) {
    const auto& image = bundle.images[i];
    for (const auto& det : image.detections) {
      if (det.cls == ObjectClass::Pipe) continue;
      NonPipeObservation obs;
      obs.image_id = image.image_id;
      obs.detection_id = det.id;
      obs.cls = det.cls;
      try {
        obs.cloud = observation_cloud(det, image.depth, image.intrinsics, image.pose, obs_params);
      } catch (const Error& e) {
        per_image_warn[i].push_back("nonpipe: " + source_tag(image.image_id, det.id) + " skipped: " +
                                    e.what());
        continue;
      }
      obs.keypoints_3d = lift_keypoints(det, image.depth, image.intrinsics, image.pose);
      per_image_np[i].push_back(std::move(obs));
    }
  });
  std::vector<NonPipeObservation> np_obs;
  for (std::size_t i = 0; i < bundle.images.size(); ++i) {
    for (auto& w : per_image_warn[i]) warn(result, options, w);
    for (auto& o : per_image_np[i]) np_obs.push_back(std::move(o));
  }

  std::vector<WorldObject> nonpipe_objects;
  for (const auto& group : match_objects(np_obs, config.np_max_distance, config.np_min_percentage)) {
    std::vector<NonPipeObservation> members;
    for (std::size_t idx : group) members.push_back(np_obs[idx]);
    MergeResult merged = merge_group(members, config.np_max_distance);
    for (const auto& w : merged.warnings) warn(result, options, "nonpipe: " + w);
    nonpipe_objects.push_back(std::move(merged.object));
  }
  clock.finish("nonpipe");

  // Pipe branch.
  PipeParams pipe_params;
  pipe_params.cleanup_eps = config.cleanup_eps;
  pipe_params.cleanup_min_pts = config.cleanup_min_pts;
  pipe_params.sor_k = static_cast<std::size_t>(config.sor_k);
  pipe_params.sor_std_ratio = config.sor_std_ratio;
  pipe_params.match_eps = config.match_eps;
  pipe_params.match_min_pts = config.match_min_pts;

  struct PipeTask {
    std::size_t image;
    const Detection* det;
  };
  std::vector<PipeTask> tasks;
  for (std::size_t i = 0; i < bundle.images.size(); ++i) {
    for (const auto& det : bundle.images[i].detections) {
      if (det.cls == ObjectClass::Pipe) tasks.push_back({i, &det});
    }
  }
  std::vector<std::optional<PipeObservation>> cleaned(tasks.size());
  std::vector<char> kept(tasks.size(), 0);
  parallel_for(tasks.size(), [&](std::size_t t) {
    const auto& image = bundle.images[tasks[t].image];
    auto obs = cleanup_observation(*tasks[t].det, image.depth, image.intrinsics, image.pose,
                                   pipe_params);
    if (!obs) return;
    obs->image_id = image.image_id;
    kept[t] = overlap_filter(*obs, nonpipe_objects, config.p_overlap, pipe_params) ? 1 : 0;
    cleaned[t] = std::move(obs);
  });

  std::vector<PipeObservation> pipe_obs;
  std::size_t discarded = 0;
  std::size_t overlapping = 0;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    if (!cleaned[t]) {
      ++discarded;
      continue;
    }
    if (options.dump_ply_dir) {
      write_ply(cleaned[t]->cloud, *options.dump_ply_dir /
                                       ("cleanup_" + source_tag(cleaned[t]->image_id,
                                                                cleaned[t]->detection_id) + ".ply"));
    }
    if (!kept[t]) {
      ++overlapping;
      continue;
    }
    pipe_obs.push_back(std::move(*cleaned[t]));
  }
  if (options.log) {
    options.log(LogLevel::Info, "pipe: " + std::to_string(tasks.size()) + " detections, " +
                                    std::to_string(discarded) + " discarded by cleanup, " +
                                    std::to_string(overlapping) + " overlapping non-pipe objects");
  }

  // Masks of the surviving observations only: dropped detections must not
  // link observations through reprojection.
  SceneBundle surviving = bundle;
  for (auto& image : surviving.images) {
    std::erase_if(image.detections, [&](const Detection& det) {
      if (det.cls != ObjectClass::Pipe) return false;
      return std::none_of(pipe_obs.begin(), pipe_obs.end(), [&](const PipeObservation& o) {
        return o.image_id == image.image_id && o.detection_id == det.id;
      });
    });
  }
  std::vector<WorldObject> pipe_objects = match_pipes(pipe_obs, surviving, pipe_params);
  clock.finish("pipe");

  std::vector<WorldObject>& objects = result.objects;
  for (auto& o : nonpipe_objects) objects.push_back(std::move(o));
  for (auto& o : pipe_objects) objects.push_back(std::move(o));
  for (std::size_t i = 0; i < objects.size(); ++i) objects[i].id = static_cast<int>(i);
  if (objects.empty()) throw Error(ErrorCode::EmptyObservation, "no objects recovered from the scene");

  std::vector<std::array<Vec3, 2>> pipe_endpoints(objects.size());
  parallel_for(objects.size(), [&](std::size_t i) {
    const auto& obj = objects[i];
    if (obj.cls != ObjectClass::Pipe) return;
    if (classify_shape(obj, config.p_threshold) == PipeShapeClass::Straight) {
      pipe_endpoints[i] = endpoints_straight(obj);
      return;
    }
    std::vector<WorldObject> others;
    for (std::size_t k = 0; k < objects.size(); ++k) {
      if (k != i) others.push_back(objects[k]);
    }
    pipe_endpoints[i] =
        endpoints_nonstraight(obj, others, config.graph_endpoints_max_distance, config.p_w);
  });
  for (std::size_t i = 0; i < objects.size(); ++i) {
    if (objects[i].cls == ObjectClass::Pipe) {
      objects[i].endpoints.assign(pipe_endpoints[i].begin(), pipe_endpoints[i].end());
    }
    if (options.dump_ply_dir) {
      write_ply(objects[i].cloud,
                *options.dump_ply_dir / ("object_" + std::to_string(i) + "_" +
                                         std::string(to_string(objects[i].cls)) + ".ply"));
    }
  }
  clock.finish("endpoints");

  std::vector<std::string> graph_warnings;
  result.initial = initial_graph(objects, config.graph_connections_max_distance, &graph_warnings);
  for (const auto& w : graph_warnings) warn(result, options, "graph: " + w);
  const auto rules = hydraulic_ruleset();
  result.graph = enforce(result.initial, rules, config.enforcement_mode);
  clock.finish("graph");
  return result;
}

std::string result_json(const SceneGraph& graph, const PipelineConfig& config) {
  auto j = nlohmann::ordered_json::parse(export_graph(graph, GraphFormat::Json));
  nlohmann::ordered_json cfg;
  for (const auto& key : PipelineConfig::keys()) {
    const std::string value = config.get(key);
    if (key == "enforcement_mode") {
      cfg[key] = value;
    } else {
      cfg[key] = nlohmann::ordered_json::parse(value);
    }
  }
  j["metadata"] = {{"version", kVersion},
                   {"config", cfg},
                   {"defaulted", std::vector<std::string>(config.defaulted.begin(),
                                                          config.defaulted.end())}};
  return j.dump(2);
}

}  // namespace pipegraph
