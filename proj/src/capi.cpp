// Copyright 2026 The pipegraph Authors
// SPDX-License-Identifier: Apache-2.0

#include "pipegraph/pipegraph.h"

#include "pipegraph/pipeline.hpp"
#include "pipegraph/synthscene.hpp"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <new>
#include <sstream>

struct pg_scene {
  pipegraph::SceneBundle bundle;
};

struct pg_config {
  pipegraph::PipelineConfig config;
};

struct pg_graph {
  pipegraph::SceneGraph graph;
};

namespace {

thread_local std::string last_error;

pg_status status_of(pipegraph::ErrorCode code) {
  using pipegraph::ErrorCode;
  switch (code) {
    case ErrorCode::MissingFile: return PG_ERR_MISSING_FILE;
    case ErrorCode::SchemaViolation: return PG_ERR_SCHEMA;
    case ErrorCode::DepthDimensionMismatch: return PG_ERR_DEPTH_DIMENSION;
    case ErrorCode::InvalidQuaternion: return PG_ERR_INVALID_QUATERNION;
    case ErrorCode::EmptyObservation: return PG_ERR_EMPTY_RESULT;
    case ErrorCode::ParseError: return PG_ERR_PARSE;
    case ErrorCode::IoError: return PG_ERR_IO;
    case ErrorCode::UnknownSpec: return PG_ERR_UNKNOWN_SPEC;
    case ErrorCode::DomainError:
    case ErrorCode::InvalidDepth:
    case ErrorCode::DegenerateCloud:
    case ErrorCode::TooFewPoints:
    case ErrorCode::EmptyCloud:
    case ErrorCode::NoKeypoints: return PG_ERR_DOMAIN;
  }
  return PG_ERR_INTERNAL;
}

pg_status fail(pg_status status, const std::string& message) {
  last_error = message;
  return status;
}

template <typename Fn>
pg_status guarded(Fn&& fn) {
  try {
    last_error.clear();
    return fn();
  } catch (const pipegraph::Error& e) {
    return fail(status_of(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(PG_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(PG_ERR_INTERNAL, e.what());
  }
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

#define PG_REQUIRE(cond, what) \
  if (!(cond)) return fail(PG_ERR_INVALID_ARGUMENT, what)

}  // namespace

extern "C" {

const char* pg_version(void) { return pipegraph::kVersion; }

const char* pg_last_error(void) { return last_error.c_str(); }

void pg_string_free(char* s) { std::free(s); }

pg_status pg_config_default(pg_config** out) {
  PG_REQUIRE(out, "pg_config_default: out is NULL");
  return guarded([&] {
    auto* c = new pg_config;
    c->config.defaulted.insert(pipegraph::PipelineConfig::keys().begin(),
                               pipegraph::PipelineConfig::keys().end());
    *out = c;
    return PG_OK;
  });
}

pg_status pg_config_load(const char* path, pg_config** out) {
  PG_REQUIRE(path && out, "pg_config_load: NULL argument");
  return guarded([&] {
    *out = new pg_config{pipegraph::load_config(path)};
    return PG_OK;
  });
}

pg_status pg_config_parse(const char* text, pg_config** out) {
  PG_REQUIRE(text && out, "pg_config_parse: NULL argument");
  return guarded([&] {
    *out = new pg_config{pipegraph::parse_config(text)};
    return PG_OK;
  });
}

pg_status pg_config_set(pg_config* config, const char* key, const char* value) {
  PG_REQUIRE(config && key && value, "pg_config_set: NULL argument");
  return guarded([&] {
    pipegraph::PipelineConfig next = config->config;
    next.set(key, value);
    next.validate();
    config->config = std::move(next);
    return PG_OK;
  });
}

pg_status pg_config_get(const pg_config* config, const char* key, char** value) {
  PG_REQUIRE(config && key && value, "pg_config_get: NULL argument");
  return guarded([&] {
    *value = copy_string(config->config.get(key));
    return PG_OK;
  });
}

void pg_config_free(pg_config* config) { delete config; }

pg_status pg_scene_load(const char* dir, pg_scene** out) {
  PG_REQUIRE(dir && out, "pg_scene_load: NULL argument");
  return guarded([&] {
    *out = new pg_scene{pipegraph::load_scene(dir)};
    return PG_OK;
  });
}

size_t pg_scene_image_count(const pg_scene* scene) { return scene ? scene->bundle.images.size() : 0; }

size_t pg_scene_detection_count(const pg_scene* scene) {
  if (!scene) return 0;
  size_t n = 0;
  for (const auto& image : scene->bundle.images) n += image.detections.size();
  return n;
}

void pg_scene_free(pg_scene* scene) { delete scene; }

pg_status pg_run(const pg_scene* scene, const pg_config* config, const pg_run_options* options,
                 pg_graph** out) {
  PG_REQUIRE(scene && config && out, "pg_run: NULL argument");
  return guarded([&] {
    pipegraph::RunOptions run;
    if (options && options->dump_ply_dir) run.dump_ply_dir = options->dump_ply_dir;
    if (options && options->log) {
      const pg_log_fn fn = options->log;
      void* user = options->user;
      run.log = [fn, user](pipegraph::LogLevel level, const std::string& message) {
        fn(level == pipegraph::LogLevel::Info ? PG_LOG_INFO : PG_LOG_WARNING, message.c_str(), user);
      };
    }
    auto result = pipegraph::run_pipeline(scene->bundle, config->config, run);
    *out = new pg_graph{std::move(result.graph)};
    return PG_OK;
  });
}

pg_status pg_run_result_json(const pg_graph* graph, const pg_config* config, char** out) {
  PG_REQUIRE(graph && config && out, "pg_run_result_json: NULL argument");
  return guarded([&] {
    *out = copy_string(pipegraph::result_json(graph->graph, config->config));
    return PG_OK;
  });
}

pg_status pg_graph_parse(const char* json, pg_graph** out) {
  PG_REQUIRE(json && out, "pg_graph_parse: NULL argument");
  return guarded([&] {
    *out = new pg_graph{pipegraph::parse_graph_json(json)};
    return PG_OK;
  });
}

pg_status pg_graph_load(const char* path, pg_graph** out) {
  PG_REQUIRE(path && out, "pg_graph_load: NULL argument");
  return guarded([&] {
    std::ifstream in(path);
    if (!in) return fail(PG_ERR_MISSING_FILE, std::string("cannot read ") + path);
    std::ostringstream text;
    text << in.rdbuf();
    *out = new pg_graph{pipegraph::parse_graph_json(text.str())};
    return PG_OK;
  });
}

pg_status pg_graph_to_json(const pg_graph* graph, char** out) {
  PG_REQUIRE(graph && out, "pg_graph_to_json: NULL argument");
  return guarded([&] {
    *out = copy_string(pipegraph::export_graph(graph->graph, pipegraph::GraphFormat::Json));
    return PG_OK;
  });
}

pg_status pg_graph_to_dot(const pg_graph* graph, char** out) {
  PG_REQUIRE(graph && out, "pg_graph_to_dot: NULL argument");
  return guarded([&] {
    *out = copy_string(pipegraph::export_graph(graph->graph, pipegraph::GraphFormat::Dot));
    return PG_OK;
  });
}

size_t pg_graph_node_count(const pg_graph* graph) { return graph ? graph->graph.nodes.size() : 0; }

size_t pg_graph_edge_count(const pg_graph* graph) { return graph ? graph->graph.edges.size() : 0; }

size_t pg_graph_class_count(const pg_graph* graph, const char* class_name) {
  if (!graph || !class_name) return 0;
  const auto cls = pipegraph::parse_object_class(class_name);
  if (!cls) return 0;
  size_t n = 0;
  for (const auto& node : graph->graph.nodes) n += node.cls == *cls ? 1 : 0;
  return n;
}

void pg_graph_free(pg_graph* graph) { delete graph; }

pg_status pg_diff(const pg_graph* predicted, const pg_graph* truth, double pos_tol,
                  char** report_json) {
  PG_REQUIRE(predicted && truth && report_json, "pg_diff: NULL argument");
  PG_REQUIRE(pos_tol >= 0.0, "pg_diff: pos_tol must be non-negative");
  return guarded([&] {
    *report_json = copy_string(pipegraph::graph_diff(predicted->graph, truth->graph, pos_tol).to_json());
    return PG_OK;
  });
}

pg_status pg_synth(const char* name_or_file, const char* out_dir, const pg_synth_options* options) {
  PG_REQUIRE(name_or_file && out_dir, "pg_synth: NULL argument");
  return guarded([&] {
    auto spec = pipegraph::synth::resolve_scene_spec(name_or_file);
    std::uint64_t seed = 0;
    if (options) {
      seed = options->seed;
      if (options->drop_prob >= 0.0) spec.noise.drop_detection_prob = options->drop_prob;
      if (options->depth_sigma >= 0.0) spec.noise.depth_sigma = options->depth_sigma;
      if (options->keypoint_sigma >= 0.0) spec.noise.keypoint_sigma = options->keypoint_sigma;
    }
    if (spec.noise.drop_detection_prob > 1.0) {
      return fail(PG_ERR_INVALID_ARGUMENT, "drop probability must lie in [0, 1]");
    }
    pipegraph::synth::write_synthetic(spec, seed, out_dir);
    return PG_OK;
  });
}

}  // extern "C"
