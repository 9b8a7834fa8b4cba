/* Copyright 2026 The pipegraph Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to the pipegraph library. All handles are opaque. Functions
 * return PG_OK on success; on failure pg_last_error() describes the problem
 * for the calling thread. Strings returned through char** out-parameters are
 * owned by the caller and released with pg_string_free.
 */
#ifndef PIPEGRAPH_PIPEGRAPH_H
#define PIPEGRAPH_PIPEGRAPH_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define PG_API __declspec(dllexport)
#else
#define PG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pg_status {
  PG_OK = 0,
  PG_ERR_INVALID_ARGUMENT = 1,
  PG_ERR_MISSING_FILE = 2,
  PG_ERR_SCHEMA = 3,
  PG_ERR_DEPTH_DIMENSION = 4,
  PG_ERR_INVALID_QUATERNION = 5,
  PG_ERR_DOMAIN = 6,
  PG_ERR_EMPTY_RESULT = 7,
  PG_ERR_PARSE = 8,
  PG_ERR_IO = 9,
  PG_ERR_UNKNOWN_SPEC = 10,
  PG_ERR_INTERNAL = 11
} pg_status;

typedef struct pg_scene pg_scene;
typedef struct pg_config pg_config;
typedef struct pg_graph pg_graph;

typedef enum pg_log_level { PG_LOG_INFO = 0, PG_LOG_WARNING = 1 } pg_log_level;

typedef void (*pg_log_fn)(pg_log_level level, const char* message, void* user);

typedef struct pg_run_options {
  const char* dump_ply_dir; /* NULL: no dumps */
  pg_log_fn log;            /* NULL: silent */
  void* user;
} pg_run_options;

/* Negative values keep the scene's own noise setting. */
typedef struct pg_synth_options {
  uint64_t seed;
  double drop_prob;
  double depth_sigma;
  double keypoint_sigma;
} pg_synth_options;

PG_API const char* pg_version(void);

/* Message of the last failed call on this thread; "" when none. */
PG_API const char* pg_last_error(void);

PG_API void pg_string_free(char* s);

/* Configuration. */
PG_API pg_status pg_config_default(pg_config** out);
PG_API pg_status pg_config_load(const char* path, pg_config** out);
PG_API pg_status pg_config_parse(const char* text, pg_config** out);
PG_API pg_status pg_config_set(pg_config* config, const char* key, const char* value);
PG_API pg_status pg_config_get(const pg_config* config, const char* key, char** value);
PG_API void pg_config_free(pg_config* config);

/* Scene bundles. */
PG_API pg_status pg_scene_load(const char* dir, pg_scene** out);
PG_API size_t pg_scene_image_count(const pg_scene* scene);
PG_API size_t pg_scene_detection_count(const pg_scene* scene);
PG_API void pg_scene_free(pg_scene* scene);

/* Runs the full pipeline. PG_ERR_EMPTY_RESULT when no object is recovered. */
PG_API pg_status pg_run(const pg_scene* scene, const pg_config* config,
                        const pg_run_options* options, pg_graph** out);

/* Graph JSON including the effective configuration under "metadata". */
PG_API pg_status pg_run_result_json(const pg_graph* graph, const pg_config* config, char** out);

PG_API pg_status pg_graph_load(const char* path, pg_graph** out);
PG_API pg_status pg_graph_parse(const char* json, pg_graph** out);
PG_API pg_status pg_graph_to_json(const pg_graph* graph, char** out);
PG_API pg_status pg_graph_to_dot(const pg_graph* graph, char** out);
PG_API size_t pg_graph_node_count(const pg_graph* graph);
PG_API size_t pg_graph_edge_count(const pg_graph* graph);
/* Nodes of the named class ("Pipe", "Tank", ...). */
PG_API size_t pg_graph_class_count(const pg_graph* graph, const char* class_name);
PG_API void pg_graph_free(pg_graph* graph);

/* Diff report as JSON. */
PG_API pg_status pg_diff(const pg_graph* predicted, const pg_graph* truth, double pos_tol,
                         char** report_json);

/* Writes a synthetic bundle plus truth_graph.json. `name_or_file` is a
 * builtin ("system1") or a scene spec JSON file. `options` may be NULL. */
PG_API pg_status pg_synth(const char* name_or_file, const char* out_dir,
                          const pg_synth_options* options);

#ifdef __cplusplus
}
#endif

#endif /* PIPEGRAPH_PIPEGRAPH_H */
