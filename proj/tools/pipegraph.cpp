// Copyright 2026 The pipegraph Authors
// SPDX-License-Identifier: Apache-2.0

// pipegraph command-line front end. Talks to the library only through the C
// interface.

#include "pipegraph/pipegraph.h"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>

namespace {

struct Deleter {
  void operator()(pg_scene* p) const { pg_scene_free(p); }
  void operator()(pg_config* p) const { pg_config_free(p); }
  void operator()(pg_graph* p) const { pg_graph_free(p); }
  void operator()(char* p) const { pg_string_free(p); }
};

template <typename T>
using Owned = std::unique_ptr<T, Deleter>;

int report(const char* stage, pg_status status) {
  std::cerr << "pipegraph " << stage << ": " << pg_last_error() << '\n';
  return status == PG_ERR_EMPTY_RESULT ? 2 : 1;
}

bool write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  return static_cast<bool>(out);
}

void log_to_stderr(pg_log_level level, const char* message, void*) {
  std::cerr << (level == PG_LOG_WARNING ? "warning: " : "") << message << '\n';
}

int cmd_run(const std::string& scene_dir, const std::string& config_path,
            const std::string& out_path, const std::string& dot_path, const std::string& ply_dir) {
  pg_config* config_raw = nullptr;
  if (pg_status s = pg_config_load(config_path.c_str(), &config_raw); s != PG_OK) {
    return report("config", s);
  }
  Owned<pg_config> config(config_raw);

  pg_scene* scene_raw = nullptr;
  if (pg_status s = pg_scene_load(scene_dir.c_str(), &scene_raw); s != PG_OK) {
    return report("ingest", s);
  }
  Owned<pg_scene> scene(scene_raw);

  pg_run_options options{};
  options.dump_ply_dir = ply_dir.empty() ? nullptr : ply_dir.c_str();
  options.log = log_to_stderr;
  pg_graph* graph_raw = nullptr;
  if (pg_status s = pg_run(scene.get(), config.get(), &options, &graph_raw); s != PG_OK) {
    return report("run", s);
  }
  Owned<pg_graph> graph(graph_raw);

  char* json_raw = nullptr;
  if (pg_status s = pg_run_result_json(graph.get(), config.get(), &json_raw); s != PG_OK) {
    return report("export", s);
  }
  Owned<char> json(json_raw);
  if (!write_file(out_path, std::string(json.get()) + "\n")) {
    std::cerr << "pipegraph export: cannot write " << out_path << '\n';
    return 1;
  }
  if (!dot_path.empty()) {
    char* dot_raw = nullptr;
    if (pg_status s = pg_graph_to_dot(graph.get(), &dot_raw); s != PG_OK) return report("export", s);
    Owned<char> dot(dot_raw);
    if (!write_file(dot_path, dot.get())) {
      std::cerr << "pipegraph export: cannot write " << dot_path << '\n';
      return 1;
    }
  }
  return 0;
}

int cmd_synth(const std::string& spec, const std::string& out_dir, const pg_synth_options& opts) {
  if (pg_status s = pg_synth(spec.c_str(), out_dir.c_str(), &opts); s != PG_OK) {
    return report("synth", s);
  }
  return 0;
}

int cmd_diff(const std::string& pred_path, const std::string& truth_path, double pos_tol) {
  pg_graph* pred_raw = nullptr;
  if (pg_status s = pg_graph_load(pred_path.c_str(), &pred_raw); s != PG_OK) return report("diff", s);
  Owned<pg_graph> pred(pred_raw);
  pg_graph* truth_raw = nullptr;
  if (pg_status s = pg_graph_load(truth_path.c_str(), &truth_raw); s != PG_OK) return report("diff", s);
  Owned<pg_graph> truth(truth_raw);
  char* report_raw = nullptr;
  if (pg_status s = pg_diff(pred.get(), truth.get(), pos_tol, &report_raw); s != PG_OK) {
    return report("diff", s);
  }
  Owned<char> text(report_raw);
  std::cout << text.get() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Photogrammetry to hydraulic-system graph pipeline"};
  app.set_version_flag("--version", pg_version());
  app.require_subcommand(1);

  std::string scene_dir, config_path, out_path, dot_path, ply_dir;
  auto* run = app.add_subcommand("run", "Build the graph of a scene bundle");
  run->add_option("--scene", scene_dir, "Scene bundle directory")->required();
  run->add_option("--config", config_path, "Configuration file")->required();
  run->add_option("--out", out_path, "Output graph JSON")->required();
  run->add_option("--dot", dot_path, "Also write a DOT rendering");
  run->add_option("--dump-ply", ply_dir, "Directory for intermediate point clouds")
      ->check(CLI::ExistingDirectory);

  std::string spec, synth_out;
  pg_synth_options synth_opts{0, -1.0, -1.0, -1.0};
  auto* synth = app.add_subcommand("synth", "Write a synthetic scene bundle and its truth graph");
  synth->add_option("spec", spec, "Builtin name (system1) or scene spec JSON file")->required();
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--seed", synth_opts.seed, "Noise seed");
  synth->add_option("--drop-prob", synth_opts.drop_prob, "Detection drop probability")
      ->check(CLI::Range(0.0, 1.0));
  synth->add_option("--depth-sigma", synth_opts.depth_sigma, "Depth noise in meters")
      ->check(CLI::NonNegativeNumber);
  synth->add_option("--keypoint-sigma", synth_opts.keypoint_sigma, "Keypoint noise in pixels")
      ->check(CLI::NonNegativeNumber);

  std::string pred_path, truth_path;
  double pos_tol = 0.5;
  auto* diff = app.add_subcommand("diff", "Compare a predicted graph with ground truth");
  diff->add_option("predicted", pred_path, "Predicted graph JSON")->required();
  diff->add_option("truth", truth_path, "Ground-truth graph JSON")->required();
  diff->add_option("--pos-tol", pos_tol, "Node matching tolerance in meters")
      ->check(CLI::NonNegativeNumber);

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return cmd_run(scene_dir, config_path, out_path, dot_path, ply_dir);
  if (synth->parsed()) return cmd_synth(spec, synth_out, synth_opts);
  return cmd_diff(pred_path, truth_path, pos_tol);
}
