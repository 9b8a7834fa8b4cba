// Copyright 2026 The pipegraph Authors
// SPDX-License-Identifier: Apache-2.0

#include "pipegraph/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace pipegraph {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  throw Error(ErrorCode::SchemaViolation, "config field '" + key + "': " + what);
}

double parse_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) bad(key, "'" + text + "' is not a number");
  return v;
}

template <typename Int>
Int parse_int(const std::string& key, const std::string& text) {
  Int v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) bad(key, "'" + text + "' is not an integer");
  return v;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void require_unit(const std::string& key, double v) {
  if (!(v >= 0.0 && v <= 1.0)) bad(key, "must lie in [0, 1], got " + format_double(v));
}

void require_positive(const std::string& key, double v) {
  if (!(v > 0.0)) bad(key, "must be positive, got " + format_double(v));
}

}  // namespace

const std::vector<std::string>& PipelineConfig::keys() {
  static const std::vector<std::string> k{
      "np_confidence",   "np_iou",          "np_max_distance",
      "np_min_percentage", "p_overlap",     "p_min_confidence",
      "p_threshold",     "p_w",             "graph_endpoints_max_distance",
      "graph_connections_max_distance", "enforcement_mode", "cleanup_eps",
      "cleanup_min_pts", "match_eps",       "match_min_pts",
      "sor_k",           "sor_std_ratio",   "seed"};
  return k;
}

void PipelineConfig::set(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (key == "np_confidence") np_confidence = parse_double(key, v);
  else if (key == "np_iou") np_iou = parse_double(key, v);
  else if (key == "np_max_distance") np_max_distance = parse_double(key, v);
  else if (key == "np_min_percentage") np_min_percentage = parse_double(key, v);
  else if (key == "p_overlap") p_overlap = parse_double(key, v);
  else if (key == "p_min_confidence") p_min_confidence = parse_double(key, v);
  else if (key == "p_threshold") p_threshold = parse_double(key, v);
  else if (key == "p_w") p_w = parse_double(key, v);
  else if (key == "graph_endpoints_max_distance") graph_endpoints_max_distance = parse_double(key, v);
  else if (key == "graph_connections_max_distance") graph_connections_max_distance = parse_double(key, v);
  else if (key == "enforcement_mode") {
    if (v == "fixed_point") enforcement_mode = EnforcementMode::FixedPoint;
    else if (v == "sequential") enforcement_mode = EnforcementMode::Sequential;
    else bad(key, "expected fixed_point or sequential, got '" + v + "'");
  } else if (key == "cleanup_eps") cleanup_eps = parse_double(key, v);
  else if (key == "cleanup_min_pts") cleanup_min_pts = parse_int<int>(key, v);
  else if (key == "match_eps") match_eps = parse_double(key, v);
  else if (key == "match_min_pts") match_min_pts = parse_int<int>(key, v);
  else if (key == "sor_k") sor_k = parse_int<int>(key, v);
  else if (key == "sor_std_ratio") sor_std_ratio = parse_double(key, v);
  else if (key == "seed") seed = parse_int<std::uint64_t>(key, v);
  else bad(key, "unknown key");
  defaulted.erase(key);
}

std::string PipelineConfig::get(const std::string& key) const {
  if (key == "np_confidence") return format_double(np_confidence);
  if (key == "np_iou") return format_double(np_iou);
  if (key == "np_max_distance") return format_double(np_max_distance);
  if (key == "np_min_percentage") return format_double(np_min_percentage);
  if (key == "p_overlap") return format_double(p_overlap);
  if (key == "p_min_confidence") return format_double(p_min_confidence);
  if (key == "p_threshold") return format_double(p_threshold);
  if (key == "p_w") return format_double(p_w);
  if (key == "graph_endpoints_max_distance") return format_double(graph_endpoints_max_distance);
  if (key == "graph_connections_max_distance") return format_double(graph_connections_max_distance);
  if (key == "enforcement_mode") {
    return enforcement_mode == EnforcementMode::FixedPoint ? "fixed_point" : "sequential";
  }
  if (key == "cleanup_eps") return format_double(cleanup_eps);
  if (key == "cleanup_min_pts") return std::to_string(cleanup_min_pts);
  if (key == "match_eps") return format_double(match_eps);
  if (key == "match_min_pts") return std::to_string(match_min_pts);
  if (key == "sor_k") return std::to_string(sor_k);
  if (key == "sor_std_ratio") return format_double(sor_std_ratio);
  if (key == "seed") return std::to_string(seed);
  bad(key, "unknown key");
}

void PipelineConfig::validate() const {
  require_unit("np_confidence", np_confidence);
  require_unit("np_iou", np_iou);
  require_positive("np_max_distance", np_max_distance);
  require_unit("np_min_percentage", np_min_percentage);
  require_unit("p_overlap", p_overlap);
  require_unit("p_min_confidence", p_min_confidence);
  if (!(p_threshold >= 0.0)) bad("p_threshold", "must be non-negative");
  require_unit("p_w", p_w);
  require_positive("graph_endpoints_max_distance", graph_endpoints_max_distance);
  require_positive("graph_connections_max_distance", graph_connections_max_distance);
  require_positive("cleanup_eps", cleanup_eps);
  if (cleanup_min_pts < 1) bad("cleanup_min_pts", "must be at least 1");
  require_positive("match_eps", match_eps);
  if (match_min_pts < 1) bad("match_min_pts", "must be at least 1");
  if (sor_k < 1) bad("sor_k", "must be at least 1");
  require_positive("sor_std_ratio", sor_std_ratio);
}

std::string PipelineConfig::to_text() const {
  std::string out;
  for (const auto& key : keys()) out += key + " = " + get(key) + "\n";
  return out;
}

PipelineConfig parse_config(const std::string& text) {
  PipelineConfig config;
  config.defaulted.insert(PipelineConfig::keys().begin(), PipelineConfig::keys().end());
  std::istringstream in(text);
  std::string line;
  std::set<std::string> seen;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::SchemaViolation,
                  "config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    if (!seen.insert(key).second) bad(key, "given twice");
    config.set(key, line.substr(eq + 1));
  }
  config.validate();
  return config;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

}  // namespace pipegraph
