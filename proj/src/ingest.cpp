// Copyright 2026 The pipegraph Authors
// SPDX-License-Identifier: Apache-2.0

#include "pipegraph/ingest.hpp"

#include "pipegraph/geometry.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace pipegraph {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr char kDepthMagic[4] = {'P', 'G', 'D', 'P'};

[[noreturn]] void schema_error(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::SchemaViolation, where + ": " + what);
}

const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) schema_error(where, std::string("missing field '") + key + "'");
  return *it;
}

double as_number(const json& value, const std::string& where) {
  if (!value.is_number()) schema_error(where, "expected a number");
  return value.get<double>();
}

int as_int(const json& value, const std::string& where) {
  if (!value.is_number_integer()) schema_error(where, "expected an integer");
  return value.get<int>();
}

Vec2 as_vec2(const json& value, const std::string& where) {
  if (!value.is_array() || value.size() != 2) schema_error(where, "expected [u, v]");
  return {as_number(value[0], where), as_number(value[1], where)};
}

std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
  }
  return v;
}

Detection parse_detection(const json& j, const std::string& where) {
  Detection det;
  det.id = as_int(require(j, "id", where), where + ".id");
  const auto& cls = require(j, "class", where);
  if (!cls.is_string()) schema_error(where + ".class", "expected a string");
  auto parsed = parse_object_class(cls.get<std::string>());
  if (!parsed || !(*parsed == ObjectClass::Pipe || max_keypoints(*parsed) > 0)) {
    schema_error(where + ".class", "unknown detection class '" + cls.get<std::string>() + "'");
  }
  det.cls = *parsed;
  det.confidence = as_number(require(j, "confidence", where), where + ".confidence");
  const auto& bbox = require(j, "bbox", where);
  if (!bbox.is_array() || bbox.size() != 4) schema_error(where + ".bbox", "expected 4 numbers");
  det.bbox = {as_number(bbox[0], where + ".bbox"), as_number(bbox[1], where + ".bbox"),
              as_number(bbox[2], where + ".bbox"), as_number(bbox[3], where + ".bbox")};
  if (auto it = j.find("keypoints"); it != j.end()) {
    if (!it->is_array()) schema_error(where + ".keypoints", "expected an array");
    for (const auto& kp : *it) det.keypoints.push_back(as_vec2(kp, where + ".keypoints"));
  }
  if (auto it = j.find("mask"); it != j.end()) {
    if (!it->is_array()) schema_error(where + ".mask", "expected an array of polygons");
    for (const auto& poly : *it) {
      if (!poly.is_array()) schema_error(where + ".mask", "expected a polygon");
      Polygon p;
      for (const auto& v : poly) p.push_back(as_vec2(v, where + ".mask"));
      det.mask.push_back(std::move(p));
    }
  }
  return det;
}

json detection_to_json(const Detection& det) {
  json j;
  j["id"] = det.id;
  j["class"] = std::string(to_string(det.cls));
  j["confidence"] = det.confidence;
  j["bbox"] = {det.bbox.x_min, det.bbox.y_min, det.bbox.x_max, det.bbox.y_max};
  if (!det.keypoints.empty()) {
    json kps = json::array();
    for (const auto& kp : det.keypoints) kps.push_back({kp.x(), kp.y()});
    j["keypoints"] = std::move(kps);
  }
  if (!det.mask.empty()) {
    json mask = json::array();
    for (const auto& poly : det.mask) {
      json p = json::array();
      for (const auto& v : poly) p.push_back({v.x(), v.y()});
      mask.push_back(std::move(p));
    }
    j["mask"] = std::move(mask);
  }
  return j;
}

ImageRecord parse_image(const json& j, const fs::path& dir, std::size_t index) {
  std::string where = "images[" + std::to_string(index) + "]";
  if (!j.is_object()) schema_error(where, "expected an object");
  ImageRecord image;
  const auto& id = require(j, "image_id", where);
  if (!id.is_string()) schema_error(where + ".image_id", "expected a string");
  image.image_id = id.get<std::string>();
  where = "image '" + image.image_id + "'";

  auto& intr = image.intrinsics;
  intr.width = as_int(require(j, "width", where), where + ".width");
  intr.height = as_int(require(j, "height", where), where + ".height");
  if (intr.width <= 0 || intr.height <= 0) schema_error(where, "width and height must be > 0");
  if (j.contains("fov_deg")) {
    try {
      intr = intrinsics_from_fov(intr.width, intr.height,
                                 as_number(j["fov_deg"], where + ".fov_deg"));
    } catch (const Error& e) {
      schema_error(where + ".fov_deg", e.what());
    }
  } else {
    intr.fx = as_number(require(j, "fx", where), where + ".fx");
    intr.fy = as_number(require(j, "fy", where), where + ".fy");
    intr.cx = as_number(require(j, "cx", where), where + ".cx");
    intr.cy = as_number(require(j, "cy", where), where + ".cy");
  }

  const auto& pose = require(j, "pose", where);
  const auto& pos = require(pose, "position", where + ".pose");
  if (!pos.is_array() || pos.size() != 3) schema_error(where + ".pose.position", "expected [x, y, z]");
  image.pose.position = {as_number(pos[0], where), as_number(pos[1], where),
                         as_number(pos[2], where)};
  const auto& q = require(pose, "quaternion", where + ".pose");
  if (!q.is_array() || q.size() != 4) {
    schema_error(where + ".pose.quaternion", "expected [w, x, y, z]");
  }
  image.pose.orientation = Eigen::Quaterniond(as_number(q[0], where), as_number(q[1], where),
                                              as_number(q[2], where), as_number(q[3], where));
  double norm = image.pose.orientation.coeffs().norm();
  if (!(std::abs(norm - 1.0) <= 1e-9)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << where << ".pose.quaternion: norm " << norm << " is not 1";
    throw Error(ErrorCode::InvalidQuaternion, msg.str());
  }

  const auto& depth_file = require(j, "depth_file", where);
  if (!depth_file.is_string()) schema_error(where + ".depth_file", "expected a string");
  image.depth = read_depth_file(dir / depth_file.get<std::string>());
  if (image.depth.width != intr.width || image.depth.height != intr.height) {
    throw Error(ErrorCode::DepthDimensionMismatch,
                where + ": depth is " + std::to_string(image.depth.width) + "x" +
                    std::to_string(image.depth.height) + " but the image is " +
                    std::to_string(intr.width) + "x" + std::to_string(intr.height));
  }

  if (auto it = j.find("detections"); it != j.end()) {
    if (!it->is_array()) schema_error(where + ".detections", "expected an array");
    for (std::size_t k = 0; k < it->size(); ++k) {
      image.detections.push_back(
          parse_detection((*it)[k], where + ".detections[" + std::to_string(k) + "]"));
    }
  }
  validate_image(image);
  return image;
}

}  // namespace

DepthMap read_depth_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open depth file " + path.string());
  char magic[4];
  std::uint32_t w = 0;
  std::uint32_t h = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&w), 4);
  in.read(reinterpret_cast<char*>(&h), 4);
  if (!in || std::memcmp(magic, kDepthMagic, 4) != 0) {
    throw Error(ErrorCode::SchemaViolation, path.string() + ": not a PGDP depth file");
  }
  w = to_le(w);
  h = to_le(h);
  const std::uint64_t expected = std::uint64_t{w} * h;
  std::vector<char> payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (payload.size() != expected * sizeof(float)) {
    throw Error(ErrorCode::DepthDimensionMismatch,
                path.string() + ": header says " + std::to_string(w) + "x" + std::to_string(h) +
                    " (" + std::to_string(expected) + " values) but the file holds " +
                    std::to_string(payload.size() / sizeof(float)) + " values");
  }
  DepthMap depth;
  depth.width = static_cast<int>(w);
  depth.height = static_cast<int>(h);
  depth.values.resize(expected);
  for (std::size_t i = 0; i < expected; ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, payload.data() + i * 4, 4);
    bits = to_le(bits);
    std::memcpy(&depth.values[i], &bits, 4);
  }
  return depth;
}

void write_depth_file(const DepthMap& depth, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(kDepthMagic, 4);
  std::uint32_t w = to_le(static_cast<std::uint32_t>(depth.width));
  std::uint32_t h = to_le(static_cast<std::uint32_t>(depth.height));
  out.write(reinterpret_cast<const char*>(&w), 4);
  out.write(reinterpret_cast<const char*>(&h), 4);
  for (float v : depth.values) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    bits = to_le(bits);
    out.write(reinterpret_cast<const char*>(&bits), 4);
  }
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

void validate_image(const ImageRecord& image) {
  const std::string where = "image '" + image.image_id + "'";
  const auto& intr = image.intrinsics;
  if (intr.width <= 0 || intr.height <= 0) schema_error(where, "width and height must be > 0");
  if (!(intr.fx > 0.0) || !(intr.fy > 0.0)) schema_error(where, "fx and fy must be > 0");
  if (!(intr.cx >= 0.0 && intr.cx < intr.width) || !(intr.cy >= 0.0 && intr.cy < intr.height)) {
    schema_error(where, "principal point outside the image");
  }
  if (std::abs(image.pose.orientation.coeffs().norm() - 1.0) > 1e-9) {
    throw Error(ErrorCode::InvalidQuaternion, where + ": quaternion is not unit length");
  }
  if (image.depth.values.size() !=
      static_cast<std::size_t>(image.depth.width) * image.depth.height) {
    throw Error(ErrorCode::DepthDimensionMismatch, where + ": depth array length mismatch");
  }
  if (image.depth.width != intr.width || image.depth.height != intr.height) {
    throw Error(ErrorCode::DepthDimensionMismatch, where + ": depth size differs from image size");
  }

  std::set<int> ids;
  for (const auto& det : image.detections) {
    const std::string dw = where + " detection " + std::to_string(det.id);
    if (!ids.insert(det.id).second) schema_error(dw, "duplicate detection id");
    if (!(det.confidence >= 0.0 && det.confidence <= 1.0)) {
      schema_error(dw, "confidence must lie in [0, 1]");
    }
    const auto& b = det.bbox;
    if (!(b.x_min < b.x_max && b.y_min < b.y_max)) schema_error(dw, "bbox min must be < max");
    if (b.x_min < 0.0 || b.y_min < 0.0 || b.x_max > intr.width || b.y_max > intr.height) {
      schema_error(dw, "bbox outside the image");
    }
    if (det.cls == ObjectClass::Pipe) {
      if (!det.keypoints.empty()) schema_error(dw, "pipe detections carry no keypoints");
      if (det.mask.empty()) schema_error(dw, "pipe detections need a mask");
      for (const auto& poly : det.mask) {
        if (poly.size() < 3) schema_error(dw, "mask polygons need at least 3 vertices");
      }
    } else {
      if (static_cast<int>(det.keypoints.size()) > max_keypoints(det.cls)) {
        schema_error(dw, "too many keypoints for class " + std::string(to_string(det.cls)));
      }
      if (!det.mask.empty()) schema_error(dw, "only pipe detections carry masks");
    }
    for (const auto& kp : det.keypoints) {
      if (!(kp.x() >= 0.0 && kp.x() <= intr.width && kp.y() >= 0.0 && kp.y() <= intr.height)) {
        schema_error(dw, "keypoint outside the image");
      }
    }
  }
}

SceneBundle load_scene(const fs::path& dir) {
  const fs::path manifest = dir / "scene.json";
  std::ifstream in(manifest);
  if (!in) throw Error(ErrorCode::MissingFile, "missing manifest " + manifest.string());
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::SchemaViolation, "scene.json: " + std::string(e.what()));
  }
  if (!root.is_object()) schema_error("scene.json", "top level must be an object");
  const auto& images = require(root, "images", "scene.json");
  if (!images.is_array() || images.empty()) schema_error("scene.json.images", "expected a non-empty array");

  SceneBundle bundle;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < images.size(); ++i) {
    bundle.images.push_back(parse_image(images[i], dir, i));
    if (!seen.insert(bundle.images.back().image_id).second) {
      schema_error("scene.json", "duplicate image_id '" + bundle.images.back().image_id + "'");
    }
  }
  if (auto it = root.find("metadata"); it != root.end()) {
    if (!it->is_object()) schema_error("scene.json.metadata", "expected an object");
    for (const auto& [key, value] : it->items()) {
      bundle.metadata[key] = value.is_string() ? value.get<std::string>() : value.dump();
    }
  }
  return bundle;
}

void write_scene(const SceneBundle& bundle, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());

  json images = json::array();
  for (std::size_t i = 0; i < bundle.images.size(); ++i) {
    const auto& image = bundle.images[i];
    char name[32];
    std::snprintf(name, sizeof(name), "depth_%03zu.pgdp", i);
    write_depth_file(image.depth, dir / name);

    json j;
    j["image_id"] = image.image_id;
    j["width"] = image.intrinsics.width;
    j["height"] = image.intrinsics.height;
    j["fx"] = image.intrinsics.fx;
    j["fy"] = image.intrinsics.fy;
    j["cx"] = image.intrinsics.cx;
    j["cy"] = image.intrinsics.cy;
    const auto& q = image.pose.orientation;
    j["pose"] = {{"position", {image.pose.position.x(), image.pose.position.y(),
                               image.pose.position.z()}},
                 {"quaternion", {q.w(), q.x(), q.y(), q.z()}}};
    j["depth_file"] = name;
    json dets = json::array();
    for (const auto& det : image.detections) dets.push_back(detection_to_json(det));
    j["detections"] = std::move(dets);
    images.push_back(std::move(j));
  }
  json root;
  root["images"] = std::move(images);
  root["metadata"] = json::object();
  for (const auto& [k, v] : bundle.metadata) root["metadata"][k] = v;

  std::ofstream out(dir / "scene.json");
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + (dir / "scene.json").string());
  out << root.dump(1) << '\n';
}

std::vector<Detection> filter_by_confidence(std::span<const Detection> detections,
                                            double threshold) {
  std::vector<Detection> kept;
  for (const auto& det : detections) {
    if (det.confidence >= threshold) kept.push_back(det);
  }
  return kept;
}

double bbox_iou(const BBox& a, const BBox& b) {
  const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
}

std::vector<Detection> nms(std::span<const Detection> detections, double iou_threshold) {
  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    const auto& a = detections[x];
    const auto& b = detections[y];
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    return a.id < b.id;
  });
  std::vector<Detection> kept;
  for (std::size_t idx : order) {
    const auto& cand = detections[idx];
    bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Detection& k) {
      return k.cls == cand.cls && bbox_iou(k.bbox, cand.bbox) > iou_threshold;
    });
    if (!suppressed) kept.push_back(cand);
  }
  return kept;
}

}  // namespace pipegraph
