// Copyright 2026 The pipegraph Authors
// SPDX-License-Identifier: Apache-2.0

#include "pipegraph/synthscene.hpp"

#include "pipegraph/geometry.hpp"
#include "pipegraph/pipeline.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace pipegraph::synth {
namespace {

using Json = nlohmann::json;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Stream purposes; each (seed, camera, purpose) triple has its own generator.
enum Stream : std::uint32_t { kDepthNoise = 1, kKeypoints, kMaskJitter, kDrops, kSpurious };

std::mt19937_64 stream(std::uint64_t seed, std::size_t camera, Stream purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(camera), static_cast<std::uint32_t>(purpose)};
  return std::mt19937_64(seq);
}

// Keypoints are emitted only where the connection point is seen on the
// object itself.
constexpr double kVisibilityTolerance = 0.01;

BitMask jitter_rows(const BitMask& mask, double sigma, std::mt19937_64& rng) {
  BitMask out(mask.width, mask.height);
  std::normal_distribution<double> noise(0.0, sigma);
  for (int v = 0; v < mask.height; ++v) {
    int u = 0;
    while (u < mask.width) {
      if (!mask.get(u, v)) {
        ++u;
        continue;
      }
      int end = u;
      while (end < mask.width && mask.get(end, v)) ++end;
      const int s = std::clamp(u + static_cast<int>(std::lround(noise(rng))), 0, mask.width);
      const int e = std::clamp(end + static_cast<int>(std::lround(noise(rng))), 0, mask.width);
      for (int x = s; x < e; ++x) out.set(x, v);
      u = end;
    }
  }
  return out;
}

BBox tight_bbox(const BitMask& mask) {
  int u0 = mask.width, v0 = mask.height, u1 = -1, v1 = -1;
  for (int v = 0; v < mask.height; ++v) {
    for (int u = 0; u < mask.width; ++u) {
      if (!mask.get(u, v)) continue;
      u0 = std::min(u0, u);
      v0 = std::min(v0, v);
      u1 = std::max(u1, u);
      v1 = std::max(v1, v);
    }
  }
  return {static_cast<double>(u0), static_cast<double>(v0), static_cast<double>(u1 + 1),
          static_cast<double>(v1 + 1)};
}

Vec3 vec_from(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) {
    throw Error(ErrorCode::ParseError, where + ": expected [x, y, z]");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Vec3 primitive_center(const Primitive& p) {
  if (const auto* c = std::get_if<Cylinder>(&p.shape)) return 0.5 * (c->a + c->b);
  return std::get<Box>(p.shape).center;
}

}  // namespace

CameraIntrinsics SceneSpec::intrinsics(std::size_t camera) const {
  return intrinsics_from_fov(width, height, cameras.at(camera).fov_deg);
}

std::optional<double> intersect(const Cylinder& cyl, const Vec3& origin, const Vec3& dir) {
  const Vec3 axis = cyl.b - cyl.a;
  const double length = axis.norm();
  if (!(length > 0.0) || !(cyl.radius > 0.0)) return std::nullopt;
  const Vec3 w = axis / length;
  const Vec3 delta = origin - cyl.a;
  const Vec3 d_perp = dir - dir.dot(w) * w;
  const Vec3 o_perp = delta - delta.dot(w) * w;
  const double r2 = cyl.radius * cyl.radius;

  double best = kInf;
  auto consider = [&](double t) {
    if (t > 0.0 && t < best) best = t;
  };

  const double qa = d_perp.squaredNorm();
  if (qa > 0.0) {
    const double qb = 2.0 * d_perp.dot(o_perp);
    const double qc = o_perp.squaredNorm() - r2;
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc >= 0.0) {
      const double root = std::sqrt(disc);
      for (double t : {(-qb - root) / (2.0 * qa), (-qb + root) / (2.0 * qa)}) {
        const double s = (delta + t * dir).dot(w);
        if (s >= 0.0 && s <= length) consider(t);
      }
    }
  }
  const double along = dir.dot(w);
  if (along != 0.0) {
    for (double plane : {0.0, length}) {
      const double t = (plane - delta.dot(w)) / along;
      const Vec3 hit = delta + t * dir;
      if ((hit - hit.dot(w) * w).squaredNorm() <= r2) consider(t);
    }
  }
  if (best == kInf) return std::nullopt;
  return best;
}

std::optional<double> intersect(const Box& box, const Vec3& origin, const Vec3& dir) {
  double t_near = -kInf;
  double t_far = kInf;
  const Vec3 rel = origin - box.center;
  for (int k = 0; k < 3; ++k) {
    const double o = rel.dot(box.axes[k]);
    const double d = dir.dot(box.axes[k]);
    const double h = box.half_extents[k];
    if (d == 0.0) {
      if (std::abs(o) > h) return std::nullopt;
      continue;
    }
    double t0 = (-h - o) / d;
    double t1 = (h - o) / d;
    if (t0 > t1) std::swap(t0, t1);
    t_near = std::max(t_near, t0);
    t_far = std::min(t_far, t1);
  }
  if (t_near > t_far) return std::nullopt;
  if (t_near > 0.0) return t_near;
  if (t_far > 0.0) return t_far;
  return std::nullopt;
}

DepthMap RenderResult::to_depth_map() const {
  DepthMap map;
  map.width = width;
  map.height = height;
  map.values.assign(depth.begin(), depth.end());
  return map;
}

namespace {

// Nearest surface along origin + t * dir; the id is kBackground for scenery.
std::pair<double, int> nearest_hit(const SceneSpec& spec, const Vec3& origin, const Vec3& dir) {
  std::pair<double, int> best{kInf, kBackground};
  for (const auto& prim : spec.primitives) {
    const auto t = std::visit([&](const auto& s) { return intersect(s, origin, dir); }, prim.shape);
    if (t && *t < best.first) best = {*t, prim.object_id < 0 ? kBackground : prim.object_id};
  }
  return best;
}

}  // namespace

RenderResult render_depth(const SceneSpec& spec, std::size_t camera) {
  const CameraIntrinsics intr = spec.intrinsics(camera);
  const CameraPose& pose = spec.cameras.at(camera).pose;
  const Mat3 rot = pose.rotation();

  RenderResult out;
  out.width = intr.width;
  out.height = intr.height;
  out.depth.assign(static_cast<std::size_t>(intr.width) * intr.height, kInf);
  out.ids.assign(out.depth.size(), kBackground);

  for (int v = 0; v < intr.height; ++v) {
    for (int u = 0; u < intr.width; ++u) {
      // Camera-frame direction with unit z, so the ray parameter is the
      // planar depth.
      const Vec3 dir_cam((u + 0.5 - intr.cx) / intr.fx, (v + 0.5 - intr.cy) / intr.fy, 1.0);
      const auto [t, id] = nearest_hit(spec, pose.position, rot * dir_cam);
      const std::size_t idx = static_cast<std::size_t>(v) * intr.width + u;
      out.depth[idx] = t;
      out.ids[idx] = id;
    }
  }
  return out;
}

std::vector<Detection> render_detections(const SceneSpec& spec, std::size_t camera,
                                         const RenderResult& render, std::uint64_t seed) {
  const CameraIntrinsics intr = spec.intrinsics(camera);
  const CameraPose& pose = spec.cameras.at(camera).pose;
  const NoiseSpec& noise = spec.noise;

  std::map<int, ObjectClass> classes;
  for (const auto& p : spec.primitives) {
    if (p.object_id >= 0) classes[p.object_id] = p.cls;
  }

  std::mt19937_64 kp_rng = stream(seed, camera, kKeypoints);
  std::mt19937_64 jitter_rng = stream(seed, camera, kMaskJitter);
  std::mt19937_64 drop_rng = stream(seed, camera, kDrops);
  std::normal_distribution<double> kp_noise(0.0, noise.keypoint_sigma);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<Detection> out;
  int next_id = 0;
  for (const auto& [object_id, cls] : classes) {
    BitMask mask(render.width, render.height);
    for (int v = 0; v < render.height; ++v) {
      for (int u = 0; u < render.width; ++u) {
        if (render.id_at(u, v) == object_id) mask.set(u, v);
      }
    }
    if (mask.count() == 0) continue;
    const int id = next_id++;

    // Draw for every visible object so drops are monotone in the probability.
    const bool dropped = unit(drop_rng) < noise.drop_detection_prob;

    Detection det;
    det.id = id;
    det.cls = cls;
    det.confidence = 1.0;
    if (cls == ObjectClass::Pipe) {
      if (noise.mask_boundary_jitter > 0.0) mask = jitter_rows(mask, noise.mask_boundary_jitter, jitter_rng);
      if (mask.count() == 0) continue;
      det.bbox = tight_bbox(mask);
      det.mask = polygonize(mask);
    } else {
      det.bbox = tight_bbox(mask);
      const GraphNode* node = spec.truth_graph.find(object_id);
      const std::size_t limit = static_cast<std::size_t>(max_keypoints(cls));
      if (node) {
        for (const auto& point : node->endpoints) {
          if (det.keypoints.size() == limit) break;
          const auto proj = project(point, intr, pose);
          if (!proj) continue;
          if (proj->pixel.x() < 0 || proj->pixel.y() < 0 || proj->pixel.x() >= render.width ||
              proj->pixel.y() >= render.height) {
            continue;
          }
          // Occlusion test along the exact ray through the point, not the
          // pixel center, so points on grazing faces are not lost.
          const Vec3 ray = pose.rotation() * Vec3((proj->pixel.x() - intr.cx) / intr.fx,
                                                  (proj->pixel.y() - intr.cy) / intr.fy, 1.0);
          if (nearest_hit(spec, pose.position, ray).first < proj->depth - kVisibilityTolerance) {
            continue;
          }
          Vec2 kp = proj->pixel;
          if (noise.keypoint_sigma > 0.0) {
            kp += Vec2(kp_noise(kp_rng), kp_noise(kp_rng));
            kp.x() = std::clamp(kp.x(), 0.0, static_cast<double>(render.width));
            kp.y() = std::clamp(kp.y(), 0.0, static_cast<double>(render.height));
          }
          det.keypoints.push_back(kp);
        }
      }
    }
    if (!dropped) out.push_back(std::move(det));
  }

  if (noise.spurious_detection_rate > 0.0) {
    std::mt19937_64 rng = stream(seed, camera, kSpurious);
    std::poisson_distribution<int> count(noise.spurious_detection_rate);
    std::uniform_real_distribution<double> size(10.0, 60.0);
    std::uniform_real_distribution<double> conf(0.3, 1.0);
    const int n = count(rng);
    constexpr ObjectClass kinds[] = {ObjectClass::Pump, ObjectClass::Tank, ObjectClass::Valve};
    for (int k = 0; k < n; ++k) {
      Detection det;
      det.id = next_id++;
      det.cls = kinds[std::uniform_int_distribution<int>(0, 2)(rng)];
      det.confidence = conf(rng);
      const double w = std::min(size(rng), render.width - 1.0);
      const double h = std::min(size(rng), render.height - 1.0);
      const double x = unit(rng) * (render.width - w);
      const double y = unit(rng) * (render.height - h);
      det.bbox = {x, y, x + w, y + h};
      out.push_back(std::move(det));
    }
  }
  return out;
}

void apply_depth_noise(DepthMap& depth, double sigma, std::uint64_t seed, std::size_t camera) {
  if (!(sigma > 0.0)) return;
  std::mt19937_64 rng = stream(seed, camera, kDepthNoise);
  std::normal_distribution<double> noise(0.0, sigma);
  for (auto& d : depth.values) {
    if (!DepthMap::is_valid_depth(d)) continue;
    const double noisy = d + noise(rng);
    d = static_cast<float>(noisy > 0.0 ? noisy : d);
  }
}

SceneBundle generate_bundle(const SceneSpec& spec, std::uint64_t seed) {
  SceneBundle bundle;
  bundle.images.resize(spec.cameras.size());
  parallel_for(spec.cameras.size(), [&](std::size_t c) {
    const RenderResult render = render_depth(spec, c);
    ImageRecord& image = bundle.images[c];
    char name[32];
    std::snprintf(name, sizeof name, "cam_%02zu", c);
    image.image_id = name;
    image.intrinsics = spec.intrinsics(c);
    image.pose = spec.cameras[c].pose;
    image.depth = render.to_depth_map();
    apply_depth_noise(image.depth, spec.noise.depth_sigma, seed, c);
    image.detections = render_detections(spec, c, render, seed);
  });
  bundle.metadata["generator"] = "pipegraph synth";
  bundle.metadata["seed"] = std::to_string(seed);
  return bundle;
}

void write_synthetic(const SceneSpec& spec, std::uint64_t seed, const std::filesystem::path& dir) {
  write_scene(generate_bundle(spec, seed), dir);
  std::ofstream out(dir / "truth_graph.json");
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + (dir / "truth_graph.json").string());
  out << export_graph(spec.truth_graph, GraphFormat::Json) << '\n';
}

CameraPose look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
  const Vec3 forward = (target - eye).normalized();
  Vec3 right = forward.cross(up);
  if (right.squaredNorm() < 1e-12) right = forward.unitOrthogonal();
  right.normalize();
  const Vec3 down = forward.cross(right);
  Mat3 rot;
  rot.col(0) = right;
  rot.col(1) = down;
  rot.col(2) = forward;
  CameraPose pose;
  pose.position = eye;
  pose.orientation = Eigen::Quaterniond(rot).normalized();
  return pose;
}

SceneSpec build_system1_like() {
  constexpr double kRadius = 0.08;
  constexpr double kHeight = 0.15;  // axis height of the main run
  constexpr double kGap = 0.12;    // clearance between neighboring elements
  constexpr double kPipe = 0.6;
  constexpr double kStub = 0.2;    // T-fitting branch above the run axis
  constexpr double kClear = 0.3;   // clearance next to tanks, pumps and valves
  constexpr double kEndClear = 0.5;  // row ends are seen obliquely

  SceneSpec spec;
  auto& prims = spec.primitives;
  auto& truth = spec.truth_graph;

  prims.push_back({Box{Vec3(4.0, 0.0, -0.05), {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()},
                       Vec3(9.0, 6.0, 0.05)},
                   kBackground, ObjectClass::Pipe});

  auto add_node = [&](ObjectClass cls, const Vec3& position, std::vector<Vec3> endpoints) {
    const int id = static_cast<int>(truth.nodes.size());
    truth.nodes.push_back({id, cls, position, std::move(endpoints)});
    return id;
  };
  auto add_box = [&](ObjectClass cls, double x0, double x1, double half_y, double z1,
                     std::vector<Vec3> connections) {
    const Vec3 center(0.5 * (x0 + x1), 0.0, 0.5 * z1);
    const int id = add_node(cls, center, std::move(connections));
    prims.push_back({Box{center, {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()},
                         Vec3(0.5 * (x1 - x0), half_y, 0.5 * z1)},
                     id, cls});
    return id;
  };
  auto add_run = [&](double x0, ObjectClass truth_cls) {
    const Vec3 a(x0, 0.0, kHeight);
    const Vec3 b(x0 + kPipe, 0.0, kHeight);
    const int id = add_node(truth_cls, 0.5 * (a + b), {a, b});
    prims.push_back({Cylinder{a, b, kRadius}, id, ObjectClass::Pipe});
    return id;
  };
  auto add_tee = [&](double x0) {
    const Vec3 a(x0, 0.0, kHeight);
    const Vec3 b(x0 + kPipe, 0.0, kHeight);
    const Vec3 mid = 0.5 * (a + b);
    const Vec3 top = mid + Vec3(0.0, 0.0, kStub);
    const int id = add_node(ObjectClass::PipeCrossing, mid, {a, b, top});
    prims.push_back({Cylinder{a, b, kRadius}, id, ObjectClass::Pipe});
    prims.push_back({Cylinder{mid, top, kRadius}, id, ObjectClass::Pipe});
    const Vec3 g0 = top + Vec3(0.0, 0.0, kGap);
    const Vec3 g1 = g0 + Vec3(0.0, 0.0, kPipe);
    const int branch = add_node(ObjectClass::Pipe, 0.5 * (g0 + g1), {g0, g1});
    prims.push_back({Cylinder{g0, g1, kRadius}, branch, ObjectClass::Pipe});
    return std::pair{id, branch};
  };
  auto connect = [&](int a, int b) {
    double best = kInf;
    for (const auto& p : truth.nodes[a].endpoints) {
      for (const auto& q : truth.nodes[b].endpoints) best = std::min(best, (p - q).norm());
    }
    truth.edges.push_back({std::min(a, b), std::max(a, b), best});
  };

  double x = -0.35;
  const int tank = add_box(ObjectClass::Tank, x, x + 0.7, 0.35, 1.2, {Vec3(x + 0.7, 0.0, kHeight)});
  x += 0.7 + kEndClear;
  const int pipe_a = add_run(x, ObjectClass::ReducerExpander);
  x += kPipe + kClear;
  const int pump = add_box(ObjectClass::Pump, x, x + 0.8, 0.25, 0.9,
                           {Vec3(x, 0.0, kHeight), Vec3(x + 0.8, 0.0, kHeight)});
  x += 0.8 + kClear;
  const int pipe_b = add_run(x, ObjectClass::ReducerExpander);
  x += kPipe + kGap;
  connect(tank, pipe_a);
  connect(pipe_a, pump);
  connect(pump, pipe_b);

  int previous = pipe_b;
  for (int k = 0; k < 3; ++k) {
    const auto [tee, branch] = add_tee(x);
    x += kPipe + kGap;
    const int run = add_run(x, ObjectClass::Pipe);
    x += kPipe;
    connect(previous, tee);
    connect(tee, branch);
    connect(tee, run);
    previous = run;
    x += k < 2 ? kGap : kClear;
  }
  const int valve = add_box(ObjectClass::Valve, x, x + 0.7, 0.15, 0.9,
                            {Vec3(x, 0.0, kHeight), Vec3(x + 0.7, 0.0, kHeight)});
  x += 0.7 + kEndClear;
  const int pipe_f = add_run(x, ObjectClass::Pipe);
  x += kPipe;
  connect(previous, valve);
  connect(valve, pipe_f);
  std::sort(truth.edges.begin(), truth.edges.end(), [](const GraphEdge& p, const GraphEdge& q) {
    return std::pair(p.a, p.b) < std::pair(q.a, q.b);
  });

  // Two elevated rows of eight cameras flanking the run, each looking down
  // at the axis point straight across from it.
  const double x_min = -0.35;
  const double step = (x - x_min) / 8.0;
  for (double side : {-1.0, 1.0}) {
    for (int c = 0; c < 8; ++c) {
      const double cx = x_min + (c + 0.5) * step;
      spec.cameras.push_back({look_at(Vec3(cx, 2.6 * side, 2.4), Vec3(cx, 0.0, 0.3)), 114.0});
    }
  }
  return spec;
}

SceneSpec parse_scene_spec(const std::string& json_text) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::ParseError, std::string("scene spec: ") + e.what());
  }
  try {
    SceneSpec spec;
    spec.width = j.value("width", spec.width);
    spec.height = j.value("height", spec.height);
    for (std::size_t i = 0; i < j.at("primitives").size(); ++i) {
      const auto& jp = j["primitives"][i];
      const std::string where = "primitives[" + std::to_string(i) + "]";
      Primitive p;
      p.object_id = jp.at("object_id").get<int>();
      const auto cls = parse_object_class(jp.value("class", std::string("Pipe")));
      if (!cls) throw Error(ErrorCode::ParseError, where + ".class: unknown class");
      p.cls = *cls;
      const std::string type = jp.at("type").get<std::string>();
      if (type == "cylinder") {
        p.shape = Cylinder{vec_from(jp.at("a"), where + ".a"), vec_from(jp.at("b"), where + ".b"),
                           jp.at("radius").get<double>()};
      } else if (type == "box") {
        Box box;
        box.center = vec_from(jp.at("center"), where + ".center");
        box.half_extents = vec_from(jp.at("half_extents"), where + ".half_extents");
        if (jp.contains("axes")) {
          for (int k = 0; k < 3; ++k) box.axes[k] = vec_from(jp["axes"].at(k), where + ".axes").normalized();
        }
        p.shape = box;
      } else {
        throw Error(ErrorCode::ParseError, where + ".type: expected cylinder or box");
      }
      spec.primitives.push_back(std::move(p));
    }
    for (std::size_t i = 0; i < j.at("cameras").size(); ++i) {
      const auto& jc = j["cameras"][i];
      const std::string where = "cameras[" + std::to_string(i) + "]";
      CameraSpec cam;
      cam.fov_deg = jc.value("fov_deg", cam.fov_deg);
      if (jc.contains("eye")) {
        cam.pose = look_at(vec_from(jc["eye"], where + ".eye"), vec_from(jc.at("target"), where + ".target"));
      } else {
        cam.pose.position = vec_from(jc.at("position"), where + ".position");
        const auto& q = jc.at("quaternion");
        cam.pose.orientation = Eigen::Quaterniond(q.at(0).get<double>(), q.at(1).get<double>(),
                                                  q.at(2).get<double>(), q.at(3).get<double>())
                                   .normalized();
      }
      spec.cameras.push_back(cam);
    }
    if (j.contains("truth_graph")) {
      spec.truth_graph = parse_graph_json(j["truth_graph"].dump());
    } else {
      std::map<int, std::pair<ObjectClass, std::vector<Vec3>>> objects;
      for (const auto& p : spec.primitives) {
        if (p.object_id < 0) continue;
        objects[p.object_id].first = p.cls;
        objects[p.object_id].second.push_back(primitive_center(p));
      }
      for (const auto& [id, entry] : objects) {
        Vec3 mean = Vec3::Zero();
        for (const auto& c : entry.second) mean += c;
        spec.truth_graph.nodes.push_back({id, entry.first, mean / entry.second.size(), {}});
      }
    }
    if (j.contains("noise")) {
      const auto& n = j["noise"];
      spec.noise.depth_sigma = n.value("depth_sigma", 0.0);
      spec.noise.keypoint_sigma = n.value("keypoint_sigma", 0.0);
      spec.noise.mask_boundary_jitter = n.value("mask_boundary_jitter", 0.0);
      spec.noise.drop_detection_prob = n.value("drop_detection_prob", 0.0);
      spec.noise.spurious_detection_rate = n.value("spurious_detection_rate", 0.0);
    }
    return spec;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("scene spec: ") + e.what());
  }
}

SceneSpec resolve_scene_spec(const std::string& name_or_path) {
  if (name_or_path == "system1") return build_system1_like();
  std::ifstream in(name_or_path);
  if (!in) {
    throw Error(ErrorCode::UnknownSpec,
                "unknown scene spec '" + name_or_path + "' (builtin: system1)");
  }
  std::ostringstream text;
  text << in.rdbuf();
  return parse_scene_spec(text.str());
}

}  // namespace pipegraph::synth
