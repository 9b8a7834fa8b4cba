// Copyright 2026 The pipegraph Authors
// SPDX-License-Identifier: Apache-2.0

// Runs the pipegraph executable as a subprocess.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"

#include <json.hpp>

#include <cstdlib>
#include <sys/wait.h>

namespace {

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

Outcome cli(const std::string& args, const testing::TempDir& scratch) {
  static int serial = 0;
  const auto out = scratch / ("stdout_" + std::to_string(serial));
  const auto err = scratch / ("stderr_" + std::to_string(serial++));
  const std::string cmd = std::string("'") + PIPEGRAPH_CLI + "' " + args + " >'" + out.string() +
                          "' 2>'" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  Outcome o;
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  o.out = testing::slurp(out);
  o.err = testing::slurp(err);
  return o;
}

std::size_t detection_count(const std::filesystem::path& scene_json) {
  const auto j = nlohmann::json::parse(testing::slurp(scene_json));
  std::size_t n = 0;
  for (const auto& image : j["images"]) n += image["detections"].size();
  return n;
}

}  // namespace

TEST_CASE("run rejects a malformed config with exit 1 naming the field") {
  testing::TempDir dir;
  REQUIRE(cli("synth system1 --out '" + (dir / "s").string() + "'", dir).code == 0);
  testing::spit(dir / "bad.cfg", "np_confidence = 1.5\n");
  const auto o = cli("run --scene '" + (dir / "s").string() + "' --config '" +
                               (dir / "bad.cfg").string() + "' --out '" + (dir / "g.json").string() + "'",
                           dir);
  CHECK(o.code == 1);
  CHECK(o.err.find("np_confidence") != std::string::npos);
  CHECK(o.err.find("config") != std::string::npos);
}

TEST_CASE("run on a scene without objects exits 2") {
  testing::TempDir dir;
  testing::spit(dir / "empty.json",
                R"({"width": 40, "height": 30, "primitives": [],
                    "cameras": [{"eye": [0, -2, 1], "target": [0, 0, 0]}]})");
  testing::spit(dir / "ok.cfg", "");
  REQUIRE(cli("synth '" + (dir / "empty.json").string() + "' --out '" + (dir / "s").string() + "'", dir)
              .code == 0);
  const auto o = cli("run --scene '" + (dir / "s").string() + "' --config '" +
                               (dir / "ok.cfg").string() + "' --out '" + (dir / "g.json").string() + "'",
                           dir);
  CHECK(o.code == 2);
  CHECK(o.err.find("run") != std::string::npos);
}

TEST_CASE("synth with an unknown spec exits 1") {
  testing::TempDir dir;
  const auto o = cli("synth no_such_system --out '" + (dir / "s").string() + "'", dir);
  CHECK(o.code == 1);
  CHECK(o.err.find("no_such_system") != std::string::npos);
}

TEST_CASE("synth is byte-deterministic and drops reduce detections") {
  testing::TempDir dir;
  const auto a = dir / "a", b = dir / "b", c = dir / "c";
  REQUIRE(cli("synth system1 --seed 7 --out '" + a.string() + "'", dir).code == 0);
  REQUIRE(cli("synth system1 --seed 7 --out '" + b.string() + "'", dir).code == 0);
  REQUIRE(cli("synth system1 --seed 7 --drop-prob 0.2 --out '" + c.string() + "'", dir).code == 0);
  for (const auto& entry : std::filesystem::directory_iterator(a)) {
    const auto name = entry.path().filename();
    CAPTURE(name.string());
    CHECK(testing::slurp(a / name) == testing::slurp(b / name));
  }
  const auto ja = nlohmann::json::parse(testing::slurp(a / "scene.json"));
  const auto jc = nlohmann::json::parse(testing::slurp(c / "scene.json"));
  REQUIRE(ja["images"].size() == jc["images"].size());
  for (std::size_t i = 0; i < ja["images"].size(); ++i) {
    CHECK(ja["images"][i]["pose"] == jc["images"][i]["pose"]);
  }
  CHECK(detection_count(c / "scene.json") < detection_count(a / "scene.json"));
}

TEST_CASE("run is deterministic and writes DOT and metadata") {
  testing::TempDir dir;
  REQUIRE(cli("synth system1 --out '" + (dir / "s").string() + "'", dir).code == 0);
  testing::spit(dir / "c.cfg", "np_confidence = 0.70\n");
  const std::string base = "run --scene '" + (dir / "s").string() + "' --config '" + (dir / "c.cfg").string() + "'";
  const auto o1 = cli(base + " --out '" + (dir / "g1.json").string() + "' --dot '" + (dir / "g.dot").string() + "'", dir);
  REQUIRE(o1.code == 0);
  CHECK(o1.err.find("stage") != std::string::npos);
  REQUIRE(cli(base + " --out '" + (dir / "g2.json").string() + "'", dir).code == 0);
  CHECK(testing::slurp(dir / "g1.json") == testing::slurp(dir / "g2.json"));
  CHECK(testing::slurp(dir / "g.dot").rfind("graph pipegraph", 0) == 0);

  const auto j = nlohmann::json::parse(testing::slurp(dir / "g1.json"));
  CHECK(j["metadata"]["config"]["np_confidence"] == 0.7);
  CHECK(j["metadata"]["config"].size() == 18);
  const auto defaulted = j["metadata"]["defaulted"];
  CHECK(std::find(defaulted.begin(), defaulted.end(), "np_iou") != defaulted.end());
  CHECK(std::find(defaulted.begin(), defaulted.end(), "np_confidence") == defaulted.end());
}

TEST_CASE("diff") {
  testing::TempDir dir;
  REQUIRE(cli("synth system1 --out '" + (dir / "s").string() + "'", dir).code == 0);
  const std::string truth = (dir / "s" / "truth_graph.json").string();

  auto o = cli("diff '" + truth + "' '" + truth + "'", dir);
  REQUIRE(o.code == 0);
  auto r = nlohmann::json::parse(o.out);
  for (const char* k : {"node_precision", "node_recall", "edge_precision", "edge_recall", "class_accuracy"}) {
    CHECK(r[k] == 1.0);
  }

  // One extra truth node.
  auto j = nlohmann::json::parse(testing::slurp(truth));
  j["nodes"].push_back({{"id", 99}, {"class", "Valve"}, {"position", {50, 50, 50}}});
  testing::spit(dir / "bigger.json", j.dump());
  o = cli("diff '" + truth + "' '" + (dir / "bigger.json").string() + "'", dir);
  REQUIRE(o.code == 0);
  CHECK(nlohmann::json::parse(o.out)["node_recall"] < 1.0);

  // Jittered prediction with zero tolerance.
  auto jittered = nlohmann::json::parse(testing::slurp(truth));
  for (auto& n : jittered["nodes"]) n["position"][0] = n["position"][0].get<double>() + 0.01;
  testing::spit(dir / "jitter.json", jittered.dump());
  o = cli("diff '" + (dir / "jitter.json").string() + "' '" + truth + "' --pos-tol 0", dir);
  REQUIRE(o.code == 0);
  CHECK(nlohmann::json::parse(o.out)["node_recall"] == 0.0);

  testing::spit(dir / "broken.json", "{");
  CHECK(cli("diff '" + (dir / "broken.json").string() + "' '" + truth + "'", dir).code == 1);
}
