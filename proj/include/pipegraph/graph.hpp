// Copyright 2026 The pipegraph Authors
// SPDX-License-Identifier: Apache-2.0

// Relational graph of the hydraulic system: initial proximity graph, rule
// enforcement, node typing, export and comparison against ground truth.

#pragma once

#include "pipegraph/objects.hpp"
#include "pipegraph/types.hpp"

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace pipegraph {

struct GraphNode {
  int id = 0;
  ObjectClass cls = ObjectClass::Pipe;
  Vec3 position = Vec3::Zero();
  std::vector<Vec3> endpoints;
};

/// Undirected; stored with a < b.
struct GraphEdge {
  int a = 0;
  int b = 0;
  double weight = 0.0;
};

struct SceneGraph {
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;

  const GraphNode* find(int id) const;
  std::map<int, int> degrees() const;
  bool has_edge(int a, int b) const;
};

enum class RuleKind { DegreeCap, SiblingBan, NoIsolated, NoCycles, Retype };

enum class RetypeWhen { AdjacentToPump, DegreeThree };

struct DegreeCap {
  ObjectClass cls;
  int max_degree;
};

struct Rule {
  std::string id;
  RuleKind kind = RuleKind::DegreeCap;
  std::vector<DegreeCap> caps;  // DegreeCap only
  RetypeWhen when = RetypeWhen::AdjacentToPump;  // Retype only
  ObjectClass new_class = ObjectClass::Pipe;     // Retype only
};

enum class EnforcementMode { FixedPoint, Sequential };

/// Greedy shortest-first endpoint pairing. An edge consumes the two endpoints
/// it joins; endpoints of non-pipe objects can be consumed once, endpoints of
/// pipe elements can serve several neighbors. Node ids are list indices and
/// positions are cloud centroids.
SceneGraph initial_graph(std::span<const WorldObject> objects, double max_dist,
                         std::vector<std::string>* warnings = nullptr);

/// R1..R7 for hydraulic systems.
std::vector<Rule> hydraulic_ruleset();

/// Edges violating the constraint rules (DegreeCap, SiblingBan, NoCycles)
/// among `rules`, sorted by (a, b).
std::vector<std::pair<int, int>> violating_edges(const SceneGraph& graph,
                                                 std::span<const Rule> rules);

struct EnforceTrace {
  SceneGraph graph;
  std::vector<GraphEdge> deleted;  // in deletion order
  std::vector<int> removed_nodes;
};

/// Deletes the largest violating edge until no constraint rule is violated,
/// removes isolated nodes, then applies retype rules in order. The output is
/// renumbered densely from 0 in the original node order.
EnforceTrace enforce_traced(const SceneGraph& graph, std::span<const Rule> rules,
                            EnforcementMode mode = EnforcementMode::FixedPoint);

SceneGraph enforce(const SceneGraph& graph, std::span<const Rule> rules,
                   EnforcementMode mode = EnforcementMode::FixedPoint);

/// Pipe nodes: degree 3 -> PipeCrossing, else pump neighbor -> ReducerExpander,
/// else Pipe.
SceneGraph assign_types(const SceneGraph& graph);

enum class GraphFormat { Json, Dot };

std::string export_graph(const SceneGraph& graph, GraphFormat format);

/// Parses the graph JSON schema. Throws ParseError.
SceneGraph parse_graph_json(const std::string& text);

struct NodeMatch {
  int predicted = 0;
  int truth = 0;
  double distance = 0.0;
};

struct DiffReport {
  double node_precision = 0.0;
  double node_recall = 0.0;
  double edge_precision = 0.0;
  double edge_recall = 0.0;
  double class_accuracy = 0.0;  // exact class agreement over matched nodes
  std::vector<NodeMatch> matches;
  std::map<std::pair<ObjectClass, ObjectClass>, int> confusion;  // (truth, predicted)
  std::vector<int> unmatched_predicted;
  std::vector<int> unmatched_truth;
  std::size_t matched_truth_edges = 0;
  std::size_t matched_predicted_edges = 0;
  std::size_t truth_edges_in_subgraph = 0;
  std::size_t predicted_edges_in_subgraph = 0;

  std::string to_json() const;
};

/// Greedy nearest-first node matching within `pos_tol` among compatible
/// classes (pipe family counts as one), then edge scores over the matched
/// subgraph.
DiffReport graph_diff(const SceneGraph& predicted, const SceneGraph& truth, double pos_tol);

}  // namespace pipegraph
