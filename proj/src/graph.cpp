// Copyright 2026 The pipegraph Authors
// SPDX-License-Identifier: Apache-2.0

#include "pipegraph/graph.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <tuple>

namespace pipegraph {
namespace {

using Json = nlohmann::ordered_json;
using EdgeKey = std::pair<int, int>;

EdgeKey key_of(const GraphEdge& e) { return {e.a, e.b}; }

std::map<int, std::vector<int>> adjacency(const SceneGraph& g) {
  std::map<int, std::vector<int>> adj;
  for (const auto& n : g.nodes) adj[n.id];
  for (const auto& e : g.edges) {
    adj[e.a].push_back(e.b);
    adj[e.b].push_back(e.a);
  }
  for (auto& [id, list] : adj) std::sort(list.begin(), list.end());
  return adj;
}

bool cap_applies(ObjectClass cap, ObjectClass node) {
  if (cap == ObjectClass::Pipe) return is_pipe_family(node);
  return cap == node;
}

// Edges that are not bridges, i.e. lie on some cycle.
std::set<EdgeKey> cycle_edges(const SceneGraph& g) {
  const auto adj = adjacency(g);
  std::map<int, int> disc;
  std::map<int, int> low;
  std::set<EdgeKey> bridges;
  int timer = 0;

  std::function<void(int, int)> dfs = [&](int u, int parent) {
    disc[u] = low[u] = timer++;
    for (int v : adj.at(u)) {
      if (v == parent) continue;  // simple graph: a single parent edge
      if (disc.count(v)) {
        low[u] = std::min(low[u], disc[v]);
        continue;
      }
      dfs(v, u);
      low[u] = std::min(low[u], low[v]);
      if (low[v] > disc[u]) bridges.insert({std::min(u, v), std::max(u, v)});
    }
  };
  for (const auto& [id, list] : adj) {
    if (!disc.count(id)) dfs(id, -1);
  }

  std::set<EdgeKey> out;
  for (const auto& e : g.edges) {
    if (!bridges.count(key_of(e))) out.insert(key_of(e));
  }
  return out;
}

std::set<EdgeKey> rule_violations(const SceneGraph& g, const Rule& rule) {
  std::set<EdgeKey> out;
  switch (rule.kind) {
    case RuleKind::DegreeCap: {
      const auto deg = g.degrees();
      std::set<int> over;
      for (const auto& n : g.nodes) {
        for (const auto& cap : rule.caps) {
          if (cap_applies(cap.cls, n.cls) && deg.at(n.id) > cap.max_degree) over.insert(n.id);
        }
      }
      for (const auto& e : g.edges) {
        if (over.count(e.a) || over.count(e.b)) out.insert(key_of(e));
      }
      break;
    }
    case RuleKind::SiblingBan: {
      const auto adj = adjacency(g);
      for (const auto& n : g.nodes) {
        if (is_pipe_family(n.cls)) continue;
        const auto& nb = adj.at(n.id);
        for (std::size_t i = 0; i < nb.size(); ++i) {
          for (std::size_t j = i + 1; j < nb.size(); ++j) {
            if (g.has_edge(nb[i], nb[j])) out.insert({nb[i], nb[j]});
          }
        }
      }
      break;
    }
    case RuleKind::NoCycles:
      out = cycle_edges(g);
      break;
    case RuleKind::NoIsolated:
    case RuleKind::Retype:
      break;
  }
  return out;
}

bool is_constraint(const Rule& r) {
  return r.kind == RuleKind::DegreeCap || r.kind == RuleKind::SiblingBan ||
         r.kind == RuleKind::NoCycles;
}

// Largest weight first; equal weights go to the lexicographically largest pair.
std::size_t pick_deletion(const SceneGraph& g, const std::set<EdgeKey>& violating) {
  std::size_t best = g.edges.size();
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    if (!violating.count(key_of(g.edges[i]))) continue;
    if (best == g.edges.size()) {
      best = i;
      continue;
    }
    const auto& e = g.edges[i];
    const auto& b = g.edges[best];
    if (std::tie(e.weight, e.a, e.b) > std::tie(b.weight, b.a, b.b)) best = i;
  }
  return best;
}

void delete_until_clean(SceneGraph& g, std::span<const Rule> rules,
                        std::vector<GraphEdge>& deleted) {
  for (;;) {
    std::set<EdgeKey> violating;
    for (const auto& r : rules) {
      if (!is_constraint(r)) continue;
      const auto v = rule_violations(g, r);
      violating.insert(v.begin(), v.end());
    }
    if (violating.empty()) return;
    const std::size_t idx = pick_deletion(g, violating);
    deleted.push_back(g.edges[idx]);
    g.edges.erase(g.edges.begin() + static_cast<std::ptrdiff_t>(idx));
  }
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

Json vec_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

Vec3 parse_vec(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) {
    throw Error(ErrorCode::ParseError, where + ": expected an array of 3 numbers");
  }
  Vec3 v;
  for (int k = 0; k < 3; ++k) {
    if (!j[k].is_number()) throw Error(ErrorCode::ParseError, where + ": expected numbers");
    v[k] = j[k].get<double>();
  }
  return v;
}

double ratio_or_one(std::size_t num, std::size_t den) {
  return den == 0 ? 1.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

const GraphNode* SceneGraph::find(int id) const {
  for (const auto& n : nodes) {
    if (n.id == id) return &n;
  }
  return nullptr;
}

std::map<int, int> SceneGraph::degrees() const {
  std::map<int, int> deg;
  for (const auto& n : nodes) deg[n.id] = 0;
  for (const auto& e : edges) {
    ++deg[e.a];
    ++deg[e.b];
  }
  return deg;
}

bool SceneGraph::has_edge(int a, int b) const {
  if (a > b) std::swap(a, b);
  return std::any_of(edges.begin(), edges.end(),
                     [&](const GraphEdge& e) { return e.a == a && e.b == b; });
}

SceneGraph initial_graph(std::span<const WorldObject> objects, double max_dist,
                         std::vector<std::string>* warnings) {
  SceneGraph g;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const auto& obj = objects[i];
    GraphNode node;
    node.id = static_cast<int>(i);
    node.cls = obj.cls;
    node.position = centroid(obj.cloud);
    node.endpoints = obj.endpoints;
    if (obj.endpoints.empty() && warnings) {
      warnings->push_back(std::string(to_string(obj.cls)) + " object " + std::to_string(i) +
                          " has no endpoints and cannot be connected");
    }
    g.nodes.push_back(std::move(node));
  }

  struct Pair {
    double d;
    int a, b;
    std::size_t ea, eb;
  };
  std::vector<Pair> pairs;
  for (std::size_t a = 0; a < objects.size(); ++a) {
    for (std::size_t b = a + 1; b < objects.size(); ++b) {
      for (std::size_t ea = 0; ea < objects[a].endpoints.size(); ++ea) {
        for (std::size_t eb = 0; eb < objects[b].endpoints.size(); ++eb) {
          pairs.push_back({(objects[a].endpoints[ea] - objects[b].endpoints[eb]).norm(),
                           static_cast<int>(a), static_cast<int>(b), ea, eb});
        }
      }
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) {
    return std::tie(x.d, x.a, x.b, x.ea, x.eb) < std::tie(y.d, y.a, y.b, y.ea, y.eb);
  });

  std::set<EdgeKey> linked;
  std::set<std::pair<int, std::size_t>> consumed;
  for (const auto& p : pairs) {
    if (p.d > max_dist) break;
    if (linked.count({p.a, p.b})) continue;
    const bool reuse_a = is_pipe_family(objects[p.a].cls);
    const bool reuse_b = is_pipe_family(objects[p.b].cls);
    if (!reuse_a && consumed.count({p.a, p.ea})) continue;
    if (!reuse_b && consumed.count({p.b, p.eb})) continue;
    if (!reuse_a) consumed.insert({p.a, p.ea});
    if (!reuse_b) consumed.insert({p.b, p.eb});
    linked.insert({p.a, p.b});
    g.edges.push_back({p.a, p.b, p.d});
  }
  std::sort(g.edges.begin(), g.edges.end(),
            [](const GraphEdge& x, const GraphEdge& y) { return key_of(x) < key_of(y); });
  return g;
}

std::vector<Rule> hydraulic_ruleset() {
  std::vector<Rule> rules(7);
  rules[0].id = "R1";
  rules[0].kind = RuleKind::DegreeCap;
  rules[0].caps = {{ObjectClass::Pump, 2}, {ObjectClass::Valve, 2}, {ObjectClass::Tank, 1}};
  rules[1].id = "R2";
  rules[1].kind = RuleKind::DegreeCap;
  rules[1].caps = {{ObjectClass::Pipe, 3}};
  rules[2].id = "R3";
  rules[2].kind = RuleKind::SiblingBan;
  rules[3].id = "R4";
  rules[3].kind = RuleKind::NoIsolated;
  rules[4].id = "R5";
  rules[4].kind = RuleKind::NoCycles;
  rules[5].id = "R6";
  rules[5].kind = RuleKind::Retype;
  rules[5].when = RetypeWhen::AdjacentToPump;
  rules[5].new_class = ObjectClass::ReducerExpander;
  rules[6].id = "R7";
  rules[6].kind = RuleKind::Retype;
  rules[6].when = RetypeWhen::DegreeThree;
  rules[6].new_class = ObjectClass::PipeCrossing;
  return rules;
}

std::vector<std::pair<int, int>> violating_edges(const SceneGraph& graph,
                                                 std::span<const Rule> rules) {
  std::set<EdgeKey> all;
  for (const auto& r : rules) {
    const auto v = rule_violations(graph, r);
    all.insert(v.begin(), v.end());
  }
  return {all.begin(), all.end()};
}

EnforceTrace enforce_traced(const SceneGraph& graph, std::span<const Rule> rules,
                            EnforcementMode mode) {
  EnforceTrace trace;
  SceneGraph g = graph;

  if (mode == EnforcementMode::FixedPoint) {
    delete_until_clean(g, rules, trace.deleted);
  } else {
    for (const auto& r : rules) {
      if (is_constraint(r)) delete_until_clean(g, std::span<const Rule>(&r, 1), trace.deleted);
    }
  }

  const bool drop_isolated = std::any_of(rules.begin(), rules.end(), [](const Rule& r) {
    return r.kind == RuleKind::NoIsolated;
  });
  if (drop_isolated) {
    const auto deg = g.degrees();
    std::vector<GraphNode> kept;
    for (auto& n : g.nodes) {
      if (deg.at(n.id) == 0) {
        trace.removed_nodes.push_back(n.id);
      } else {
        kept.push_back(std::move(n));
      }
    }
    g.nodes = std::move(kept);
  }

  for (const auto& r : rules) {
    if (r.kind != RuleKind::Retype) continue;
    const auto deg = g.degrees();
    const auto adj = adjacency(g);
    std::vector<ObjectClass> next;
    for (const auto& n : g.nodes) {
      bool hit = false;
      if (is_pipe_family(n.cls)) {
        if (r.when == RetypeWhen::DegreeThree) {
          hit = deg.at(n.id) == 3;
        } else {
          hit = std::any_of(adj.at(n.id).begin(), adj.at(n.id).end(),
                            [&](int m) { return g.find(m)->cls == ObjectClass::Pump; });
        }
      }
      next.push_back(hit ? r.new_class : n.cls);
    }
    for (std::size_t i = 0; i < g.nodes.size(); ++i) g.nodes[i].cls = next[i];
  }

  std::map<int, int> renumber;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    renumber[g.nodes[i].id] = static_cast<int>(i);
    g.nodes[i].id = static_cast<int>(i);
  }
  for (auto& e : g.edges) {
    e.a = renumber.at(e.a);
    e.b = renumber.at(e.b);
    if (e.a > e.b) std::swap(e.a, e.b);
  }
  std::sort(g.edges.begin(), g.edges.end(),
            [](const GraphEdge& x, const GraphEdge& y) { return key_of(x) < key_of(y); });
  trace.graph = std::move(g);
  return trace;
}

SceneGraph enforce(const SceneGraph& graph, std::span<const Rule> rules, EnforcementMode mode) {
  return enforce_traced(graph, rules, mode).graph;
}

SceneGraph assign_types(const SceneGraph& graph) {
  SceneGraph g = graph;
  const auto deg = graph.degrees();
  const auto adj = adjacency(graph);
  for (auto& n : g.nodes) {
    if (!is_pipe_family(n.cls)) continue;
    const bool pump_adjacent = std::any_of(adj.at(n.id).begin(), adj.at(n.id).end(), [&](int m) {
      return graph.find(m)->cls == ObjectClass::Pump;
    });
    if (deg.at(n.id) == 3) {
      n.cls = ObjectClass::PipeCrossing;
    } else if (pump_adjacent) {
      n.cls = ObjectClass::ReducerExpander;
    } else {
      n.cls = ObjectClass::Pipe;
    }
  }
  return g;
}

std::string export_graph(const SceneGraph& graph, GraphFormat format) {
  std::vector<const GraphNode*> nodes;
  for (const auto& n : graph.nodes) nodes.push_back(&n);
  std::sort(nodes.begin(), nodes.end(),
            [](const GraphNode* x, const GraphNode* y) { return x->id < y->id; });
  std::vector<GraphEdge> edges = graph.edges;
  for (auto& e : edges) {
    if (e.a > e.b) std::swap(e.a, e.b);
  }
  std::sort(edges.begin(), edges.end(),
            [](const GraphEdge& x, const GraphEdge& y) { return key_of(x) < key_of(y); });

  if (format == GraphFormat::Dot) {
    std::ostringstream out;
    out << "graph pipegraph {\n";
    for (const auto* n : nodes) {
      out << "  " << n->id << " [label=\"" << to_string(n->cls) << '@' << n->id << "\"];\n";
    }
    for (const auto& e : edges) {
      const std::string w = format_number(e.weight);
      out << "  " << e.a << " -- " << e.b << " [weight=" << w << ", label=\"" << w << "\"];\n";
    }
    out << "}\n";
    return out.str();
  }

  Json j;
  j["nodes"] = Json::array();
  for (const auto* n : nodes) {
    Json node;
    node["id"] = n->id;
    node["class"] = std::string(to_string(n->cls));
    node["position"] = vec_json(n->position);
    node["endpoints"] = Json::array();
    for (const auto& p : n->endpoints) node["endpoints"].push_back(vec_json(p));
    j["nodes"].push_back(std::move(node));
  }
  j["edges"] = Json::array();
  for (const auto& e : edges) j["edges"].push_back({{"a", e.a}, {"b", e.b}, {"weight", e.weight}});
  return j.dump();
}

SceneGraph parse_graph_json(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::ParseError, std::string("graph JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("nodes") || !j["nodes"].is_array()) {
    throw Error(ErrorCode::ParseError, "graph JSON: missing array 'nodes'");
  }
  if (!j.contains("edges") || !j["edges"].is_array()) {
    throw Error(ErrorCode::ParseError, "graph JSON: missing array 'edges'");
  }

  SceneGraph g;
  std::set<int> ids;
  for (std::size_t i = 0; i < j["nodes"].size(); ++i) {
    const auto& jn = j["nodes"][i];
    const std::string where = "nodes[" + std::to_string(i) + "]";
    if (!jn.is_object() || !jn.contains("id") || !jn["id"].is_number_integer()) {
      throw Error(ErrorCode::ParseError, where + ".id: expected an integer");
    }
    if (!jn.contains("class") || !jn["class"].is_string()) {
      throw Error(ErrorCode::ParseError, where + ".class: expected a string");
    }
    GraphNode n;
    n.id = jn["id"].get<int>();
    const auto cls = parse_object_class(jn["class"].get<std::string>());
    if (!cls) throw Error(ErrorCode::ParseError, where + ".class: unknown class");
    n.cls = *cls;
    if (!jn.contains("position")) throw Error(ErrorCode::ParseError, where + ".position: missing");
    n.position = parse_vec(jn["position"], where + ".position");
    if (jn.contains("endpoints")) {
      if (!jn["endpoints"].is_array()) {
        throw Error(ErrorCode::ParseError, where + ".endpoints: expected an array");
      }
      for (std::size_t k = 0; k < jn["endpoints"].size(); ++k) {
        n.endpoints.push_back(
            parse_vec(jn["endpoints"][k], where + ".endpoints[" + std::to_string(k) + "]"));
      }
    }
    if (!ids.insert(n.id).second) throw Error(ErrorCode::ParseError, where + ".id: duplicate");
    g.nodes.push_back(std::move(n));
  }

  std::set<EdgeKey> seen;
  for (std::size_t i = 0; i < j["edges"].size(); ++i) {
    const auto& je = j["edges"][i];
    const std::string where = "edges[" + std::to_string(i) + "]";
    if (!je.is_object() || !je.contains("a") || !je["a"].is_number_integer() ||
        !je.contains("b") || !je["b"].is_number_integer()) {
      throw Error(ErrorCode::ParseError, where + ": expected integer fields 'a' and 'b'");
    }
    GraphEdge e;
    e.a = je["a"].get<int>();
    e.b = je["b"].get<int>();
    if (je.contains("weight")) {
      if (!je["weight"].is_number()) throw Error(ErrorCode::ParseError, where + ".weight: expected a number");
      e.weight = je["weight"].get<double>();
    }
    if (e.a == e.b) throw Error(ErrorCode::ParseError, where + ": self-loop");
    if (!ids.count(e.a) || !ids.count(e.b)) throw Error(ErrorCode::ParseError, where + ": unknown node");
    if (e.a > e.b) std::swap(e.a, e.b);
    if (!seen.insert(key_of(e)).second) throw Error(ErrorCode::ParseError, where + ": duplicate edge");
    g.edges.push_back(e);
  }
  return g;
}

std::string DiffReport::to_json() const {
  Json j;
  j["node_precision"] = node_precision;
  j["node_recall"] = node_recall;
  j["edge_precision"] = edge_precision;
  j["edge_recall"] = edge_recall;
  j["class_accuracy"] = class_accuracy;
  j["matched_nodes"] = matches.size();
  j["truth_edges_in_subgraph"] = truth_edges_in_subgraph;
  j["matched_truth_edges"] = matched_truth_edges;
  j["predicted_edges_in_subgraph"] = predicted_edges_in_subgraph;
  j["matched_predicted_edges"] = matched_predicted_edges;
  j["matches"] = Json::array();
  for (const auto& m : matches) {
    j["matches"].push_back({{"predicted", m.predicted}, {"truth", m.truth}, {"distance", m.distance}});
  }
  j["confusion"] = Json::array();
  for (const auto& [classes, count] : confusion) {
    j["confusion"].push_back({{"truth", std::string(to_string(classes.first))},
                              {"predicted", std::string(to_string(classes.second))},
                              {"count", count}});
  }
  j["unmatched_predicted"] = unmatched_predicted;
  j["unmatched_truth"] = unmatched_truth;
  return j.dump(2);
}

DiffReport graph_diff(const SceneGraph& predicted, const SceneGraph& truth, double pos_tol) {
  struct Candidate {
    double d;
    int p, t;
  };
  std::vector<Candidate> candidates;
  for (const auto& p : predicted.nodes) {
    for (const auto& t : truth.nodes) {
      const bool compatible = is_pipe_family(p.cls) ? is_pipe_family(t.cls) : p.cls == t.cls;
      if (!compatible) continue;
      const double d = (p.position - t.position).norm();
      if (d <= pos_tol) candidates.push_back({d, p.id, t.id});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& x, const Candidate& y) {
    return std::tie(x.d, x.p, x.t) < std::tie(y.d, y.p, y.t);
  });

  DiffReport r;
  std::map<int, int> p_to_t;
  std::map<int, int> t_to_p;
  for (const auto& c : candidates) {
    if (p_to_t.count(c.p) || t_to_p.count(c.t)) continue;
    p_to_t[c.p] = c.t;
    t_to_p[c.t] = c.p;
    r.matches.push_back({c.p, c.t, c.d});
  }

  std::size_t same_class = 0;
  for (const auto& m : r.matches) {
    const ObjectClass tc = truth.find(m.truth)->cls;
    const ObjectClass pc = predicted.find(m.predicted)->cls;
    ++r.confusion[{tc, pc}];
    if (tc == pc) ++same_class;
  }
  for (const auto& p : predicted.nodes) {
    if (!p_to_t.count(p.id)) r.unmatched_predicted.push_back(p.id);
  }
  for (const auto& t : truth.nodes) {
    if (!t_to_p.count(t.id)) r.unmatched_truth.push_back(t.id);
  }
  std::sort(r.unmatched_predicted.begin(), r.unmatched_predicted.end());
  std::sort(r.unmatched_truth.begin(), r.unmatched_truth.end());

  for (const auto& e : truth.edges) {
    if (!t_to_p.count(e.a) || !t_to_p.count(e.b)) continue;
    ++r.truth_edges_in_subgraph;
    if (predicted.has_edge(t_to_p[e.a], t_to_p[e.b])) ++r.matched_truth_edges;
  }
  for (const auto& e : predicted.edges) {
    if (!p_to_t.count(e.a) || !p_to_t.count(e.b)) continue;
    ++r.predicted_edges_in_subgraph;
    if (truth.has_edge(p_to_t[e.a], p_to_t[e.b])) ++r.matched_predicted_edges;
  }

  r.node_precision = ratio_or_one(r.matches.size(), predicted.nodes.size());
  r.node_recall = ratio_or_one(r.matches.size(), truth.nodes.size());
  r.edge_precision = ratio_or_one(r.matched_predicted_edges, r.predicted_edges_in_subgraph);
  r.edge_recall = ratio_or_one(r.matched_truth_edges, r.truth_edges_in_subgraph);
  r.class_accuracy = ratio_or_one(same_class, r.matches.size());
  return r;
}

}  // namespace pipegraph
