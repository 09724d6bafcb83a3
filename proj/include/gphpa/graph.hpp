#pragma once

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gphpa/tensor.hpp"

namespace gphpa {

class GraphError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// D^-1/2 (A + I) D^-1/2 with D the row sums of A + I.
///
/// A must be square, symmetric, 0/1 and hollow; self-loops come from the
/// added identity, so every degree is at least 1.
inline Matrix normalize_adjacency(const Matrix& adjacency) {
  const std::size_t n = adjacency.rows();
  if (adjacency.cols() != n) {
    throw GraphError("normalize_adjacency: adjacency must be square, got " +
                     adjacency.shape_string());
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (adjacency(i, i) != 0.0) {
      throw GraphError("normalize_adjacency: diagonal entry " + std::to_string(i) +
                       " is nonzero; self-loops are added internally");
    }
    for (std::size_t j = 0; j < n; ++j) {
      const double a = adjacency(i, j);
      if (a != 0.0 && a != 1.0) throw GraphError("normalize_adjacency: entries must be 0 or 1");
      if (a != adjacency(j, i)) {
        throw GraphError("normalize_adjacency: adjacency is not symmetric at (" +
                         std::to_string(i) + "," + std::to_string(j) + ")");
      }
    }
  }
  std::vector<double> inv_sqrt_degree(n);
  for (std::size_t i = 0; i < n; ++i) {
    double d = 1.0;
    for (std::size_t j = 0; j < n; ++j) d += adjacency(i, j);
    inv_sqrt_degree[i] = 1.0 / std::sqrt(d);
  }
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double a_tilde = adjacency(i, j) + (i == j ? 1.0 : 0.0);
      out(i, j) = inv_sqrt_degree[i] * a_tilde * inv_sqrt_degree[j];
    }
  }
  return out;
}

/// Static undirected service dependency graph.
class ServiceGraph {
 public:
  ServiceGraph() = default;

  ServiceGraph(std::vector<std::string> nodes, const std::vector<std::pair<std::string, std::string>>& edges)
      : nodes_(std::move(nodes)), adjacency_(nodes_.size(), nodes_.size()) {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        if (nodes_[i] == nodes_[j]) throw GraphError("ServiceGraph: duplicate node '" + nodes_[i] + "'");
      }
    }
    for (const auto& [a, b] : edges) {
      const std::size_t i = index_of(a);
      const std::size_t j = index_of(b);
      if (i == j) throw GraphError("ServiceGraph: self-loop on '" + a + "'");
      adjacency_(i, j) = 1.0;
      adjacency_(j, i) = 1.0;
    }
    normalized_ = normalize_adjacency(adjacency_);
  }

  ServiceGraph(std::vector<std::string> nodes, Matrix adjacency)
      : nodes_(std::move(nodes)), adjacency_(std::move(adjacency)) {
    if (adjacency_.rows() != nodes_.size()) {
      throw GraphError("ServiceGraph: adjacency " + adjacency_.shape_string() + " does not match " +
                       std::to_string(nodes_.size()) + " nodes");
    }
    normalized_ = normalize_adjacency(adjacency_);
  }

  std::size_t size() const noexcept { return nodes_.size(); }
  const std::vector<std::string>& nodes() const noexcept { return nodes_; }
  const Matrix& adjacency() const noexcept { return adjacency_; }
  const Matrix& normalized() const noexcept { return normalized_; }

  std::size_t index_of(const std::string& name) const {
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      if (nodes_[i] == name) return i;
    throw GraphError("ServiceGraph: unknown node '" + name + "'");
  }

  bool contains(const std::string& name) const {
    for (const auto& n : nodes_)
      if (n == name) return true;
    return false;
  }

  std::vector<std::pair<std::string, std::string>> edges() const {
    std::vector<std::pair<std::string, std::string>> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      for (std::size_t j = i + 1; j < nodes_.size(); ++j)
        if (adjacency_(i, j) != 0.0) out.emplace_back(nodes_[i], nodes_[j]);
    return out;
  }

 private:
  std::vector<std::string> nodes_;
  Matrix adjacency_;
  Matrix normalized_;
};

/// productpage -> {details, reviews}, reviews -> ratings, as an undirected graph.
inline ServiceGraph bookinfo_graph() {
  return ServiceGraph({"productpage", "details", "reviews", "ratings"},
                      {{"productpage", "details"}, {"productpage", "reviews"}, {"reviews", "ratings"}});
}

/// Graph file: {"nodes": [names...], "edges": [[a, b], ...]}.
inline ServiceGraph graph_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw GraphError("graph: expected a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (key != "nodes" && key != "edges") throw GraphError("graph: unknown key '" + key + "'");
  }
  if (!j.contains("nodes") || !j.contains("edges")) {
    throw GraphError("graph: 'nodes' and 'edges' are required");
  }
  std::vector<std::string> nodes;
  for (const auto& n : j.at("nodes")) nodes.push_back(n.get<std::string>());
  std::vector<std::pair<std::string, std::string>> edges;
  for (const auto& e : j.at("edges")) {
    if (!e.is_array() || e.size() != 2) throw GraphError("graph: each edge must be a [from, to] pair");
    edges.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
  }
  return ServiceGraph(std::move(nodes), edges);
}

inline nlohmann::json graph_to_json(const ServiceGraph& g) {
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [a, b] : g.edges()) edges.push_back({a, b});
  return {{"nodes", g.nodes()}, {"edges", edges}};
}

inline ServiceGraph load_graph(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw GraphError("graph: cannot open '" + path + "'");
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw GraphError("graph: '" + path + "': " + e.what());
  }
  return graph_from_json(j);
}

}  // namespace gphpa
