#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace heer {

using NodeId = std::uint32_t;
using TypeId = std::uint32_t;

struct EdgeType {
  std::string name;
  TypeId src = 0;
  TypeId dst = 0;
  bool directed = false;
  bool operator==(const EdgeType&) const = default;
};

/// Network schema: named node types and edge types. Each edge type fixes the
/// node type at each of its two ends.
class Schema {
 public:
  TypeId add_node_type(std::string name);
  TypeId add_edge_type(std::string name, std::string_view src_type,
                       std::string_view dst_type, bool directed);

  const std::vector<std::string>& node_types() const { return node_types_; }
  const std::vector<EdgeType>& edge_types() const { return edge_types_; }
  std::size_t num_node_types() const { return node_types_.size(); }
  std::size_t num_edge_types() const { return edge_types_.size(); }
  const EdgeType& edge_type(TypeId r) const { return edge_types_.at(r); }
  const std::string& node_type_name(TypeId t) const { return node_types_.at(t); }

  std::optional<TypeId> find_node_type(std::string_view name) const;
  std::optional<TypeId> find_edge_type(std::string_view name) const;
  /// Like find_*, but throws ValidationError for unknown names.
  TypeId node_type_id(std::string_view name) const;
  TypeId edge_type_id(std::string_view name) const;

  bool operator==(const Schema&) const = default;

 private:
  std::vector<std::string> node_types_;
  std::vector<EdgeType> edge_types_;
};

Schema parse_schema(std::istream& in, std::string_view source = "<schema>");
Schema load_schema(const std::filesystem::path& path);
void write_schema(std::ostream& out, const Schema& schema);

struct Edge {
  NodeId u = 0;
  NodeId v = 0;
  double weight = 0.0;
  bool operator==(const Edge&) const = default;
};

struct TypedEdge {
  NodeId u = 0;
  NodeId v = 0;
  TypeId type = 0;
  double weight = 0.0;
  bool operator==(const TypedEdge&) const = default;
};

/// Typed, weighted graph over a dense node index.
///
/// Edges are grouped per edge type and sorted by (u, v). Undirected edges are
/// stored once with the smaller node index first. Duplicate (u, v, r) records
/// are merged by summing weights. Immutable after construction.
class HinGraph {
 public:
  HinGraph() = default;
  /// Validates and canonicalizes. `node_ids[i]` and `node_types[i]` describe
  /// node i.
  HinGraph(Schema schema, std::vector<std::string> node_ids,
           std::vector<TypeId> node_types, std::vector<TypedEdge> edges);

  const Schema& schema() const { return schema_; }
  std::size_t num_nodes() const { return node_types_.size(); }
  std::size_t num_edges() const { return num_edges_; }
  std::size_t num_edge_types() const { return edges_.size(); }

  TypeId node_type(NodeId u) const { return node_types_[u]; }
  const std::string& node_id(NodeId u) const { return node_ids_[u]; }
  const std::vector<std::string>& node_ids() const { return node_ids_; }
  std::optional<NodeId> find_node(std::string_view id) const;
  std::span<const NodeId> nodes_of_type(TypeId t) const { return by_type_[t]; }

  std::span<const Edge> edges(TypeId r) const { return edges_[r]; }
  /// Every edge, ordered by type then (u, v).
  std::vector<TypedEdge> all_edges() const;
  double total_weight() const;

  double out_degree(TypeId r, NodeId u) const { return out_deg_[r * num_nodes() + u]; }
  double in_degree(TypeId r, NodeId u) const { return in_deg_[r * num_nodes() + u]; }
  /// Total weight of incident edges over all edge types. An undirected edge
  /// counts once at each endpoint.
  double total_degree(NodeId u) const;

  /// True iff the node types of (u, v) match edge type r (either order when
  /// r is undirected).
  bool consistent(NodeId u, NodeId v, TypeId r) const;
  /// True iff a type-r edge joins u and v (orientation ignored when r is
  /// undirected).
  bool has_edge(NodeId u, NodeId v, TypeId r) const;

  /// Same nodes and schema, different edge set.
  HinGraph with_edges(std::vector<TypedEdge> edges) const;

  /// Recomputes degrees from the edge lists and compares them with the stored
  /// ones. Returns the largest relative difference.
  double degree_discrepancy() const;

  bool operator==(const HinGraph& other) const;

 private:
  void compute_degrees(std::vector<double>& out, std::vector<double>& in) const;
  static std::uint64_t pair_key(NodeId u, NodeId v) {
    return (static_cast<std::uint64_t>(u) << 32) | v;
  }

  Schema schema_;
  std::vector<std::string> node_ids_;
  std::vector<TypeId> node_types_;
  std::unordered_map<std::string, NodeId> index_;
  std::vector<std::vector<NodeId>> by_type_;
  std::vector<std::vector<Edge>> edges_;
  std::vector<std::unordered_set<std::uint64_t>> edge_keys_;
  std::vector<double> out_deg_;
  std::vector<double> in_deg_;
  std::size_t num_edges_ = 0;
};

/// Reads node and edge files (tab-separated, see README) against `schema`.
HinGraph parse_graph(const Schema& schema, std::istream& nodes, std::istream& edges,
                     std::string_view node_source = "<nodes>",
                     std::string_view edge_source = "<edges>");
HinGraph load_graph(const Schema& schema, const std::filesystem::path& node_path,
                    const std::filesystem::path& edge_path);

/// Reads an edge file that references nodes of an existing graph.
std::vector<TypedEdge> parse_edges(const HinGraph& graph, std::istream& in,
                                   std::string_view source = "<edges>");
std::vector<TypedEdge> load_edges(const HinGraph& graph, const std::filesystem::path& path);

void write_nodes(std::ostream& out, const HinGraph& graph);
void write_edges(std::ostream& out, const HinGraph& graph, std::span<const TypedEdge> edges);
void write_edges(std::ostream& out, const HinGraph& graph);

struct KnockoutSplit {
  HinGraph retained;
  std::vector<TypedEdge> removed;
  double kappa = 0.0;
  std::uint64_t seed = 0;
};

/// Removes round(kappa * |E|) edges chosen uniformly without replacement,
/// regardless of type. Node vocabulary is kept, including nodes left isolated.
KnockoutSplit knockout(const HinGraph& graph, double kappa, std::uint64_t seed);

}  // namespace heer
