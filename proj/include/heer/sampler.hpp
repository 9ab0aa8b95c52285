#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "heer/graph.hpp"
#include "heer/rng.hpp"

namespace heer {

/// Walker/Vose alias table: O(n) build, O(1) draws.
class AliasTable {
 public:
  AliasTable() = default;
  /// Weights must be non-negative, finite, with a positive sum.
  explicit AliasTable(std::span<const double> weights);

  std::size_t sample(Rng& rng) const {
    const auto i = static_cast<std::size_t>(rng.index(prob_.size()));
    return rng.uniform() < prob_[i] ? i : alias_[i];
  }

  std::size_t size() const { return prob_.size(); }
  double total_weight() const { return total_weight_; }
  std::span<const double> prob() const { return prob_; }
  std::span<const std::size_t> alias() const { return alias_; }

  /// Probability mass the table actually assigns to each item.
  std::vector<double> realized_mass() const;

 private:
  std::vector<double> prob_;
  std::vector<std::size_t> alias_;
  double total_weight_ = 0.0;
};

struct SampledEdge {
  NodeId u = 0;
  NodeId v = 0;
  TypeId type = 0;
};

/// Draws edges of a graph with probability proportional to weight. Undirected
/// edges are presented in either orientation with a fair coin.
class EdgeSampler {
 public:
  explicit EdgeSampler(const HinGraph& graph);

  SampledEdge sample(Rng& rng) const {
    const auto& e = edges_[table_.sample(rng)];
    if (!directed_[e.type] && rng.coin()) return {e.v, e.u, e.type};
    return {e.u, e.v, e.type};
  }

  const AliasTable& table() const { return table_; }
  std::span<const TypedEdge> edges() const { return edges_; }

 private:
  std::vector<TypedEdge> edges_;
  std::vector<char> directed_;
  AliasTable table_;
};

/// Noise distribution for negative nodes. Nodes are partitioned into groups
/// (one per node type, or a single group for type-agnostic sampling); within
/// a group a node is drawn with probability proportional to
/// total_degree^alpha.
class NegativeSampler {
 public:
  static NegativeSampler by_node_type(const HinGraph& graph, double alpha);
  static NegativeSampler homogeneous(const HinGraph& graph, double alpha);

  /// A node of `group` other than `exclude`. Throws ValidationError when the
  /// group has fewer than two members.
  NodeId sample(std::size_t group, NodeId exclude, Rng& rng) const;

  std::size_t num_groups() const { return members_.size(); }
  std::span<const NodeId> members(std::size_t group) const { return members_[group]; }
  double alpha() const { return alpha_; }

 private:
  NegativeSampler(const HinGraph& graph, double alpha, bool typed);

  std::vector<std::vector<NodeId>> members_;
  std::vector<AliasTable> tables_;
  std::vector<std::string> group_names_;
  double alpha_ = 0.75;
};

}  // namespace heer
