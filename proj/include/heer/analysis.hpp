#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "heer/graph.hpp"
#include "heer/model.hpp"

namespace heer {

/// Row-normalized adjacency P^r of one edge type, stored both by row and by
/// column. Directed types normalize outward rows; `reverse` transposes the
/// adjacency first (hub on the destination side).
class TypedAdjacency {
 public:
  TypedAdjacency(const HinGraph& graph, TypeId r, bool reverse = false);

  struct Entry {
    NodeId node;
    double value;
  };
  std::span<const Entry> row(NodeId u) const { return {rows_.data() + row_ptr_[u], row_ptr_[u + 1] - row_ptr_[u]}; }
  std::span<const Entry> col(NodeId x) const { return {cols_.data() + col_ptr_[x], col_ptr_[x + 1] - col_ptr_[x]}; }

  /// Sparse l(u, . ; r) = P_{u,:} P^T, sorted by node.
  std::vector<Entry> reachability(NodeId u) const;

 private:
  std::vector<std::size_t> row_ptr_, col_ptr_;
  std::vector<Entry> rows_, cols_;
};

/// l(u, v; r) = P^r_{u,:} . P^r_{v,:}
double reachability(const TypedAdjacency& adj, NodeId u, NodeId v);

/// Generalized Jaccard sum_v min(l1, l2) / sum_v max(l1, l2) over v of u's
/// type. 0 when both rows vanish. u's type must be an endpoint type of both
/// edge types (the source side of directed types unless `reverse`).
double jaccard_coefficient(const HinGraph& graph, NodeId u, TypeId r1, TypeId r2, bool reverse = false);

struct JaccardProfile {
  TypeId r1 = 0;
  TypeId r2 = 0;
  TypeId hub = 0;
  std::vector<NodeId> nodes;
  std::vector<double> coefficients;
};

/// Coefficients for every node of `hub`. When `hub` is not given, the node
/// type both edge types share is used (the source type if several qualify).
JaccardProfile jaccard_profile(const HinGraph& graph, TypeId r1, TypeId r2,
                               std::optional<TypeId> hub = std::nullopt, bool reverse = false);

/// Fraction of coefficients <= each threshold.
std::vector<std::pair<double, double>> jaccard_cdf(const JaccardProfile& profile, std::span<const double> grid);
std::vector<std::pair<double, double>> jaccard_cdf(const HinGraph& graph, TypeId r1, TypeId r2,
                                                   std::span<const double> grid);
/// 0, 10^-8 ... 10^0 in half decades, and 5e-5.
std::vector<double> default_cdf_grid();

/// Each column shifted to mean 0 and scaled to population deviation 1.
/// Throws ValidationError for dim < 2 or a zero-variance column.
MetricStore standardize_metrics(const MetricStore& metrics);

/// Cosine similarity of the standardized columns r1 and r2.
double metric_similarity(const MetricStore& metrics, TypeId r1, TypeId r2);

/// Column (dimension) order for heat maps: start at the dimension with the
/// largest norm across edge types, then repeatedly append the unused
/// dimension with the highest cosine similarity to the last one (ties go to
/// the lower index).
std::vector<std::size_t> heatmap_column_order(const MetricStore& standardized);

/// CSV: header "edge_type,d<i>,..." in heat-map order, one row per type.
std::string heatmap_csv(const std::vector<std::string>& type_names, const MetricStore& standardized);

struct MetapathStep {
  TypeId type = 0;
  /// Walk a directed type from destination to source.
  bool reverse = false;
};

/// Parses "aut,^ref,ven": comma-separated edge type names, '^' marks a
/// reversed step.
std::vector<MetapathStep> parse_metapath(const Schema& schema, std::string_view text);

/// Nodes reached from `anchor` by following the steps in order, anchor
/// excluded, downsampled uniformly to `max_nodes`. Sorted by node index.
/// Throws ValidationError when the chain does not fit together.
std::vector<NodeId> metapath_neighbors(const HinGraph& graph, NodeId anchor,
                                       std::span<const MetapathStep> path, std::size_t max_nodes,
                                       std::uint64_t seed);

/// CSV rows "node_id,metapath_label,v_1..v_d".
std::string metapath_csv(const HinGraph& graph, const EmbeddingStore& embeddings,
                         const std::vector<std::pair<std::string, std::vector<NodeId>>>& groups);

}  // namespace heer
