#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "heer/graph.hpp"

namespace heer {

/// Node embeddings, one column of `dim` values per node. The first half of a
/// column is the outward part f^O, the second half the inward part f^I.
class EmbeddingStore {
 public:
  EmbeddingStore() = default;
  EmbeddingStore(std::size_t num_nodes, std::size_t dim);

  std::size_t num_nodes() const { return num_nodes_; }
  std::size_t dim() const { return dim_; }
  std::size_t half_dim() const { return dim_ / 2; }

  std::span<double> column(NodeId u) { return {data_.data() + u * dim_, dim_}; }
  std::span<const double> column(NodeId u) const { return {data_.data() + u * dim_, dim_}; }
  std::span<double> outward(NodeId u) { return column(u).first(half_dim()); }
  std::span<const double> outward(NodeId u) const { return column(u).first(half_dim()); }
  std::span<double> inward(NodeId u) { return column(u).last(half_dim()); }
  std::span<const double> inward(NodeId u) const { return column(u).last(half_dim()); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool operator==(const EmbeddingStore&) const = default;

 private:
  std::size_t num_nodes_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

/// Per-edge-type metric vectors mu_r, one column of `dim` values per type.
class MetricStore {
 public:
  MetricStore() = default;
  MetricStore(std::size_t num_types, std::size_t dim, double fill = 1.0);

  std::size_t num_types() const { return num_types_; }
  std::size_t dim() const { return dim_; }

  std::span<double> column(TypeId r) { return {data_.data() + r * dim_, dim_}; }
  std::span<const double> column(TypeId r) const { return {data_.data() + r * dim_, dim_}; }
  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool operator==(const MetricStore&) const = default;

 private:
  std::size_t num_types_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

/// Hadamard edge embedding:
///   directed    g_uv = 2 (f^O_u o f^I_v)
///   undirected  g_uv = f^O_u o f^O_v + f^I_u o f^I_v
std::vector<double> edge_embedding(const EmbeddingStore& store, NodeId u, NodeId v, bool directed);

/// mu^T g_uv without the type-consistency check. Accumulates left to right
/// over dimensions; with mu all ones this is bitwise the plain sum of g.
double raw_score(const EmbeddingStore& store, std::span<const double> mu, NodeId u, NodeId v,
                 bool directed);

/// mu_r^T g_uv. Throws ValidationError when (u, v) is not consistent with r.
double edge_score(const HinGraph& graph, const EmbeddingStore& store, const MetricStore& metrics,
                  NodeId u, NodeId v, TypeId r);

/// log( exp(score) / sum_i exp(denominator[i]) ), evaluated with log-sum-exp.
double log_softmax_term(double score, std::span<const double> denominator);

/// Typed closeness s_r(u, v): softmax of the pair's score against every
/// type-consistent (u, v~) and (u~, v). Returns 0 for inconsistent pairs.
/// Enumerates all nodes; meant for small graphs and oracles.
double typed_closeness_exact(const HinGraph& graph, const EmbeddingStore& store,
                             const MetricStore& metrics, NodeId u, NodeId v, TypeId r);

/// -sum over stored type-r edges of W_uv log s_r(u, v). Each stored edge
/// (undirected ones included) contributes once. The constant of the KL form
/// is dropped.
double kl_objective_exact(const HinGraph& graph, const EmbeddingStore& store,
                          const MetricStore& metrics, TypeId r);
/// Sum of kl_objective_exact over every edge type.
double kl_objective_exact(const HinGraph& graph, const EmbeddingStore& store,
                          const MetricStore& metrics);

/// One positive pair with its negatives: neg_v replace v, neg_u replace u.
struct NsSample {
  NodeId u = 0;
  NodeId v = 0;
  TypeId type = 0;
  bool directed = false;
  std::vector<NodeId> neg_v;
  std::vector<NodeId> neg_u;
};

struct NodeGrad {
  NodeId node = 0;
  std::vector<double> grad;
};

/// Loss of one sample and its gradient. Nodes repeated within the sample get
/// a single, summed entry in `node_grads`.
struct SampleLossGrad {
  double loss = 0.0;
  TypeId type = 0;
  std::vector<NodeGrad> node_grads;
  std::vector<double> metric_grad;

  const NodeGrad* find(NodeId u) const;
};

/// Negative-sampling loss
///   -log sig(s_uv) - sum_i log sig(-s_{u v~_i}) - sum_i log sig(-s_{u~_i v})
/// with s = mu_r^T g, and its gradient with respect to every touched node
/// column and mu_r. Throws ComputeError on non-finite intermediates.
SampleLossGrad ns_loss_and_grads(const EmbeddingStore& store, const MetricStore& metrics,
                                 const NsSample& sample);
/// Same, reusing `out`'s buffers.
void ns_loss_and_grads(const EmbeddingStore& store, const MetricStore& metrics,
                       const NsSample& sample, SampleLossGrad& out);
/// Loss only.
double ns_loss(const EmbeddingStore& store, const MetricStore& metrics, const NsSample& sample);

/// Plain SGD step on the touched columns. mu_r is left alone when
/// `freeze_metrics` is set.
void sgd_apply(EmbeddingStore& store, MetricStore& metrics, const SampleLossGrad& grads, double lr,
               bool freeze_metrics);

/// Variants for lock-free multi-worker training: every scalar is read and
/// written through std::atomic_ref with relaxed ordering. Concurrent updates
/// may be lost; individual values are never torn.
void ns_loss_and_grads_shared(const EmbeddingStore& store, const MetricStore& metrics,
                              const NsSample& sample, SampleLossGrad& out);
void sgd_apply_shared(EmbeddingStore& store, MetricStore& metrics, const SampleLossGrad& grads,
                      double lr, bool freeze_metrics);

// Text formats. Embeddings: header "|V| d_V", then "node_id v_1 ... v_d".
// Metrics: header "|R| d_E", then "edge_type m_1 ... m_d". Values are written
// with 17 significant digits so a reload is bit-identical.
void write_embeddings(std::ostream& out, const HinGraph& graph, const EmbeddingStore& store);
EmbeddingStore read_embeddings(std::istream& in, const HinGraph& graph,
                               std::string_view source = "<embeddings>");
void save_embeddings(const std::filesystem::path& path, const HinGraph& graph,
                     const EmbeddingStore& store);
EmbeddingStore load_embeddings(const std::filesystem::path& path, const HinGraph& graph);

void write_metrics(std::ostream& out, const Schema& schema, const MetricStore& metrics);
MetricStore read_metrics(std::istream& in, const Schema& schema, std::string_view source = "<metrics>");
void save_metrics(const std::filesystem::path& path, const Schema& schema, const MetricStore& metrics);
MetricStore load_metrics(const std::filesystem::path& path, const Schema& schema);

/// Reads a metric file without a schema, returning the row labels alongside.
struct LabeledMetrics {
  std::vector<std::string> names;
  MetricStore metrics;
};
LabeledMetrics load_labeled_metrics(const std::filesystem::path& path);

}  // namespace heer
