#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "heer/graph.hpp"
#include "heer/model.hpp"

namespace heer {

inline constexpr std::size_t kEvalNegatives = 10;

/// One knocked-out edge with 10 corrupted tails (neg_v) and 10 corrupted
/// heads (neg_u). No corrupted pair has a type-r edge in the full graph.
struct EvalInstance {
  NodeId u = 0;
  NodeId v = 0;
  TypeId type = 0;
  std::vector<NodeId> neg_v;
  std::vector<NodeId> neg_u;
};

struct InstanceSet {
  std::vector<EvalInstance> instances;
  /// Removed edges dropped because a side had fewer than 10 eligible nodes.
  std::size_t skipped = 0;
};

/// Negatives on each side are drawn uniformly without replacement from the
/// type-consistent nodes that have no type-r edge to the fixed endpoint in
/// `full` and differ from both endpoints.
InstanceSet generate_instances(const HinGraph& full, std::span<const TypedEdge> removed,
                               std::uint64_t seed);

/// Pure (u, v, r) -> score function; higher means more likely.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual double score(NodeId u, NodeId v, TypeId r) const = 0;
  virtual std::string_view name() const = 0;
};

/// mu_r^T g_uv with learned metrics.
class HeerScorer : public Scorer {
 public:
  HeerScorer(const Schema& schema, const EmbeddingStore& embeddings, const MetricStore& metrics)
      : schema_(&schema), embeddings_(&embeddings), metrics_(&metrics) {}
  double score(NodeId u, NodeId v, TypeId r) const override;
  std::string_view name() const override { return "heer"; }

 private:
  const Schema* schema_;
  const EmbeddingStore* embeddings_;
  const MetricStore* metrics_;
};

/// HEER's scorer with every metric fixed to all ones.
class UniMetricsScorer : public Scorer {
 public:
  UniMetricsScorer(const Schema& schema, const EmbeddingStore& embeddings);
  double score(NodeId u, NodeId v, TypeId r) const override;
  std::string_view name() const override { return "unimetrics"; }

 private:
  const Schema* schema_;
  const EmbeddingStore* embeddings_;
  MetricStore ones_;
};

/// Inner product of the full node vectors, ignoring the edge type.
class PretrainedScorer : public Scorer {
 public:
  explicit PretrainedScorer(const EmbeddingStore& embeddings) : embeddings_(&embeddings) {}
  double score(NodeId u, NodeId v, TypeId r) const override;
  std::string_view name() const override { return "pretrained"; }

 private:
  const EmbeddingStore* embeddings_;
};

/// Per-edge-type logistic regression over g_uv of frozen embeddings.
class LogitScorer : public Scorer {
 public:
  struct TypeModel {
    std::vector<double> weights;  // empty: type had no training edges
    double bias = 0.0;
  };

  LogitScorer(const Schema& schema, const EmbeddingStore& embeddings, std::vector<TypeModel> models)
      : schema_(&schema), embeddings_(&embeddings), models_(std::move(models)) {}
  double score(NodeId u, NodeId v, TypeId r) const override;
  std::string_view name() const override { return "logit"; }
  const std::vector<TypeModel>& models() const { return models_; }

 private:
  const Schema* schema_;
  const EmbeddingStore* embeddings_;
  std::vector<TypeModel> models_;
};

/// Hash of (seed, u, v, r) mapped to [0, 1): a pure random scorer.
class RandomScorer : public Scorer {
 public:
  explicit RandomScorer(std::uint64_t seed) : seed_(seed) {}
  double score(NodeId u, NodeId v, TypeId r) const override;
  std::string_view name() const override { return "random"; }

 private:
  std::uint64_t seed_;
};

struct LogitConfig {
  double l2 = 1e-4;
  std::size_t iterations = 300;
  double learning_rate = 0.5;
  std::uint64_t seed = 1;
};

/// Binary logistic regression by full-batch gradient descent on
/// standardized features; the returned weights apply to raw features.
struct LogisticFit {
  std::vector<double> weights;
  double bias = 0.0;
  double predict(std::span<const double> x) const;
};
LogisticFit fit_logistic(std::span<const double> features, std::size_t dim, std::span<const int> labels,
                         const LogitConfig& config);

/// Positives: observed type-r edges. Negatives: as many type-consistent
/// non-edges, uniform. Features: g_uv from `pretrained`, which is not
/// modified. The scorer keeps a reference to `pretrained`.
LogitScorer train_logit_baseline(const EmbeddingStore& pretrained, const HinGraph& graph,
                                 const LogitConfig& config);

/// 1 / (1 + #{negatives scoring >= the positive}). Throws ComputeError on a
/// non-finite score.
double reciprocal_rank(const Scorer& scorer, NodeId u, NodeId v, TypeId r,
                       std::span<const std::pair<NodeId, NodeId>> negatives);

struct RankRecord {
  std::size_t instance = 0;
  TypeId type = 0;
  char side = 'v';  // 'v': tail corrupted, 'u': head corrupted
  double reciprocal_rank = 0.0;
};

struct EvalReport {
  std::map<std::string, double> per_type;
  double micro = 0.0;
  double macro = 0.0;
  std::vector<RankRecord> ranks;
  std::size_t n_instances = 0;
  std::size_t n_skipped = 0;
  std::string config_hash;

  nlohmann::json to_json() const;
  /// CSV "instance,edge_type,side,reciprocal_rank".
  std::string ranks_csv(const Schema& schema) const;
};

/// Two reciprocal ranks per instance, pooled for micro; per-type means are
/// averaged without weights for macro.
EvalReport evaluate(const Scorer& scorer, const Schema& schema, const InstanceSet& instances);

// ---------------------------------------------------------------- synthetic

struct SyntheticNodeType {
  std::string name;
  std::size_t count = 0;
};

struct SyntheticEdgeType {
  std::string name;
  std::string src;
  std::string dst;
  bool directed = false;
  std::size_t edges = 0;
  /// Edge types with the same partition id share a latent clustering.
  std::size_t partition = 0;
};

/// Every node gets one latent cluster per partition. An edge of a type
/// joins a uniformly drawn source to a destination from the same cluster
/// under the type's partition (or to a uniform destination with probability
/// `noise`). With `incompatible` false, every type uses partition 0.
struct SyntheticSpec {
  std::vector<SyntheticNodeType> node_types;
  std::vector<SyntheticEdgeType> edge_types;
  std::size_t clusters = 10;
  double noise = 0.0;
  bool incompatible = true;

  /// Hub type "user" (800) and "item" (200); edge types "likes" and "buys"
  /// (5000 edges each) on independent or shared partitions.
  static SyntheticSpec two_semantics(bool incompatible);
  /// As two_semantics(true) plus "likes_copy", which shares the partition of
  /// "likes".
  static SyntheticSpec case_study();

  nlohmann::json to_json() const;
  static SyntheticSpec from_json(const nlohmann::json& j);
};

HinGraph generate_synthetic_hin(const SyntheticSpec& spec, std::uint64_t seed);

}  // namespace heer
