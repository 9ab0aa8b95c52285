#include "heer/eval.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <unordered_set>

#include "heer/error.hpp"
#include "heer/rng.hpp"
#include "text.hpp"

namespace heer {

// ---------------------------------------------------------------- instances

namespace {

/// Draws `k` distinct entries of `pool` (which it reorders).
void sample_without_replacement(std::vector<NodeId>& pool, std::size_t k, Rng& rng,
                                std::vector<NodeId>& out) {
  out.clear();
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.index(pool.size() - i));
    std::swap(pool[i], pool[j]);
    out.push_back(pool[i]);
  }
}

}  // namespace

InstanceSet generate_instances(const HinGraph& full, std::span<const TypedEdge> removed,
                               std::uint64_t seed) {
  InstanceSet set;
  Rng rng(seed);
  std::vector<NodeId> pool_v, pool_u;
  for (const auto& e : removed) {
    if (e.u >= full.num_nodes() || e.v >= full.num_nodes() || e.type >= full.num_edge_types()) {
      throw ValidationError("evalbench: removed edge references a node or type missing from the full graph");
    }
    pool_v.clear();
    for (NodeId x : full.nodes_of_type(full.node_type(e.v))) {
      if (x == e.v || x == e.u || !full.consistent(e.u, x, e.type) || full.has_edge(e.u, x, e.type)) continue;
      pool_v.push_back(x);
    }
    pool_u.clear();
    for (NodeId x : full.nodes_of_type(full.node_type(e.u))) {
      if (x == e.u || x == e.v || !full.consistent(x, e.v, e.type) || full.has_edge(x, e.v, e.type)) continue;
      pool_u.push_back(x);
    }
    if (pool_v.size() < kEvalNegatives || pool_u.size() < kEvalNegatives) {
      ++set.skipped;
      continue;
    }
    EvalInstance inst{e.u, e.v, e.type, {}, {}};
    sample_without_replacement(pool_v, kEvalNegatives, rng, inst.neg_v);
    sample_without_replacement(pool_u, kEvalNegatives, rng, inst.neg_u);
    set.instances.push_back(std::move(inst));
  }
  return set;
}

// ---------------------------------------------------------------- scorers

double HeerScorer::score(NodeId u, NodeId v, TypeId r) const {
  return raw_score(*embeddings_, metrics_->column(r), u, v, schema_->edge_type(r).directed);
}

UniMetricsScorer::UniMetricsScorer(const Schema& schema, const EmbeddingStore& embeddings)
    : schema_(&schema), embeddings_(&embeddings), ones_(schema.num_edge_types(), embeddings.half_dim(), 1.0) {}

double UniMetricsScorer::score(NodeId u, NodeId v, TypeId r) const {
  return raw_score(*embeddings_, ones_.column(r), u, v, schema_->edge_type(r).directed);
}

double PretrainedScorer::score(NodeId u, NodeId v, TypeId) const {
  const auto a = embeddings_->column(u);
  const auto b = embeddings_->column(v);
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

double LogitScorer::score(NodeId u, NodeId v, TypeId r) const {
  const auto& m = models_.at(r);
  if (m.weights.empty()) return 0.0;
  return raw_score(*embeddings_, m.weights, u, v, schema_->edge_type(r).directed) + m.bias;
}

double RandomScorer::score(NodeId u, NodeId v, TypeId r) const {
  const std::uint64_t key = (static_cast<std::uint64_t>(u) << 32) ^ v ^ (static_cast<std::uint64_t>(r) << 48);
  return static_cast<double>(Rng::derive_seed(seed_ ^ key, key) >> 11) * 0x1.0p-53;
}

// ---------------------------------------------------------------- logit

double LogisticFit::predict(std::span<const double> x) const {
  double z = bias;
  for (std::size_t k = 0; k < weights.size(); ++k) z += weights[k] * x[k];
  return z;
}

LogisticFit fit_logistic(std::span<const double> features, std::size_t dim, std::span<const int> labels,
                         const LogitConfig& config) {
  if (dim == 0) throw ValidationError("evalbench: logistic regression needs at least one feature");
  const std::size_t n = labels.size();
  if (features.size() != n * dim) throw ValidationError("evalbench: feature matrix does not match label count");
  LogisticFit fit{std::vector<double>(dim, 0.0), 0.0};
  if (n == 0) return fit;

  std::vector<double> mean(dim, 0.0), scale(dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < dim; ++k) mean[k] += features[i * dim + k];
  }
  for (auto& m : mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < dim; ++k) {
      const double d = features[i * dim + k] - mean[k];
      scale[k] += d * d;
    }
  }
  for (auto& s : scale) {
    s = std::sqrt(s / static_cast<double>(n));
    if (!(s > 0.0)) s = 1.0;
  }
  std::vector<double> z(n * dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < dim; ++k) z[i * dim + k] = (features[i * dim + k] - mean[k]) / scale[k];
  }

  std::vector<double> w(dim, 0.0), grad(dim);
  double b = 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t it = 0; it < config.iterations; ++it) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double grad_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double* xi = z.data() + i * dim;
      double logit = b;
      for (std::size_t k = 0; k < dim; ++k) logit += w[k] * xi[k];
      const double p = logit >= 0.0 ? 1.0 / (1.0 + std::exp(-logit)) : std::exp(logit) / (1.0 + std::exp(logit));
      const double err = p - (labels[i] != 0 ? 1.0 : 0.0);
      grad_b += err;
      for (std::size_t k = 0; k < dim; ++k) grad[k] += err * xi[k];
    }
    for (std::size_t k = 0; k < dim; ++k) w[k] -= config.learning_rate * (grad[k] * inv_n + config.l2 * w[k]);
    b -= config.learning_rate * grad_b * inv_n;
  }

  // Fold the standardization back into raw-feature weights.
  fit.bias = b;
  for (std::size_t k = 0; k < dim; ++k) {
    fit.weights[k] = w[k] / scale[k];
    fit.bias -= fit.weights[k] * mean[k];
  }
  return fit;
}

LogitScorer train_logit_baseline(const EmbeddingStore& pretrained, const HinGraph& graph,
                                 const LogitConfig& config) {
  if (pretrained.num_nodes() != graph.num_nodes()) {
    throw ValidationError("evalbench: pretrained embeddings cover a different node set");
  }
  const std::size_t h = pretrained.half_dim();
  std::vector<LogitScorer::TypeModel> models(graph.num_edge_types());
  Rng rng(config.seed, 0x6c6f6769);  // "logi"
  std::vector<double> features;
  std::vector<int> labels;
  for (TypeId r = 0; r < graph.num_edge_types(); ++r) {
    const auto& et = graph.schema().edge_type(r);
    const auto edges = graph.edges(r);
    if (edges.empty()) continue;
    features.clear();
    labels.clear();
    auto push = [&](NodeId a, NodeId b, int label) {
      const auto g = edge_embedding(pretrained, a, b, et.directed);
      features.insert(features.end(), g.begin(), g.end());
      labels.push_back(label);
    };
    for (const auto& e : edges) push(e.u, e.v, 1);

    const auto srcs = graph.nodes_of_type(et.src);
    const auto dsts = graph.nodes_of_type(et.dst);
    const std::size_t budget = 100 * edges.size() + 1000;
    std::size_t drawn = 0;
    for (std::size_t attempt = 0; attempt < budget && drawn < edges.size(); ++attempt) {
      const NodeId a = srcs[rng.index(srcs.size())];
      const NodeId b = dsts[rng.index(dsts.size())];
      if (a == b || graph.has_edge(a, b, r)) continue;
      push(a, b, 0);
      ++drawn;
    }
    const auto fit = fit_logistic(features, h, labels, config);
    models[r] = {fit.weights, fit.bias};
  }
  return LogitScorer(graph.schema(), pretrained, std::move(models));
}

// ---------------------------------------------------------------- ranking

double reciprocal_rank(const Scorer& scorer, NodeId u, NodeId v, TypeId r,
                       std::span<const std::pair<NodeId, NodeId>> negatives) {
  auto checked = [&scorer](NodeId a, NodeId b, TypeId t) {
    const double s = scorer.score(a, b, t);
    if (!std::isfinite(s)) {
      throw ComputeError("evalbench: scorer '" + std::string(scorer.name()) + "' returned a non-finite score");
    }
    return s;
  };
  const double positive = checked(u, v, r);
  std::size_t rank = 1;
  for (const auto& [a, b] : negatives) {
    if (checked(a, b, r) >= positive) ++rank;
  }
  return 1.0 / static_cast<double>(rank);
}

EvalReport evaluate(const Scorer& scorer, const Schema& schema, const InstanceSet& set) {
  if (set.instances.empty()) throw ValidationError("evalbench: no evaluation instances");
  EvalReport report;
  report.n_instances = set.instances.size();
  report.n_skipped = set.skipped;
  std::vector<double> type_sum(schema.num_edge_types(), 0.0);
  std::vector<std::size_t> type_count(schema.num_edge_types(), 0);
  std::vector<std::pair<NodeId, NodeId>> pairs;
  double total = 0.0;
  for (std::size_t i = 0; i < set.instances.size(); ++i) {
    const auto& inst = set.instances[i];
    for (char side : {'v', 'u'}) {
      pairs.clear();
      if (side == 'v') {
        for (NodeId x : inst.neg_v) pairs.emplace_back(inst.u, x);
      } else {
        for (NodeId x : inst.neg_u) pairs.emplace_back(x, inst.v);
      }
      const double rr = reciprocal_rank(scorer, inst.u, inst.v, inst.type, pairs);
      report.ranks.push_back(RankRecord{i, inst.type, side, rr});
      total += rr;
      type_sum[inst.type] += rr;
      ++type_count[inst.type];
    }
  }
  report.micro = total / static_cast<double>(report.ranks.size());
  double macro = 0.0;
  std::size_t types = 0;
  for (TypeId r = 0; r < schema.num_edge_types(); ++r) {
    if (type_count[r] == 0) continue;
    const double mrr = type_sum[r] / static_cast<double>(type_count[r]);
    report.per_type[schema.edge_type(r).name] = mrr;
    macro += mrr;
    ++types;
  }
  report.macro = macro / static_cast<double>(types);
  return report;
}

nlohmann::json EvalReport::to_json() const {
  return nlohmann::json{{"per_type", per_type}, {"micro", micro},          {"macro", macro},
                        {"n_instances", n_instances}, {"n_skipped", n_skipped}, {"config_hash", config_hash}};
}

std::string EvalReport::ranks_csv(const Schema& schema) const {
  std::ostringstream out;
  out << "instance,edge_type,side,reciprocal_rank\n";
  for (const auto& r : ranks) {
    out << r.instance << ',' << schema.edge_type(r.type).name << ',' << r.side << ','
        << text::shortest(r.reciprocal_rank) << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------- synthetic

SyntheticSpec SyntheticSpec::two_semantics(bool incompatible) {
  SyntheticSpec spec;
  spec.node_types = {{"user", 800}, {"item", 200}};
  spec.edge_types = {{"likes", "user", "item", false, 5000, 0}, {"buys", "user", "item", false, 5000, 1}};
  spec.clusters = 20;
  spec.noise = 0.0;
  spec.incompatible = incompatible;
  return spec;
}

SyntheticSpec SyntheticSpec::case_study() {
  SyntheticSpec spec = two_semantics(true);
  spec.edge_types.push_back({"likes_copy", "user", "item", false, 5000, 0});
  return spec;
}

nlohmann::json SyntheticSpec::to_json() const {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& t : node_types) nodes.push_back({{"name", t.name}, {"count", t.count}});
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& r : edge_types) {
    edges.push_back({{"name", r.name}, {"src", r.src}, {"dst", r.dst}, {"directed", r.directed},
                     {"edges", r.edges}, {"partition", r.partition}});
  }
  return {{"node_types", nodes}, {"edge_types", edges}, {"clusters", clusters},
          {"noise", noise},      {"incompatible", incompatible}};
}

SyntheticSpec SyntheticSpec::from_json(const nlohmann::json& j) {
  SyntheticSpec spec;
  try {
    for (const auto& t : j.at("node_types")) spec.node_types.push_back({t.at("name"), t.at("count")});
    for (const auto& r : j.at("edge_types")) {
      spec.edge_types.push_back({r.at("name"), r.at("src"), r.at("dst"), r.value("directed", false),
                                 r.at("edges"), r.value("partition", std::size_t{0})});
    }
    spec.clusters = j.value("clusters", spec.clusters);
    spec.noise = j.value("noise", spec.noise);
    spec.incompatible = j.value("incompatible", spec.incompatible);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("evalbench: malformed synthetic spec: ") + e.what());
  }
  return spec;
}

HinGraph generate_synthetic_hin(const SyntheticSpec& spec, std::uint64_t seed) {
  if (spec.clusters == 0) throw ValidationError("evalbench: clusters must be positive");
  if (!(spec.noise >= 0.0 && spec.noise <= 1.0)) throw ValidationError("evalbench: noise must be in [0,1]");
  Schema schema;
  std::vector<std::string> ids;
  std::vector<TypeId> types;
  for (const auto& t : spec.node_types) {
    const TypeId id = schema.add_node_type(t.name);
    for (std::size_t i = 0; i < t.count; ++i) {
      ids.push_back(t.name + "_" + std::to_string(i));
      types.push_back(id);
    }
  }
  for (const auto& r : spec.edge_types) schema.add_edge_type(r.name, r.src, r.dst, r.directed);

  const std::size_t n = ids.size();
  const std::size_t k = spec.clusters;
  std::vector<std::vector<NodeId>> by_type(schema.num_node_types());
  for (NodeId u = 0; u < n; ++u) by_type[types[u]].push_back(u);

  std::set<std::size_t> partitions;
  for (const auto& r : spec.edge_types) partitions.insert(spec.incompatible ? r.partition : 0);

  Rng rng(seed);
  // members[p][t][c]: nodes of type t in cluster c under partition p.
  std::map<std::size_t, std::vector<std::vector<std::vector<NodeId>>>> members;
  std::map<std::size_t, std::vector<std::size_t>> cluster_of;
  for (std::size_t p : partitions) {
    auto& m = members[p];
    auto& c = cluster_of[p];
    m.assign(schema.num_node_types(), std::vector<std::vector<NodeId>>(k));
    c.assign(n, 0);
    for (TypeId t = 0; t < by_type.size(); ++t) {
      auto order = by_type[t];
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
      for (std::size_t i = 0; i < order.size(); ++i) {
        c[order[i]] = i % k;
        m[t][i % k].push_back(order[i]);
      }
    }
  }

  std::vector<TypedEdge> edges;
  for (TypeId r = 0; r < spec.edge_types.size(); ++r) {
    const auto& et = schema.edge_type(r);
    const std::size_t p = spec.incompatible ? spec.edge_types[r].partition : 0;
    const auto& srcs = by_type[et.src];
    const auto& dsts = by_type[et.dst];
    if (srcs.empty() || dsts.empty()) continue;
    std::unordered_set<std::uint64_t> seen;
    const std::size_t target = spec.edge_types[r].edges;
    const std::size_t budget = 50 * target + 1000;
    for (std::size_t attempt = 0; attempt < budget && seen.size() < target; ++attempt) {
      const NodeId u = srcs[rng.index(srcs.size())];
      NodeId v;
      if (rng.uniform() < spec.noise) {
        v = dsts[rng.index(dsts.size())];
      } else {
        const auto& pool = members[p][et.dst][cluster_of[p][u]];
        if (pool.empty()) continue;
        v = pool[rng.index(pool.size())];
      }
      if (u == v) continue;
      const NodeId a = et.directed ? u : std::min(u, v);
      const NodeId b = et.directed ? v : std::max(u, v);
      if (!seen.insert((static_cast<std::uint64_t>(a) << 32) | b).second) continue;
      edges.push_back(TypedEdge{u, v, r, 1.0});
    }
  }
  return HinGraph(std::move(schema), std::move(ids), std::move(types), std::move(edges));
}

}  // namespace heer
