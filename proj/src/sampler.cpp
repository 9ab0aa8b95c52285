#include "heer/sampler.hpp"

#include <cmath>
#include <string>

#include "heer/error.hpp"

namespace heer {

AliasTable::AliasTable(std::span<const double> weights) {
  const std::size_t n = weights.size();
  if (n == 0) throw ValidationError("sampler: alias table needs at least one item");
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("sampler: weights must be finite and non-negative");
    total_weight_ += w;
  }
  if (!(total_weight_ > 0.0)) throw ValidationError("sampler: total weight must be positive");

  prob_.resize(n);
  alias_.resize(n);
  std::vector<double> scaled(n);
  std::vector<std::size_t> small, large;
  for (std::size_t i = 0; i < n; ++i) {
    scaled[i] = weights[i] * static_cast<double>(n) / total_weight_;
    (scaled[i] < 1.0 ? small : large).push_back(i);
  }
  while (!small.empty() && !large.empty()) {
    const std::size_t s = small.back();
    small.pop_back();
    const std::size_t l = large.back();
    prob_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] = (scaled[l] + scaled[s]) - 1.0;
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  // Leftovers are 1 up to rounding.
  for (std::size_t i : large) {
    prob_[i] = 1.0;
    alias_[i] = i;
  }
  for (std::size_t i : small) {
    prob_[i] = 1.0;
    alias_[i] = i;
  }
}

std::vector<double> AliasTable::realized_mass() const {
  const std::size_t n = prob_.size();
  std::vector<double> mass(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    mass[i] += prob_[i] / static_cast<double>(n);
    mass[alias_[i]] += (1.0 - prob_[i]) / static_cast<double>(n);
  }
  return mass;
}

EdgeSampler::EdgeSampler(const HinGraph& graph) : edges_(graph.all_edges()) {
  if (edges_.empty()) throw ValidationError("sampler: cannot build an edge sampler over an empty edge set");
  std::vector<double> weights;
  weights.reserve(edges_.size());
  for (const auto& e : edges_) weights.push_back(e.weight);
  table_ = AliasTable(weights);
  for (const auto& et : graph.schema().edge_types()) directed_.push_back(et.directed ? 1 : 0);
}

NegativeSampler::NegativeSampler(const HinGraph& graph, double alpha, bool typed) : alpha_(alpha) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ValidationError("sampler: noise exponent must be >= 0");
  if (typed) {
    for (TypeId t = 0; t < graph.schema().num_node_types(); ++t) {
      const auto nodes = graph.nodes_of_type(t);
      members_.emplace_back(nodes.begin(), nodes.end());
      group_names_.push_back(graph.schema().node_type_name(t));
    }
  } else {
    std::vector<NodeId> all(graph.num_nodes());
    for (NodeId u = 0; u < all.size(); ++u) all[u] = u;
    members_.push_back(std::move(all));
    group_names_.emplace_back("*");
  }
  tables_.resize(members_.size());
  for (std::size_t g = 0; g < members_.size(); ++g) {
    if (members_[g].empty()) continue;
    std::vector<double> w;
    w.reserve(members_[g].size());
    double total = 0.0;
    for (NodeId u : members_[g]) {
      w.push_back(std::pow(graph.total_degree(u), alpha));
      total += w.back();
    }
    // A group whose nodes all have zero degree falls back to uniform.
    if (!(total > 0.0)) std::fill(w.begin(), w.end(), 1.0);
    tables_[g] = AliasTable(w);
  }
}

NegativeSampler NegativeSampler::by_node_type(const HinGraph& graph, double alpha) {
  return NegativeSampler(graph, alpha, true);
}

NegativeSampler NegativeSampler::homogeneous(const HinGraph& graph, double alpha) {
  return NegativeSampler(graph, alpha, false);
}

NodeId NegativeSampler::sample(std::size_t group, NodeId exclude, Rng& rng) const {
  const auto& nodes = members_.at(group);
  if (nodes.size() < 2) {
    throw ValidationError("sampler: cannot sample negative for node type '" + group_names_[group] +
                          "' (fewer than 2 nodes)");
  }
  for (int attempt = 0; attempt < 32; ++attempt) {
    const NodeId candidate = nodes[tables_[group].sample(rng)];
    if (candidate != exclude) return candidate;
  }
  // The noise mass sits almost entirely on `exclude`: pick uniformly among
  // the others.
  std::size_t pick = static_cast<std::size_t>(rng.index(nodes.size() - 1));
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i] == exclude) continue;
    if (pick-- == 0) return nodes[i];
  }
  return nodes[0] == exclude ? nodes[1] : nodes[0];
}

}  // namespace heer
