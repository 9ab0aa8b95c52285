#include "heer/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "heer/error.hpp"
#include "heer/rng.hpp"
#include "text.hpp"

namespace heer {

// ---------------------------------------------------------------- reachability

TypedAdjacency::TypedAdjacency(const HinGraph& graph, TypeId r, bool reverse) {
  const std::size_t n = graph.num_nodes();
  const bool directed = graph.schema().edge_type(r).directed;
  std::vector<std::vector<Entry>> adj(n);
  for (const auto& e : graph.edges(r)) {
    if (directed) {
      if (reverse) {
        adj[e.v].push_back({e.u, e.weight});
      } else {
        adj[e.u].push_back({e.v, e.weight});
      }
    } else {
      adj[e.u].push_back({e.v, e.weight});
      adj[e.v].push_back({e.u, e.weight});
    }
  }
  row_ptr_.assign(n + 1, 0);
  std::vector<std::size_t> col_count(n, 0);
  for (NodeId u = 0; u < n; ++u) {
    auto& row = adj[u];
    std::sort(row.begin(), row.end(), [](const Entry& a, const Entry& b) { return a.node < b.node; });
    double sum = 0.0;
    for (const auto& x : row) sum += x.value;
    for (auto& x : row) {
      x.value /= sum;
      ++col_count[x.node];
    }
    row_ptr_[u + 1] = row_ptr_[u] + row.size();
  }
  rows_.reserve(row_ptr_[n]);
  for (const auto& row : adj) rows_.insert(rows_.end(), row.begin(), row.end());

  col_ptr_.assign(n + 1, 0);
  for (NodeId x = 0; x < n; ++x) col_ptr_[x + 1] = col_ptr_[x] + col_count[x];
  cols_.resize(rows_.size());
  std::vector<std::size_t> fill(col_ptr_.begin(), col_ptr_.end() - 1);
  for (NodeId u = 0; u < n; ++u) {
    for (const auto& x : row(u)) cols_[fill[x.node]++] = Entry{u, x.value};
  }
}

std::vector<TypedAdjacency::Entry> TypedAdjacency::reachability(NodeId u) const {
  std::vector<Entry> acc;
  for (const auto& [x, p] : row(u)) {
    for (const auto& [v, q] : col(x)) acc.push_back({v, p * q});
  }
  std::sort(acc.begin(), acc.end(), [](const Entry& a, const Entry& b) { return a.node < b.node; });
  std::vector<Entry> out;
  for (const auto& e : acc) {
    if (!out.empty() && out.back().node == e.node) {
      out.back().value += e.value;
    } else {
      out.push_back(e);
    }
  }
  return out;
}

double reachability(const TypedAdjacency& adj, NodeId u, NodeId v) {
  const auto a = adj.row(u), b = adj.row(v);
  double s = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i].node < b[j].node) {
      ++i;
    } else if (b[j].node < a[i].node) {
      ++j;
    } else {
      s += a[i++].value * b[j++].value;
    }
  }
  return s;
}

// ---------------------------------------------------------------- Jaccard

namespace {

bool hub_side_ok(const EdgeType& et, TypeId t, bool reverse) {
  if (et.directed) return reverse ? et.dst == t : et.src == t;
  return et.src == t || et.dst == t;
}

void check_hub(const Schema& schema, TypeId t, TypeId r1, TypeId r2, bool reverse) {
  for (TypeId r : {r1, r2}) {
    if (!hub_side_ok(schema.edge_type(r), t, reverse)) {
      throw ValidationError("analysis: node type '" + schema.node_type_name(t) + "' is not the hub side of edge type '" +
                            schema.edge_type(r).name + "'");
    }
  }
}

double jaccard_from_rows(const HinGraph& graph, TypeId t, const std::vector<TypedAdjacency::Entry>& a,
                         const std::vector<TypedAdjacency::Entry>& b) {
  double num = 0.0, den = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    NodeId node;
    double x = 0.0, y = 0.0;
    if (j == b.size() || (i < a.size() && a[i].node < b[j].node)) {
      node = a[i].node;
      x = a[i++].value;
    } else if (i == a.size() || b[j].node < a[i].node) {
      node = b[j].node;
      y = b[j++].value;
    } else {
      node = a[i].node;
      x = a[i++].value;
      y = b[j++].value;
    }
    if (graph.node_type(node) != t) continue;
    num += std::min(x, y);
    den += std::max(x, y);
  }
  return den > 0.0 ? num / den : 0.0;
}

}  // namespace

double jaccard_coefficient(const HinGraph& graph, NodeId u, TypeId r1, TypeId r2, bool reverse) {
  const TypeId t = graph.node_type(u);
  check_hub(graph.schema(), t, r1, r2, reverse);
  const TypedAdjacency a(graph, r1, reverse), b(graph, r2, reverse);
  return jaccard_from_rows(graph, t, a.reachability(u), b.reachability(u));
}

JaccardProfile jaccard_profile(const HinGraph& graph, TypeId r1, TypeId r2, std::optional<TypeId> hub,
                               bool reverse) {
  const auto& schema = graph.schema();
  if (!hub) {
    const auto& e1 = schema.edge_type(r1);
    for (TypeId t : {e1.src, e1.dst}) {
      if (hub_side_ok(e1, t, reverse) && hub_side_ok(schema.edge_type(r2), t, reverse)) {
        hub = t;
        break;
      }
    }
    if (!hub) {
      throw ValidationError("analysis: edge types '" + e1.name + "' and '" + schema.edge_type(r2).name +
                            "' share no hub node type");
    }
  }
  check_hub(schema, *hub, r1, r2, reverse);
  const TypedAdjacency a(graph, r1, reverse), b(graph, r2, reverse);
  JaccardProfile profile{r1, r2, *hub, {}, {}};
  for (NodeId u : graph.nodes_of_type(*hub)) {
    profile.nodes.push_back(u);
    profile.coefficients.push_back(jaccard_from_rows(graph, *hub, a.reachability(u), b.reachability(u)));
  }
  return profile;
}

std::vector<std::pair<double, double>> jaccard_cdf(const JaccardProfile& profile, std::span<const double> grid) {
  auto sorted = profile.coefficients;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::pair<double, double>> out;
  out.reserve(grid.size());
  for (double threshold : grid) {
    const auto count = std::upper_bound(sorted.begin(), sorted.end(), threshold) - sorted.begin();
    out.emplace_back(threshold, sorted.empty() ? 1.0 : static_cast<double>(count) / static_cast<double>(sorted.size()));
  }
  return out;
}

std::vector<std::pair<double, double>> jaccard_cdf(const HinGraph& graph, TypeId r1, TypeId r2,
                                                   std::span<const double> grid) {
  return jaccard_cdf(jaccard_profile(graph, r1, r2), grid);
}

std::vector<double> default_cdf_grid() {
  std::vector<double> grid{0.0};
  for (int i = -16; i <= 0; ++i) grid.push_back(std::pow(10.0, i / 2.0));
  grid.push_back(5e-5);
  std::sort(grid.begin(), grid.end());
  return grid;
}

// ---------------------------------------------------------------- metrics

MetricStore standardize_metrics(const MetricStore& metrics) {
  const std::size_t d = metrics.dim();
  if (d < 2) throw ValidationError("analysis: standardization needs metric dimension >= 2");
  MetricStore out = metrics;
  for (TypeId r = 0; r < metrics.num_types(); ++r) {
    auto col = out.column(r);
    const double mean = std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(d);
    double var = 0.0;
    for (double x : col) var += (x - mean) * (x - mean);
    const double sd = std::sqrt(var / static_cast<double>(d));
    if (!(sd > 0.0)) {
      throw ValidationError("analysis: metric column " + std::to_string(r) + " has zero variance");
    }
    for (double& x : col) x = (x - mean) / sd;
  }
  return out;
}

double metric_similarity(const MetricStore& metrics, TypeId r1, TypeId r2) {
  const auto z = standardize_metrics(metrics);
  const auto a = z.column(r1), b = z.column(r2);
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += a[k] * b[k];
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  if (!(na > 0.0) || !(nb > 0.0)) throw ValidationError("analysis: cosine similarity of a zero vector");
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

std::vector<std::size_t> heatmap_column_order(const MetricStore& standardized) {
  const std::size_t d = standardized.dim();
  const std::size_t types = standardized.num_types();
  auto at = [&](std::size_t k, TypeId r) { return standardized.column(r)[k]; };
  std::vector<double> norm(d, 0.0);
  for (std::size_t k = 0; k < d; ++k) {
    for (TypeId r = 0; r < types; ++r) norm[k] += at(k, r) * at(k, r);
    norm[k] = std::sqrt(norm[k]);
  }
  auto cosine = [&](std::size_t a, std::size_t b) {
    if (!(norm[a] > 0.0) || !(norm[b] > 0.0)) return 0.0;
    double dot = 0.0;
    for (TypeId r = 0; r < types; ++r) dot += at(a, r) * at(b, r);
    return dot / (norm[a] * norm[b]);
  };
  std::vector<std::size_t> order;
  std::vector<char> used(d, 0);
  std::size_t current = static_cast<std::size_t>(std::max_element(norm.begin(), norm.end()) - norm.begin());
  while (order.size() < d) {
    order.push_back(current);
    used[current] = 1;
    std::size_t best = d;
    double best_sim = -2.0;
    for (std::size_t k = 0; k < d; ++k) {
      if (used[k]) continue;
      const double sim = cosine(current, k);
      if (sim > best_sim) {
        best_sim = sim;
        best = k;
      }
    }
    if (best == d) break;
    current = best;
  }
  return order;
}

namespace {

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string heatmap_csv(const std::vector<std::string>& type_names, const MetricStore& standardized) {
  const auto order = heatmap_column_order(standardized);
  std::ostringstream out;
  out << "edge_type";
  for (std::size_t k : order) out << ",d" << k;
  out << '\n';
  for (TypeId r = 0; r < standardized.num_types(); ++r) {
    out << csv_field(type_names.at(r));
    for (std::size_t k : order) out << ',' << text::exact(standardized.column(r)[k]);
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------- meta-paths

std::vector<MetapathStep> parse_metapath(const Schema& schema, std::string_view spec) {
  std::vector<MetapathStep> path;
  for (auto part : text::split(spec, ',')) {
    while (!part.empty() && part.front() == ' ') part.remove_prefix(1);
    while (!part.empty() && part.back() == ' ') part.remove_suffix(1);
    MetapathStep step;
    if (!part.empty() && part.front() == '^') {
      step.reverse = true;
      part.remove_prefix(1);
    }
    const auto r = schema.find_edge_type(part);
    if (!r) throw ValidationError("analysis: unknown edge type '" + std::string(part) + "' in meta-path");
    step.type = *r;
    path.push_back(step);
  }
  if (path.empty()) throw ValidationError("analysis: empty meta-path");
  return path;
}

std::vector<NodeId> metapath_neighbors(const HinGraph& graph, NodeId anchor, std::span<const MetapathStep> path,
                                       std::size_t max_nodes, std::uint64_t seed) {
  const auto& schema = graph.schema();
  if (path.empty()) throw ValidationError("analysis: empty meta-path");
  TypeId current_type = graph.node_type(anchor);
  for (std::size_t i = 0; i < path.size(); ++i) {
    const auto& et = schema.edge_type(path[i].type);
    TypeId from, to;
    if (et.directed) {
      from = path[i].reverse ? et.dst : et.src;
      to = path[i].reverse ? et.src : et.dst;
    } else {
      from = current_type == et.src ? et.src : et.dst;
      to = current_type == et.src ? et.dst : et.src;
    }
    if (from != current_type) {
      throw ValidationError("analysis: meta-path step " + std::to_string(i + 1) + " ('" + et.name +
                            "') does not start at node type '" + schema.node_type_name(current_type) + "'");
    }
    current_type = to;
  }

  std::vector<NodeId> frontier{anchor};
  std::vector<char> mark(graph.num_nodes(), 0);
  for (const auto& step : path) {
    const TypedAdjacency adj(graph, step.type, step.reverse);
    std::vector<NodeId> next;
    for (NodeId x : frontier) {
      for (const auto& e : adj.row(x)) {
        if (!mark[e.node]) {
          mark[e.node] = 1;
          next.push_back(e.node);
        }
      }
    }
    for (NodeId x : next) mark[x] = 0;
    frontier = std::move(next);
  }
  std::erase(frontier, anchor);
  std::sort(frontier.begin(), frontier.end());
  if (max_nodes != 0 && frontier.size() > max_nodes) {
    Rng rng(seed);
    for (std::size_t i = 0; i < max_nodes; ++i) {
      std::swap(frontier[i], frontier[i + rng.index(frontier.size() - i)]);
    }
    frontier.resize(max_nodes);
    std::sort(frontier.begin(), frontier.end());
  }
  return frontier;
}

std::string metapath_csv(const HinGraph& graph, const EmbeddingStore& embeddings,
                         const std::vector<std::pair<std::string, std::vector<NodeId>>>& groups) {
  std::ostringstream out;
  out << "node_id,metapath_label";
  for (std::size_t k = 1; k <= embeddings.dim(); ++k) out << ",v_" << k;
  out << '\n';
  for (const auto& [label, nodes] : groups) {
    for (NodeId u : nodes) {
      out << csv_field(graph.node_id(u)) << ',' << csv_field(label);
      for (double x : embeddings.column(u)) out << ',' << text::exact(x);
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace heer
