#include "heer/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "heer/error.hpp"
#include "heer/rng.hpp"
#include "text.hpp"

namespace heer {
namespace {

[[noreturn]] void fail_at(std::string_view source, std::size_t line, const std::string& what) {
  std::ostringstream msg;
  msg << "hin-graph: " << source << ":" << line << ": " << what;
  throw ValidationError(msg.str());
}

bool valid_name(std::string_view name) {
  return !name.empty() && name.find_first_of("\t\n\r") == std::string_view::npos;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("hin-graph: cannot open " + path.string());
  return in;
}

}  // namespace

// ---------------------------------------------------------------- Schema

TypeId Schema::add_node_type(std::string name) {
  if (!valid_name(name)) throw ValidationError("hin-graph: invalid node type name '" + name + "'");
  if (find_node_type(name)) throw ValidationError("hin-graph: duplicate node type '" + name + "'");
  node_types_.push_back(std::move(name));
  return static_cast<TypeId>(node_types_.size() - 1);
}

TypeId Schema::add_edge_type(std::string name, std::string_view src_type,
                             std::string_view dst_type, bool directed) {
  if (!valid_name(name)) throw ValidationError("hin-graph: invalid edge type name '" + name + "'");
  if (find_edge_type(name)) throw ValidationError("hin-graph: duplicate edge type '" + name + "'");
  const auto src = find_node_type(src_type);
  const auto dst = find_node_type(dst_type);
  if (!src) throw ValidationError("hin-graph: undeclared node type '" + std::string(src_type) + "'");
  if (!dst) throw ValidationError("hin-graph: undeclared node type '" + std::string(dst_type) + "'");
  edge_types_.push_back(EdgeType{std::move(name), *src, *dst, directed});
  return static_cast<TypeId>(edge_types_.size() - 1);
}

std::optional<TypeId> Schema::find_node_type(std::string_view name) const {
  for (std::size_t i = 0; i < node_types_.size(); ++i) {
    if (node_types_[i] == name) return static_cast<TypeId>(i);
  }
  return std::nullopt;
}

std::optional<TypeId> Schema::find_edge_type(std::string_view name) const {
  for (std::size_t i = 0; i < edge_types_.size(); ++i) {
    if (edge_types_[i].name == name) return static_cast<TypeId>(i);
  }
  return std::nullopt;
}

TypeId Schema::node_type_id(std::string_view name) const {
  if (auto t = find_node_type(name)) return *t;
  throw ValidationError("hin-graph: unknown node type '" + std::string(name) + "'");
}

TypeId Schema::edge_type_id(std::string_view name) const {
  if (auto r = find_edge_type(name)) return *r;
  throw ValidationError("hin-graph: unknown edge type '" + std::string(name) + "'");
}

Schema parse_schema(std::istream& in, std::string_view source) {
  enum class Section { None, Nodes, Edges };
  Section section = Section::None;
  Schema schema;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto line = text::strip_cr(raw);
    if (line.empty()) continue;
    if (line == "@nodes") {
      section = Section::Nodes;
      continue;
    }
    if (line == "@edges") {
      section = Section::Edges;
      continue;
    }
    // Schema errors from add_* are re-raised with the line number attached.
    auto declare = [&](auto&& add) {
      try {
        add();
      } catch (const ValidationError& e) {
        fail_at(source, lineno, std::string(e.what()).substr(std::string_view("hin-graph: ").size()));
      }
    };
    switch (section) {
      case Section::None:
        fail_at(source, lineno, "expected '@nodes' section header");
      case Section::Nodes:
        declare([&] { schema.add_node_type(std::string(line)); });
        break;
      case Section::Edges: {
        const auto parts = text::split(line, '\t');
        if (parts.size() != 4) fail_at(source, lineno, "expected name<TAB>src<TAB>dst<TAB>d|u");
        if (parts[3] != "d" && parts[3] != "u") fail_at(source, lineno, "direction must be 'd' or 'u'");
        declare([&] { schema.add_edge_type(std::string(parts[0]), parts[1], parts[2], parts[3] == "d"); });
        break;
      }
    }
  }
  if (schema.num_node_types() == 0) throw ValidationError("hin-graph: " + std::string(source) + ": no node types declared");
  return schema;
}

Schema load_schema(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_schema(in, path.string());
}

void write_schema(std::ostream& out, const Schema& schema) {
  out << "@nodes\n";
  for (const auto& t : schema.node_types()) out << t << '\n';
  out << "@edges\n";
  for (const auto& r : schema.edge_types()) {
    out << r.name << '\t' << schema.node_type_name(r.src) << '\t' << schema.node_type_name(r.dst)
        << '\t' << (r.directed ? 'd' : 'u') << '\n';
  }
}

// ---------------------------------------------------------------- HinGraph

HinGraph::HinGraph(Schema schema, std::vector<std::string> node_ids,
                   std::vector<TypeId> node_types, std::vector<TypedEdge> edges)
    : schema_(std::move(schema)), node_ids_(std::move(node_ids)), node_types_(std::move(node_types)) {
  if (node_ids_.size() != node_types_.size()) {
    throw ValidationError("hin-graph: node id and node type lists differ in length");
  }
  if (node_ids_.size() >= std::numeric_limits<NodeId>::max()) {
    throw ValidationError("hin-graph: too many nodes");
  }
  by_type_.resize(schema_.num_node_types());
  index_.reserve(node_ids_.size());
  for (NodeId u = 0; u < node_ids_.size(); ++u) {
    if (!valid_name(node_ids_[u])) throw ValidationError("hin-graph: invalid node id '" + node_ids_[u] + "'");
    if (node_types_[u] >= schema_.num_node_types()) {
      throw ValidationError("hin-graph: node '" + node_ids_[u] + "' has an unknown type");
    }
    if (!index_.emplace(node_ids_[u], u).second) {
      throw ValidationError("hin-graph: duplicate node id '" + node_ids_[u] + "'");
    }
    by_type_[node_types_[u]].push_back(u);
  }

  edges_.resize(schema_.num_edge_types());
  for (auto e : edges) {
    if (e.type >= schema_.num_edge_types()) throw ValidationError("hin-graph: unknown edge type id");
    if (e.u >= num_nodes() || e.v >= num_nodes()) throw ValidationError("hin-graph: edge references unknown node");
    const auto& et = schema_.edge_type(e.type);
    if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
      throw ValidationError("hin-graph: non-positive weight on edge (" + node_ids_[e.u] + ", " +
                            node_ids_[e.v] + ", " + et.name + ")");
    }
    if (e.u == e.v) throw ValidationError("hin-graph: self-loop on node '" + node_ids_[e.u] + "'");
    if (!consistent(e.u, e.v, e.type)) {
      throw ValidationError("hin-graph: endpoint type mismatch for edge (" + node_ids_[e.u] + ", " +
                            node_ids_[e.v] + ") of type '" + et.name + "'");
    }
    if (!et.directed && e.u > e.v) std::swap(e.u, e.v);
    edges_[e.type].push_back(Edge{e.u, e.v, e.weight});
  }

  edge_keys_.resize(edges_.size());
  for (std::size_t r = 0; r < edges_.size(); ++r) {
    auto& list = edges_[r];
    std::stable_sort(list.begin(), list.end(), [](const Edge& a, const Edge& b) {
      return a.u != b.u ? a.u < b.u : a.v < b.v;
    });
    std::vector<Edge> merged;
    merged.reserve(list.size());
    for (const auto& e : list) {
      if (!merged.empty() && merged.back().u == e.u && merged.back().v == e.v) {
        merged.back().weight += e.weight;
      } else {
        merged.push_back(e);
      }
    }
    list = std::move(merged);
    num_edges_ += list.size();
    edge_keys_[r].reserve(list.size());
    for (const auto& e : list) edge_keys_[r].insert(pair_key(e.u, e.v));
  }
  compute_degrees(out_deg_, in_deg_);
}

void HinGraph::compute_degrees(std::vector<double>& out, std::vector<double>& in) const {
  const std::size_t n = num_nodes();
  out.assign(edges_.size() * n, 0.0);
  in.assign(edges_.size() * n, 0.0);
  for (std::size_t r = 0; r < edges_.size(); ++r) {
    const bool directed = schema_.edge_type(static_cast<TypeId>(r)).directed;
    for (const auto& e : edges_[r]) {
      out[r * n + e.u] += e.weight;
      in[r * n + e.v] += e.weight;
      if (!directed) {
        out[r * n + e.v] += e.weight;
        in[r * n + e.u] += e.weight;
      }
    }
  }
}

double HinGraph::degree_discrepancy() const {
  std::vector<double> out, in;
  compute_degrees(out, in);
  double worst = 0.0;
  auto check = [&worst](double a, double b) {
    const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
    worst = std::max(worst, std::abs(a - b) / scale);
  };
  for (std::size_t i = 0; i < out.size(); ++i) {
    check(out[i], out_deg_[i]);
    check(in[i], in_deg_[i]);
  }
  return worst;
}

std::optional<NodeId> HinGraph::find_node(std::string_view id) const {
  const auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<TypedEdge> HinGraph::all_edges() const {
  std::vector<TypedEdge> out;
  out.reserve(num_edges_);
  for (std::size_t r = 0; r < edges_.size(); ++r) {
    for (const auto& e : edges_[r]) out.push_back(TypedEdge{e.u, e.v, static_cast<TypeId>(r), e.weight});
  }
  return out;
}

double HinGraph::total_weight() const {
  double total = 0.0;
  for (const auto& list : edges_) {
    for (const auto& e : list) total += e.weight;
  }
  return total;
}

double HinGraph::total_degree(NodeId u) const {
  double d = 0.0;
  for (std::size_t r = 0; r < edges_.size(); ++r) {
    d += out_deg_[r * num_nodes() + u];
    if (schema_.edge_type(static_cast<TypeId>(r)).directed) d += in_deg_[r * num_nodes() + u];
  }
  return d;
}

bool HinGraph::consistent(NodeId u, NodeId v, TypeId r) const {
  const auto& et = schema_.edge_type(r);
  const TypeId tu = node_types_[u];
  const TypeId tv = node_types_[v];
  if (tu == et.src && tv == et.dst) return true;
  return !et.directed && tu == et.dst && tv == et.src;
}

bool HinGraph::has_edge(NodeId u, NodeId v, TypeId r) const {
  if (!schema_.edge_type(r).directed && u > v) std::swap(u, v);
  return edge_keys_[r].contains(pair_key(u, v));
}

HinGraph HinGraph::with_edges(std::vector<TypedEdge> edges) const {
  return HinGraph(schema_, node_ids_, node_types_, std::move(edges));
}

bool HinGraph::operator==(const HinGraph& other) const {
  return schema_ == other.schema_ && node_ids_ == other.node_ids_ &&
         node_types_ == other.node_types_ && edges_ == other.edges_ &&
         out_deg_ == other.out_deg_ && in_deg_ == other.in_deg_;
}

// ---------------------------------------------------------------- files

namespace {

std::vector<TypedEdge> read_edge_lines(const Schema& schema,
                                       const std::unordered_map<std::string, NodeId>& index,
                                       const std::vector<TypeId>& node_types, std::istream& in,
                                       std::string_view source) {
  std::vector<TypedEdge> edges;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto line = text::strip_cr(raw);
    if (line.empty()) continue;
    const auto parts = text::split(line, '\t');
    if (parts.size() != 4) fail_at(source, lineno, "expected src<TAB>dst<TAB>edge_type<TAB>weight");
    const auto u = index.find(std::string(parts[0]));
    if (u == index.end()) fail_at(source, lineno, "unknown node id '" + std::string(parts[0]) + "'");
    const auto v = index.find(std::string(parts[1]));
    if (v == index.end()) fail_at(source, lineno, "unknown node id '" + std::string(parts[1]) + "'");
    const auto r = schema.find_edge_type(parts[2]);
    if (!r) fail_at(source, lineno, "unknown edge type '" + std::string(parts[2]) + "'");
    const auto w = text::parse_double(parts[3]);
    if (!w) fail_at(source, lineno, "malformed weight '" + std::string(parts[3]) + "'");
    if (!(*w > 0.0) || !std::isfinite(*w)) fail_at(source, lineno, "non-positive weight");
    if (u->second == v->second) fail_at(source, lineno, "self-loop on node '" + std::string(parts[0]) + "'");
    const auto& et = schema.edge_type(*r);
    const TypeId tu = node_types[u->second];
    const TypeId tv = node_types[v->second];
    const bool ok = (tu == et.src && tv == et.dst) || (!et.directed && tu == et.dst && tv == et.src);
    if (!ok) fail_at(source, lineno, "endpoint type mismatch for edge type '" + et.name + "'");
    edges.push_back(TypedEdge{u->second, v->second, *r, *w});
  }
  return edges;
}

}  // namespace

HinGraph parse_graph(const Schema& schema, std::istream& nodes, std::istream& edges,
                     std::string_view node_source, std::string_view edge_source) {
  std::vector<std::string> ids;
  std::vector<TypeId> types;
  std::unordered_map<std::string, NodeId> index;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(nodes, raw)) {
    ++lineno;
    const auto line = text::strip_cr(raw);
    if (line.empty()) continue;
    const auto parts = text::split(line, '\t');
    if (parts.size() != 2) fail_at(node_source, lineno, "expected node_id<TAB>node_type");
    if (!valid_name(parts[0])) fail_at(node_source, lineno, "empty node id");
    const auto t = schema.find_node_type(parts[1]);
    if (!t) fail_at(node_source, lineno, "undeclared node type '" + std::string(parts[1]) + "'");
    if (!index.emplace(std::string(parts[0]), static_cast<NodeId>(ids.size())).second) {
      fail_at(node_source, lineno, "duplicate node id '" + std::string(parts[0]) + "'");
    }
    ids.emplace_back(parts[0]);
    types.push_back(*t);
  }
  auto edge_list = read_edge_lines(schema, index, types, edges, edge_source);
  return HinGraph(schema, std::move(ids), std::move(types), std::move(edge_list));
}

HinGraph load_graph(const Schema& schema, const std::filesystem::path& node_path,
                    const std::filesystem::path& edge_path) {
  auto nodes = open_input(node_path);
  auto edges = open_input(edge_path);
  return parse_graph(schema, nodes, edges, node_path.string(), edge_path.string());
}

std::vector<TypedEdge> parse_edges(const HinGraph& graph, std::istream& in, std::string_view source) {
  std::unordered_map<std::string, NodeId> index;
  index.reserve(graph.num_nodes());
  std::vector<TypeId> types(graph.num_nodes());
  for (NodeId u = 0; u < graph.num_nodes(); ++u) {
    index.emplace(graph.node_id(u), u);
    types[u] = graph.node_type(u);
  }
  auto edges = read_edge_lines(graph.schema(), index, types, in, source);
  for (auto& e : edges) {
    if (!graph.schema().edge_type(e.type).directed && e.u > e.v) std::swap(e.u, e.v);
  }
  return edges;
}

std::vector<TypedEdge> load_edges(const HinGraph& graph, const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_edges(graph, in, path.string());
}

void write_nodes(std::ostream& out, const HinGraph& graph) {
  for (NodeId u = 0; u < graph.num_nodes(); ++u) {
    out << graph.node_id(u) << '\t' << graph.schema().node_type_name(graph.node_type(u)) << '\n';
  }
}

void write_edges(std::ostream& out, const HinGraph& graph, std::span<const TypedEdge> edges) {
  for (const auto& e : edges) {
    out << graph.node_id(e.u) << '\t' << graph.node_id(e.v) << '\t'
        << graph.schema().edge_type(e.type).name << '\t' << text::shortest(e.weight) << '\n';
  }
}

void write_edges(std::ostream& out, const HinGraph& graph) {
  const auto edges = graph.all_edges();
  write_edges(out, graph, edges);
}

// ---------------------------------------------------------------- knock-out

KnockoutSplit knockout(const HinGraph& graph, double kappa, std::uint64_t seed) {
  if (!(kappa > 0.0 && kappa < 1.0)) throw ValidationError("hin-graph: kappa must be in (0,1)");
  auto edges = graph.all_edges();
  const auto n = edges.size();
  const auto n_removed = static_cast<std::size_t>(std::llround(kappa * static_cast<double>(n)));

  // Partial Fisher-Yates: the first n_removed slots become the sample.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = 0; i < n_removed; ++i) {
    const std::size_t j = i + rng.index(n - i);
    std::swap(order[i], order[j]);
  }
  std::vector<char> is_removed(n, 0);
  KnockoutSplit split;
  split.kappa = kappa;
  split.seed = seed;
  split.removed.reserve(n_removed);
  for (std::size_t i = 0; i < n_removed; ++i) {
    is_removed[order[i]] = 1;
    split.removed.push_back(edges[order[i]]);
  }
  std::vector<TypedEdge> kept;
  kept.reserve(n - n_removed);
  for (std::size_t i = 0; i < n; ++i) {
    if (!is_removed[i]) kept.push_back(edges[i]);
  }
  split.retained = graph.with_edges(std::move(kept));
  return split;
}

}  // namespace heer
