#include "heer/model.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "heer/error.hpp"
#include "text.hpp"

namespace heer {

EmbeddingStore::EmbeddingStore(std::size_t num_nodes, std::size_t dim)
    : num_nodes_(num_nodes), dim_(dim), data_(num_nodes * dim, 0.0) {
  if (dim == 0 || dim % 2 != 0) throw ValidationError("heer-model: embedding dimension must be even and positive");
}

MetricStore::MetricStore(std::size_t num_types, std::size_t dim, double fill)
    : num_types_(num_types), dim_(dim), data_(num_types * dim, fill) {
  if (dim == 0) throw ValidationError("heer-model: metric dimension must be positive");
}

std::vector<double> edge_embedding(const EmbeddingStore& store, NodeId u, NodeId v, bool directed) {
  const std::size_t h = store.half_dim();
  const auto ou = store.outward(u), iu = store.inward(u);
  const auto ov = store.outward(v), iv = store.inward(v);
  std::vector<double> g(h);
  for (std::size_t k = 0; k < h; ++k) {
    g[k] = directed ? 2.0 * (ou[k] * iv[k]) : ou[k] * ov[k] + iu[k] * iv[k];
  }
  return g;
}

double raw_score(const EmbeddingStore& store, std::span<const double> mu, NodeId u, NodeId v,
                 bool directed) {
  const std::size_t h = store.half_dim();
  const double* fu = store.column(u).data();
  const double* fv = store.column(v).data();
  double s = 0.0;
  if (directed) {
    for (std::size_t k = 0; k < h; ++k) s += mu[k] * (2.0 * (fu[k] * fv[h + k]));
  } else {
    for (std::size_t k = 0; k < h; ++k) s += mu[k] * (fu[k] * fv[k] + fu[h + k] * fv[h + k]);
  }
  return s;
}

double edge_score(const HinGraph& graph, const EmbeddingStore& store, const MetricStore& metrics,
                  NodeId u, NodeId v, TypeId r) {
  if (!graph.consistent(u, v, r)) {
    throw ValidationError("heer-model: pair (" + graph.node_id(u) + ", " + graph.node_id(v) +
                          ") is not consistent with edge type '" + graph.schema().edge_type(r).name + "'");
  }
  return raw_score(store, metrics.column(r), u, v, graph.schema().edge_type(r).directed);
}

double log_softmax_term(double score, std::span<const double> denominator) {
  double top = score;
  for (double d : denominator) top = std::max(top, d);
  double sum = 0.0;
  for (double d : denominator) sum += std::exp(d - top);
  return (score - top) - std::log(sum);
}

namespace {

double log_closeness(const HinGraph& graph, const EmbeddingStore& store, const MetricStore& metrics,
                     NodeId u, NodeId v, TypeId r, std::vector<double>& scratch) {
  const bool directed = graph.schema().edge_type(r).directed;
  const auto mu = metrics.column(r);
  scratch.clear();
  for (NodeId x = 0; x < graph.num_nodes(); ++x) {
    if (graph.consistent(u, x, r)) scratch.push_back(raw_score(store, mu, u, x, directed));
  }
  for (NodeId x = 0; x < graph.num_nodes(); ++x) {
    if (graph.consistent(x, v, r)) scratch.push_back(raw_score(store, mu, x, v, directed));
  }
  return log_softmax_term(raw_score(store, mu, u, v, directed), scratch);
}

}  // namespace

double typed_closeness_exact(const HinGraph& graph, const EmbeddingStore& store,
                             const MetricStore& metrics, NodeId u, NodeId v, TypeId r) {
  if (!graph.consistent(u, v, r)) return 0.0;
  std::vector<double> scratch;
  return std::exp(log_closeness(graph, store, metrics, u, v, r, scratch));
}

double kl_objective_exact(const HinGraph& graph, const EmbeddingStore& store,
                          const MetricStore& metrics, TypeId r) {
  std::vector<double> scratch;
  double total = 0.0;
  for (const auto& e : graph.edges(r)) {
    total -= e.weight * log_closeness(graph, store, metrics, e.u, e.v, r, scratch);
  }
  return total;
}

double kl_objective_exact(const HinGraph& graph, const EmbeddingStore& store,
                          const MetricStore& metrics) {
  double total = 0.0;
  for (TypeId r = 0; r < graph.num_edge_types(); ++r) total += kl_objective_exact(graph, store, metrics, r);
  return total;
}

// ---------------------------------------------------------------- NS loss

const NodeGrad* SampleLossGrad::find(NodeId u) const {
  for (const auto& g : node_grads) {
    if (g.node == u) return &g;
  }
  return nullptr;
}

namespace {

// log(1 + e^x)
double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double load_value(const double& x, bool shared) {
  if (!shared) return x;
  return std::atomic_ref<double>(const_cast<double&>(x)).load(std::memory_order_relaxed);
}

/// Local copies of every parameter a sample touches.
struct Gathered {
  std::vector<NodeId> nodes;
  std::vector<double> columns;
  std::vector<double> mu;

  std::size_t slot(NodeId u) const {
    return static_cast<std::size_t>(std::find(nodes.begin(), nodes.end(), u) - nodes.begin());
  }
};

void gather(const EmbeddingStore& store, const MetricStore& metrics, const NsSample& s, bool shared,
            Gathered& g) {
  g.nodes.clear();
  auto add = [&g](NodeId x) {
    if (std::find(g.nodes.begin(), g.nodes.end(), x) == g.nodes.end()) g.nodes.push_back(x);
  };
  add(s.u);
  add(s.v);
  for (NodeId x : s.neg_v) add(x);
  for (NodeId x : s.neg_u) add(x);

  const std::size_t d = store.dim();
  g.columns.resize(g.nodes.size() * d);
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const auto col = store.column(g.nodes[i]);
    for (std::size_t k = 0; k < d; ++k) g.columns[i * d + k] = load_value(col[k], shared);
  }
  const auto mu = metrics.column(s.type);
  g.mu.resize(mu.size());
  for (std::size_t k = 0; k < mu.size(); ++k) g.mu[k] = load_value(mu[k], shared);
}

[[noreturn]] void non_finite(const NsSample& s, const char* what) {
  std::ostringstream msg;
  msg << "heer-model: non-finite " << what << " for sample (u=" << s.u << ", v=" << s.v
      << ", type=" << s.type << ", negatives=" << s.neg_v.size() << "+" << s.neg_u.size() << ")";
  throw ComputeError(msg.str());
}

void compute(const Gathered& g, std::size_t dim, const NsSample& s, SampleLossGrad& out) {
  const std::size_t h = dim / 2;
  if (g.mu.size() != h) throw ValidationError("heer-model: metric dimension must equal half the embedding dimension");
  out.type = s.type;
  out.loss = 0.0;
  out.node_grads.resize(g.nodes.size());
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    out.node_grads[i].node = g.nodes[i];
    out.node_grads[i].grad.assign(dim, 0.0);
  }
  out.metric_grad.assign(h, 0.0);
  const double* mu = g.mu.data();
  double* gmu = out.metric_grad.data();

  // positive: loss = softplus(-s), dloss/ds = -sigmoid(-s)
  // negative: loss = softplus(s),  dloss/ds =  sigmoid(s)
  auto pair = [&](NodeId a_node, NodeId b_node, bool positive) {
    const std::size_t a = g.slot(a_node), b = g.slot(b_node);
    const double* fa = g.columns.data() + a * dim;
    const double* fb = g.columns.data() + b * dim;
    double score = 0.0;
    if (s.directed) {
      for (std::size_t k = 0; k < h; ++k) score += mu[k] * (2.0 * (fa[k] * fb[h + k]));
    } else {
      for (std::size_t k = 0; k < h; ++k) score += mu[k] * (fa[k] * fb[k] + fa[h + k] * fb[h + k]);
    }
    if (!std::isfinite(score)) non_finite(s, "score");
    out.loss += positive ? softplus(-score) : softplus(score);
    const double c = positive ? -sigmoid(-score) : sigmoid(score);
    double* ga = out.node_grads[a].grad.data();
    double* gb = out.node_grads[b].grad.data();
    if (s.directed) {
      for (std::size_t k = 0; k < h; ++k) {
        const double cm = 2.0 * c * mu[k];
        gmu[k] += c * (2.0 * (fa[k] * fb[h + k]));
        ga[k] += cm * fb[h + k];
        gb[h + k] += cm * fa[k];
      }
    } else {
      for (std::size_t k = 0; k < h; ++k) {
        const double cm = c * mu[k];
        gmu[k] += c * (fa[k] * fb[k] + fa[h + k] * fb[h + k]);
        ga[k] += cm * fb[k];
        gb[k] += cm * fa[k];
        ga[h + k] += cm * fb[h + k];
        gb[h + k] += cm * fa[h + k];
      }
    }
  };

  pair(s.u, s.v, true);
  for (NodeId x : s.neg_v) pair(s.u, x, false);
  for (NodeId x : s.neg_u) pair(x, s.v, false);
  if (!std::isfinite(out.loss)) non_finite(s, "loss");
  for (const auto& ng : out.node_grads) {
    for (double x : ng.grad) {
      if (!std::isfinite(x)) non_finite(s, "gradient");
    }
  }
  for (double x : out.metric_grad) {
    if (!std::isfinite(x)) non_finite(s, "gradient");
  }
}

thread_local Gathered tls_gathered;

}  // namespace

void ns_loss_and_grads(const EmbeddingStore& store, const MetricStore& metrics,
                       const NsSample& sample, SampleLossGrad& out) {
  gather(store, metrics, sample, false, tls_gathered);
  compute(tls_gathered, store.dim(), sample, out);
}

SampleLossGrad ns_loss_and_grads(const EmbeddingStore& store, const MetricStore& metrics,
                                 const NsSample& sample) {
  SampleLossGrad out;
  ns_loss_and_grads(store, metrics, sample, out);
  return out;
}

double ns_loss(const EmbeddingStore& store, const MetricStore& metrics, const NsSample& sample) {
  const auto mu = metrics.column(sample.type);
  double loss = softplus(-raw_score(store, mu, sample.u, sample.v, sample.directed));
  for (NodeId x : sample.neg_v) loss += softplus(raw_score(store, mu, sample.u, x, sample.directed));
  for (NodeId x : sample.neg_u) loss += softplus(raw_score(store, mu, x, sample.v, sample.directed));
  return loss;
}

void ns_loss_and_grads_shared(const EmbeddingStore& store, const MetricStore& metrics,
                              const NsSample& sample, SampleLossGrad& out) {
  gather(store, metrics, sample, true, tls_gathered);
  compute(tls_gathered, store.dim(), sample, out);
}

void sgd_apply(EmbeddingStore& store, MetricStore& metrics, const SampleLossGrad& grads, double lr,
               bool freeze_metrics) {
  for (const auto& ng : grads.node_grads) {
    auto col = store.column(ng.node);
    for (std::size_t k = 0; k < col.size(); ++k) col[k] -= lr * ng.grad[k];
  }
  if (freeze_metrics) return;
  auto mu = metrics.column(grads.type);
  for (std::size_t k = 0; k < mu.size(); ++k) mu[k] -= lr * grads.metric_grad[k];
}

void sgd_apply_shared(EmbeddingStore& store, MetricStore& metrics, const SampleLossGrad& grads,
                      double lr, bool freeze_metrics) {
  auto step = [lr](double& x, double g) {
    std::atomic_ref<double> ref(x);
    ref.store(ref.load(std::memory_order_relaxed) - lr * g, std::memory_order_relaxed);
  };
  for (const auto& ng : grads.node_grads) {
    auto col = store.column(ng.node);
    for (std::size_t k = 0; k < col.size(); ++k) step(col[k], ng.grad[k]);
  }
  if (freeze_metrics) return;
  auto mu = metrics.column(grads.type);
  for (std::size_t k = 0; k < mu.size(); ++k) step(mu[k], grads.metric_grad[k]);
}

// ---------------------------------------------------------------- files

namespace {

[[noreturn]] void io_fail(std::string_view source, std::size_t line, const std::string& what) {
  std::ostringstream msg;
  msg << "heer-model: " << source << ":" << line << ": " << what;
  throw ValidationError(msg.str());
}

/// Splits "label v_1 ... v_d" from the right, so labels may contain spaces.
bool split_row(std::string_view line, std::size_t d, std::string_view& label, std::vector<double>& values) {
  values.assign(d, 0.0);
  std::size_t end = line.size();
  for (std::size_t i = d; i-- > 0;) {
    while (end > 0 && line[end - 1] == ' ') --end;
    if (end == 0) return false;
    const auto space = line.rfind(' ', end - 1);
    if (space == std::string_view::npos) return false;
    const auto value = text::parse_double(line.substr(space + 1, end - space - 1));
    if (!value) return false;
    values[i] = *value;
    end = space;
  }
  while (end > 0 && line[end - 1] == ' ') --end;
  label = line.substr(0, end);
  return !label.empty();
}

std::pair<std::size_t, std::size_t> read_header(std::istream& in, std::string_view source) {
  std::string raw;
  if (!std::getline(in, raw)) io_fail(source, 1, "missing header");
  const auto parts = text::fields(text::strip_cr(raw));
  if (parts.size() != 2) io_fail(source, 1, "header must be '<rows> <dim>'");
  const auto rows = text::parse_int<std::size_t>(parts[0]);
  const auto dim = text::parse_int<std::size_t>(parts[1]);
  if (!rows || !dim || *dim == 0) io_fail(source, 1, "malformed header");
  return {*rows, *dim};
}

template <typename Lookup, typename Store>
void read_rows(std::istream& in, std::string_view source, std::size_t rows, std::size_t dim,
               Lookup&& lookup, Store& store) {
  std::vector<char> seen(rows, 0);
  std::vector<double> values;
  std::string raw;
  std::size_t lineno = 1, count = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto line = text::strip_cr(raw);
    if (line.empty()) continue;
    std::string_view label;
    if (!split_row(line, dim, label, values)) io_fail(source, lineno, "expected a label and " + std::to_string(dim) + " values");
    const auto idx = lookup(label);
    if (!idx) io_fail(source, lineno, "unknown label '" + std::string(label) + "'");
    if (seen[*idx]) io_fail(source, lineno, "duplicate label '" + std::string(label) + "'");
    seen[*idx] = 1;
    ++count;
    std::copy(values.begin(), values.end(), store.column(*idx).begin());
  }
  if (count != rows) io_fail(source, lineno, "expected " + std::to_string(rows) + " rows, found " + std::to_string(count));
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("heer-model: cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("heer-model: cannot write " + path.string());
  return out;
}

void write_row(std::ostream& out, std::string_view label, std::span<const double> values) {
  out << label;
  for (double x : values) out << ' ' << text::exact(x);
  out << '\n';
}

}  // namespace

void write_embeddings(std::ostream& out, const HinGraph& graph, const EmbeddingStore& store) {
  out << store.num_nodes() << ' ' << store.dim() << '\n';
  for (NodeId u = 0; u < store.num_nodes(); ++u) write_row(out, graph.node_id(u), store.column(u));
}

EmbeddingStore read_embeddings(std::istream& in, const HinGraph& graph, std::string_view source) {
  const auto [rows, dim] = read_header(in, source);
  if (rows != graph.num_nodes()) {
    io_fail(source, 1, "file has " + std::to_string(rows) + " nodes, graph has " + std::to_string(graph.num_nodes()));
  }
  if (dim % 2 != 0) io_fail(source, 1, "embedding dimension must be even");
  EmbeddingStore store(rows, dim);
  read_rows(in, source, rows, dim, [&graph](std::string_view id) { return graph.find_node(id); }, store);
  return store;
}

void save_embeddings(const std::filesystem::path& path, const HinGraph& graph, const EmbeddingStore& store) {
  auto out = open_out(path);
  write_embeddings(out, graph, store);
}

EmbeddingStore load_embeddings(const std::filesystem::path& path, const HinGraph& graph) {
  auto in = open_in(path);
  return read_embeddings(in, graph, path.string());
}

void write_metrics(std::ostream& out, const Schema& schema, const MetricStore& metrics) {
  out << metrics.num_types() << ' ' << metrics.dim() << '\n';
  for (TypeId r = 0; r < metrics.num_types(); ++r) write_row(out, schema.edge_type(r).name, metrics.column(r));
}

MetricStore read_metrics(std::istream& in, const Schema& schema, std::string_view source) {
  const auto [rows, dim] = read_header(in, source);
  if (rows != schema.num_edge_types()) io_fail(source, 1, "row count does not match the number of edge types");
  MetricStore metrics(rows, dim);
  read_rows(in, source, rows, dim, [&schema](std::string_view name) { return schema.find_edge_type(name); }, metrics);
  return metrics;
}

void save_metrics(const std::filesystem::path& path, const Schema& schema, const MetricStore& metrics) {
  auto out = open_out(path);
  write_metrics(out, schema, metrics);
}

MetricStore load_metrics(const std::filesystem::path& path, const Schema& schema) {
  auto in = open_in(path);
  return read_metrics(in, schema, path.string());
}

LabeledMetrics load_labeled_metrics(const std::filesystem::path& path) {
  auto in = open_in(path);
  const std::string source = path.string();
  const auto [rows, dim] = read_header(in, source);
  LabeledMetrics out{{}, MetricStore(rows, dim)};
  std::vector<double> values;
  std::string raw;
  std::size_t lineno = 1;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto line = text::strip_cr(raw);
    if (line.empty()) continue;
    std::string_view label;
    if (out.names.size() == rows) io_fail(source, lineno, "more rows than declared");
    if (!split_row(line, dim, label, values)) io_fail(source, lineno, "expected a label and " + std::to_string(dim) + " values");
    std::copy(values.begin(), values.end(), out.metrics.column(static_cast<TypeId>(out.names.size())).begin());
    out.names.emplace_back(label);
  }
  if (out.names.size() != rows) io_fail(source, lineno, "fewer rows than declared");
  return out;
}

}  // namespace heer
