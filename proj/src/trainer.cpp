#include "heer/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

#include "heer/rng.hpp"
#include "heer/sampler.hpp"

namespace heer {
namespace {

// Stream ids keep the random sequences of the stages independent.
constexpr std::uint64_t kInitStream = 0x696e6974;      // "init"
constexpr std::uint64_t kPretrainStream = 0x6c696e65;  // "line"

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

// ---------------------------------------------------------------- config

void TrainConfig::validate() const {
  auto bad = [](const std::string& what) { throw ValidationError("trainer: " + what); };
  if (dim == 0 || dim % 2 != 0) bad("dim must be even and positive");
  if (!(lr > 0.0) || !std::isfinite(lr)) bad("lr must be positive");
  if (!(rescale > 0.0) || !std::isfinite(rescale)) bad("rescale must be positive");
  if (batch_size == 0) bad("batch-size must be positive");
  if (workers == 0) bad("workers must be positive");
  if (!(noise_alpha >= 0.0) || !std::isfinite(noise_alpha)) bad("noise-alpha must be >= 0");
  if (!(pretrain_lr > 0.0) || !std::isfinite(pretrain_lr)) bad("pretrain-lr must be positive");
}

std::size_t TrainConfig::samples_for(const HinGraph& graph) const {
  return samples_per_epoch != 0 ? samples_per_epoch : graph.num_edges();
}

nlohmann::json TrainConfig::to_json() const {
  return nlohmann::json{{"dim", dim},
                        {"negatives", negatives},
                        {"lr", lr},
                        {"rescale", rescale},
                        {"batch_size", batch_size},
                        {"epochs", epochs},
                        {"samples_per_epoch", samples_per_epoch},
                        {"seed", seed},
                        {"workers", workers},
                        {"freeze_metrics", freeze_metrics},
                        {"noise_alpha", noise_alpha},
                        {"pretrain_epochs", pretrain_epochs},
                        {"pretrain_lr", pretrain_lr}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.dim = j.value("dim", c.dim);
  c.negatives = j.value("negatives", c.negatives);
  c.lr = j.value("lr", c.lr);
  c.rescale = j.value("rescale", c.rescale);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.epochs = j.value("epochs", c.epochs);
  c.samples_per_epoch = j.value("samples_per_epoch", c.samples_per_epoch);
  c.seed = j.value("seed", c.seed);
  c.workers = j.value("workers", c.workers);
  c.freeze_metrics = j.value("freeze_metrics", c.freeze_metrics);
  c.noise_alpha = j.value("noise_alpha", c.noise_alpha);
  c.pretrain_epochs = j.value("pretrain_epochs", c.pretrain_epochs);
  c.pretrain_lr = j.value("pretrain_lr", c.pretrain_lr);
  return c;
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string TrainConfig::hash() const { return fnv1a_hex(to_json().dump()); }

// ---------------------------------------------------------------- pretraining

EmbeddingStore random_embeddings(std::size_t num_nodes, std::size_t dim, std::uint64_t seed) {
  EmbeddingStore store(num_nodes, dim);
  const double half = static_cast<double>(store.half_dim());
  Rng rng(seed, kInitStream);
  for (double& x : store.data()) x = (rng.uniform() - 0.5) / half;
  return store;
}

EmbeddingStore pretrain_line(const HinGraph& graph, const TrainConfig& config) {
  config.validate();
  EmbeddingStore store = random_embeddings(graph.num_nodes(), config.dim, config.seed);
  if (config.pretrain_epochs == 0 || graph.num_edges() == 0) return store;

  const EdgeSampler edges(graph);
  const auto noise = NegativeSampler::homogeneous(graph, config.noise_alpha);
  const std::size_t h = store.half_dim();
  const std::size_t total = config.pretrain_epochs * config.samples_for(graph);
  const double lr_floor = config.pretrain_lr * 1e-4;
  Rng rng(config.seed, kPretrainStream);
  std::vector<double> err(h);

  for (std::size_t step = 0; step < total; ++step) {
    const double lr = std::max(config.pretrain_lr * (1.0 - static_cast<double>(step) / static_cast<double>(total)), lr_floor);
    const auto e = edges.sample(rng);
    auto vertex = store.outward(e.u);
    std::fill(err.begin(), err.end(), 0.0);
    for (std::size_t j = 0; j <= config.negatives; ++j) {
      const NodeId target = j == 0 ? e.v : noise.sample(0, e.v, rng);
      auto context = store.inward(target);
      double x = 0.0;
      for (std::size_t k = 0; k < h; ++k) x += vertex[k] * context[k];
      const double g = ((j == 0 ? 1.0 : 0.0) - sigmoid(x)) * lr;
      for (std::size_t k = 0; k < h; ++k) err[k] += g * context[k];
      for (std::size_t k = 0; k < h; ++k) context[k] += g * vertex[k];
    }
    for (std::size_t k = 0; k < h; ++k) vertex[k] += err[k];
  }
  return store;
}

EmbeddingStore rescale_embeddings(EmbeddingStore store, double factor) {
  if (!(factor > 0.0) || !std::isfinite(factor)) throw ValidationError("trainer: rescale factor must be positive");
  for (double& x : store.data()) x *= factor;
  return store;
}

// ---------------------------------------------------------------- checkpoints

void save_checkpoint(const std::filesystem::path& dir, const HinGraph& graph, const Checkpoint& ckpt) {
  std::filesystem::create_directories(dir);
  save_embeddings(dir / "embeddings.txt", graph, ckpt.embeddings);
  save_metrics(dir / "metrics.txt", graph.schema(), ckpt.metrics);
  const nlohmann::json state{{"epoch", ckpt.epoch},
                             {"seed", ckpt.seed},
                             {"config_hash", ckpt.config_hash},
                             {"loss_trace", ckpt.loss_trace}};
  std::ofstream out(dir / "state.json");
  if (!out) throw Error("trainer: cannot write " + (dir / "state.json").string());
  out << state.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& dir, const HinGraph& graph) {
  Checkpoint ckpt;
  ckpt.embeddings = load_embeddings(dir / "embeddings.txt", graph);
  ckpt.metrics = load_metrics(dir / "metrics.txt", graph.schema());
  std::ifstream in(dir / "state.json");
  if (!in) throw ValidationError("trainer: cannot open " + (dir / "state.json").string());
  try {
    const auto state = nlohmann::json::parse(in);
    ckpt.epoch = state.at("epoch").get<std::size_t>();
    ckpt.seed = state.at("seed").get<std::uint64_t>();
    ckpt.config_hash = state.at("config_hash").get<std::string>();
    ckpt.loss_trace = state.at("loss_trace").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("trainer: malformed state.json: ") + e.what());
  }
  return ckpt;
}

// ---------------------------------------------------------------- HEER

namespace {

struct SampleContext {
  const HinGraph& graph;
  const EdgeSampler& edges;
  const NegativeSampler& noise;
  std::size_t negatives;
};

void draw_sample(const SampleContext& ctx, Rng& rng, NsSample& s) {
  const auto e = ctx.edges.sample(rng);
  s.u = e.u;
  s.v = e.v;
  s.type = e.type;
  s.directed = ctx.graph.schema().edge_type(e.type).directed;
  s.neg_v.resize(ctx.negatives);
  s.neg_u.resize(ctx.negatives);
  const TypeId tv = ctx.graph.node_type(e.v);
  const TypeId tu = ctx.graph.node_type(e.u);
  for (auto& x : s.neg_v) x = ctx.noise.sample(tv, e.v, rng);
  for (auto& x : s.neg_u) x = ctx.noise.sample(tu, e.u, rng);
}

}  // namespace

TrainResult train_heer(const HinGraph& graph, const EmbeddingStore& init, const TrainConfig& config,
                       const StepObserver& observer) {
  config.validate();
  if (init.dim() != config.dim) throw ValidationError("trainer: init dimension does not match dim");
  if (init.num_nodes() != graph.num_nodes()) throw ValidationError("trainer: init covers a different node set");

  TrainResult result{init, MetricStore(graph.num_edge_types(), init.half_dim(), 1.0), {}};
  if (config.epochs == 0 || graph.num_edges() == 0) return result;

  const EdgeSampler edges(graph);
  const auto noise = NegativeSampler::by_node_type(graph, config.noise_alpha);
  const SampleContext ctx{graph, edges, noise, config.negatives};
  const std::size_t samples = config.samples_for(graph);
  const std::string config_hash = config.hash();
  // lr is the rate on the batch-mean gradient; each sample therefore moves
  // the parameters by lr / B times its own gradient.
  const double step = config.lr / static_cast<double>(config.batch_size);

  std::vector<Rng> streams;
  for (std::size_t w = 0; w < config.workers; ++w) streams.emplace_back(config.seed, w);

  auto snapshot = [&](std::size_t epoch) {
    return Checkpoint{result.embeddings, result.metrics, epoch, result.loss_trace, config_hash, config.seed};
  };
  Checkpoint last_good = snapshot(0);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    double loss_sum = 0.0;
    try {
      if (config.workers == 1) {
        NsSample s;
        SampleLossGrad grads;
        for (std::size_t i = 0; i < samples; ++i) {
          draw_sample(ctx, streams[0], s);
          ns_loss_and_grads(result.embeddings, result.metrics, s, grads);
          sgd_apply(result.embeddings, result.metrics, grads, step, config.freeze_metrics);
          loss_sum += grads.loss;
          if (observer) observer(s, grads, result.embeddings, result.metrics);
        }
      } else {
        const std::size_t batches = (samples + config.batch_size - 1) / config.batch_size;
        std::vector<double> partial(config.workers, 0.0);
        std::vector<std::exception_ptr> errors(config.workers);
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < config.workers; ++w) {
          pool.emplace_back([&, w] {
            try {
              NsSample s;
              SampleLossGrad grads;
              for (std::size_t b = w; b < batches; b += config.workers) {
                const std::size_t end = std::min(samples, (b + 1) * config.batch_size);
                for (std::size_t i = b * config.batch_size; i < end; ++i) {
                  draw_sample(ctx, streams[w], s);
                  ns_loss_and_grads_shared(result.embeddings, result.metrics, s, grads);
                  sgd_apply_shared(result.embeddings, result.metrics, grads, step, config.freeze_metrics);
                  partial[w] += grads.loss;
                }
              }
            } catch (...) {
              errors[w] = std::current_exception();
            }
          });
        }
        pool.clear();  // joins: epoch barrier
        for (const auto& e : errors) {
          if (e) std::rethrow_exception(e);
        }
        for (double p : partial) loss_sum += p;
      }
    } catch (const ComputeError& e) {
      throw TrainingDiverged(std::string("trainer: epoch ") + std::to_string(epoch + 1) + ": " + e.what(),
                             std::move(last_good));
    }
    const double mean = loss_sum / static_cast<double>(samples);
    if (!std::isfinite(mean)) {
      throw TrainingDiverged("trainer: epoch " + std::to_string(epoch + 1) + ": non-finite mean loss",
                             std::move(last_good));
    }
    result.loss_trace.push_back(mean);
    last_good = snapshot(epoch + 1);
  }
  return result;
}

}  // namespace heer
