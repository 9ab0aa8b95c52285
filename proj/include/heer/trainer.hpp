#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "heer/error.hpp"
#include "heer/graph.hpp"
#include "heer/model.hpp"

namespace heer {

/// Every knob of pretraining and HEER training. Defaults follow the
/// published setup where one exists (dim 256, K = 5, lr 10, rescale 0.1).
struct TrainConfig {
  std::size_t dim = 256;
  std::size_t negatives = 5;
  double lr = 10.0;
  double rescale = 0.1;
  std::size_t batch_size = 50;
  std::size_t epochs = 10;
  /// 0 means one pass worth of samples: |E| per epoch.
  std::size_t samples_per_epoch = 0;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  bool freeze_metrics = false;
  double noise_alpha = 0.75;
  std::size_t pretrain_epochs = 100;
  /// Initial LINE rate, decayed linearly to pretrain_lr * 1e-4.
  double pretrain_lr = 0.025;

  /// Throws ValidationError naming the first offending field.
  void validate() const;
  std::size_t samples_for(const HinGraph& graph) const;

  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
  /// FNV-1a 64 of the canonical JSON dump, as 16 hex digits.
  std::string hash() const;
};

std::string fnv1a_hex(std::string_view bytes);

/// Uniform init in [-0.5/d_h, 0.5/d_h] for every coordinate.
EmbeddingStore random_embeddings(std::size_t num_nodes, std::size_t dim, std::uint64_t seed);

/// LINE with second-order proximity on the type-erased weighted graph.
/// Vertex vectors live in f^O, context vectors in f^I. Negatives come from a
/// single degree^alpha noise distribution over all nodes.
EmbeddingStore pretrain_line(const HinGraph& graph, const TrainConfig& config);

/// Multiplies every coordinate by `factor` (> 0).
EmbeddingStore rescale_embeddings(EmbeddingStore store, double factor);

struct Checkpoint {
  EmbeddingStore embeddings;
  MetricStore metrics;
  std::size_t epoch = 0;
  std::vector<double> loss_trace;
  std::string config_hash;
  std::uint64_t seed = 0;
};

/// Directory layout: embeddings.txt, metrics.txt, state.json.
void save_checkpoint(const std::filesystem::path& dir, const HinGraph& graph, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& dir, const HinGraph& graph);

struct TrainResult {
  EmbeddingStore embeddings;
  MetricStore metrics;
  /// Mean sample loss per epoch.
  std::vector<double> loss_trace;
};

/// Raised when training hits a non-finite value. Carries the state at the
/// end of the last completed epoch.
class TrainingDiverged : public ComputeError {
 public:
  TrainingDiverged(const std::string& what, Checkpoint last_good)
      : ComputeError(what), last_good_(std::move(last_good)) {}
  const Checkpoint& last_good() const { return last_good_; }

 private:
  Checkpoint last_good_;
};

/// Called after each sample in single-worker mode; used by tests to inspect
/// per-step updates.
using StepObserver = std::function<void(const NsSample&, const SampleLossGrad&, const EmbeddingStore&,
                                        const MetricStore&)>;

/// Trains node embeddings and per-type metrics from `init` with metrics set
/// to all ones. With workers > 1, updates are applied lock-free from
/// several threads and the result is not reproducible.
TrainResult train_heer(const HinGraph& graph, const EmbeddingStore& init, const TrainConfig& config,
                       const StepObserver& observer = {});

}  // namespace heer
