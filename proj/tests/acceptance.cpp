// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "heer/analysis.hpp"
#include "heer/error.hpp"
#include "heer/eval.hpp"
#include "heer/sampler.hpp"
#include "heer/trainer.hpp"
#include "oracles.hpp"

using namespace heer;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ------------------------------------------------------------------ pipeline

struct PipelineRun {
  double heer = 0, uni = 0, logit = 0, pretrained = 0;
  std::vector<double> heer_loss;
  bool uni_identity = true;
  std::string report_json;
  std::string embeddings_text;
  std::string metrics_text;
};

PipelineRun run_pipeline(std::uint64_t seed, bool baselines) {
  PipelineRun out;
  const HinGraph full = generate_synthetic_hin(SyntheticSpec::two_semantics(true), seed);
  const auto split = knockout(full, 0.4, seed);
  const auto set = generate_instances(full, split.removed, seed);
  TrainConfig cfg;
  cfg.seed = seed;
  const EmbeddingStore pre = pretrain_line(split.retained, cfg);
  const EmbeddingStore init = rescale_embeddings(pre, cfg.rescale);
  const auto heer = train_heer(split.retained, init, cfg);
  const Schema& schema = full.schema();

  auto report = evaluate(HeerScorer(schema, heer.embeddings, heer.metrics), schema, set);
  report.config_hash = cfg.hash();
  out.heer = report.micro;
  out.heer_loss = heer.loss_trace;
  out.report_json = report.to_json().dump();
  std::ostringstream e, m;
  write_embeddings(e, full, heer.embeddings);
  write_metrics(m, schema, heer.metrics);
  out.embeddings_text = e.str();
  out.metrics_text = m.str();
  if (!baselines) return out;

  auto uni_cfg = cfg;
  uni_cfg.freeze_metrics = true;
  const auto uni = train_heer(split.retained, init, uni_cfg);
  const UniMetricsScorer uni_scorer(schema, uni.embeddings);
  const MetricStore ones(schema.num_edge_types(), cfg.dim / 2, 1.0);
  const HeerScorer frozen(schema, uni.embeddings, ones);
  for (const auto& inst : set.instances) {
    auto same = [&](NodeId u, NodeId v) {
      const double a = uni_scorer.score(u, v, inst.type), b = frozen.score(u, v, inst.type);
      return std::memcmp(&a, &b, sizeof a) == 0;
    };
    out.uni_identity &= same(inst.u, inst.v);
    for (NodeId x : inst.neg_v) out.uni_identity &= same(inst.u, x);
    for (NodeId x : inst.neg_u) out.uni_identity &= same(x, inst.v);
  }
  auto ru = evaluate(uni_scorer, schema, set);
  auto rf = evaluate(frozen, schema, set);
  ru.config_hash = rf.config_hash = uni_cfg.hash();
  out.uni_identity &= ru.to_json().dump() == rf.to_json().dump() && ru.ranks_csv(schema) == rf.ranks_csv(schema);
  out.uni = ru.micro;

  LogitConfig lc;
  lc.seed = seed;
  out.logit = evaluate(train_logit_baseline(pre, split.retained, lc), schema, set).micro;
  out.pretrained = evaluate(PretrainedScorer(pre), schema, set).micro;
  return out;
}

// ------------------------------------------------------------------ criteria

Outcome gradient_correctness() {
  const auto t0 = Clock::now();
  std::mt19937_64 gen(1);
  double worst = 0;
  std::size_t fixtures = 0, coords = 0;
  for (std::size_t h : {2u, 4u, 8u}) {
    for (std::size_t k : {0u, 1u, 5u}) {
      for (bool directed : {true, false}) {
        for (int rep = 0; rep < 6; ++rep) {
          const std::size_t n = 15;
          const EmbeddingStore s = oracle::random_store(n, 2 * h, gen());
          const MetricStore m = oracle::random_metrics(3, h, gen());
          NsSample smp{static_cast<NodeId>(gen() % n), static_cast<NodeId>(gen() % n),
                       static_cast<TypeId>(gen() % 3), directed, {}, {}};
          for (std::size_t i = 0; i < k; ++i) {
            smp.neg_v.push_back(static_cast<NodeId>(gen() % n));
            smp.neg_u.push_back(static_cast<NodeId>(gen() % n));
          }
          const auto res = oracle::finite_difference_check(s, m, smp, ns_loss_and_grads(s, m, smp));
          worst = std::max(worst, res.max_rel_error);
          coords += res.checked;
          ++fixtures;
        }
      }
    }
  }
  const double t = seconds_since(t0);
  return {fixtures >= 100 && worst < 1e-5 && t < 10,
          fmt("%zu fixtures, %zu coordinates, max rel error %.2e, %.2fs", fixtures, coords, worst, t)};
}

Outcome exact_oracle() {
  const auto t0 = Clock::now();
  double worst = 0;
  std::size_t graphs = 0;
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const HinGraph g = oracle::random_hin(seed, 3, 4 + seed % 13, 30);
    if (g.num_nodes() > 50) continue;
    const EmbeddingStore s = oracle::random_store(g.num_nodes(), 8, seed + 1);
    const MetricStore m = oracle::random_metrics(g.num_edge_types(), 4, seed + 2);
    for (TypeId r = 0; r < g.num_edge_types(); ++r) {
      for (NodeId u = 0; u < g.num_nodes(); ++u) {
        for (NodeId v = 0; v < g.num_nodes(); ++v) {
          worst = std::max(worst,
                           std::abs(typed_closeness_exact(g, s, m, u, v, r) - oracle::closeness(g, s, m, u, v, r)));
        }
      }
      worst = std::max(worst, std::abs(kl_objective_exact(g, s, m, r) - oracle::kl(g, s, m, r)));
    }
    ++graphs;
  }
  const double t = seconds_since(t0);
  return {worst < 1e-10 && t < 5, fmt("%zu graphs (<= 50 nodes), max abs diff %.2e, %.2fs", graphs, worst, t)};
}

Outcome closeness_bound() {
  std::mt19937_64 gen(3);
  std::size_t consistent = 0, inconsistent = 0;
  bool ok = true;
  double lo = 1, hi = 0;
  for (std::uint64_t seed = 0; consistent < 1000; ++seed) {
    const HinGraph g = oracle::random_hin(seed + 100, 3, 10, 20);
    const EmbeddingStore s = oracle::random_store(g.num_nodes(), 8, seed, 2.0);
    const MetricStore m = oracle::random_metrics(g.num_edge_types(), 4, seed);
    for (int i = 0; i < 200; ++i) {
      const NodeId u = static_cast<NodeId>(gen() % g.num_nodes());
      const NodeId v = static_cast<NodeId>(gen() % g.num_nodes());
      const TypeId r = static_cast<TypeId>(gen() % g.num_edge_types());
      const double c = typed_closeness_exact(g, s, m, u, v, r);
      if (g.consistent(u, v, r)) {
        if (consistent == 1000) continue;
        ++consistent;
        ok &= c > 0.0 && c <= 0.5;
        lo = std::min(lo, c);
        hi = std::max(hi, c);
      } else {
        ++inconsistent;
        ok &= c == 0.0;
      }
    }
  }
  return {ok, fmt("%zu consistent pairs in [%.3g, %.3g], %zu inconsistent pairs all 0", consistent, lo, hi,
                  inconsistent)};
}

Outcome random_calibration() {
  const HinGraph g = generate_synthetic_hin(SyntheticSpec::two_semantics(true), 1);
  const auto split = knockout(g, 0.4, 1);
  const auto set = generate_instances(g, split.removed, 1);
  const auto r = evaluate(RandomScorer(2024), g.schema(), set);
  double h = 0;
  for (int k = 1; k <= 11; ++k) h += 1.0 / k;
  const double target = h / 11;
  return {r.ranks.size() >= 2000 && std::abs(r.micro - target) <= 0.02,
          fmt("micro %.4f vs %.4f over %zu ranks", r.micro, target, r.ranks.size())};
}

Outcome metric_case_study() {
  std::string detail;
  int wins = 0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const HinGraph g = generate_synthetic_hin(SyntheticSpec::case_study(), seed);
    TrainConfig cfg;
    cfg.seed = seed;
    const auto init = rescale_embeddings(pretrain_line(g, cfg), cfg.rescale);
    const auto res = train_heer(g, init, cfg);
    const TypeId likes = g.schema().edge_type_id("likes");
    const TypeId buys = g.schema().edge_type_id("buys");
    const TypeId copy = g.schema().edge_type_id("likes_copy");
    const double compatible = metric_similarity(res.metrics, likes, copy);
    const double incompatible = metric_similarity(res.metrics, likes, buys);
    wins += compatible > incompatible;
    detail += fmt("%sseed %llu: %.3f vs %.3f", seed > 1 ? "; " : "", static_cast<unsigned long long>(seed), compatible,
                  incompatible);
  }
  return {wins == 3, detail};
}

Outcome jaccard_analyzer() {
  double worst = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const HinGraph g = oracle::random_hin(seed, 2, 10, 30, false);
    const auto& et0 = g.schema().edge_type(0);
    const auto& et1 = g.schema().edge_type(1);
    for (NodeId u = 0; u < g.num_nodes(); ++u) {
      const TypeId t = g.node_type(u);
      if (et0.src != t || (et1.src != t && et1.dst != t)) continue;
      worst = std::max(worst, std::abs(jaccard_coefficient(g, u, 0, 1) - oracle::dense_jaccard(g, u, 0, 1)));
    }
  }
  const auto grid = default_cdf_grid();
  const auto inc = jaccard_cdf(generate_synthetic_hin(SyntheticSpec::two_semantics(true), 1), 0, 1, grid);
  const auto comp = jaccard_cdf(generate_synthetic_hin(SyntheticSpec::two_semantics(false), 1), 0, 1, grid);
  bool dominates = true, strict = false;
  double at = 0, fi = 0, fc = 0;
  for (std::size_t i = 0; i < grid.size() && grid[i] <= 0.1; ++i) {
    dominates &= inc[i].second >= comp[i].second;
    if (inc[i].second - comp[i].second > fi - fc) {
      at = grid[i];
      fi = inc[i].second;
      fc = comp[i].second;
      strict = true;
    }
  }
  return {worst < 1e-12 && dominates && strict,
          fmt("oracle max diff %.1e; CDF incompatible >= compatible on thresholds <= 0.1, widest gap at %.3g: "
              "%.3f vs %.3f",
              worst, at, fi, fc)};
}

Outcome sampler_statistics() {
  const std::vector<std::vector<double>> fixtures{
      {1.0, 3.0}, {5, 1, 1, 1, 0.5, 0.25, 8, 2}, [] {
        std::vector<double> w;
        for (int i = 1; i <= 200; ++i) w.push_back(std::pow(i, -1.1));
        return w;
      }()};
  bool ok = true;
  std::string detail;
  const std::size_t draws = 100000;
  for (std::size_t f = 0; f < fixtures.size(); ++f) {
    const AliasTable t(fixtures[f]);
    Rng rng(f + 1);
    std::vector<std::size_t> counts(fixtures[f].size(), 0);
    for (std::size_t i = 0; i < draws; ++i) ++counts[t.sample(rng)];
    std::vector<double> p;
    for (double w : fixtures[f]) p.push_back(w / t.total_weight());
    const auto [stat, pval] = oracle::chi_square(counts, p, draws);
    ok &= pval > 0.01;
    detail += fmt("%sn=%zu p=%.3f", f ? ", " : "", fixtures[f].size(), pval);
  }
  return {ok, detail};
}

void report(int id, const char* name, const Outcome& o, int& failures) {
  std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
  std::fflush(stdout);
  failures += !o.pass;
}

Outcome guarded(const std::function<Outcome()>& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    return {false, std::string("exception: ") + e.what()};
  }
}

}  // namespace

int main() {
  int failures = 0;
  report(1, "gradient correctness", guarded(gradient_correctness), failures);
  report(2, "exact-oracle equivalence", guarded(exact_oracle), failures);
  report(3, "closeness bound", guarded(closeness_bound), failures);

  // Criteria 4, 5 and 11 share the seed-pinned synthetic pipeline runs.
  const auto t0 = Clock::now();
  std::vector<PipelineRun> runs;
  std::string pipeline_error;
  try {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) runs.push_back(run_pipeline(seed, true));
  } catch (const std::exception& e) {
    pipeline_error = e.what();
  }
  const double pipeline_seconds = seconds_since(t0);

  report(4, "UniMetrics identity", guarded([&] {
           if (!pipeline_error.empty()) return Outcome{false, pipeline_error};
           bool ok = true;
           for (const auto& r : runs) ok &= r.uni_identity;
           return Outcome{ok, "bitwise scores and identical EvalReport on 3 trained checkpoints"};
         }),
         failures);

  report(5, "directional baseline ordering", guarded([&] {
           if (!pipeline_error.empty()) return Outcome{false, pipeline_error};
           bool ok = pipeline_seconds < 300;
           std::string d;
           for (std::size_t i = 0; i < runs.size(); ++i) {
             const auto& r = runs[i];
             ok &= r.heer > r.logit && r.logit >= r.pretrained && r.heer > r.uni && r.heer - r.uni >= 0.03;
             d += fmt("seed %zu: heer %.3f uni %.3f logit %.3f pretrained %.3f; ", i + 1, r.heer, r.uni, r.logit,
                      r.pretrained);
           }
           return Outcome{ok, d + fmt("%.1fs", pipeline_seconds)};
         }),
         failures);

  report(6, "random-scorer calibration", guarded(random_calibration), failures);
  report(7, "metric-divergence case study", guarded(metric_case_study), failures);
  report(8, "Jaccard analyzer", guarded(jaccard_analyzer), failures);

  report(9, "determinism", guarded([&] {
           const auto a = run_pipeline(7, false);
           const auto b = run_pipeline(7, false);
           const bool ok = a.report_json == b.report_json && a.embeddings_text == b.embeddings_text &&
                           a.metrics_text == b.metrics_text;
           return Outcome{ok, fmt("report %zu bytes, embeddings %zu bytes, metrics %zu bytes identical: %s",
                                  a.report_json.size(), a.embeddings_text.size(), a.metrics_text.size(),
                                  ok ? "yes" : "no")};
         }),
         failures);

  report(10, "sampler statistics", guarded(sampler_statistics), failures);

  report(11, "loss descent", guarded([&] {
           if (!pipeline_error.empty()) return Outcome{false, pipeline_error};
           bool ok = true;
           std::string d;
           for (std::size_t i = 0; i < runs.size(); ++i) {
             const auto& l = runs[i].heer_loss;
             ok &= l.size() >= 5;
             for (std::size_t e = 1; e < 5 && e < l.size(); ++e) ok &= l[e] < l[e - 1];
             d += fmt("%sseed %zu:", i ? "; " : "", i + 1);
             for (std::size_t e = 0; e < 5 && e < l.size(); ++e) d += fmt(" %.4f", l[e]);
           }
           return Outcome{ok, d};
         }),
         failures);

  std::printf("%d of 11 criteria passed\n", 11 - failures);
  return failures == 0 ? 0 : 1;
}
