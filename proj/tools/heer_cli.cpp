// heer: command-line front end for the HEER pipeline.
//
// Every subcommand writes its artifacts into --out DIR together with a
// run.json provenance record. Exit status: 0 success, 1 runtime failure,
// 2 validation failure; failures print a single "error: ..." line.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "heer/analysis.hpp"
#include "heer/error.hpp"
#include "heer/eval.hpp"
#include "heer/graph.hpp"
#include "heer/model.hpp"
#include "heer/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace heer;

namespace {

constexpr const char* kVersion = "0.1.0";

struct GraphArgs {
  std::string schema, nodes, edges;

  void add(CLI::App* app) {
    app->add_option("--schema", schema, "schema file")->required()->check(CLI::ExistingFile);
    app->add_option("--nodes", nodes, "node file")->required()->check(CLI::ExistingFile);
    app->add_option("--edges", edges, "edge file")->required()->check(CLI::ExistingFile);
  }
  HinGraph load() const { return load_graph(load_schema(schema), nodes, edges); }
};

void add_train_flags(CLI::App* app, TrainConfig& c) {
  app->add_option("--dim", c.dim, "embedding dimension d_V (even)")->capture_default_str();
  app->add_option("--neg", c.negatives, "negatives per side")->capture_default_str();
  app->add_option("--lr", c.lr, "HEER learning rate")->capture_default_str();
  app->add_option("--rescale", c.rescale, "factor applied to the pretrained init")->capture_default_str();
  app->add_option("--batch-size", c.batch_size, "samples per mini-batch")->capture_default_str();
  app->add_option("--epochs", c.epochs, "HEER epochs")->capture_default_str();
  app->add_option("--samples-per-epoch", c.samples_per_epoch, "0 = number of edges")->capture_default_str();
  app->add_option("--seed", c.seed, "random seed")->capture_default_str();
  app->add_option("--workers", c.workers, "training threads (>1 is not reproducible)")->capture_default_str();
  app->add_flag("--freeze-metrics", c.freeze_metrics, "keep every metric at all ones");
  app->add_option("--noise-alpha", c.noise_alpha, "noise distribution exponent")->capture_default_str();
  app->add_option("--pretrain-epochs", c.pretrain_epochs, "LINE epochs")->capture_default_str();
  app->add_option("--pretrain-lr", c.pretrain_lr, "initial LINE learning rate")->capture_default_str();
}

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json flags_of(const CLI::App* app) {
  json flags = json::object();
  for (const CLI::Option* opt : app->get_options()) {
    if (opt->get_name() == "--help" || opt->count() == 0) continue;
    const auto& results = opt->results();
    std::string name = opt->get_name();
    if (name.rfind("--", 0) == 0) name = name.substr(2);
    if (results.size() == 1) {
      flags[name] = results.front();
    } else {
      flags[name] = results;
    }
  }
  return flags;
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cli: cannot write " + path.string());
  out << content;
  if (!out) throw Error("cli: write failed for " + path.string());
}

void write_run_json(const fs::path& dir, const CLI::App* sub, std::uint64_t seed, const std::string& config_hash) {
  json run{{"command", sub->get_name()},
           {"flags", flags_of(sub)},
           {"seed", seed},
           {"config_hash", config_hash},
           {"versions", {{"heer", kVersion}, {"compiler", __VERSION__}, {"cxx_standard", __cplusplus}}},
           {"timestamp", timestamp()}};
  write_text(dir / "run.json", run.dump(2) + "\n");
}

void prepare_out(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ValidationError("cli: cannot create output directory " + dir.string());
}

std::string edges_text(const HinGraph& g, std::span<const TypedEdge> edges) {
  std::ostringstream out;
  write_edges(out, g, edges);
  return out.str();
}

// Edges of `full` that are not in `removed`.
HinGraph without(const HinGraph& full, std::span<const TypedEdge> removed) {
  std::unordered_set<std::string> drop;
  auto key = [](const TypedEdge& e) {
    return std::to_string(e.type) + ':' + std::to_string(e.u) + ':' + std::to_string(e.v);
  };
  for (const auto& e : removed) {
    TypedEdge c = e;
    if (!full.schema().edge_type(e.type).directed && c.u > c.v) std::swap(c.u, c.v);
    drop.insert(key(c));
  }
  std::vector<TypedEdge> kept;
  for (const auto& e : full.all_edges()) {
    if (!drop.count(key(e))) kept.push_back(e);
  }
  return full.with_edges(std::move(kept));
}

EmbeddingStore load_embedding_source(const std::string& path, const HinGraph& g) {
  const fs::path p(path);
  return fs::is_directory(p) ? load_embeddings(p / "embeddings.txt", g) : load_embeddings(p, g);
}

// ------------------------------------------------------------------ commands

struct SynthCmd {
  std::string preset = "incompatible";
  std::string spec_file;
  std::uint64_t seed = 1;
  std::string out;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("synth", "generate a synthetic heterogeneous network");
    app->add_option("--preset", preset, "incompatible | compatible | case-study")
        ->check(CLI::IsMember({"incompatible", "compatible", "case-study"}))
        ->capture_default_str();
    app->add_option("--spec", spec_file, "JSON generator spec (overrides --preset)")->check(CLI::ExistingFile);
    app->add_option("--seed", seed)->capture_default_str();
    app->add_option("--out", out, "output directory")->required();
    app->callback([this, app] { run(app); });
  }

  void run(const CLI::App* app) {
    SyntheticSpec spec;
    if (!spec_file.empty()) {
      std::ifstream in(spec_file);
      try {
        spec = SyntheticSpec::from_json(json::parse(in));
      } catch (const json::exception& e) {
        throw ValidationError(std::string("cli: malformed spec file: ") + e.what());
      }
    } else if (preset == "case-study") {
      spec = SyntheticSpec::case_study();
    } else {
      spec = SyntheticSpec::two_semantics(preset == "incompatible");
    }
    prepare_out(out);
    const HinGraph g = generate_synthetic_hin(spec, seed);
    std::ostringstream schema, nodes, edges;
    write_schema(schema, g.schema());
    write_nodes(nodes, g);
    write_edges(edges, g);
    write_text(fs::path(out) / "schema.txt", schema.str());
    write_text(fs::path(out) / "nodes.tsv", nodes.str());
    write_text(fs::path(out) / "edges.tsv", edges.str());
    write_text(fs::path(out) / "synth.json", spec.to_json().dump(2) + "\n");
    write_run_json(out, app, seed, fnv1a_hex(spec.to_json().dump()));
    std::fprintf(stderr, "synth: %zu nodes, %zu edges\n", g.num_nodes(), g.num_edges());
  }
};

struct KnockoutCmd {
  GraphArgs graph;
  double kappa = 0.4;
  std::uint64_t seed = 1;
  std::string out;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("knockout", "split edges into retained and removed sets");
    graph.add(app);
    app->add_option("--kappa", kappa, "fraction of edges removed, in (0,1)")->capture_default_str();
    app->add_option("--seed", seed)->capture_default_str();
    app->add_option("--out", out, "output directory")->required();
    app->callback([this, app] { run(app); });
  }

  void run(const CLI::App* app) {
    if (!(kappa > 0.0 && kappa < 1.0)) throw ValidationError("hin-graph: kappa must be in (0,1)");
    prepare_out(out);
    const HinGraph g = graph.load();
    const auto split = knockout(g, kappa, seed);
    const auto retained = split.retained.all_edges();
    write_text(fs::path(out) / "retained.tsv", edges_text(g, retained));
    write_text(fs::path(out) / "removed.tsv", edges_text(g, split.removed));
    json side{{"kappa", kappa},
              {"seed", seed},
              {"counts", {{"total", g.num_edges()}, {"retained", retained.size()}, {"removed", split.removed.size()}}}};
    write_text(fs::path(out) / "knockout.json", side.dump(2) + "\n");
    write_run_json(out, app, seed, fnv1a_hex(side.dump()));
  }
};

struct PretrainCmd {
  GraphArgs graph;
  TrainConfig config;
  std::string out;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("pretrain", "LINE (second order) embeddings on the type-erased graph");
    graph.add(app);
    add_train_flags(app, config);
    app->add_option("--out", out, "output directory")->required();
    app->callback([this, app] { run(app); });
  }

  void run(const CLI::App* app) {
    config.validate();
    prepare_out(out);
    const HinGraph g = graph.load();
    const auto emb = pretrain_line(g, config);
    save_embeddings(fs::path(out) / "embeddings.txt", g, emb);
    write_text(fs::path(out) / "config.json", config.to_json().dump(2) + "\n");
    write_run_json(out, app, config.seed, config.hash());
  }
};

struct TrainCmd {
  GraphArgs graph;
  TrainConfig config;
  std::string init;
  std::string out;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("train", "train HEER embeddings and metrics");
    graph.add(app);
    add_train_flags(app, config);
    app->add_option("--init", init, "pretrained embeddings (file or directory); pretrains when absent")
        ->check(CLI::ExistingPath);
    app->add_option("--out", out, "checkpoint directory")->required();
    app->callback([this, app] { run(app); });
  }

  void run(const CLI::App* app) {
    config.validate();
    prepare_out(out);
    const HinGraph g = graph.load();
    EmbeddingStore pretrained = init.empty() ? pretrain_line(g, config) : load_embedding_source(init, g);
    if (pretrained.dim() != config.dim) {
      throw ValidationError("cli: --init has dimension " + std::to_string(pretrained.dim()) + ", expected " +
                            std::to_string(config.dim));
    }
    const EmbeddingStore start = rescale_embeddings(std::move(pretrained), config.rescale);
    write_text(fs::path(out) / "config.json", config.to_json().dump(2) + "\n");
    write_run_json(out, app, config.seed, config.hash());
    try {
      auto result = train_heer(g, start, config);
      Checkpoint ckpt{std::move(result.embeddings), std::move(result.metrics), config.epochs,
                      result.loss_trace,           config.hash(),              config.seed};
      save_checkpoint(out, g, ckpt);
      for (std::size_t e = 0; e < ckpt.loss_trace.size(); ++e) {
        std::fprintf(stderr, "epoch %zu loss %.6f\n", e + 1, ckpt.loss_trace[e]);
      }
    } catch (const TrainingDiverged& e) {
      save_checkpoint(fs::path(out) / "last_good", g, e.last_good());
      throw;
    }
  }
};

struct EvalCmd {
  GraphArgs graph;
  std::string removed;
  std::string scorer = "heer";
  std::string checkpoint;
  std::string embeddings;
  bool freeze_metrics = false;
  bool ranks_csv = false;
  std::uint64_t seed = 1;
  std::string out;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("eval", "link prediction MRR on knocked-out edges");
    graph.add(app);
    app->get_option("--edges")->description("full edge file (before knock-out)");
    app->add_option("--removed", removed, "removed edge file from knockout")->required()->check(CLI::ExistingFile);
    app->add_option("--scorer", scorer, "heer | unimetrics | pretrained | logit | random")
        ->check(CLI::IsMember({"heer", "unimetrics", "pretrained", "logit", "random"}))
        ->capture_default_str();
    app->add_option("--checkpoint", checkpoint, "HEER checkpoint directory")->check(CLI::ExistingDirectory);
    app->add_option("--embeddings", embeddings, "pretrained embeddings (file or directory)")
        ->check(CLI::ExistingPath);
    app->add_flag("--freeze-metrics", freeze_metrics, "score heer with all-ones metrics");
    app->add_flag("--ranks-csv", ranks_csv, "also write ranks.csv");
    app->add_option("--seed", seed, "negative sampling seed")->capture_default_str();
    app->add_option("--out", out, "output directory")->required();
    app->callback([this, app] { run(app); });
  }

  void run(const CLI::App* app) {
    const bool needs_ckpt = scorer == "heer" || scorer == "unimetrics";
    const bool needs_emb = scorer == "pretrained" || scorer == "logit";
    if (needs_ckpt && checkpoint.empty()) throw ValidationError("cli: --scorer " + scorer + " requires --checkpoint");
    if (needs_emb && embeddings.empty()) throw ValidationError("cli: --scorer " + scorer + " requires --embeddings");
    prepare_out(out);

    const HinGraph full = graph.load();
    const auto removed_edges = load_edges(full, removed);
    const auto set = generate_instances(full, removed_edges, seed);

    json hash_input{{"seed", seed}, {"negatives", kEvalNegatives}};
    std::optional<Checkpoint> ckpt;
    EmbeddingStore pre;
    if (needs_ckpt) {
      ckpt = load_checkpoint(checkpoint, full);
      hash_input["checkpoint"] = ckpt->config_hash;
    }
    if (needs_emb) {
      pre = load_embedding_source(embeddings, full);
      std::ostringstream text;
      write_embeddings(text, full, pre);
      hash_input["embeddings"] = fnv1a_hex(text.str());
    }

    const Schema& schema = full.schema();
    EvalReport report;
    if (scorer == "heer") {
      const MetricStore ones(schema.num_edge_types(), ckpt->embeddings.dim() / 2, 1.0);
      report = evaluate(HeerScorer(schema, ckpt->embeddings, freeze_metrics ? ones : ckpt->metrics), schema, set);
    } else if (scorer == "unimetrics") {
      report = evaluate(UniMetricsScorer(schema, ckpt->embeddings), schema, set);
    } else if (scorer == "pretrained") {
      report = evaluate(PretrainedScorer(pre), schema, set);
    } else if (scorer == "logit") {
      LogitConfig lc;
      lc.seed = seed;
      const HinGraph train_graph = without(full, removed_edges);
      report = evaluate(train_logit_baseline(pre, train_graph, lc), schema, set);
    } else {
      report = evaluate(RandomScorer(seed), schema, set);
    }
    report.config_hash = fnv1a_hex(hash_input.dump());
    write_text(fs::path(out) / "report.json", report.to_json().dump(2) + "\n");
    if (ranks_csv) write_text(fs::path(out) / "ranks.csv", report.ranks_csv(schema));
    write_run_json(out, app, seed, report.config_hash);
    std::fprintf(stderr, "%s: micro %.4f macro %.4f over %zu instances (%zu skipped)\n", scorer.c_str(),
                 report.micro, report.macro, report.n_instances, report.n_skipped);
  }
};

struct JaccardCmd {
  GraphArgs graph;
  std::string r1, r2, hub;
  bool reverse = false;
  std::string out;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("analyze-jaccard", "generalized Jaccard between two edge types");
    graph.add(app);
    app->add_option("--r1", r1, "first edge type")->required();
    app->add_option("--r2", r2, "second edge type")->required();
    app->add_option("--hub", hub, "node type the coefficients are computed for");
    app->add_flag("--reverse", reverse, "walk directed types from the destination side");
    app->add_option("--out", out, "output directory")->required();
    app->callback([this, app] { run(app); });
  }

  void run(const CLI::App* app) {
    prepare_out(out);
    const HinGraph g = graph.load();
    const Schema& s = g.schema();
    std::optional<TypeId> hub_type;
    if (!hub.empty()) hub_type = s.node_type_id(hub);
    const auto profile = jaccard_profile(g, s.edge_type_id(r1), s.edge_type_id(r2), hub_type, reverse);
    const auto grid = default_cdf_grid();
    std::ostringstream cdf, coef;
    char buf[64];
    cdf << "threshold,fraction\n";
    for (const auto& [t, f] : jaccard_cdf(profile, grid)) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", t, f);
      cdf << buf;
    }
    coef << "node_id,jaccard\n";
    for (std::size_t i = 0; i < profile.nodes.size(); ++i) {
      std::snprintf(buf, sizeof buf, ",%.17g\n", profile.coefficients[i]);
      coef << g.node_id(profile.nodes[i]) << buf;
    }
    write_text(fs::path(out) / "cdf.csv", cdf.str());
    write_text(fs::path(out) / "jaccard.csv", coef.str());
    write_run_json(out, app, 0, fnv1a_hex(r1 + '\n' + r2 + '\n' + hub + (reverse ? "\nr" : "")));
  }
};

struct MetricsCmd {
  std::string checkpoint, metrics_file;
  std::string out;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("analyze-metrics", "standardized metric heat map and similarities");
    auto* c = app->add_option("--checkpoint", checkpoint, "checkpoint directory")->check(CLI::ExistingDirectory);
    auto* m = app->add_option("--metrics", metrics_file, "metrics file")->check(CLI::ExistingFile);
    c->excludes(m);
    app->add_option("--out", out, "output directory")->required();
    app->callback([this, app] { run(app); });
  }

  void run(const CLI::App* app) {
    if (checkpoint.empty() == metrics_file.empty()) {
      throw ValidationError("cli: exactly one of --checkpoint or --metrics is required");
    }
    prepare_out(out);
    const fs::path path = checkpoint.empty() ? fs::path(metrics_file) : fs::path(checkpoint) / "metrics.txt";
    const auto labeled = load_labeled_metrics(path);
    const MetricStore z = standardize_metrics(labeled.metrics);
    write_text(fs::path(out) / "heatmap.csv", heatmap_csv(labeled.names, z));

    std::ostringstream sim;
    char buf[64];
    sim << "edge_type";
    for (const auto& n : labeled.names) sim << ',' << n;
    sim << '\n';
    for (TypeId a = 0; a < labeled.names.size(); ++a) {
      sim << labeled.names[a];
      for (TypeId b = 0; b < labeled.names.size(); ++b) {
        std::snprintf(buf, sizeof buf, ",%.17g", metric_similarity(labeled.metrics, a, b));
        sim << buf;
      }
      sim << '\n';
    }
    write_text(fs::path(out) / "similarity.csv", sim.str());
    std::ifstream in(path, std::ios::binary);
    std::ostringstream raw;
    raw << in.rdbuf();
    write_run_json(out, app, 0, fnv1a_hex(raw.str()));
  }
};

struct MetapathCmd {
  GraphArgs graph;
  std::string embeddings;
  std::string anchor;
  std::vector<std::string> paths;
  std::size_t max_nodes = 0;
  std::uint64_t seed = 1;
  std::string out;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("export-metapath", "embeddings of meta-path neighbors for plotting");
    graph.add(app);
    app->add_option("--embeddings", embeddings, "embeddings file or checkpoint directory")
        ->required()
        ->check(CLI::ExistingPath);
    app->add_option("--anchor", anchor, "anchor node id")->required();
    app->add_option("--metapath", paths, "comma-separated edge types, ^ reverses a step (repeatable)")
        ->required();
    app->add_option("--max-nodes", max_nodes, "per meta-path sample size, 0 keeps all")->capture_default_str();
    app->add_option("--seed", seed)->capture_default_str();
    app->add_option("--out", out, "output directory")->required();
    app->callback([this, app] { run(app); });
  }

  void run(const CLI::App* app) {
    prepare_out(out);
    const HinGraph g = graph.load();
    const auto a = g.find_node(anchor);
    if (!a) throw ValidationError("analysis: unknown anchor node " + anchor);
    std::vector<std::vector<MetapathStep>> parsed;
    for (const auto& p : paths) parsed.push_back(parse_metapath(g.schema(), p));
    const EmbeddingStore emb = load_embedding_source(embeddings, g);
    std::vector<std::pair<std::string, std::vector<NodeId>>> groups;
    for (std::size_t i = 0; i < paths.size(); ++i) {
      groups.emplace_back(paths[i], metapath_neighbors(g, *a, parsed[i], max_nodes, seed));
    }
    write_text(fs::path(out) / "metapath.csv", metapath_csv(g, emb, groups));
    std::string key = anchor;
    for (const auto& p : paths) key += '\n' + p;
    write_run_json(out, app, seed, fnv1a_hex(key + '\n' + std::to_string(max_nodes)));
  }
};

int fail(int code, const std::string& message) {
  std::string line = message;
  for (char& c : line) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  std::fprintf(stderr, "error: %s\n", line.c_str());
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HEER: heterogeneous network embedding via edge representations"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  SynthCmd synth;
  KnockoutCmd knock;
  PretrainCmd pretrain;
  TrainCmd train;
  EvalCmd eval;
  JaccardCmd jaccard;
  MetricsCmd metrics;
  MetapathCmd metapath;
  synth.add(app);
  knock.add(app);
  pretrain.add(app);
  train.add(app);
  eval.add(app);
  jaccard.add(app);
  metrics.add(app);
  metapath.add(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(2, e.what());
  } catch (const ValidationError& e) {
    return fail(2, e.what());
  } catch (const std::exception& e) {
    return fail(1, e.what());
  }
  return 0;
}
