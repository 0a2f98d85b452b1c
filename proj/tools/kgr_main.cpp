// kgr command-line interface: synthetic dataset generation, pair building,
// reward-head training, MCTS search, evaluation, the schema-noise sweep and
// the reward-variant ablation. One static binary, JSON config files with
// flat keys, flags override file values, and every run writes a manifest
// that reproduces it bit-identically.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kgr/dataset.hpp"
#include "kgr/eval.hpp"
#include "kgr/graph.hpp"
#include "kgr/io.hpp"
#include "kgr/reward.hpp"
#include "kgr/search.hpp"
#include "kgr/synth.hpp"
#include "kgr/train.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

struct RunConfig {
  std::string out_dir = "out";
  std::string triples;
  std::string types;
  std::string queries;
  std::string pairs;
  std::string model;
  std::string results;
  std::optional<uint64_t> seed;

  int entities = 200;
  int branching = 4;
  int depth = 4;
  int n_queries = 50;

  int dim = 256;
  uint64_t hash_seed = kgr::EncoderConfig{}.hash_seed;
  int max_tokens = 512;
  int head_depth = 0;
  std::string variant = "full";
  double epsilon = 1e-6;
  double risk_bias = -3.0;
  double init_scale = 0.01;

  double margin = 0.3;
  double lambda = 1.0;
  double lr = 2e-4;
  int epochs = 30;
  int batch_size = 1;
  bool mean_loss = false;
  bool future_broadcast = false;
  int per_query = 4;

  double exploration_c = 1.4142135623730951;
  int budget = 500;
  int max_depth = 4;
  int top_k = 3;
  int workers = 0;  // 0 = available cores

  int k = 1;
  int folds = 5;
  std::string rhos = "0,0.1,0.2,0.3,0.4,0.5";
  std::string sweep_seeds = "1,2,3";
};

// Field table shared by the config-file loader and the manifest writer.
template <typename Fn>
void for_each_field(RunConfig& c, Fn&& fn) {
  fn("out_dir", c.out_dir);
  fn("triples", c.triples);
  fn("types", c.types);
  fn("queries", c.queries);
  fn("pairs", c.pairs);
  fn("model", c.model);
  fn("results", c.results);
  fn("entities", c.entities);
  fn("branching", c.branching);
  fn("depth", c.depth);
  fn("n_queries", c.n_queries);
  fn("dim", c.dim);
  fn("hash_seed", c.hash_seed);
  fn("max_tokens", c.max_tokens);
  fn("head_depth", c.head_depth);
  fn("variant", c.variant);
  fn("epsilon", c.epsilon);
  fn("risk_bias", c.risk_bias);
  fn("init_scale", c.init_scale);
  fn("margin", c.margin);
  fn("lambda", c.lambda);
  fn("lr", c.lr);
  fn("epochs", c.epochs);
  fn("batch_size", c.batch_size);
  fn("mean_loss", c.mean_loss);
  fn("future_broadcast", c.future_broadcast);
  fn("per_query", c.per_query);
  fn("exploration_c", c.exploration_c);
  fn("budget", c.budget);
  fn("max_depth", c.max_depth);
  fn("top_k", c.top_k);
  fn("workers", c.workers);
  fn("k", c.k);
  fn("folds", c.folds);
  fn("rhos", c.rhos);
  fn("sweep_seeds", c.sweep_seeds);
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
  nlohmann::json j = nlohmann::json::parse(kgr::read_file(path));
  if (!j.is_object()) throw std::runtime_error(path + ": config must be a JSON object");
  std::set<std::string> known{"seed"};
  for_each_field(cfg, [&](const char* name, auto&) { known.insert(name); });
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) {
      throw std::runtime_error(path + ": unknown config key '" + key + "'");
    }
    (void)value;
  }
  if (j.contains("seed")) cfg.seed = j.at("seed").get<uint64_t>();
  for_each_field(cfg, [&](const char* name, auto& field) {
    if (j.contains(name)) field = j.at(name).get<std::decay_t<decltype(field)>>();
  });
}

nlohmann::ordered_json config_snapshot(RunConfig& cfg) {
  nlohmann::ordered_json j;
  if (cfg.seed) j["seed"] = *cfg.seed;
  for_each_field(cfg, [&](const char* name, auto& field) { j[name] = field; });
  return j;
}

void write_manifest(RunConfig& cfg, const std::string& command) {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["version"] = kVersion;
  j["config"] = config_snapshot(cfg);
  kgr::atomic_write_file(cfg.out_dir + "/manifest_" + command + ".json", j.dump(2) + "\n");
}

uint64_t require_seed(const RunConfig& cfg) {
  if (!cfg.seed) throw std::runtime_error("missing required config: seed");
  return *cfg.seed;
}

std::string require_path(const std::string& value, const char* name) {
  if (value.empty()) throw std::runtime_error(std::string("missing required config: ") + name);
  return value;
}

int effective_workers(int workers) {
  if (workers > 0) return workers;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::vector<double> parse_double_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  if (out.empty()) throw std::runtime_error("empty list: " + csv);
  return out;
}

std::vector<uint64_t> parse_seed_list(const std::string& csv) {
  std::vector<uint64_t> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stoull(item));
  }
  if (out.empty()) throw std::runtime_error("empty list: " + csv);
  return out;
}

kgr::EncoderConfig encoder_from(const RunConfig& cfg) {
  kgr::EncoderConfig enc;
  enc.dim = cfg.dim;
  enc.hash_seed = cfg.hash_seed;
  enc.max_tokens = cfg.max_tokens;
  return enc;
}

kgr::TrainConfig train_from(const RunConfig& cfg) {
  kgr::TrainConfig t;
  t.margin = cfg.margin;
  t.lambda = cfg.lambda;
  t.lr = cfg.lr;
  t.epochs = cfg.epochs;
  t.batch_size = cfg.batch_size;
  t.mean_loss = cfg.mean_loss;
  t.future_broadcast_final = cfg.future_broadcast;
  return t;
}

kgr::SearchConfig search_from(const RunConfig& cfg) {
  kgr::SearchConfig s;
  s.exploration_c = cfg.exploration_c;
  s.budget = cfg.budget;
  s.max_depth = cfg.max_depth;
  s.top_k = cfg.top_k;
  return s;
}

kgr::PipelineOptions pipeline_from(const RunConfig& cfg) {
  kgr::PipelineOptions opt;
  opt.encoder = encoder_from(cfg);
  opt.train = train_from(cfg);
  opt.search = search_from(cfg);
  opt.head_depth = cfg.head_depth;
  opt.variant = kgr::variant_from_string(cfg.variant);
  opt.per_query_pairs = cfg.per_query;
  opt.eval_folds = cfg.folds;
  opt.hits_k = cfg.k;
  opt.init_scale = cfg.init_scale;
  opt.risk_bias_init = cfg.risk_bias;
  opt.workers = effective_workers(cfg.workers);
  return opt;
}

kgr::RewardModel init_model(const RunConfig& cfg, uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x696e6974ULL);
  kgr::RewardModel m =
      kgr::RewardModel::random(encoder_from(cfg), rng, cfg.init_scale, cfg.head_depth);
  m.variant = kgr::variant_from_string(cfg.variant);
  m.epsilon = cfg.epsilon;
  if (cfg.head_depth == 0) {
    m.risk_head.b1[0] = cfg.risk_bias;
  } else {
    m.risk_head.b2 = cfg.risk_bias;
  }
  return m;
}

int cmd_synth(RunConfig& cfg) {
  uint64_t seed = require_seed(cfg);
  auto [graph, queries] = kgr::synth_graph(seed, cfg.entities, cfg.branching, cfg.depth,
                                           cfg.n_queries);
  std::ostringstream triples, types;
  graph.write_triples(triples);
  graph.write_types(types);
  kgr::atomic_write_file(cfg.out_dir + "/triples.tsv", triples.str());
  kgr::atomic_write_file(cfg.out_dir + "/types.tsv", types.str());
  kgr::write_queries(cfg.out_dir + "/queries.jsonl", queries);
  write_manifest(cfg, "synth");
  std::printf("synth: %zu entities, %zu triples, %zu queries -> %s\n", graph.entity_count(),
              graph.triple_count(), queries.size(), cfg.out_dir.c_str());
  return 0;
}

int cmd_pairs(RunConfig& cfg) {
  uint64_t seed = require_seed(cfg);
  kgr::KnowledgeGraph g = kgr::load_graph(require_path(cfg.triples, "triples"),
                                          require_path(cfg.types, "types"));
  auto queries = kgr::load_queries(require_path(cfg.queries, "queries"));
  std::mt19937_64 rng(seed);
  auto pairs = kgr::build_pairs(g, queries, cfg.per_query, rng);
  kgr::write_pairs(cfg.out_dir + "/pairs.jsonl", g, pairs);
  write_manifest(cfg, "pairs");
  std::printf("pairs: %zu pairs -> %s/pairs.jsonl\n", pairs.size(), cfg.out_dir.c_str());
  return 0;
}

int cmd_train(RunConfig& cfg) {
  uint64_t seed = require_seed(cfg);
  kgr::KnowledgeGraph g = kgr::load_graph(require_path(cfg.triples, "triples"),
                                          require_path(cfg.types, "types"));
  auto queries = kgr::load_queries(require_path(cfg.queries, "queries"));
  auto pairs = kgr::load_pairs(require_path(cfg.pairs, "pairs"), g);
  kgr::TrainConfig train_cfg = train_from(cfg);
  train_cfg.seed = seed;
  kgr::TrainResult result = kgr::train(init_model(cfg, seed), pairs, queries, g, train_cfg);
  kgr::save_model(cfg.out_dir + "/model.json", result.model);
  kgr::write_history_csv(cfg.out_dir + "/loss_history.csv", result.history);
  write_manifest(cfg, "train");
  double final_loss = result.history.empty() ? 0.0 : result.history.back().total;
  std::printf("train: %d epochs over %zu pairs, final loss %.6f -> %s/model.json\n",
              cfg.epochs, pairs.size(), final_loss, cfg.out_dir.c_str());
  return 0;
}

int cmd_search(RunConfig& cfg) {
  kgr::KnowledgeGraph g = kgr::load_graph(require_path(cfg.triples, "triples"),
                                          require_path(cfg.types, "types"));
  auto queries = kgr::load_queries(require_path(cfg.queries, "queries"));
  kgr::RewardModel m = kgr::load_model(require_path(cfg.model, "model"));
  auto outcomes = kgr::search_all(m, g, queries, search_from(cfg), effective_workers(cfg.workers));
  std::vector<kgr::ResultRecord> results;
  results.reserve(outcomes.size());
  for (const auto& o : outcomes) {
    if (!o.diagnostic.empty()) {
      std::fprintf(stderr, "warning: %s: %s\n", o.query_id.c_str(), o.diagnostic.c_str());
    }
    results.push_back(kgr::to_result_record(o));
  }
  kgr::write_results(cfg.out_dir + "/results.jsonl", results);
  write_manifest(cfg, "search");
  std::printf("search: %zu queries, budget %d -> %s/results.jsonl\n", results.size(), cfg.budget,
              cfg.out_dir.c_str());
  return 0;
}

int cmd_eval_pairwise(RunConfig& cfg) {
  kgr::KnowledgeGraph g = kgr::load_graph(require_path(cfg.triples, "triples"),
                                          require_path(cfg.types, "types"));
  auto queries = kgr::load_queries(require_path(cfg.queries, "queries"));
  auto pairs = kgr::load_pairs(require_path(cfg.pairs, "pairs"), g);
  kgr::RewardModel m = kgr::load_model(require_path(cfg.model, "model"));
  kgr::EvalReport report = kgr::pairwise_accuracy(m, pairs, queries, g);
  kgr::atomic_write_file(cfg.out_dir + "/report.json", report_to_json(report).dump(2) + "\n");
  kgr::atomic_write_file(cfg.out_dir + "/outcomes.jsonl", outcomes_to_jsonl(report));
  write_manifest(cfg, "eval_pairwise");
  std::printf("eval pairwise: %.4f over %d pairs\n", report.value, report.sample_count);
  return 0;
}

int cmd_eval_hits(RunConfig& cfg) {
  auto results = kgr::load_results(require_path(cfg.results, "results"));
  auto queries = kgr::load_queries(require_path(cfg.queries, "queries"));
  kgr::EvalReport report = kgr::hits_at_k(results, kgr::gold_answers(queries), cfg.k);
  kgr::atomic_write_file(cfg.out_dir + "/report.json", report_to_json(report).dump(2) + "\n");
  kgr::atomic_write_file(cfg.out_dir + "/outcomes.jsonl", outcomes_to_jsonl(report));
  write_manifest(cfg, "eval_hits");
  std::printf("eval hits@%d: %.4f over %d queries\n", cfg.k, report.value, report.sample_count);
  return 0;
}

int cmd_sweep(RunConfig& cfg) {
  require_seed(cfg);  // recorded in the manifest; per-run seeds come from sweep_seeds
  kgr::KnowledgeGraph g = kgr::load_graph(require_path(cfg.triples, "triples"),
                                          require_path(cfg.types, "types"));
  auto queries = kgr::load_queries(require_path(cfg.queries, "queries"));
  auto report = kgr::noise_sweep(g, queries, pipeline_from(cfg), parse_double_list(cfg.rhos),
                                 parse_seed_list(cfg.sweep_seeds));
  kgr::atomic_write_file(cfg.out_dir + "/sweep_report.json", sweep_to_json(report).dump(2) + "\n");
  kgr::atomic_write_file(cfg.out_dir + "/sweep_table.txt", kgr::sweep_table(report));
  write_manifest(cfg, "sweep");
  std::fputs(kgr::sweep_table(report).c_str(), stdout);
  return 0;
}

int cmd_ablate(RunConfig& cfg) {
  uint64_t seed = require_seed(cfg);
  kgr::KnowledgeGraph g = kgr::load_graph(require_path(cfg.triples, "triples"),
                                          require_path(cfg.types, "types"));
  auto queries = kgr::load_queries(require_path(cfg.queries, "queries"));
  std::vector<kgr::Variant> variants = {kgr::Variant::kFull, kgr::Variant::kWithoutCumulative,
                                        kgr::Variant::kWithoutFuture, kgr::Variant::kAdditivePrm};
  auto report = kgr::ablation_run(g, queries, pipeline_from(cfg), variants, seed);
  kgr::atomic_write_file(cfg.out_dir + "/ablation_report.json",
                         ablation_to_json(report).dump(2) + "\n");
  kgr::atomic_write_file(cfg.out_dir + "/ablation_table.txt", kgr::ablation_table(report));
  write_manifest(cfg, "ablate");
  std::fputs(kgr::ablation_table(report).c_str(), stdout);
  return 0;
}

int cmd_split(RunConfig& cfg) {
  uint64_t seed = require_seed(cfg);
  auto queries = kgr::load_queries(require_path(cfg.queries, "queries"));
  std::vector<int> assignment = kgr::kfold_split(queries.size(), cfg.folds, seed);
  nlohmann::ordered_json j;
  j["folds"] = cfg.folds;
  nlohmann::ordered_json by_id = nlohmann::ordered_json::object();
  for (size_t i = 0; i < queries.size(); ++i) by_id[queries[i].id] = assignment[i];
  j["assignment"] = std::move(by_id);
  kgr::atomic_write_file(cfg.out_dir + "/folds.json", j.dump(2) + "\n");
  write_manifest(cfg, "split");
  std::printf("split: %zu items into %d folds -> %s/folds.json\n", queries.size(), cfg.folds,
              cfg.out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;

  // The config file provides defaults; flags parsed afterwards override them.
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") {
      try {
        apply_config_file(cfg, argv[i + 1]);
      } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
      }
    }
  }

  CLI::App app{"knowledge-graph multi-hop reasoning with decomposed path rewards"};
  app.set_version_flag("--version", kVersion);
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file with flat keys");

  uint64_t seed_flag = 0;
  bool seed_given = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", cfg.out_dir, "output directory");
    sub->add_option("--seed", seed_flag, "random seed")->each([&](const std::string&) {
      seed_given = true;
    });
    sub->add_option("--config", config_path, "JSON config file (applied before flags)");
  };

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  add_common(synth);
  synth->add_option("--entities", cfg.entities, "approximate entity count");
  synth->add_option("--branching", cfg.branching, "anchor out-degree");
  synth->add_option("--depth", cfg.depth, "maximum gold path depth");
  synth->add_option("--queries", cfg.n_queries, "number of queries");

  auto* pairs = app.add_subcommand("pairs", "build positive/negative path pairs");
  add_common(pairs);
  pairs->add_option("--triples", cfg.triples, "triples.tsv path");
  pairs->add_option("--types", cfg.types, "types.tsv path");
  pairs->add_option("--queries-file", cfg.queries, "queries.jsonl path");
  pairs->add_option("--per-query", cfg.per_query, "pairs per query");

  auto* train = app.add_subcommand("train", "train the reward heads");
  add_common(train);
  train->add_option("--triples", cfg.triples, "triples.tsv path");
  train->add_option("--types", cfg.types, "types.tsv path");
  train->add_option("--queries-file", cfg.queries, "queries.jsonl path");
  train->add_option("--pairs-file", cfg.pairs, "pairs.jsonl path");
  train->add_option("--dim", cfg.dim, "encoder dimension");
  train->add_option("--head-depth", cfg.head_depth, "0 affine, 1 hidden layer");
  train->add_option("--variant", cfg.variant, "full|wo_cr|wo_fr|additive_prm");
  train->add_option("--margin", cfg.margin, "pairwise margin");
  train->add_option("--lambda", cfg.lambda, "future loss weight");
  train->add_option("--lr", cfg.lr, "initial learning rate");
  train->add_option("--epochs", cfg.epochs, "training epochs");
  train->add_option("--batch-size", cfg.batch_size, "pairs per optimizer step");
  train->add_option("--risk-bias", cfg.risk_bias, "risk head bias at init");
  train->add_option("--init-scale", cfg.init_scale, "head init scale");
  train->add_flag("--mean-loss", cfg.mean_loss, "average batch loss instead of summing");
  train->add_flag("--future-broadcast", cfg.future_broadcast,
                  "supervise prefixes with the final-step target");

  auto* search = app.add_subcommand("search", "run MCTS over all queries");
  add_common(search);
  search->add_option("--triples", cfg.triples, "triples.tsv path");
  search->add_option("--types", cfg.types, "types.tsv path");
  search->add_option("--queries-file", cfg.queries, "queries.jsonl path");
  search->add_option("--model", cfg.model, "model.json path");
  search->add_option("--budget", cfg.budget, "simulations per query");
  search->add_option("--c", cfg.exploration_c, "UCB exploration constant");
  search->add_option("--max-depth", cfg.max_depth, "search horizon");
  search->add_option("--top-k", cfg.top_k, "answers per query");
  search->add_option("--workers", cfg.workers, "worker threads (0 = cores)");

  auto* eval = app.add_subcommand("eval", "evaluate a model or results");
  auto* eval_pw = eval->add_subcommand("pairwise", "pairwise ranking accuracy");
  add_common(eval_pw);
  eval_pw->add_option("--triples", cfg.triples, "triples.tsv path");
  eval_pw->add_option("--types", cfg.types, "types.tsv path");
  eval_pw->add_option("--queries-file", cfg.queries, "queries.jsonl path");
  eval_pw->add_option("--pairs-file", cfg.pairs, "pairs.jsonl path");
  eval_pw->add_option("--model", cfg.model, "model.json path");
  auto* eval_hits = eval->add_subcommand("hits", "answer-level Hits@k");
  add_common(eval_hits);
  eval_hits->add_option("--results", cfg.results, "results.jsonl path");
  eval_hits->add_option("--queries-file", cfg.queries, "queries.jsonl path");
  eval_hits->add_option("--k", cfg.k, "top-k cutoff");
  eval->require_subcommand(1);

  auto* sweep = app.add_subcommand("sweep", "schema-noise robustness sweep");
  add_common(sweep);
  sweep->add_option("--triples", cfg.triples, "triples.tsv path");
  sweep->add_option("--types", cfg.types, "types.tsv path");
  sweep->add_option("--queries-file", cfg.queries, "queries.jsonl path");
  sweep->add_option("--rhos", cfg.rhos, "comma-separated noise ratios");
  sweep->add_option("--sweep-seeds", cfg.sweep_seeds, "comma-separated seeds");
  sweep->add_option("--dim", cfg.dim, "encoder dimension");
  sweep->add_option("--epochs", cfg.epochs, "training epochs");
  sweep->add_option("--per-query", cfg.per_query, "pairs per query");
  sweep->add_option("--budget", cfg.budget, "simulations per query");
  sweep->add_option("--k", cfg.k, "hits cutoff");
  sweep->add_option("--risk-bias", cfg.risk_bias, "risk head bias at init");
  sweep->add_option("--workers", cfg.workers, "worker threads (0 = cores)");

  auto* ablate = app.add_subcommand("ablate", "reward-variant ablation");
  add_common(ablate);
  ablate->add_option("--triples", cfg.triples, "triples.tsv path");
  ablate->add_option("--types", cfg.types, "types.tsv path");
  ablate->add_option("--queries-file", cfg.queries, "queries.jsonl path");
  ablate->add_option("--dim", cfg.dim, "encoder dimension");
  ablate->add_option("--epochs", cfg.epochs, "training epochs");
  ablate->add_option("--per-query", cfg.per_query, "pairs per query");
  ablate->add_option("--budget", cfg.budget, "simulations per query");
  ablate->add_option("--k", cfg.k, "hits cutoff");
  ablate->add_option("--risk-bias", cfg.risk_bias, "risk head bias at init");
  ablate->add_option("--workers", cfg.workers, "worker threads (0 = cores)");

  auto* split = app.add_subcommand("split", "deterministic k-fold assignment");
  add_common(split);
  split->add_option("--queries-file", cfg.queries, "queries.jsonl path");
  split->add_option("--folds", cfg.folds, "number of folds");

  app.require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() != 0) {
      std::fprintf(stderr, "error: %s\n", e.what());
    }
    return app.exit(e);
  }

  if (seed_given) cfg.seed = seed_flag;
  if (const char* env_out = std::getenv("KGR_OUT_DIR"); env_out && *env_out) {
    cfg.out_dir = env_out;
  }

  try {
    if (synth->parsed()) return cmd_synth(cfg);
    if (pairs->parsed()) return cmd_pairs(cfg);
    if (train->parsed()) return cmd_train(cfg);
    if (search->parsed()) return cmd_search(cfg);
    if (eval->parsed()) {
      if (eval_pw->parsed()) return cmd_eval_pairwise(cfg);
      if (eval_hits->parsed()) return cmd_eval_hits(cfg);
    }
    if (sweep->parsed()) return cmd_sweep(cfg);
    if (ablate->parsed()) return cmd_ablate(cfg);
    if (split->parsed()) return cmd_split(cfg);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
