#pragma once

// Evaluation harness: pairwise ranking accuracy, answer-level Hits@k, k-fold
// splitting, the schema-noise robustness sweep and the reward-variant
// ablation runner. Every report keeps its per-item outcomes so the headline
// number can be recomputed from the emitted log.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "kgr/dataset.hpp"
#include "kgr/graph.hpp"
#include "kgr/reward.hpp"
#include "kgr/schema.hpp"
#include "kgr/search.hpp"
#include "kgr/train.hpp"

namespace kgr {

struct EvalReport {
  std::string metric;
  double value = 0.0;  // in [0, 1]
  int sample_count = 0;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::vector<double> per_fold;  // per-fold or per-seed values when folded
  nlohmann::ordered_json items = nlohmann::ordered_json::array();
};

inline nlohmann::ordered_json report_to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["metric"] = r.metric;
  j["value"] = r.value;
  j["sample_count"] = r.sample_count;
  j["config"] = r.config;
  j["per_fold"] = r.per_fold;
  return j;
}

inline std::string outcomes_to_jsonl(const EvalReport& r) {
  std::string out;
  for (const auto& item : r.items) {
    out += item.dump();
    out += '\n';
  }
  return out;
}

/// Fraction of pairs where the positive path outscores the negative under
/// the model's reward variant. Exact ties count as incorrect.
inline EvalReport pairwise_accuracy(const RewardModel& m, const std::vector<PathPair>& pairs,
                                    const std::vector<QueryRecord>& queries,
                                    const KnowledgeGraph& g) {
  if (pairs.empty()) throw std::invalid_argument("pairwise_accuracy: no pairs");
  QueryIndex index = make_query_index(queries);
  EvalReport report;
  report.metric = "pairwise_accuracy";
  report.sample_count = static_cast<int>(pairs.size());
  report.config = {{"variant", to_string(m.variant)}};
  int correct = 0;
  for (const PathPair& pair : pairs) {
    const QueryRecord& q = lookup_query(index, pair.query_id);
    double r_pos = path_reward(m, q.text, pair.positive, g).value;
    double r_neg = path_reward(m, q.text, pair.negative, g).value;
    bool ok = r_pos > r_neg;
    correct += ok ? 1 : 0;
    report.items.push_back({{"query_id", pair.query_id},
                            {"r_pos", r_pos},
                            {"r_neg", r_neg},
                            {"correct", ok}});
  }
  report.value = static_cast<double>(correct) / static_cast<double>(pairs.size());
  return report;
}

inline std::map<std::string, std::vector<std::string>> gold_answers(
    const std::vector<QueryRecord>& queries) {
  std::map<std::string, std::vector<std::string>> gold;
  for (const QueryRecord& q : queries) gold[q.id] = q.answers;
  return gold;
}

/// Answer-level Hits@k: a query counts as correct when at least one gold
/// answer appears among its top-k predictions. Queries with fewer than k
/// answers are judged on what exists; empty result sets are misses.
inline EvalReport hits_at_k(const std::vector<ResultRecord>& results,
                            const std::map<std::string, std::vector<std::string>>& gold,
                            int k) {
  if (k < 1) throw std::invalid_argument("hits_at_k: k must be >= 1");
  if (results.empty()) throw std::invalid_argument("hits_at_k: no results");
  EvalReport report;
  report.metric = "hits@" + std::to_string(k);
  report.sample_count = static_cast<int>(results.size());
  report.config = {{"k", k}};
  int hits = 0;
  for (const ResultRecord& r : results) {
    auto it = gold.find(r.query_id);
    if (it == gold.end()) {
      throw std::invalid_argument("result for query '" + r.query_id +
                                  "' has no gold answers");
    }
    std::vector<std::string> predicted;
    for (const ResultEntry& e : r.topk) {
      predicted.push_back(e.answer);
      if (static_cast<int>(predicted.size()) >= k) break;
    }
    bool hit = false;
    for (const std::string& p : predicted) {
      if (std::find(it->second.begin(), it->second.end(), p) != it->second.end()) {
        hit = true;
        break;
      }
    }
    hits += hit ? 1 : 0;
    report.items.push_back({{"query_id", r.query_id},
                            {"hit", hit},
                            {"predicted", predicted},
                            {"gold", it->second}});
  }
  report.value = static_cast<double>(hits) / static_cast<double>(results.size());
  return report;
}

/// Deterministic near-equal partition of n items into `folds` folds.
inline std::vector<int> kfold_split(size_t n_items, int folds, uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("kfold_split: folds must be >= 2");
  if (n_items < static_cast<size_t>(folds)) {
    throw std::invalid_argument("kfold_split: fewer items than folds");
  }
  std::vector<size_t> order(n_items);
  std::iota(order.begin(), order.end(), size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> assignment(n_items, 0);
  for (size_t i = 0; i < order.size(); ++i) {
    assignment[order[i]] = static_cast<int>(i % static_cast<size_t>(folds));
  }
  return assignment;
}

// ---------------------------------------------------------------------------
// Train-and-evaluate pipeline shared by the sweep, the ablation runner and
// the end-to-end experiments.

struct PipelineOptions {
  EncoderConfig encoder;
  TrainConfig train;
  SearchConfig search;
  int head_depth = 0;
  Variant variant = Variant::kFull;
  int per_query_pairs = 4;
  int eval_folds = 5;  // fold 0 of the query split is held out for pairwise eval
  int hits_k = 1;
  double init_scale = 0.01;
  // Low-risk prior: safe steps start near zero cost in G, so path length
  // alone does not dominate the combined reward before training converges.
  double risk_bias_init = -3.0;
  int workers = 1;
};

struct PipelineRun {
  RewardModel model;
  EvalReport pairwise;  // held-out pairs
  EvalReport hits;      // all queries
};

/// Trains one model and evaluates it. Training-side query schemas are
/// noise-injected at rate `rho`; held-out evaluation always uses the clean
/// annotations. Fully deterministic in (options, rho, seed).
inline PipelineRun run_pipeline(const KnowledgeGraph& g, const std::vector<QueryRecord>& queries,
                                PipelineOptions opt, double rho, uint64_t seed) {
  if (queries.size() < static_cast<size_t>(opt.eval_folds)) {
    throw std::invalid_argument("run_pipeline: fewer queries than folds");
  }
  std::vector<int> fold = kfold_split(queries.size(), opt.eval_folds, seed);
  std::vector<QueryRecord> train_queries;
  std::vector<QueryRecord> eval_queries;
  for (size_t i = 0; i < queries.size(); ++i) {
    (fold[i] == 0 ? eval_queries : train_queries).push_back(queries[i]);
  }

  std::vector<std::string> vocab = g.type_vocabulary();
  std::mt19937_64 noise_rng(seed ^ 0x6e6f697365ULL);
  for (QueryRecord& q : train_queries) {
    q.schema = inject_schema_noise(q.schema, rho, noise_rng, vocab);
  }

  std::mt19937_64 pair_rng(seed ^ 0x7061697273ULL);
  std::vector<PathPair> train_pairs = build_pairs(g, train_queries, opt.per_query_pairs, pair_rng);
  std::vector<PathPair> eval_pairs = build_pairs(g, eval_queries, opt.per_query_pairs, pair_rng);

  std::mt19937_64 init_rng(seed ^ 0x696e6974ULL);
  RewardModel model = RewardModel::random(opt.encoder, init_rng, opt.init_scale, opt.head_depth);
  model.variant = opt.variant;
  if (opt.head_depth == 0) {
    model.risk_head.b1[0] = opt.risk_bias_init;
  } else {
    model.risk_head.b2 = opt.risk_bias_init;
  }

  TrainConfig train_cfg = opt.train;
  train_cfg.seed = seed;
  TrainResult trained = train(std::move(model), train_pairs, train_queries, g, train_cfg);

  PipelineRun run{std::move(trained.model), {}, {}};
  run.pairwise = pairwise_accuracy(run.model, eval_pairs, eval_queries, g);

  SearchConfig search_cfg = opt.search;
  search_cfg.top_k = std::max(search_cfg.top_k, opt.hits_k);
  std::vector<SearchOutcome> outcomes = search_all(run.model, g, queries, search_cfg, opt.workers);
  std::vector<ResultRecord> results;
  results.reserve(outcomes.size());
  for (const SearchOutcome& o : outcomes) results.push_back(to_result_record(o));
  run.hits = hits_at_k(results, gold_answers(queries), opt.hits_k);
  return run;
}

namespace detail {

inline double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

inline double std_of(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  double mu = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - mu) * (x - mu);
  return std::sqrt(s / static_cast<double>(xs.size()));
}

}  // namespace detail

struct SweepRow {
  double rho = 0.0;
  std::vector<double> pairwise_values;  // one per seed
  std::vector<double> hits_values;
  double pairwise_mean = 0.0, pairwise_std = 0.0;
  double hits_mean = 0.0, hits_std = 0.0;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  std::vector<uint64_t> seeds;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
};

/// Trains and evaluates across noise ratios x seeds. The rho = 0 row runs
/// the identical pipeline as a clean baseline.
inline SweepReport noise_sweep(const KnowledgeGraph& g, const std::vector<QueryRecord>& queries,
                               const PipelineOptions& opt, const std::vector<double>& rhos,
                               const std::vector<uint64_t>& seeds) {
  if (rhos.empty() || seeds.empty()) throw std::invalid_argument("noise_sweep: empty rho/seed set");
  SweepReport report;
  report.seeds = seeds;
  report.config = {{"per_query_pairs", opt.per_query_pairs},
                   {"epochs", opt.train.epochs},
                   {"hits_k", opt.hits_k}};
  for (double rho : rhos) {
    SweepRow row;
    row.rho = rho;
    for (uint64_t seed : seeds) {
      PipelineRun run = run_pipeline(g, queries, opt, rho, seed);
      row.pairwise_values.push_back(run.pairwise.value);
      row.hits_values.push_back(run.hits.value);
    }
    row.pairwise_mean = detail::mean_of(row.pairwise_values);
    row.pairwise_std = detail::std_of(row.pairwise_values);
    row.hits_mean = detail::mean_of(row.hits_values);
    row.hits_std = detail::std_of(row.hits_values);
    report.rows.push_back(std::move(row));
  }
  return report;
}

inline nlohmann::ordered_json sweep_to_json(const SweepReport& report) {
  nlohmann::ordered_json j;
  j["seeds"] = report.seeds;
  j["config"] = report.config;
  j["rows"] = nlohmann::ordered_json::array();
  for (const SweepRow& row : report.rows) {
    j["rows"].push_back({{"rho", row.rho},
                         {"pairwise_mean", row.pairwise_mean},
                         {"pairwise_std", row.pairwise_std},
                         {"pairwise_values", row.pairwise_values},
                         {"hits_mean", row.hits_mean},
                         {"hits_std", row.hits_std},
                         {"hits_values", row.hits_values}});
  }
  return j;
}

inline std::string sweep_table(const SweepReport& report) {
  std::string out = "rho    pairwise (mean +/- std)    hits (mean +/- std)\n";
  char buf[160];
  for (const SweepRow& row : report.rows) {
    std::snprintf(buf, sizeof(buf), "%-6.2f %7.4f +/- %6.4f         %7.4f +/- %6.4f\n", row.rho,
                  row.pairwise_mean, row.pairwise_std, row.hits_mean, row.hits_std);
    out += buf;
  }
  return out;
}

struct AblationRow {
  Variant variant = Variant::kFull;
  double pairwise = 0.0;
  double hits = 0.0;
};

struct AblationReport {
  std::vector<AblationRow> rows;
  uint64_t seed = 0;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
};

/// Trains and evaluates each reward variant under the identical seed, so
/// pair sets, splits and initialization match across rows.
inline AblationReport ablation_run(const KnowledgeGraph& g,
                                   const std::vector<QueryRecord>& queries,
                                   const PipelineOptions& opt,
                                   const std::vector<Variant>& variants, uint64_t seed) {
  if (variants.empty()) throw std::invalid_argument("ablation_run: no variants");
  AblationReport report;
  report.seed = seed;
  report.config = {{"per_query_pairs", opt.per_query_pairs},
                   {"epochs", opt.train.epochs},
                   {"hits_k", opt.hits_k}};
  for (Variant v : variants) {
    PipelineOptions run_opt = opt;
    run_opt.variant = v;
    PipelineRun run = run_pipeline(g, queries, run_opt, 0.0, seed);
    report.rows.push_back(AblationRow{v, run.pairwise.value, run.hits.value});
  }
  return report;
}

inline nlohmann::ordered_json ablation_to_json(const AblationReport& report) {
  nlohmann::ordered_json j;
  j["seed"] = report.seed;
  j["config"] = report.config;
  j["rows"] = nlohmann::ordered_json::array();
  for (const AblationRow& row : report.rows) {
    j["rows"].push_back({{"variant", to_string(row.variant)},
                         {"pairwise", row.pairwise},
                         {"hits", row.hits}});
  }
  return j;
}

inline std::string ablation_table(const AblationReport& report) {
  std::string out = "variant        pairwise   hits\n";
  char buf[120];
  for (const AblationRow& row : report.rows) {
    std::snprintf(buf, sizeof(buf), "%-14s %8.4f %8.4f\n", to_string(row.variant).c_str(),
                  row.pairwise, row.hits);
    out += buf;
  }
  return out;
}

}  // namespace kgr
