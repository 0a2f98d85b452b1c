#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "kgr/eval.hpp"
#include "kgr/synth.hpp"
#include "test_util.hpp"

using namespace kgr;

namespace {

// Risk head wired by hand: tokens that only occur off the gold chains get
// positive risk weight, so every structurally wrong path scores lower.
RewardModel handcrafted_model(const EncoderConfig& enc) {
  RewardModel m = RewardModel::zeros(enc);
  m.risk_head.b1[0] = -2.0;
  for (const char* token : {"off", "alt", "memo", "tag", "note", "mentioned", "cooccurs",
                            "adjacent", "linked", "grouped", "with", "to"}) {
    uint64_t h = detail::token_hash(token, enc.hash_seed);
    size_t bucket = static_cast<size_t>(h % static_cast<uint64_t>(enc.dim));
    double sign = ((h >> 32) & 1ULL) ? 1.0 : -1.0;
    m.risk_head.w1[bucket] += 8.0 * sign;
  }
  return m;
}

}  // namespace

TEST_CASE("pairwise accuracy is 1.0 for a model that separates all pairs") {
  auto [g, queries] = synth_graph(21, 200, 4, 4, 10);
  std::mt19937_64 rng(1);
  auto pairs = build_pairs(g, queries, 3, rng);
  RewardModel m = handcrafted_model(EncoderConfig{});
  EvalReport report = pairwise_accuracy(m, pairs, queries, g);
  CHECK(report.value == 1.0);
  CHECK(report.sample_count == static_cast<int>(pairs.size()));
}

TEST_CASE("exact ties count as incorrect") {
  // Two chains whose entity labels are token permutations of each other:
  // every prefix has an identical token bag, so any model scores them
  // identically under every variant.
  GraphBuilder b;
  auto a = b.add_entity("a", "t0");
  auto x = b.add_entity("x q", "t1");
  auto y = b.add_entity("q x", "t1");
  auto x2 = b.add_entity("end v", "t2");
  auto y2 = b.add_entity("v end", "t2");
  b.add_triple(a, "r", x);
  b.add_triple(a, "r", y);
  b.add_triple(x, "s", x2);
  b.add_triple(y, "s", y2);
  auto g = b.build();

  QueryRecord q;
  q.id = "q0";
  q.text = "find t2 : a ?";
  q.anchor = "a";
  q.answers = {"end v"};
  q.gold_paths = {{LabelTriple{"a", "r", "x q"}, LabelTriple{"x q", "s", "end v"}}};

  Trajectory pos = trajectory_from_labels(g, q.gold_paths[0], "a");
  Trajectory neg(*g.find_label("a"));
  neg = extend(neg, "r", y, g);
  neg = extend(neg, "s", y2, g);

  std::mt19937_64 rng(2);
  RewardModel m = RewardModel::random(EncoderConfig{}, rng, 0.4);
  double r_pos = path_reward(m, q.text, pos, g).value;
  double r_neg = path_reward(m, q.text, neg, g).value;
  REQUIRE(r_pos == r_neg);  // identical bags at every prefix

  std::vector<PathPair> pairs = {{q.id, pos, neg, 1}};
  EvalReport report = pairwise_accuracy(m, pairs, {q}, g);
  CHECK(report.value == 0.0);
}

TEST_CASE("pairwise report recomputes from its per-item outcomes") {
  auto [g, queries] = synth_graph(23, 200, 4, 3, 6);
  std::mt19937_64 rng(3);
  auto pairs = build_pairs(g, queries, 2, rng);
  RewardModel m = RewardModel::random(EncoderConfig{}, rng, 0.2);
  EvalReport report = pairwise_accuracy(m, pairs, queries, g);
  int correct = 0;
  for (const auto& item : report.items) {
    bool ok = item.at("r_pos").get<double>() > item.at("r_neg").get<double>();
    CHECK(ok == item.at("correct").get<bool>());
    correct += ok ? 1 : 0;
  }
  CHECK(report.value ==
        doctest::Approx(static_cast<double>(correct) / report.sample_count).epsilon(1e-12));
}

TEST_CASE("pairwise accuracy is invariant under strictly increasing transforms") {
  auto [g, queries] = synth_graph(25, 200, 4, 3, 6);
  std::mt19937_64 rng(5);
  auto pairs = build_pairs(g, queries, 2, rng);
  RewardModel m = RewardModel::random(EncoderConfig{}, rng, 0.3);
  EvalReport report = pairwise_accuracy(m, pairs, queries, g);
  int correct_transformed = 0;
  for (const auto& item : report.items) {
    double a = std::tanh(item.at("r_pos").get<double>());
    double b = std::tanh(item.at("r_neg").get<double>());
    correct_transformed += a > b ? 1 : 0;
  }
  CHECK(static_cast<double>(correct_transformed) / report.sample_count ==
        doctest::Approx(report.value).epsilon(1e-12));
}

TEST_CASE("hits_at_k basics") {
  std::map<std::string, std::vector<std::string>> gold = {
      {"q0", {"b"}}, {"q1", {"z"}}, {"q2", {"x"}}};
  std::vector<ResultRecord> results = {
      {"q0", {{"a", 0.3, {}}, {"b", 0.2, {}}, {"c", 0.1, {}}}, 10},
      {"q1", {{"a", 0.3, {}}}, 10},  // fewer than k answers
      {"q2", {}, 10},                // empty result set
  };
  EvalReport r3 = hits_at_k(results, gold, 3);
  CHECK(r3.value == doctest::Approx(1.0 / 3.0));
  EvalReport r1 = hits_at_k(results, gold, 1);
  CHECK(r1.value == 0.0);

  // monotone non-decreasing in k
  double prev = 0.0;
  for (int k = 1; k <= 4; ++k) {
    double v = hits_at_k(results, gold, k).value;
    CHECK(v >= prev);
    prev = v;
  }

  std::vector<ResultRecord> orphan = {{"unknown", {}, 1}};
  CHECK_THROWS_WITH_AS(hits_at_k(orphan, gold, 1), doctest::Contains("unknown"),
                       std::invalid_argument);
  CHECK_THROWS_AS(hits_at_k(results, gold, 0), std::invalid_argument);
}

TEST_CASE("hits report recomputes from outcomes") {
  std::map<std::string, std::vector<std::string>> gold = {{"q0", {"a"}}, {"q1", {"b"}}};
  std::vector<ResultRecord> results = {{"q0", {{"a", 0.5, {}}}, 4}, {"q1", {{"c", 0.5, {}}}, 4}};
  EvalReport report = hits_at_k(results, gold, 1);
  int hits = 0;
  for (const auto& item : report.items) hits += item.at("hit").get<bool>() ? 1 : 0;
  CHECK(report.value == doctest::Approx(0.5));
  CHECK(hits == 1);
}

TEST_CASE("kfold_split partitions evenly and deterministically") {
  auto folds = kfold_split(10, 5, 42);
  REQUIRE(folds.size() == 10);
  std::map<int, int> sizes;
  for (int f : folds) sizes[f]++;
  REQUIRE(sizes.size() == 5);
  for (const auto& [fold, count] : sizes) {
    CHECK(count == 2);
    CHECK(fold >= 0);
    CHECK(fold < 5);
  }
  CHECK(kfold_split(10, 5, 42) == folds);
  CHECK(kfold_split(10, 5, 43) != folds);
  CHECK_THROWS_AS(kfold_split(3, 5, 1), std::invalid_argument);
  CHECK_THROWS_AS(kfold_split(10, 1, 1), std::invalid_argument);

  auto uneven = kfold_split(11, 5, 1);
  std::map<int, int> sz;
  for (int f : uneven) sz[f]++;
  for (const auto& [fold, count] : sz) CHECK(std::abs(count - 2) <= 1);
}

TEST_CASE("run_pipeline is deterministic and reports both metrics") {
  auto [g, queries] = synth_graph(27, 200, 4, 3, 10);
  PipelineOptions opt;
  opt.train.epochs = 3;
  opt.per_query_pairs = 2;
  opt.search.budget = 40;
  opt.hits_k = 1;
  PipelineRun a = run_pipeline(g, queries, opt, 0.0, 5);
  PipelineRun b = run_pipeline(g, queries, opt, 0.0, 5);
  CHECK(a.pairwise.value == b.pairwise.value);
  CHECK(a.hits.value == b.hits.value);
  CHECK(a.model.risk_head.w1 == b.model.risk_head.w1);
  CHECK(a.pairwise.value >= 0.0);
  CHECK(a.pairwise.value <= 1.0);
}

TEST_CASE("noise sweep emits one row per rho and matches the baseline at rho 0") {
  auto [g, queries] = synth_graph(29, 200, 4, 3, 10);
  PipelineOptions opt;
  opt.train.epochs = 2;
  opt.per_query_pairs = 2;
  opt.search.budget = 30;
  opt.hits_k = 1;
  std::vector<double> rhos = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
  SweepReport report = noise_sweep(g, queries, opt, rhos, {5});
  REQUIRE(report.rows.size() == 6);
  for (size_t i = 0; i < rhos.size(); ++i) CHECK(report.rows[i].rho == rhos[i]);

  PipelineRun baseline = run_pipeline(g, queries, opt, 0.0, 5);
  CHECK(report.rows[0].pairwise_values[0] == baseline.pairwise.value);
  CHECK(report.rows[0].hits_values[0] == baseline.hits.value);

  SweepReport multi = noise_sweep(g, queries, opt, {0.0}, {5, 6, 7});
  CHECK(multi.rows[0].pairwise_values.size() == 3);
  CHECK(multi.rows[0].pairwise_std >= 0.0);
  std::string table = sweep_table(multi);
  CHECK(table.find("rho") != std::string::npos);
}

TEST_CASE("ablation runs every variant under identical seeds, reproducibly") {
  auto [g, queries] = synth_graph(31, 200, 4, 3, 10);
  PipelineOptions opt;
  opt.train.epochs = 2;
  opt.per_query_pairs = 2;
  opt.search.budget = 30;
  opt.hits_k = 1;
  std::vector<Variant> variants = {Variant::kFull, Variant::kWithoutCumulative,
                                   Variant::kWithoutFuture, Variant::kAdditivePrm};
  AblationReport a = ablation_run(g, queries, opt, variants, 5);
  REQUIRE(a.rows.size() == 4);
  CHECK(a.rows[0].variant == Variant::kFull);

  AblationReport b = ablation_run(g, queries, opt, variants, 5);
  CHECK(ablation_to_json(a).dump() == ablation_to_json(b).dump());  // bit-identical
  std::string table = ablation_table(a);
  CHECK(table.find("full") != std::string::npos);
  CHECK(table.find("wo_cr") != std::string::npos);
  CHECK(table.find("wo_fr") != std::string::npos);
  CHECK(table.find("additive_prm") != std::string::npos);
}
