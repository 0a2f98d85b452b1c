#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>
#include <set>
#include <sstream>

#include "kgr/synth.hpp"
#include "test_util.hpp"

using namespace kgr;

namespace {

std::string graph_fingerprint(const KnowledgeGraph& g) {
  std::ostringstream out;
  g.write_triples(out);
  g.write_types(out);
  return out.str();
}

// All entities reachable within `depth` hops whose path has >= 1 step.
void dfs_answers(const KnowledgeGraph& g, EntityId at, int depth,
                 std::set<std::string>& reached) {
  if (depth == 0) return;
  for (const Edge& e : g.neighbors(at)) {
    reached.insert(g.entity(e.tail).label);
    dfs_answers(g, e.tail, depth - 1, reached);
  }
}

size_t count_paths(const KnowledgeGraph& g, EntityId at, int depth) {
  if (depth == 0) return 0;
  size_t n = 0;
  for (const Edge& e : g.neighbors(at)) {
    n += 1 + count_paths(g, e.tail, depth - 1);
  }
  return n;
}

}  // namespace

TEST_CASE("generation is seed-deterministic") {
  auto [g1, q1] = synth_graph(7, 200, 4, 4, 20);
  auto [g2, q2] = synth_graph(7, 200, 4, 4, 20);
  CHECK(graph_fingerprint(g1) == graph_fingerprint(g2));
  CHECK(queries_to_jsonl(q1) == queries_to_jsonl(q2));

  auto [g3, q3] = synth_graph(8, 200, 4, 4, 20);
  CHECK(graph_fingerprint(g1) != graph_fingerprint(g3));
}

TEST_CASE("every query has one gold path that validates via extend") {
  auto [g, queries] = synth_graph(7, 200, 4, 4, 50);
  for (const QueryRecord& q : queries) {
    REQUIRE(q.gold_paths.size() == 1);
    Trajectory t = trajectory_from_labels(g, q.gold_paths[0], q.anchor);  // throws if invalid
    CHECK(t.length() >= 2);
    CHECK(t.length() <= 4);
    REQUIRE(q.answers.size() == 1);
    CHECK(g.entity(t.last_entity()).label == q.answers[0]);
  }
}

TEST_CASE("query schemas match the gold path type sequences") {
  auto [g, queries] = synth_graph(7, 200, 4, 4, 30);
  for (const QueryRecord& q : queries) {
    Trajectory t = trajectory_from_labels(g, q.gold_paths[0], q.anchor);
    ReasoningSchema rs = reasoning_schema(g, t);
    std::vector<std::string> expected;
    expected.push_back(q.schema.anchor_type);
    expected.insert(expected.end(), q.schema.constraints.begin(), q.schema.constraints.end());
    CHECK(rs.type_sequence == expected);
    CHECK(future_target(EncoderConfig{}, q.schema, rs) == doctest::Approx(1.0));
  }
}

TEST_CASE("exhaustive DFS from each anchor finds the gold answer") {
  auto [g, queries] = synth_graph(11, 200, 4, 4, 25);
  for (const QueryRecord& q : queries) {
    std::set<std::string> reached;
    dfs_answers(g, *g.find_label(q.anchor), 4, reached);
    CHECK(reached.count(q.answers[0]) == 1);
  }
}

TEST_CASE("each anchor has at least three distractor paths to wrong answers") {
  auto [g, queries] = synth_graph(7, 200, 4, 4, 25);
  for (const QueryRecord& q : queries) {
    std::set<std::string> reached;
    dfs_answers(g, *g.find_label(q.anchor), 4, reached);
    size_t wrong = 0;
    for (const std::string& label : reached) {
      if (label != q.answers[0]) ++wrong;
    }
    CHECK(wrong >= 3);
  }
}

TEST_CASE("per-anchor path counts stay small enough for exhaustive search") {
  auto [g, queries] = synth_graph(7, 200, 4, 4, 50);
  for (const QueryRecord& q : queries) {
    CHECK(count_paths(g, *g.find_label(q.anchor), 4) <= 200);
  }
}

TEST_CASE("every gold step has an alternative outgoing edge") {
  auto [g, queries] = synth_graph(7, 200, 4, 4, 25);
  for (const QueryRecord& q : queries) {
    Trajectory t = trajectory_from_labels(g, q.gold_paths[0], q.anchor);
    for (size_t i = 0; i < t.length(); ++i) {
      CHECK(g.neighbors(t.entity_at(i)).size() >= 2);
    }
  }
}

TEST_CASE("entity count tracks the requested size approximately") {
  auto [g, queries] = synth_graph(7, 200, 4, 4, 50);
  CHECK(g.entity_count() >= 180);
  CHECK(g.entity_count() <= 260);
  CHECK(queries.size() == 50);
}

TEST_CASE("infeasible parameters are rejected") {
  CHECK_THROWS_WITH_AS(synth_graph(1, 10, 4, 4, 50), doctest::Contains("infeasible"),
                       std::invalid_argument);
  CHECK_THROWS_AS(synth_graph(1, 200, 2, 4, 10), std::invalid_argument);  // branching < 3
  CHECK_THROWS_AS(synth_graph(1, 200, 4, 0, 10), std::invalid_argument);
  CHECK_THROWS_AS(synth_graph(1, 200, 4, 4, 0), std::invalid_argument);
}

TEST_CASE("queries round-trip through queries.jsonl") {
  auto [g, queries] = synth_graph(7, 200, 4, 3, 10);
  kgrtest::TempDir dir;
  write_queries(dir.sub("queries.jsonl"), queries);
  auto loaded = load_queries(dir.sub("queries.jsonl"));
  REQUIRE(loaded.size() == queries.size());
  CHECK(queries_to_jsonl(loaded) == queries_to_jsonl(queries));
}

TEST_CASE("graph file round-trip preserves the query-relevant structure") {
  auto [g, queries] = synth_graph(7, 200, 4, 4, 20);
  kgrtest::TempDir dir;
  std::ostringstream triples, types;
  g.write_triples(triples);
  g.write_types(types);
  auto loaded = load_graph(dir.file("t.tsv", triples.str()), dir.file("y.tsv", types.str()));
  CHECK(loaded.entity_count() == g.entity_count());
  CHECK(loaded.triple_count() == g.triple_count());
  for (const QueryRecord& q : queries) {
    CHECK_NOTHROW(trajectory_from_labels(loaded, q.gold_paths[0], q.anchor));
  }
}
