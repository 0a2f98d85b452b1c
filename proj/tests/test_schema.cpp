#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "kgr/schema.hpp"
#include "test_util.hpp"

using namespace kgr;

namespace {

KnowledgeGraph medical_graph() {
  GraphBuilder b;
  auto d = b.add_entity("carcinoma", "disease");
  auto g = b.add_entity("brca1", "gene");
  auto m = b.add_entity("mir21", "miRNA");
  b.add_triple(d, "implicates", g);
  b.add_triple(g, "encodes", m);
  return b.build();
}

}  // namespace

TEST_CASE("reasoning_schema follows entity types in order") {
  auto g = medical_graph();
  Trajectory t(*g.find_label("carcinoma"));
  CHECK(reasoning_schema(g, t).type_sequence == std::vector<std::string>{"disease"});

  t = extend(t, "implicates", *g.find_label("brca1"), g);
  t = extend(t, "encodes", *g.find_label("mir21"), g);
  CHECK(reasoning_schema(g, t).type_sequence ==
        std::vector<std::string>{"disease", "gene", "miRNA"});

  // prefix consistency
  auto full = reasoning_schema(g, t).type_sequence;
  for (size_t j = 0; j <= t.length(); ++j) {
    auto part = reasoning_schema(g, t.prefix(j)).type_sequence;
    CHECK(std::equal(part.begin(), part.end(), full.begin()));
  }
}

TEST_CASE("schema_text canonical form") {
  CHECK(schema_text("disease", {"gene", "mirna"}) == "disease -> gene -> mirna");
  CHECK(schema_text("disease", {}) == "disease");
  CHECK(schema_text("DiSeAsE", {"Gene"}) == "disease -> gene");
  // idempotent: serializing the already-lowercased text again changes nothing
  std::string once = schema_text("Disease", {"Gene"});
  CHECK(schema_text(once, {}) == once);
}

TEST_CASE("future_target is 1 for identical schemas") {
  EncoderConfig cfg;
  QuerySchema q{"disease", {"gene", "mirna"}};
  ReasoningSchema r{{"disease", "gene", "mirna"}};
  CHECK(future_target(cfg, q, r) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("future_target equals exp of negative squared frozen distance") {
  EncoderConfig cfg;
  QuerySchema q{"disease", {"gene", "mirna"}};
  ReasoningSchema r{{"disease", "gene"}};
  double direct = future_target(cfg, q, r);
  Embedding a = frozen_schema_encode(cfg, schema_text(q));
  Embedding b = frozen_schema_encode(cfg, schema_text(r));
  double dist2 = 0.0;
  for (size_t i = 0; i < a.values.size(); ++i) {
    double d = a.values[i] - b.values[i];
    dist2 += d * d;
  }
  CHECK(direct == doctest::Approx(std::exp(-dist2)).epsilon(1e-12));
  CHECK(direct > 0.0);
  CHECK(direct < 1.0);
}

TEST_CASE("orthonormal schema embeddings give exp(-2)") {
  EncoderConfig cfg;
  // find two single-token types in distinct frozen buckets
  std::vector<std::string> words = {"disease", "gene", "mirna", "statute", "court",
                                    "zone",    "tag",  "memo",  "axon",    "nation"};
  for (size_t i = 0; i < words.size(); ++i) {
    for (size_t j = i + 1; j < words.size(); ++j) {
      Embedding a = frozen_schema_encode(cfg, words[i]);
      Embedding b = frozen_schema_encode(cfg, words[j]);
      bool share = false;
      for (size_t k = 0; k < a.values.size(); ++k) {
        if (a.values[k] != 0.0 && b.values[k] != 0.0) share = true;
      }
      if (!share) {
        QuerySchema q{words[i], {}};
        ReasoningSchema r{{words[j]}};
        // ||u - v||^2 = 2 for orthonormal u, v
        CHECK(future_target(cfg, q, r) == doctest::Approx(std::exp(-2.0)).epsilon(1e-12));
        CHECK(future_target(cfg, q, r) == doctest::Approx(0.1353352832366127).epsilon(1e-9));
        return;
      }
    }
  }
  FAIL("no orthogonal pair found");
}

TEST_CASE("future_target is symmetric") {
  EncoderConfig cfg;
  QuerySchema q{"disease", {"gene"}};
  ReasoningSchema r{{"disease", "gene", "mirna"}};
  QuerySchema q2{"disease", {"gene", "mirna"}};
  ReasoningSchema r2{{"disease", "gene"}};
  CHECK(future_target(cfg, q, r) == doctest::Approx(future_target(cfg, q2, r2)).epsilon(1e-15));
}

TEST_CASE("equal schema texts give equal targets regardless of path length") {
  EncoderConfig cfg;
  // a composite type containing the arrow text makes two different-length
  // sequences serialize identically
  QuerySchema q{"x", {"b -> c"}};
  ReasoningSchema longer{{"x", "b", "c"}};
  ReasoningSchema shorter{{"x", "b -> c"}};
  CHECK(schema_text(longer) == schema_text(shorter));
  CHECK(future_target(cfg, q, longer) == future_target(cfg, q, shorter));
  CHECK(future_target(cfg, q, shorter) == doctest::Approx(1.0));
}

TEST_CASE("inject_schema_noise rho=0 is the identity") {
  std::vector<std::string> vocab = {"a", "b", "c"};
  std::mt19937_64 rng(1);
  QuerySchema q{"disease", {"gene", "mirna"}};
  for (int i = 0; i < 50; ++i) {
    QuerySchema out = inject_schema_noise(q, 0.0, rng, vocab);
    CHECK(out.anchor_type == q.anchor_type);
    CHECK(out.constraints == q.constraints);
  }
}

TEST_CASE("inject_schema_noise rho=1 on length-1 schema replaces the element") {
  std::vector<std::string> vocab = {"a", "b", "c"};
  std::mt19937_64 rng(2);
  ReasoningSchema s{{"disease"}};
  for (int i = 0; i < 50; ++i) {
    ReasoningSchema out = inject_schema_noise(s, 1.0, rng, vocab);
    REQUIRE(out.type_sequence.size() == 1);
    CHECK(out.type_sequence[0] != "disease");  // swap impossible, replace forced
  }
}

TEST_CASE("corruption frequency matches rho over 10000 draws") {
  std::vector<std::string> vocab = {"a", "b", "c", "d", "e"};
  std::mt19937_64 rng(3);
  ReasoningSchema s{{"disease", "gene", "mirna"}};
  int corrupted = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    ReasoningSchema out = inject_schema_noise(s, 0.3, rng, vocab);
    if (out.type_sequence != s.type_sequence) ++corrupted;
  }
  double freq = static_cast<double>(corrupted) / n;
  CHECK(freq > 0.28);
  CHECK(freq < 0.32);
}

TEST_CASE("inject_schema_noise is seed-deterministic") {
  std::vector<std::string> vocab = {"a", "b", "c"};
  QuerySchema q{"disease", {"gene", "mirna", "pathway"}};
  std::mt19937_64 r1(7), r2(7);
  for (int i = 0; i < 100; ++i) {
    auto o1 = inject_schema_noise(q, 0.5, r1, vocab);
    auto o2 = inject_schema_noise(q, 0.5, r2, vocab);
    CHECK(o1.anchor_type == o2.anchor_type);
    CHECK(o1.constraints == o2.constraints);
  }
}

TEST_CASE("noise injector validates inputs") {
  std::mt19937_64 rng(1);
  QuerySchema q{"a", {}};
  std::vector<std::string> vocab = {"a"};
  CHECK_THROWS_AS(inject_schema_noise(q, -0.1, rng, vocab), std::invalid_argument);
  CHECK_THROWS_AS(inject_schema_noise(q, 1.1, rng, vocab), std::invalid_argument);
  CHECK_THROWS_AS(inject_schema_noise(q, 0.5, rng, {}), std::invalid_argument);
}
