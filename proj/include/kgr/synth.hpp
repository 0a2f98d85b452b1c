#pragma once

// Seed-deterministic synthetic KGQA dataset for desk-scale experiments.
//
// Each query gets a private anchor and gold chain whose entity types follow
// one of three thematic flavors. Wrong-answer structure around it:
//   - a per-flavor decoy chain sharing the gold type sequence and relation
//     names, so type information alone cannot separate it from gold;
//   - off-schema noise edges from the anchor and from every interior gold
//     node into a shared pool of noise entities, whose types and relations
//     never occur on gold paths.
// Gold answers are reachable only through the gold chain, every gold node
// has an alternative outgoing edge (so negatives can corrupt any step), and
// per-anchor path counts stay small enough for exhaustive enumeration.

#include <algorithm>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "kgr/dataset.hpp"
#include "kgr/graph.hpp"

namespace kgr {

namespace detail {

struct FlavorTable {
  std::vector<std::string> types;      // level 0..4
  std::vector<std::string> relations;  // step 1..4
};

inline const std::vector<FlavorTable>& flavor_tables() {
  static const std::vector<FlavorTable> tables = {
      {{"disease", "gene", "mirna", "pathway", "compound"},
       {"implicates", "encodes", "regulates", "modulates"}},
      {{"crime", "statute", "article", "penalty", "court"},
       {"violates", "cites", "imposes", "reviewed"}},
      {{"person", "city", "country", "continent", "zone"},
       {"born", "located", "part", "bounded"}},
  };
  return tables;
}

inline std::string flavor_type(int flavor, int level) {
  const auto& t = flavor_tables()[static_cast<size_t>(flavor)].types;
  if (level < static_cast<int>(t.size())) return t[static_cast<size_t>(level)];
  return t[static_cast<size_t>(level) % t.size()] + std::to_string(level);
}

// Relations are named `<verb>_<target type>`, the usual KG idiom
// (has_gene, located_in_city, ...).
inline std::string flavor_relation(int flavor, int step) {
  const auto& r = flavor_tables()[static_cast<size_t>(flavor)].relations;
  std::string verb = step <= static_cast<int>(r.size())
                         ? r[static_cast<size_t>(step - 1)]
                         : r[static_cast<size_t>(step - 1) % r.size()] + std::to_string(step);
  return verb + "_" + flavor_type(flavor, step);
}

}  // namespace detail

/// Builds the graph and its query set. Entity count tracks `n_entities`
/// approximately: anchors and gold chains are query-private while decoy and
/// noise structure is shared, and the noise pool absorbs the remaining
/// budget.
inline std::pair<KnowledgeGraph, std::vector<QueryRecord>> synth_graph(
    uint64_t seed, int n_entities, int branching, int depth, int n_queries) {
  if (depth < 1 || n_queries < 1 || branching < 3) {
    throw std::invalid_argument(
        "infeasible parameters: need depth >= 1, n_queries >= 1, branching >= 3");
  }
  const int flavors = std::min(3, n_queries);

  // Gold depth cycles over 2..depth so path lengths vary.
  auto gold_depth = [&](int i) {
    if (depth < 3) return depth;
    return 2 + (i % (depth - 1));
  };
  int gold_total = 0;
  for (int i = 0; i < n_queries; ++i) gold_total += gold_depth(i);

  int base_need = n_queries + gold_total + flavors * depth;
  // Structural minimum: anchors, shortest feasible gold chains, decoy
  // chains and a small noise pool. The exact count may exceed n_entities a
  // little when gold chains need more than the budget allows.
  int min_gold = std::min(2, depth);
  int required = n_queries * (1 + min_gold) + flavors * depth + 2 * depth;
  if (n_entities < required) {
    throw std::invalid_argument("infeasible parameters: need at least " +
                                std::to_string(required) + " entities, got " +
                                std::to_string(n_entities));
  }
  int pool_size = std::max(2 * depth, n_entities - base_need);

  std::mt19937_64 rng(seed);
  GraphBuilder builder;
  int label_counter = 0;
  auto fresh_label = [&](const std::string& word) {
    return word + "_" + std::to_string(label_counter++);
  };

  const std::vector<std::string> noise_types = {"memo", "tag", "note"};
  const std::vector<std::string> noise_relations = {"linked_to", "grouped_with"};
  const std::vector<std::string> distractor_relations = {"mentioned_with", "cooccurs_with",
                                                         "adjacent_to"};

  // Shared noise pool: a linear chain of off-schema entities.
  std::vector<EntityId> pool;
  pool.reserve(static_cast<size_t>(pool_size));
  for (int i = 0; i < pool_size; ++i) {
    pool.push_back(builder.add_entity(fresh_label("off"),
                                      noise_types[static_cast<size_t>(i) % noise_types.size()]));
  }
  for (int i = 0; i + 1 < pool_size; ++i) {
    builder.add_triple(pool[static_cast<size_t>(i)],
                       noise_relations[static_cast<size_t>(i) % noise_relations.size()],
                       pool[static_cast<size_t>(i) + 1]);
  }
  std::uniform_int_distribution<size_t> pick_pool(0, pool.size() - 1);

  // Per-flavor decoy chain: alternate entities ("mirna_alt") whose types and
  // relations follow the gold schema exactly, so the schema distance cannot
  // tell them from gold continuations. They attach below the first gold hop
  // and reach wrong answers of the requested type.
  const int decoy_start = depth >= 2 ? 2 : 1;  // first decoy level
  std::vector<std::vector<EntityId>> decoy(static_cast<size_t>(flavors));
  for (int f = 0; f < flavors; ++f) {
    for (int level = decoy_start; level <= depth; ++level) {
      decoy[static_cast<size_t>(f)].push_back(
          builder.add_entity(fresh_label(detail::flavor_type(f, level) + "_alt"),
                             detail::flavor_type(f, level)));
    }
    for (size_t j = 0; j + 1 < decoy[static_cast<size_t>(f)].size(); ++j) {
      builder.add_triple(decoy[static_cast<size_t>(f)][j],
                         detail::flavor_relation(f, decoy_start + static_cast<int>(j) + 1),
                         decoy[static_cast<size_t>(f)][j + 1]);
    }
  }

  struct Pending {
    EntityId anchor = -1;
    std::vector<EntityId> chain;
    int flavor = 0;
    int len = 0;
  };
  std::vector<Pending> pending;
  pending.reserve(static_cast<size_t>(n_queries));

  for (int i = 0; i < n_queries; ++i) {
    Pending p;
    p.flavor = i % flavors;
    p.len = gold_depth(i);
    p.anchor = builder.add_entity(fresh_label(detail::flavor_type(p.flavor, 0)),
                                  detail::flavor_type(p.flavor, 0));
    for (int level = 1; level <= p.len; ++level) {
      p.chain.push_back(builder.add_entity(fresh_label(detail::flavor_type(p.flavor, level)),
                                           detail::flavor_type(p.flavor, level)));
    }

    EntityId prev = p.anchor;
    for (int level = 1; level <= p.len; ++level) {
      builder.add_triple(prev, detail::flavor_relation(p.flavor, level),
                         p.chain[static_cast<size_t>(level - 1)]);
      prev = p.chain[static_cast<size_t>(level - 1)];
    }

    // The decoy edge continues the schema from below the first gold hop (or
    // from the anchor when the chain is a single level).
    if (decoy_start == 2) {
      if (p.len >= 2) {
        builder.add_triple(p.chain[0], detail::flavor_relation(p.flavor, 2),
                           decoy[static_cast<size_t>(p.flavor)][0]);
      }
    } else {
      builder.add_triple(p.anchor, detail::flavor_relation(p.flavor, decoy_start),
                         decoy[static_cast<size_t>(p.flavor)][0]);
    }

    for (int j = 0; j + 1 < branching; ++j) {
      builder.add_triple(p.anchor,
                         distractor_relations[static_cast<size_t>(i + j) %
                                              distractor_relations.size()],
                         pool[pick_pool(rng)]);
    }
    for (int level = 1; level < p.len; ++level) {
      builder.add_triple(p.chain[static_cast<size_t>(level - 1)],
                         distractor_relations[static_cast<size_t>(i + level) %
                                              distractor_relations.size()],
                         pool[pick_pool(rng)]);
    }

    // Overshoot edge: the gold answer keeps an on-schema continuation one
    // level deeper, so answers are not simply the deepest reachable nodes.
    if (p.len < depth && decoy_start == 2) {
      size_t slot = static_cast<size_t>(p.len + 1 - decoy_start);
      builder.add_triple(p.chain.back(), detail::flavor_relation(p.flavor, p.len + 1),
                         decoy[static_cast<size_t>(p.flavor)][slot]);
    }
    pending.push_back(std::move(p));
  }

  KnowledgeGraph g = builder.build();

  std::vector<QueryRecord> queries;
  queries.reserve(pending.size());
  int id_width = 1;
  for (int w = n_queries - 1; w >= 10; w /= 10) ++id_width;

  for (size_t i = 0; i < pending.size(); ++i) {
    const Pending& p = pending[i];
    QueryRecord q;
    {
      std::string idx = std::to_string(i);
      q.id = "q" + std::string(static_cast<size_t>(id_width) - idx.size(), '0') + idx;
    }
    q.anchor = g.entity(p.anchor).label;
    q.schema.anchor_type = detail::flavor_type(p.flavor, 0);
    for (int level = 1; level <= p.len; ++level) {
      q.schema.constraints.push_back(detail::flavor_type(p.flavor, level));
    }

    const std::string goal = detail::flavor_type(p.flavor, p.len);
    std::string text = "find " + goal + " : " + q.anchor;
    LabelPath path;
    EntityId prev = p.anchor;
    for (int level = 1; level <= p.len; ++level) {
      const std::string rel = detail::flavor_relation(p.flavor, level);
      EntityId next = p.chain[static_cast<size_t>(level - 1)];
      path.push_back(LabelTriple{g.entity(prev).label, rel, g.entity(next).label});
      text += " " + rel;
      prev = next;
    }
    text += " ?";
    q.text = std::move(text);
    q.answers = {g.entity(p.chain.back()).label};
    q.gold_paths = {std::move(path)};
    queries.push_back(std::move(q));
  }

  return {std::move(g), std::move(queries)};
}

}  // namespace kgr
