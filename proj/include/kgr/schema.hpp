#pragma once

// Query and reasoning schemas: the entity-type sequences that describe what a
// query asks for and what a path actually traversed. The distance between
// their frozen embeddings defines the training target for the future-reward
// head, and the noise injector simulates annotation errors.

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "kgr/encoder.hpp"
#include "kgr/graph.hpp"

namespace kgr {

/// Type/constraint sequence implicit in a query; ingested as annotation.
struct QuerySchema {
  std::string anchor_type;
  std::vector<std::string> constraints;
};

/// Sequence of entity types along a traversed path, one per visited entity.
struct ReasoningSchema {
  std::vector<std::string> type_sequence;
};

/// Types of the entities along t, anchor first. Length is always
/// trajectory length + 1.
inline ReasoningSchema reasoning_schema(const KnowledgeGraph& g, const Trajectory& t) {
  if (!valid_in(t, g)) throw std::invalid_argument("reasoning_schema: trajectory not valid in graph");
  ReasoningSchema schema;
  schema.type_sequence.reserve(t.length() + 1);
  schema.type_sequence.push_back(g.entity(t.anchor()).type);
  for (const TrajStep& s : t.steps()) {
    schema.type_sequence.push_back(g.entity(s.entity).type);
  }
  return schema;
}

namespace detail {

inline std::string lowercased(std::string s) {
  for (char& c : s) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return s;
}

}  // namespace detail

/// Canonical serialization fed to the frozen encoder:
/// `t0 -> t1 -> ... -> tn`, lowercase, single-space-padded arrows.
inline std::string schema_text(const std::string& first, const std::vector<std::string>& rest) {
  std::string out = detail::lowercased(first);
  for (const std::string& item : rest) {
    out += " -> ";
    out += detail::lowercased(item);
  }
  return out;
}

inline std::string schema_text(const QuerySchema& q) {
  return schema_text(q.anchor_type, q.constraints);
}

inline std::string schema_text(const ReasoningSchema& r) {
  if (r.type_sequence.empty()) throw std::invalid_argument("empty reasoning schema");
  return schema_text(r.type_sequence.front(),
                     {r.type_sequence.begin() + 1, r.type_sequence.end()});
}

/// The "ground truth" future reward: exp of the negative squared L2 distance
/// between the frozen embeddings of the two schema texts. In (0, 1]; equals 1
/// iff the texts embed identically; symmetric in its arguments.
inline double future_target(const EncoderConfig& cfg, const QuerySchema& m_q,
                            const ReasoningSchema& m_pi) {
  Embedding a = frozen_schema_encode(cfg, schema_text(m_q));
  Embedding b = frozen_schema_encode(cfg, schema_text(m_pi));
  return std::exp(-squared_distance(a, b));
}

namespace detail {

// With probability rho, applies one uniformly chosen edit: replace a random
// element with a different vocabulary type, or swap two adjacent elements.
// Length-1 sequences can only be replaced.
inline void maybe_corrupt_sequence(std::vector<std::string>& seq, double rho,
                                   std::mt19937_64& rng,
                                   const std::vector<std::string>& type_vocab) {
  if (rho < 0.0 || rho > 1.0) throw std::invalid_argument("noise ratio must be in [0, 1]");
  if (type_vocab.empty()) throw std::invalid_argument("type vocabulary must be non-empty");
  if (seq.empty()) return;

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (unit(rng) >= rho) return;

  bool swap_possible = seq.size() >= 2;
  bool do_replace = !swap_possible || unit(rng) < 0.5;
  if (do_replace) {
    std::uniform_int_distribution<size_t> pos(0, seq.size() - 1);
    size_t at = pos(rng);
    std::uniform_int_distribution<size_t> pick(0, type_vocab.size() - 1);
    std::string replacement = type_vocab[pick(rng)];
    // A no-op replacement would not corrupt anything; move to the next
    // vocabulary entry when the draw hits the current value.
    if (replacement == seq[at] && type_vocab.size() > 1) {
      size_t idx = 0;
      while (idx < type_vocab.size() && type_vocab[idx] != replacement) ++idx;
      replacement = type_vocab[(idx + 1) % type_vocab.size()];
    }
    seq[at] = std::move(replacement);
  } else {
    std::uniform_int_distribution<size_t> pos(0, seq.size() - 2);
    size_t at = pos(rng);
    std::swap(seq[at], seq[at + 1]);
  }
}

}  // namespace detail

inline QuerySchema inject_schema_noise(const QuerySchema& s, double rho, std::mt19937_64& rng,
                                       const std::vector<std::string>& type_vocab) {
  std::vector<std::string> seq;
  seq.reserve(s.constraints.size() + 1);
  seq.push_back(s.anchor_type);
  seq.insert(seq.end(), s.constraints.begin(), s.constraints.end());
  detail::maybe_corrupt_sequence(seq, rho, rng, type_vocab);
  QuerySchema out;
  out.anchor_type = seq.front();
  out.constraints.assign(seq.begin() + 1, seq.end());
  return out;
}

inline ReasoningSchema inject_schema_noise(const ReasoningSchema& s, double rho,
                                           std::mt19937_64& rng,
                                           const std::vector<std::string>& type_vocab) {
  ReasoningSchema out = s;
  detail::maybe_corrupt_sequence(out.type_sequence, rho, rng, type_vocab);
  return out;
}

}  // namespace kgr
