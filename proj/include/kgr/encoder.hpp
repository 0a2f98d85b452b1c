#pragma once

// Deterministic hashed bag-of-tokens text encoder. Stands in for the hidden
// state of a language model: every downstream score is an exact function of
// the text, so the reward math can be verified numerically.
//
// Tokens are lowercased maximal runs of [a-z0-9] (bytes >= 0x80 survive so
// UTF-8 words stay intact). Each token hashes to a bucket in [0, dim) and a
// sign in {-1, +1}; signed counts accumulate and the result is L2-normalized.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace kgr {

struct EncoderConfig {
  int dim = 256;
  uint64_t hash_seed = 0x6b677265ULL;
  int max_tokens = 512;  // rendered text is truncated to this many tokens
};

inline void validate(const EncoderConfig& cfg) {
  if (cfg.dim < 8) throw std::invalid_argument("encoder dim must be >= 8");
  if (cfg.max_tokens < 1) throw std::invalid_argument("encoder max_tokens must be >= 1");
}

/// Unit-norm (or all-zero, for empty text) dense vector.
struct Embedding {
  std::vector<double> values;

  size_t dim() const { return values.size(); }
  double norm() const {
    double s = 0.0;
    for (double v : values) s += v * v;
    return std::sqrt(s);
  }
};

inline Embedding operator-(const Embedding& a, const Embedding& b) {
  if (a.values.size() != b.values.size()) {
    throw std::invalid_argument("embedding dimension mismatch");
  }
  Embedding out;
  out.values.resize(a.values.size());
  for (size_t i = 0; i < a.values.size(); ++i) out.values[i] = a.values[i] - b.values[i];
  return out;
}

inline double squared_distance(const Embedding& a, const Embedding& b) {
  if (a.values.size() != b.values.size()) {
    throw std::invalid_argument("embedding dimension mismatch");
  }
  double s = 0.0;
  for (size_t i = 0; i < a.values.size(); ++i) {
    double d = a.values[i] - b.values[i];
    s += d * d;
  }
  return s;
}

namespace detail {

// FNV-1a over the token bytes, then a splitmix64 finalizer keyed by the
// seed. Stable across platforms, unlike std::hash.
inline uint64_t token_hash(std::string_view token, uint64_t seed) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : token) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  uint64_t z = h ^ seed;
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline bool token_char(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c >= 0x80;
}

}  // namespace detail

/// Lowercase whitespace+punctuation tokenization, truncated to max_tokens.
inline std::vector<std::string> tokenize(std::string_view text, int max_tokens) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (c >= 'A' && c <= 'Z') c = static_cast<unsigned char>(c - 'A' + 'a');
    if (detail::token_char(c)) {
      current.push_back(static_cast<char>(c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
      if (static_cast<int>(tokens.size()) >= max_tokens) return tokens;
    }
  }
  if (!current.empty() && static_cast<int>(tokens.size()) < max_tokens) {
    tokens.push_back(std::move(current));
  }
  return tokens;
}

namespace detail {

inline Embedding hashed_encode(const EncoderConfig& cfg, std::string_view text,
                               uint64_t seed) {
  validate(cfg);
  Embedding out;
  out.values.assign(static_cast<size_t>(cfg.dim), 0.0);
  auto tokens = tokenize(text, cfg.max_tokens);
  for (const std::string& tok : tokens) {
    uint64_t h = token_hash(tok, seed);
    size_t bucket = static_cast<size_t>(h % static_cast<uint64_t>(cfg.dim));
    double sign = ((h >> 32) & 1ULL) ? 1.0 : -1.0;
    out.values[bucket] += sign;
  }
  double n = out.norm();
  if (n > 0.0) {
    for (double& v : out.values) v /= n;
  }
  return out;
}

}  // namespace detail

/// Text embedding with the config's hash seed. Empty text gives the zero
/// vector; anything else is unit-norm.
inline Embedding encode(const EncoderConfig& cfg, std::string_view text) {
  return detail::hashed_encode(cfg, text, cfg.hash_seed);
}

// Seed of the frozen schema embedder. Independent of any config so schema
// embeddings never move, no matter what trains.
inline constexpr uint64_t kSchemaEncoderSeed = 0x736368656d61ULL;

/// Same mechanism as encode() but under the fixed schema seed; this pathway
/// is never parameter-updated.
inline Embedding frozen_schema_encode(const EncoderConfig& cfg, std::string_view schema_text) {
  return detail::hashed_encode(cfg, schema_text, kSchemaEncoderSeed);
}

}  // namespace kgr
