#pragma once

// Reward-head training: margin-based pairwise losses over full paths and
// over the first erroneous step, a squared-error future-reward loss against
// the frozen schema-distance target, analytic gradients for both heads, and
// an AdamW optimizer with a cosine learning-rate schedule.
//
// Only the heads train. The encoder stands in for the language model and
// stays fixed; the frozen schema embedder has no trainable parameters at all.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "kgr/dataset.hpp"
#include "kgr/graph.hpp"
#include "kgr/reward.hpp"
#include "kgr/schema.hpp"

namespace kgr {

/// A positive path (reaches a gold answer, no risky steps) paired with a
/// negative path whose first risky or erroneous step is `first_error_step`
/// (1-based).
struct PathPair {
  std::string query_id;
  Trajectory positive;
  Trajectory negative;
  int first_error_step = 1;
};

struct TrainConfig {
  double margin = 0.3;    // reward gap enforced between positive and negative
  double lambda = 1.0;    // weight of the future loss in the total
  double lr = 2e-4;
  int epochs = 30;
  int batch_size = 1;
  uint64_t seed = 0;
  bool mean_loss = false;             // batch mean instead of the written sum
  bool future_broadcast_final = false;  // supervise prefixes with the final target
  double beta1 = 0.9;
  double beta2 = 0.999;
  double weight_decay = 0.01;
  double adam_eps = 1e-8;
};

inline void validate(const TrainConfig& cfg) {
  if (cfg.margin < 0.0) throw std::invalid_argument("margin must be >= 0");
  if (cfg.lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
  if (cfg.lr < 0.0) throw std::invalid_argument("learning rate must be >= 0");
  if (cfg.epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (cfg.batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
}

using QueryIndex = std::unordered_map<std::string, const QueryRecord*>;

inline QueryIndex make_query_index(const std::vector<QueryRecord>& queries) {
  QueryIndex index;
  for (const QueryRecord& q : queries) index.emplace(q.id, &q);
  return index;
}

inline const QueryRecord& lookup_query(const QueryIndex& index, const std::string& id) {
  auto it = index.find(id);
  if (it == index.end()) throw std::invalid_argument("pair references unknown query: " + id);
  return *it->second;
}

// ---------------------------------------------------------------------------
// Losses

/// -log sigmoid(r_pos - (r_neg + margin)): pushed toward 0 once the positive
/// reward clears the negative by the margin.
inline double pair_loss_full(double r_pos, double r_neg, double margin) {
  if (!std::isfinite(r_pos) || !std::isfinite(r_neg)) {
    throw std::invalid_argument("pair rewards must be finite");
  }
  return softplus(-(r_pos - r_neg - margin));
}

struct ModelGrad {
  HeadGrad risk;
  HeadGrad schema;

  static ModelGrad zeros_like(const RewardModel& m) {
    ModelGrad g;
    g.risk = HeadGrad::zeros_like(m.risk_head);
    g.schema = HeadGrad::zeros_like(m.schema_head);
    return g;
  }
};

namespace detail {

struct PathForward {
  std::vector<Embedding> step_inputs;   // risk-head inputs per prefix 1..k
  std::vector<Head::Cache> step_caches;
  std::vector<double> raw_p;            // unclamped sigmoid outputs
  std::vector<double> p;                // clamped step risks
  Embedding schema_input;               // z_q - z_pi at the final step
  Head::Cache schema_cache;
  double raw_w = 0.5;
  double w = 0.5;
  double past = 0.0;   // G
  double future = 0.0; // H
  double value = 0.0;  // F per variant
};

inline PathForward forward_path(const RewardModel& m, const std::string& q,
                                const Trajectory& t, const KnowledgeGraph& g) {
  PathForward f;
  std::string text = m.prompt;
  text += q;
  text += ' ';
  text += g.entity(t.anchor()).label;
  std::string bare = g.entity(t.anchor()).label;
  for (const TrajStep& s : t.steps()) {
    std::string hop = " -";
    hop += s.relation;
    hop += "-> ";
    hop += g.entity(s.entity).label;
    text += hop;
    bare += hop;
    Embedding z = encode(m.encoder, text);
    Head::Cache cache;
    double raw = sigmoid(m.risk_head.forward(z, &cache));
    f.step_inputs.push_back(std::move(z));
    f.step_caches.push_back(std::move(cache));
    f.raw_p.push_back(raw);
    f.p.push_back(clamp_probability(raw, m.epsilon));
  }
  f.past = 0.0;
  for (double p : f.p) f.past += std::log1p(-p);

  Embedding zq = encode(m.encoder, q);
  Embedding zpi = encode(m.encoder, bare);
  f.schema_input = zq - zpi;
  f.raw_w = sigmoid(m.schema_head.forward(f.schema_input, &f.schema_cache));
  f.w = clamp_probability(f.raw_w, m.epsilon);
  f.future = std::log(f.w);

  switch (m.variant) {
    case Variant::kFull: f.value = f.past + f.future; break;
    case Variant::kWithoutCumulative: f.value = f.future; break;
    case Variant::kWithoutFuture: f.value = f.past; break;
    case Variant::kAdditivePrm: {
      if (f.p.empty()) {
        f.value = 0.0;
      } else {
        double s = 0.0;
        for (double p : f.p) s += 1.0 - p;
        f.value = s / static_cast<double>(f.p.size());
      }
      break;
    }
  }
  return f;
}

inline bool clamped(double raw, double eps) { return raw < eps || raw > 1.0 - eps; }

// Accumulates scale * dF/dtheta. Clamped probabilities are flat regions, so
// their gradient is zero.
inline void backward_path_value(const RewardModel& m, const PathForward& f, double scale,
                                ModelGrad& grad) {
  if (scale == 0.0) return;
  bool use_past = m.variant == Variant::kFull || m.variant == Variant::kWithoutFuture;
  bool use_future = m.variant == Variant::kFull || m.variant == Variant::kWithoutCumulative;
  if (m.variant == Variant::kAdditivePrm) {
    size_t k = f.p.size();
    for (size_t j = 0; j < k; ++j) {
      if (clamped(f.raw_p[j], m.epsilon)) continue;
      double d = -f.p[j] * (1.0 - f.p[j]) / static_cast<double>(k);
      head_backward(m.risk_head, f.step_inputs[j], f.step_caches[j], scale * d, grad.risk);
    }
    return;
  }
  if (use_past) {
    for (size_t j = 0; j < f.p.size(); ++j) {
      if (clamped(f.raw_p[j], m.epsilon)) continue;
      // d log(1 - sigmoid(a)) / da = -sigmoid(a)
      head_backward(m.risk_head, f.step_inputs[j], f.step_caches[j], scale * (-f.p[j]),
                    grad.risk);
    }
  }
  if (use_future && !clamped(f.raw_w, m.epsilon)) {
    // d log(sigmoid(a)) / da = 1 - sigmoid(a)
    head_backward(m.schema_head, f.schema_input, f.schema_cache, scale * (1.0 - f.w),
                  grad.schema);
  }
}

}  // namespace detail

/// Eq-style full-path pair loss on a PathPair; accumulates its gradient when
/// `grad` is non-null.
inline double add_pair_full_term(const RewardModel& m, const PathPair& pair,
                                 const std::string& query_text, const KnowledgeGraph& g,
                                 double margin, double weight = 1.0,
                                 ModelGrad* grad = nullptr) {
  detail::PathForward pos = detail::forward_path(m, query_text, pair.positive, g);
  detail::PathForward neg = detail::forward_path(m, query_text, pair.negative, g);
  double s = pos.value - neg.value - margin;
  double loss = softplus(-s);
  if (grad) {
    double dLds = -sigmoid(-s);  // d softplus(-s) / ds
    detail::backward_path_value(m, pos, weight * dLds, *grad);
    detail::backward_path_value(m, neg, -weight * dLds, *grad);
  }
  return loss;
}

/// Step-level pair loss at the negative's first error step l. The positive
/// prefix is truncated to min(l, |positive|) when the positive is shorter.
inline double add_pair_step_term(const RewardModel& m, const PathPair& pair,
                                 const std::string& query_text, const KnowledgeGraph& g,
                                 double margin, double weight = 1.0,
                                 ModelGrad* grad = nullptr) {
  size_t l = static_cast<size_t>(pair.first_error_step);
  if (pair.first_error_step < 1 || l > pair.negative.length()) {
    throw std::out_of_range("first_error_step " + std::to_string(pair.first_error_step) +
                            " out of range for negative of length " +
                            std::to_string(pair.negative.length()));
  }
  size_t l_pos = std::min(l, pair.positive.length());
  detail::PathForward pos = detail::forward_path(m, query_text, pair.positive.prefix(l_pos), g);
  detail::PathForward neg = detail::forward_path(m, query_text, pair.negative.prefix(l), g);
  double s = pos.value - neg.value - margin;
  double loss = softplus(-s);
  if (grad) {
    double dLds = -sigmoid(-s);
    detail::backward_path_value(m, pos, weight * dLds, *grad);
    detail::backward_path_value(m, neg, -weight * dLds, *grad);
  }
  return loss;
}

inline double pair_loss_step(const RewardModel& m, const PathPair& pair,
                             const std::string& query_text, const KnowledgeGraph& g,
                             double margin) {
  return add_pair_step_term(m, pair, query_text, g, margin);
}

/// Squared error between the predicted future success of t and its target.
inline double future_loss(const RewardModel& m, const std::string& q, const Trajectory& t,
                          const KnowledgeGraph& g, double target) {
  if (!(target > 0.0 && target <= 1.0)) {
    throw std::invalid_argument("future target must lie in (0, 1]");
  }
  double w = future_success(m, q, t, g);
  return (w - target) * (w - target);
}

/// Future-loss terms over every prefix step k = 1..|t|, each supervised by
/// the frozen schema-distance target of that prefix (or by the final-step
/// target when broadcast_final is set).
inline double add_future_terms(const RewardModel& m, const QueryRecord& query,
                               const Trajectory& t, const KnowledgeGraph& g,
                               bool broadcast_final, double weight = 1.0,
                               ModelGrad* grad = nullptr) {
  if (t.length() == 0) return 0.0;
  ReasoningSchema full = reasoning_schema(g, t);
  double final_target = 0.0;
  if (broadcast_final) {
    final_target = future_target(m.encoder, query.schema, full);
  }

  Embedding zq = encode(m.encoder, query.text);
  std::string bare = g.entity(t.anchor()).label;
  double loss = 0.0;
  for (size_t k = 1; k <= t.length(); ++k) {
    const TrajStep& s = t.steps()[k - 1];
    bare += " -";
    bare += s.relation;
    bare += "-> ";
    bare += g.entity(s.entity).label;

    double target;
    if (broadcast_final) {
      target = final_target;
    } else {
      ReasoningSchema prefix_schema;
      prefix_schema.type_sequence.assign(full.type_sequence.begin(),
                                         full.type_sequence.begin() + static_cast<long>(k) + 1);
      target = future_target(m.encoder, query.schema, prefix_schema);
    }

    Embedding y = zq - encode(m.encoder, bare);
    Head::Cache cache;
    double raw = sigmoid(m.schema_head.forward(y, &cache));
    double w = clamp_probability(raw, m.epsilon);
    loss += (w - target) * (w - target);
    if (grad && !detail::clamped(raw, m.epsilon)) {
      double dLdout = 2.0 * (w - target) * w * (1.0 - w);
      head_backward(m.schema_head, y, cache, weight * dLdout, grad->schema);
    }
  }
  return loss;
}

struct LossBreakdown {
  double pair_full = 0.0;
  double pair_step = 0.0;
  double future = 0.0;
  double total = 0.0;
};

/// Sum over the batch of both pairwise losses plus lambda times the future
/// terms of every prefix of both paths. Gradient lands in `grad` when given.
inline LossBreakdown batch_loss(const RewardModel& m, std::span<const PathPair> batch,
                                const QueryIndex& queries, const KnowledgeGraph& g,
                                const TrainConfig& cfg, ModelGrad* grad = nullptr) {
  if (batch.empty()) throw std::invalid_argument("batch must be non-empty");
  double scale = cfg.mean_loss ? 1.0 / static_cast<double>(batch.size()) : 1.0;
  LossBreakdown out;
  for (const PathPair& pair : batch) {
    const QueryRecord& q = lookup_query(queries, pair.query_id);
    out.pair_full += add_pair_full_term(m, pair, q.text, g, cfg.margin, scale, grad);
    out.pair_step += add_pair_step_term(m, pair, q.text, g, cfg.margin, scale, grad);
    double fut = 0.0;
    fut += add_future_terms(m, q, pair.positive, g, cfg.future_broadcast_final,
                            scale * cfg.lambda, grad);
    fut += add_future_terms(m, q, pair.negative, g, cfg.future_broadcast_final,
                            scale * cfg.lambda, grad);
    out.future += fut;
  }
  out.pair_full *= scale;
  out.pair_step *= scale;
  out.future *= scale;
  out.total = out.pair_full + out.pair_step + cfg.lambda * out.future;
  return out;
}

inline double total_loss(const RewardModel& m, std::span<const PathPair> batch,
                         const QueryIndex& queries, const KnowledgeGraph& g,
                         const TrainConfig& cfg) {
  return batch_loss(m, batch, queries, g, cfg).total;
}

/// Analytic gradient of the total loss over both heads. The encoder and the
/// frozen schema embedder contribute no parameters.
inline std::pair<LossBreakdown, ModelGrad> grad(const RewardModel& m,
                                                std::span<const PathPair> batch,
                                                const QueryIndex& queries,
                                                const KnowledgeGraph& g,
                                                const TrainConfig& cfg) {
  ModelGrad grads = ModelGrad::zeros_like(m);
  LossBreakdown loss = batch_loss(m, batch, queries, g, cfg, &grads);
  return {loss, std::move(grads)};
}

// ---------------------------------------------------------------------------
// Parameter flattening + AdamW

namespace detail {

inline void collect_params(Head& h, std::vector<double*>& out) {
  for (double& v : h.w1) out.push_back(&v);
  for (double& v : h.b1) out.push_back(&v);
  for (double& v : h.w2) out.push_back(&v);
  if (h.depth == 1) out.push_back(&h.b2);
}

inline void collect_grads(const HeadGrad& g, int depth, std::vector<double>& out) {
  out.insert(out.end(), g.w1.begin(), g.w1.end());
  out.insert(out.end(), g.b1.begin(), g.b1.end());
  out.insert(out.end(), g.w2.begin(), g.w2.end());
  if (depth == 1) out.push_back(g.b2);
}

}  // namespace detail

inline std::vector<double*> trainable_params(RewardModel& m) {
  std::vector<double*> params;
  detail::collect_params(m.risk_head, params);
  detail::collect_params(m.schema_head, params);
  return params;
}

inline std::vector<double> flatten_grad(const ModelGrad& g, const RewardModel& m) {
  std::vector<double> out;
  detail::collect_grads(g.risk, m.risk_head.depth, out);
  detail::collect_grads(g.schema, m.schema_head.depth, out);
  return out;
}

/// Cosine decay from lr0 to 0 across total_steps; step is 0-based.
inline double cosine_lr(double lr0, int64_t step, int64_t total_steps) {
  if (total_steps <= 0) return lr0;
  double frac = static_cast<double>(step) / static_cast<double>(total_steps);
  if (frac > 1.0) frac = 1.0;
  return lr0 * 0.5 * (1.0 + std::cos(frac * 3.14159265358979323846));
}

/// Decoupled-weight-decay adaptive moment estimation.
struct AdamW {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;

  std::vector<double> m_;
  std::vector<double> v_;
  int64_t step_count = 0;

  void step(std::vector<double*>& params, const std::vector<double>& g, double lr) {
    if (params.size() != g.size()) throw std::invalid_argument("gradient size mismatch");
    if (m_.size() != params.size()) {
      m_.assign(params.size(), 0.0);
      v_.assign(params.size(), 0.0);
    }
    ++step_count;
    double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
    double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
    for (size_t i = 0; i < params.size(); ++i) {
      m_[i] = beta1 * m_[i] + (1.0 - beta1) * g[i];
      v_[i] = beta2 * v_[i] + (1.0 - beta2) * g[i] * g[i];
      double mhat = m_[i] / bc1;
      double vhat = v_[i] / bc2;
      *params[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + weight_decay * *params[i]);
    }
  }
};

struct EpochStats {
  int epoch = 0;  // 1-based
  double mean_pair_full = 0.0;
  double mean_pair_step = 0.0;
  double mean_future = 0.0;
  double total = 0.0;
};

struct TrainResult {
  RewardModel model;
  std::vector<EpochStats> history;
};

/// Runs AdamW over shuffled mini-batches with a cosine-decayed learning
/// rate. Deterministic for a fixed (seed, data, config); a non-finite loss
/// aborts with a diagnostic.
inline TrainResult train(RewardModel model, const std::vector<PathPair>& pairs,
                         const std::vector<QueryRecord>& queries, const KnowledgeGraph& g,
                         const TrainConfig& cfg) {
  validate(cfg);
  validate(model);
  if (pairs.empty()) throw std::invalid_argument("train: no pairs");
  QueryIndex index = make_query_index(queries);

  std::vector<size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::mt19937_64 rng(cfg.seed);

  auto params = trainable_params(model);
  AdamW opt;
  opt.beta1 = cfg.beta1;
  opt.beta2 = cfg.beta2;
  opt.eps = cfg.adam_eps;
  opt.weight_decay = cfg.weight_decay;

  int64_t batches_per_epoch =
      static_cast<int64_t>((pairs.size() + static_cast<size_t>(cfg.batch_size) - 1) /
                           static_cast<size_t>(cfg.batch_size));
  int64_t total_steps = batches_per_epoch * cfg.epochs;
  int64_t global_step = 0;

  TrainResult result;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    EpochStats stats;
    stats.epoch = epoch;
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch_size)) {
      size_t stop = std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
      std::vector<PathPair> batch;
      batch.reserve(stop - start);
      for (size_t i = start; i < stop; ++i) batch.push_back(pairs[order[i]]);

      auto [loss, grads] = grad(model, batch, index, g, cfg);
      if (!std::isfinite(loss.total)) {
        throw std::runtime_error("non-finite loss at epoch " + std::to_string(epoch) +
                                 ", step " + std::to_string(global_step) +
                                 " (total=" + std::to_string(loss.total) + ")");
      }
      std::vector<double> flat = flatten_grad(grads, model);
      opt.step(params, flat, cosine_lr(cfg.lr, global_step, total_steps));
      ++global_step;

      stats.mean_pair_full += loss.pair_full;
      stats.mean_pair_step += loss.pair_step;
      stats.mean_future += loss.future;
      stats.total += loss.total;
    }
    double denom = cfg.mean_loss ? static_cast<double>(batches_per_epoch)
                                 : static_cast<double>(pairs.size());
    stats.mean_pair_full /= denom;
    stats.mean_pair_step /= denom;
    stats.mean_future /= denom;
    stats.total /= denom;
    result.history.push_back(stats);
  }
  result.model = std::move(model);
  return result;
}

// ---------------------------------------------------------------------------
// Pair construction

/// Negative paths are gold paths with one step replaced by a random valid
/// alternative outgoing edge at that step, continued by a random walk to the
/// original length (or a dead end). The corrupted index becomes the pair's
/// first error step; corruptions that reproduce a gold path are resampled.
inline std::vector<PathPair> build_pairs(const KnowledgeGraph& g,
                                         const std::vector<QueryRecord>& queries,
                                         int per_query, std::mt19937_64& rng) {
  if (per_query < 1) throw std::invalid_argument("per_query must be >= 1");
  std::vector<PathPair> pairs;
  pairs.reserve(queries.size() * static_cast<size_t>(per_query));

  for (const QueryRecord& q : queries) {
    if (q.gold_paths.empty()) {
      throw std::invalid_argument("query " + q.id + " has no gold path");
    }
    Trajectory gold = trajectory_from_labels(g, q.gold_paths.front(), q.anchor);
    if (gold.length() == 0) {
      throw std::invalid_argument("query " + q.id + " has an empty gold path");
    }

    // Steps whose source entity has an alternative outgoing edge.
    std::vector<size_t> corruptible;
    for (size_t i = 1; i <= gold.length(); ++i) {
      if (g.neighbors(gold.entity_at(i - 1)).size() >= 2) corruptible.push_back(i);
    }
    if (corruptible.empty()) {
      throw std::runtime_error("query " + q.id + " has no corruptible step");
    }

    for (int n = 0; n < per_query; ++n) {
      bool built = false;
      for (int attempt = 0; attempt < 200 && !built; ++attempt) {
        std::uniform_int_distribution<size_t> pick_step(0, corruptible.size() - 1);
        size_t step = corruptible[pick_step(rng)];
        EntityId from = gold.entity_at(step - 1);
        const Edge gold_edge{gold.steps()[step - 1].relation, gold.steps()[step - 1].entity};

        std::vector<Edge> alternatives;
        for (const Edge& e : g.neighbors(from)) {
          if (!(e == gold_edge)) alternatives.push_back(e);
        }
        if (alternatives.empty()) continue;
        std::uniform_int_distribution<size_t> pick_alt(0, alternatives.size() - 1);
        const Edge& alt = alternatives[pick_alt(rng)];

        Trajectory negative = gold.prefix(step - 1);
        negative = extend(negative, alt.relation, alt.tail, g);
        while (negative.length() < gold.length()) {
          const auto& out = g.neighbors(negative.last_entity());
          if (out.empty()) break;
          std::uniform_int_distribution<size_t> pick_next(0, out.size() - 1);
          const Edge& next = out[pick_next(rng)];
          negative = extend(negative, next.relation, next.tail, g);
        }

        LabelPath negative_labels = labels_from_trajectory(g, negative);
        bool is_gold = false;
        for (const LabelPath& gp : q.gold_paths) {
          if (gp == negative_labels) {
            is_gold = true;
            break;
          }
        }
        if (is_gold) continue;

        pairs.push_back(PathPair{q.id, gold, std::move(negative), static_cast<int>(step)});
        built = true;
      }
      if (!built) {
        throw std::runtime_error("query " + q.id +
                                 ": could not sample a negative distinct from gold paths");
      }
    }
  }
  return pairs;
}

// ---------------------------------------------------------------------------
// pairs.jsonl + loss-history CSV

inline std::string pairs_to_jsonl(const KnowledgeGraph& g, const std::vector<PathPair>& pairs) {
  std::string out;
  for (const PathPair& p : pairs) {
    nlohmann::ordered_json j;
    j["query_id"] = p.query_id;
    j["positive"] = labels_from_trajectory(g, p.positive);
    j["negative"] = labels_from_trajectory(g, p.negative);
    j["first_error_step"] = p.first_error_step;
    out += j.dump();
    out += '\n';
  }
  return out;
}

inline void write_pairs(const std::string& path, const KnowledgeGraph& g,
                        const std::vector<PathPair>& pairs) {
  atomic_write_file(path, pairs_to_jsonl(g, pairs));
}

inline std::vector<PathPair> load_pairs(const std::string& path, const KnowledgeGraph& g) {
  std::istringstream in(read_file(path));
  std::vector<PathPair> pairs;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      PathPair p;
      p.query_id = j.at("query_id").get<std::string>();
      auto pos = j.at("positive").get<LabelPath>();
      auto neg = j.at("negative").get<LabelPath>();
      if (pos.empty() || neg.empty()) throw std::invalid_argument("empty path in pair");
      p.positive = trajectory_from_labels(g, pos, pos.front()[0]);
      p.negative = trajectory_from_labels(g, neg, neg.front()[0]);
      p.first_error_step = j.at("first_error_step").get<int>();
      pairs.push_back(std::move(p));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return pairs;
}

inline std::string history_to_csv(const std::vector<EpochStats>& history) {
  std::string out = "epoch,mean_pair_full,mean_pair_step,mean_future,total\n";
  char buf[160];
  for (const EpochStats& s : history) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g\n", s.epoch, s.mean_pair_full,
                  s.mean_pair_step, s.mean_future, s.total);
    out += buf;
  }
  return out;
}

inline void write_history_csv(const std::string& path, const std::vector<EpochStats>& history) {
  atomic_write_file(path, history_to_csv(history));
}

}  // namespace kgr
