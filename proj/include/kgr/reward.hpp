#pragma once

// Path scoring core. A trajectory's reward decomposes A*-style into
//   F = G + H
// where G is the cumulative past reward, the sum of log step-safety
// probabilities over every prefix, and H = log w is the predicted future
// success at the current step. Risky steps therefore impose persistent
// penalties that no later step can undo, while H carries no length bias.
//
// Variants: `full` (G + H), `wo_cr` (H only), `wo_fr` (G only), and
// `additive_prm`, a mean-per-step baseline that exhibits the risk
// compensation the decomposed form avoids.

#include <cmath>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "kgr/encoder.hpp"
#include "kgr/graph.hpp"
#include "kgr/io.hpp"

namespace kgr {

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

/// log(1 + exp(x)), overflow-safe. -log(sigmoid(s)) == softplus(-s).
inline double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

/// Scalar head over an embedding: affine (depth 0) or one tanh hidden layer
/// of fixed width (depth 1). Depth 0 keeps finite-difference checks exact.
struct Head {
  int depth = 0;
  int input_dim = 0;
  int hidden = 32;
  std::vector<double> w1;  // depth 0: [input_dim]; depth 1: [hidden * input_dim]
  std::vector<double> b1;  // depth 0: [1]; depth 1: [hidden]
  std::vector<double> w2;  // depth 1 only: [hidden]
  double b2 = 0.0;

  static Head zeros(int input_dim, int depth = 0, int hidden = 32) {
    Head h;
    h.depth = depth;
    h.input_dim = input_dim;
    h.hidden = hidden;
    if (depth == 0) {
      h.w1.assign(static_cast<size_t>(input_dim), 0.0);
      h.b1.assign(1, 0.0);
    } else if (depth == 1) {
      h.w1.assign(static_cast<size_t>(hidden) * static_cast<size_t>(input_dim), 0.0);
      h.b1.assign(static_cast<size_t>(hidden), 0.0);
      h.w2.assign(static_cast<size_t>(hidden), 0.0);
    } else {
      throw std::invalid_argument("head depth must be 0 or 1");
    }
    return h;
  }

  static Head random(int input_dim, std::mt19937_64& rng, double scale = 0.1,
                     int depth = 0, int hidden = 32) {
    Head h = zeros(input_dim, depth, hidden);
    std::normal_distribution<double> gauss(0.0, scale);
    for (double& v : h.w1) v = gauss(rng);
    for (double& v : h.b1) v = gauss(rng);
    for (double& v : h.w2) v = gauss(rng);
    if (depth == 1) h.b2 = gauss(rng);
    return h;
  }

  size_t param_count() const { return w1.size() + b1.size() + w2.size() + (depth == 1 ? 1 : 0); }

  struct Cache {
    std::vector<double> hidden;  // tanh activations, depth 1 only
  };

  double forward(const Embedding& x, Cache* cache = nullptr) const {
    if (static_cast<int>(x.values.size()) != input_dim) {
      throw std::invalid_argument("head input dimension mismatch");
    }
    if (depth == 0) {
      double out = b1[0];
      for (int i = 0; i < input_dim; ++i) out += w1[static_cast<size_t>(i)] * x.values[static_cast<size_t>(i)];
      return out;
    }
    std::vector<double> act(static_cast<size_t>(hidden));
    for (int j = 0; j < hidden; ++j) {
      double pre = b1[static_cast<size_t>(j)];
      const double* row = &w1[static_cast<size_t>(j) * static_cast<size_t>(input_dim)];
      for (int i = 0; i < input_dim; ++i) pre += row[i] * x.values[static_cast<size_t>(i)];
      act[static_cast<size_t>(j)] = std::tanh(pre);
    }
    double out = b2;
    for (int j = 0; j < hidden; ++j) out += w2[static_cast<size_t>(j)] * act[static_cast<size_t>(j)];
    if (cache) cache->hidden = std::move(act);
    return out;
  }

  bool finite() const {
    auto ok = [](const std::vector<double>& v) {
      for (double x : v) {
        if (!std::isfinite(x)) return false;
      }
      return true;
    };
    return ok(w1) && ok(b1) && ok(w2) && std::isfinite(b2);
  }
};

/// Gradient buffer shaped like a Head.
struct HeadGrad {
  std::vector<double> w1, b1, w2;
  double b2 = 0.0;

  static HeadGrad zeros_like(const Head& h) {
    HeadGrad g;
    g.w1.assign(h.w1.size(), 0.0);
    g.b1.assign(h.b1.size(), 0.0);
    g.w2.assign(h.w2.size(), 0.0);
    g.b2 = 0.0;
    return g;
  }
};

/// Backprop a scalar upstream gradient through the head into `grad`.
/// `cache` must come from the matching forward() call for depth-1 heads.
inline void head_backward(const Head& h, const Embedding& x, const Head::Cache& cache,
                          double gout, HeadGrad& grad) {
  if (gout == 0.0) return;
  if (h.depth == 0) {
    for (int i = 0; i < h.input_dim; ++i) {
      grad.w1[static_cast<size_t>(i)] += gout * x.values[static_cast<size_t>(i)];
    }
    grad.b1[0] += gout;
    return;
  }
  for (int j = 0; j < h.hidden; ++j) {
    double a = cache.hidden[static_cast<size_t>(j)];
    grad.w2[static_cast<size_t>(j)] += gout * a;
    double dpre = gout * h.w2[static_cast<size_t>(j)] * (1.0 - a * a);
    double* grow = &grad.w1[static_cast<size_t>(j) * static_cast<size_t>(h.input_dim)];
    for (int i = 0; i < h.input_dim; ++i) grow[i] += dpre * x.values[static_cast<size_t>(i)];
    grad.b1[static_cast<size_t>(j)] += dpre;
  }
  grad.b2 += gout;
}

enum class Variant {
  kFull,
  kWithoutCumulative,  // "wo_cr": F = H
  kWithoutFuture,      // "wo_fr": F = G
  kAdditivePrm,        // mean(1 - p_t) baseline
};

inline std::string to_string(Variant v) {
  switch (v) {
    case Variant::kFull: return "full";
    case Variant::kWithoutCumulative: return "wo_cr";
    case Variant::kWithoutFuture: return "wo_fr";
    case Variant::kAdditivePrm: return "additive_prm";
  }
  throw std::logic_error("unreachable variant");
}

inline Variant variant_from_string(const std::string& s) {
  if (s == "full") return Variant::kFull;
  if (s == "wo_cr") return Variant::kWithoutCumulative;
  if (s == "wo_fr") return Variant::kWithoutFuture;
  if (s == "additive_prm") return Variant::kAdditivePrm;
  throw std::invalid_argument("unknown variant: " + s);
}

inline const std::string kDefaultRiskPrompt = "risk : ";

/// The scoring model: encoder config, risk head, schema head, prompt
/// template, probability clamp and reward variant. Immutable during search;
/// only the training loop mutates head parameters.
struct RewardModel {
  EncoderConfig encoder;
  Head risk_head;
  Head schema_head;
  std::string prompt = kDefaultRiskPrompt;
  double epsilon = 1e-6;  // probability clamp, keeps logs finite
  Variant variant = Variant::kFull;

  static RewardModel zeros(const EncoderConfig& cfg, int head_depth = 0) {
    RewardModel m;
    m.encoder = cfg;
    m.risk_head = Head::zeros(cfg.dim, head_depth);
    m.schema_head = Head::zeros(cfg.dim, head_depth);
    return m;
  }

  static RewardModel random(const EncoderConfig& cfg, std::mt19937_64& rng,
                            double scale = 0.1, int head_depth = 0) {
    RewardModel m;
    m.encoder = cfg;
    m.risk_head = Head::random(cfg.dim, rng, scale, head_depth);
    m.schema_head = Head::random(cfg.dim, rng, scale, head_depth);
    return m;
  }
};

inline void validate(const RewardModel& m) {
  validate(m.encoder);
  if (!(m.epsilon > 0.0 && m.epsilon < 0.5)) {
    throw std::invalid_argument("epsilon must be in (0, 0.5)");
  }
  if (!m.risk_head.finite() || !m.schema_head.finite()) {
    throw std::invalid_argument("model parameters must be finite");
  }
}

inline double clamp_probability(double p, double eps) {
  if (p < eps) return eps;
  if (p > 1.0 - eps) return 1.0 - eps;
  return p;
}

/// Step risk of the last step of t: sigmoid of the risk head over the
/// embedded (prompt, query, rendered path) text, clamped away from {0, 1}.
inline double step_risk(const RewardModel& m, const std::string& q, const Trajectory& t,
                        const KnowledgeGraph& g) {
  Embedding z = encode(m.encoder, render_text(m.prompt, q, t, g));
  return clamp_probability(sigmoid(m.risk_head.forward(z)), m.epsilon);
}

/// Step risks over every prefix 1..k of t, in order.
inline std::vector<double> step_risks(const RewardModel& m, const std::string& q,
                                      const Trajectory& t, const KnowledgeGraph& g) {
  std::vector<double> risks;
  risks.reserve(t.length());
  std::string text = m.prompt;
  text += q;
  text += ' ';
  text += g.entity(t.anchor()).label;
  for (const TrajStep& s : t.steps()) {
    text += " -";
    text += s.relation;
    text += "-> ";
    text += g.entity(s.entity).label;
    Embedding z = encode(m.encoder, text);
    risks.push_back(clamp_probability(sigmoid(m.risk_head.forward(z)), m.epsilon));
  }
  return risks;
}

/// G = sum_t log(1 - p_t); the empty sequence gives 0. Each later step can
/// only lower G, never raise it.
inline double cumulative_reward(std::span<const double> step_risk_values) {
  double g = 0.0;
  for (double p : step_risk_values) {
    if (!(p > 0.0 && p < 1.0)) {
      throw std::invalid_argument("step risk must lie strictly inside (0, 1); got " +
                                  std::to_string(p));
    }
    g += std::log1p(-p);
  }
  return g;
}

/// w = sigmoid(schema_head(z_q - z_pi)): predicted probability that this
/// prefix can still reach the query's implicit target. The schema pathway
/// embeds the bare query and bare rendered path, without the risk prompt.
inline double future_success(const RewardModel& m, const std::string& q, const Trajectory& t,
                             const KnowledgeGraph& g) {
  Embedding zq = encode(m.encoder, q);
  Embedding zpi = encode(m.encoder, path_text(t, g));
  return clamp_probability(sigmoid(m.schema_head.forward(zq - zpi)), m.epsilon);
}

/// Full decomposed reward of a path.
struct PathReward {
  std::vector<double> per_step_risk;  // p_1..p_k
  double past = 0.0;                  // G = sum log(1 - p_t), <= 0
  double future_probability = 0.5;    // w in (0, 1)
  double future = 0.0;                // H = log w, < 0
  double value = 0.0;                 // F, variant-adjusted
};

/// Scores all prefixes of t and combines per the model's variant:
/// full: F = G + H; wo_cr: F = H; wo_fr: F = G; additive_prm: mean(1 - p_t).
inline PathReward path_reward(const RewardModel& m, const std::string& q, const Trajectory& t,
                              const KnowledgeGraph& g) {
  PathReward r;
  r.per_step_risk = step_risks(m, q, t, g);
  r.past = cumulative_reward(r.per_step_risk);
  r.future_probability = future_success(m, q, t, g);
  r.future = std::log(r.future_probability);
  switch (m.variant) {
    case Variant::kFull:
      r.value = r.past + r.future;
      break;
    case Variant::kWithoutCumulative:
      r.value = r.future;
      break;
    case Variant::kWithoutFuture:
      r.value = r.past;
      break;
    case Variant::kAdditivePrm: {
      if (r.per_step_risk.empty()) {
        r.value = 0.0;
      } else {
        double s = 0.0;
        for (double p : r.per_step_risk) s += 1.0 - p;
        r.value = s / static_cast<double>(r.per_step_risk.size());
      }
      break;
    }
  }
  return r;
}

/// Mean per-step safety, the additive baseline: later safe steps can offset
/// an earlier risky one, which is exactly the compensation effect the
/// decomposed reward rules out.
inline double additive_prm_reward(const RewardModel& m, const std::string& q,
                                  const Trajectory& t, const KnowledgeGraph& g) {
  if (t.length() == 0) {
    throw std::invalid_argument("additive_prm_reward requires at least one step");
  }
  std::vector<double> risks = step_risks(m, q, t, g);
  double s = 0.0;
  for (double p : risks) s += 1.0 - p;
  return s / static_cast<double>(risks.size());
}

// ---------------------------------------------------------------------------
// model.json serialization. Doubles round-trip bit-exactly (shortest
// round-trip decimal form).

namespace detail {

inline nlohmann::ordered_json head_to_json(const Head& h) {
  nlohmann::ordered_json j;
  j["depth"] = h.depth;
  j["input_dim"] = h.input_dim;
  j["hidden"] = h.hidden;
  j["w1"] = h.w1;
  j["b1"] = h.b1;
  j["w2"] = h.w2;
  j["b2"] = h.b2;
  return j;
}

inline Head head_from_json(const nlohmann::json& j) {
  Head h;
  h.depth = j.at("depth").get<int>();
  h.input_dim = j.at("input_dim").get<int>();
  h.hidden = j.at("hidden").get<int>();
  h.w1 = j.at("w1").get<std::vector<double>>();
  h.b1 = j.at("b1").get<std::vector<double>>();
  h.w2 = j.at("w2").get<std::vector<double>>();
  h.b2 = j.at("b2").get<double>();
  return h;
}

}  // namespace detail

inline nlohmann::ordered_json model_to_json(const RewardModel& m) {
  nlohmann::ordered_json j;
  j["encoder"] = {{"dim", m.encoder.dim},
                  {"hash_seed", m.encoder.hash_seed},
                  {"max_tokens", m.encoder.max_tokens}};
  j["risk_head"] = detail::head_to_json(m.risk_head);
  j["schema_head"] = detail::head_to_json(m.schema_head);
  j["prompt"] = m.prompt;
  j["variant"] = to_string(m.variant);
  j["epsilon"] = m.epsilon;
  return j;
}

inline RewardModel model_from_json(const nlohmann::json& j) {
  RewardModel m;
  m.encoder.dim = j.at("encoder").at("dim").get<int>();
  m.encoder.hash_seed = j.at("encoder").at("hash_seed").get<uint64_t>();
  m.encoder.max_tokens = j.at("encoder").at("max_tokens").get<int>();
  m.risk_head = detail::head_from_json(j.at("risk_head"));
  m.schema_head = detail::head_from_json(j.at("schema_head"));
  m.prompt = j.at("prompt").get<std::string>();
  m.variant = variant_from_string(j.at("variant").get<std::string>());
  m.epsilon = j.at("epsilon").get<double>();
  validate(m);
  return m;
}

inline void save_model(const std::string& path, const RewardModel& m) {
  atomic_write_file(path, model_to_json(m).dump(2) + "\n");
}

inline RewardModel load_model(const std::string& path) {
  return model_from_json(nlohmann::json::parse(read_file(path)));
}

}  // namespace kgr
