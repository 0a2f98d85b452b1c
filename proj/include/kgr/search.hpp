#pragma once

// Monte Carlo tree search over the knowledge graph, guided by the decomposed
// path reward as its value function. Each simulation runs the usual
// selection / expansion / evaluation / backpropagation cycle, except that
// evaluation scores the expanded node's trajectory directly; no rollout.
// A per-query path memory guarantees no trajectory is reward-evaluated
// twice; answers come from the last entities of the highest-reward paths.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kgr/dataset.hpp"
#include "kgr/graph.hpp"
#include "kgr/reward.hpp"

namespace kgr {

struct SearchConfig {
  double exploration_c = 1.4142135623730951;  // sqrt(2)
  int budget = 500;
  int max_depth = 4;
  int top_k = 1;
};

inline void validate(const SearchConfig& cfg) {
  if (cfg.exploration_c < 0.0) throw std::invalid_argument("exploration constant must be >= 0");
  if (cfg.budget < 1) throw std::invalid_argument("budget must be >= 1");
  if (cfg.max_depth < 1) throw std::invalid_argument("max_depth must be >= 1");
  if (cfg.top_k < 1) throw std::invalid_argument("top_k must be >= 1");
}

/// Canonical key of a trajectory: anchor id plus the (relation, entity)
/// steps, with separators that cannot occur in TSV-safe relation text.
inline std::string path_key(const Trajectory& t) {
  std::string key = std::to_string(t.anchor());
  for (const TrajStep& s : t.steps()) {
    key += '\x1e';
    key += s.relation;
    key += '\x1f';
    key += std::to_string(s.entity);
  }
  return key;
}

/// Insertion-only set of explored-path keys for one query's search.
class PathMemory {
 public:
  bool contains(const std::string& key) const { return keys_.count(key) > 0; }
  bool insert(const std::string& key) { return keys_.insert(key).second; }
  void insert_path(const Trajectory& t) { keys_.insert(path_key(t)); }
  size_t size() const { return keys_.size(); }

 private:
  std::unordered_set<std::string> keys_;
};

struct TreeNode {
  Trajectory state;
  int depth = 0;
  int visits = 1;           // own evaluation counts as the first visit
  double eval_value = 0.0;  // F of this node's trajectory, computed once
  bool terminal = false;

  struct EdgeStats {
    int visits = 0;
    double value_sum = 0.0;
    std::unique_ptr<TreeNode> child;
  };
  std::map<Edge, EdgeStats> children;  // ordered by (relation, tail id)
  std::vector<Edge> untried;           // sorted; consumed front to back
  size_t next_untried = 0;
};

/// UCB score per existing child: V(s,a) + c * sqrt(ln N(s) / N(s,a)), with
/// unvisited children at +infinity. Order matches the child map.
inline std::vector<std::pair<Edge, double>> ucb_scores(const TreeNode& node, double c) {
  std::vector<std::pair<Edge, double>> scores;
  scores.reserve(node.children.size());
  double log_n = std::log(static_cast<double>(std::max(node.visits, 1)));
  for (const auto& [edge, stats] : node.children) {
    if (stats.visits == 0) {
      scores.emplace_back(edge, std::numeric_limits<double>::infinity());
    } else {
      double mean = stats.value_sum / static_cast<double>(stats.visits);
      scores.emplace_back(edge, mean + c * std::sqrt(log_n / static_cast<double>(stats.visits)));
    }
  }
  return scores;
}

/// Argmax over the UCB scores; ties (and unvisited children) resolve to the
/// lowest (relation, tail id).
inline Edge ucb_select(const TreeNode& node, double c) {
  if (node.children.empty()) throw std::invalid_argument("ucb_select: node has no children");
  auto scores = ucb_scores(node, c);
  size_t best = 0;
  for (size_t i = 1; i < scores.size(); ++i) {
    if (scores[i].second > scores[best].second) best = i;
  }
  return scores[best].first;
}

struct ScoredPath {
  Trajectory path;
  double reward = 0.0;
};

struct SimResult {
  double value = 0.0;    // the backpropagated reward
  bool expanded = false;  // whether a new node was evaluated
};

/// Per-query search tree. Holds references to the immutable model and graph;
/// a tree is only ever mutated by its own simulate() calls.
class SearchTree {
 public:
  SearchTree(const RewardModel& model, const KnowledgeGraph& graph, const QueryRecord& query,
             const SearchConfig& cfg)
      : model_(model), graph_(graph), cfg_(cfg), query_text_(query.text) {
    validate(cfg_);
    auto anchor = graph_.find_label(query.anchor);
    if (!anchor) {
      throw std::invalid_argument("anchor entity not found: " + query.anchor);
    }
    root_ = make_node(Trajectory(*anchor), 0);
  }

  /// One MCTS iteration: UCB-select down the tree, expand one unexplored
  /// child if possible, evaluate it, and backpropagate the reward to the
  /// root. Paths already in `memory` are skipped, never re-evaluated;
  /// terminal leaves re-backpropagate their cached evaluation.
  SimResult simulate(PathMemory& memory) {
    TreeNode* node = root_.get();
    std::vector<std::pair<TreeNode*, Edge>> path;
    bool expanded = false;

    while (true) {
      if (node->terminal) break;
      if (node->next_untried < node->untried.size()) {
        auto [child, edge] = expand(*node, memory);
        if (child != nullptr) {
          path.emplace_back(node, edge);
          node = child;
          expanded = true;
          break;
        }
        // every remaining untried action was memory-known
      }
      if (node->children.empty()) {
        node->terminal = true;
        break;
      }
      Edge edge = ucb_select(*node, cfg_.exploration_c);
      path.emplace_back(node, edge);
      node = node->children.at(edge).child.get();
    }

    double value = node->eval_value;
    for (auto& [parent, edge] : path) {
      TreeNode::EdgeStats& stats = parent->children.at(edge);
      stats.visits += 1;
      stats.value_sum += value;
      parent->visits += 1;
    }
    return SimResult{value, expanded};
  }

  const TreeNode& root() const { return *root_; }
  const std::vector<ScoredPath>& evaluated() const { return evaluated_; }

 private:
  std::unique_ptr<TreeNode> make_node(Trajectory state, int depth) {
    auto node = std::make_unique<TreeNode>();
    node->depth = depth;
    node->eval_value = path_reward(model_, query_text_, state, graph_).value;
    const auto& out = graph_.neighbors(state.last_entity());
    if (depth >= cfg_.max_depth || out.empty()) {
      node->terminal = true;
    } else {
      node->untried.assign(out.begin(), out.end());
    }
    node->state = std::move(state);
    return node;
  }

  std::pair<TreeNode*, Edge> expand(TreeNode& node, PathMemory& memory) {
    while (node.next_untried < node.untried.size()) {
      Edge action = node.untried[node.next_untried++];
      Trajectory next = extend(node.state, action.relation, action.tail, graph_);
      std::string key = path_key(next);
      if (memory.contains(key)) continue;
      memory.insert(key);
      auto child = make_node(std::move(next), node.depth + 1);
      evaluated_.push_back(ScoredPath{child->state, child->eval_value});
      TreeNode* raw = child.get();
      node.children[action].child = std::move(child);
      return {raw, action};
    }
    return {nullptr, Edge{}};
  }

  const RewardModel& model_;
  const KnowledgeGraph& graph_;
  SearchConfig cfg_;
  std::string query_text_;
  std::unique_ptr<TreeNode> root_;
  std::vector<ScoredPath> evaluated_;
};

struct ResultEntry {
  std::string answer;
  double reward = 0.0;
  LabelPath path;
};

struct SearchOutcome {
  std::string query_id;
  std::vector<ScoredPath> ranked;  // every evaluated path, best first
  std::vector<ResultEntry> topk;   // de-duplicated answers of the top paths
  int simulations = 0;
  std::string diagnostic;  // non-empty when no path could be evaluated
};

/// Runs the configured budget of simulations for one query and extracts the
/// top-k answers from the highest-reward evaluated paths. Deterministic for
/// fixed inputs.
inline SearchOutcome search(const RewardModel& m, const KnowledgeGraph& g,
                            const QueryRecord& query, const SearchConfig& cfg) {
  validate(cfg);
  SearchTree tree(m, g, query, cfg);
  PathMemory memory;
  SearchOutcome outcome;
  outcome.query_id = query.id;
  for (int i = 0; i < cfg.budget; ++i) {
    tree.simulate(memory);
  }
  outcome.simulations = cfg.budget;

  outcome.ranked = tree.evaluated();
  std::sort(outcome.ranked.begin(), outcome.ranked.end(),
            [](const ScoredPath& a, const ScoredPath& b) {
              if (a.reward != b.reward) return a.reward > b.reward;
              return path_key(a.path) < path_key(b.path);
            });

  if (outcome.ranked.empty()) {
    outcome.diagnostic = "no paths evaluated from anchor '" + query.anchor + "'";
    return outcome;
  }

  std::unordered_set<std::string> seen;
  for (const ScoredPath& sp : outcome.ranked) {
    const std::string& label = g.entity(sp.path.last_entity()).label;
    if (!seen.insert(label).second) continue;
    outcome.topk.push_back(ResultEntry{label, sp.reward, labels_from_trajectory(g, sp.path)});
    if (static_cast<int>(outcome.topk.size()) >= cfg.top_k) break;
  }
  return outcome;
}

/// Searches every query, fanning out across `workers` threads over the
/// shared immutable graph and model. Output order is by query id regardless
/// of worker count.
inline std::vector<SearchOutcome> search_all(const RewardModel& m, const KnowledgeGraph& g,
                                             const std::vector<QueryRecord>& queries,
                                             const SearchConfig& cfg, int workers = 1) {
  validate(cfg);
  if (workers < 1) workers = 1;
  std::vector<SearchOutcome> outcomes(queries.size());
  if (workers == 1 || queries.size() <= 1) {
    for (size_t i = 0; i < queries.size(); ++i) outcomes[i] = search(m, g, queries[i], cfg);
  } else {
    std::vector<std::thread> threads;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    size_t n_threads = std::min(static_cast<size_t>(workers), queries.size());
    for (size_t t = 0; t < n_threads; ++t) {
      threads.emplace_back([&, t]() {
        try {
          for (size_t i = t; i < queries.size(); i += n_threads) {
            outcomes[i] = search(m, g, queries[i], cfg);
          }
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
    }
    for (auto& th : threads) th.join();
    if (failure) std::rethrow_exception(failure);
  }
  std::sort(outcomes.begin(), outcomes.end(),
            [](const SearchOutcome& a, const SearchOutcome& b) { return a.query_id < b.query_id; });
  return outcomes;
}

// ---------------------------------------------------------------------------
// results.jsonl

struct ResultRecord {
  std::string query_id;
  std::vector<ResultEntry> topk;
  int simulations = 0;
};

inline ResultRecord to_result_record(const SearchOutcome& o) {
  return ResultRecord{o.query_id, o.topk, o.simulations};
}

inline std::string results_to_jsonl(const std::vector<ResultRecord>& results) {
  std::string out;
  for (const ResultRecord& r : results) {
    nlohmann::ordered_json j;
    j["query_id"] = r.query_id;
    nlohmann::ordered_json topk = nlohmann::ordered_json::array();
    for (const ResultEntry& e : r.topk) {
      topk.push_back({{"answer", e.answer}, {"reward", e.reward}, {"path", e.path}});
    }
    j["topk"] = std::move(topk);
    j["simulations"] = r.simulations;
    out += j.dump();
    out += '\n';
  }
  return out;
}

inline void write_results(const std::string& path, const std::vector<ResultRecord>& results) {
  atomic_write_file(path, results_to_jsonl(results));
}

inline std::vector<ResultRecord> load_results(const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<ResultRecord> results;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      ResultRecord r;
      r.query_id = j.at("query_id").get<std::string>();
      for (const auto& e : j.at("topk")) {
        r.topk.push_back(ResultEntry{e.at("answer").get<std::string>(),
                                     e.at("reward").get<double>(),
                                     e.at("path").get<LabelPath>()});
      }
      r.simulations = j.at("simulations").get<int>();
      results.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return results;
}

}  // namespace kgr
