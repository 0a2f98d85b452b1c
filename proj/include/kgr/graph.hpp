#pragma once

// Immutable knowledge-graph store with typed entities and a sorted
// outgoing-adjacency index, plus the path/trajectory value type that the
// scoring, training and search layers share.
//
// File formats:
//   triples.tsv  one `head<TAB>relation<TAB>tail` per line, `#` comments ok
//   types.tsv    one `entity<TAB>type` per line

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace kgr {

using EntityId = int32_t;

struct Entity {
  EntityId id = -1;
  std::string label;
  std::string type;
};

/// One outgoing edge of an entity: (relation, tail). Also doubles as the
/// action type of the search layer; ordering is (relation text, tail id).
struct Edge {
  std::string relation;
  EntityId tail = -1;

  friend bool operator==(const Edge& a, const Edge& b) {
    return a.tail == b.tail && a.relation == b.relation;
  }
  friend bool operator<(const Edge& a, const Edge& b) {
    if (a.relation != b.relation) return a.relation < b.relation;
    return a.tail < b.tail;
  }
};

struct Triplet {
  EntityId head = -1;
  std::string relation;
  EntityId tail = -1;
};

/// Entity/relation store, immutable after build. Adjacency holds exactly the
/// triple set grouped by head, sorted by (relation, tail id), so traversal
/// order is deterministic everywhere.
class KnowledgeGraph {
 public:
  size_t entity_count() const { return entities_.size(); }

  size_t triple_count() const { return triple_count_; }

  bool valid_id(EntityId e) const {
    return e >= 0 && static_cast<size_t>(e) < entities_.size();
  }

  const Entity& entity(EntityId e) const {
    if (!valid_id(e)) {
      throw std::out_of_range("invalid entity id " + std::to_string(e));
    }
    return entities_[static_cast<size_t>(e)];
  }

  std::optional<EntityId> find_label(std::string_view label) const {
    auto it = label_to_id_.find(std::string(label));
    if (it == label_to_id_.end()) return std::nullopt;
    return it->second;
  }

  /// Outgoing edges of `e`, sorted by (relation, tail id).
  const std::vector<Edge>& neighbors(EntityId e) const {
    if (!valid_id(e)) {
      throw std::out_of_range("neighbors: invalid entity id " + std::to_string(e));
    }
    return adjacency_[static_cast<size_t>(e)];
  }

  bool has_triple(EntityId head, std::string_view relation, EntityId tail) const {
    if (!valid_id(head) || !valid_id(tail)) return false;
    const auto& out = adjacency_[static_cast<size_t>(head)];
    Edge probe{std::string(relation), tail};
    return std::binary_search(out.begin(), out.end(), probe);
  }

  std::vector<Triplet> triples() const {
    std::vector<Triplet> result;
    result.reserve(triple_count_);
    for (EntityId h = 0; static_cast<size_t>(h) < adjacency_.size(); ++h) {
      for (const Edge& edge : adjacency_[static_cast<size_t>(h)]) {
        result.push_back(Triplet{h, edge.relation, edge.tail});
      }
    }
    return result;
  }

  void write_triples(std::ostream& out) const {
    for (EntityId h = 0; static_cast<size_t>(h) < adjacency_.size(); ++h) {
      for (const Edge& edge : adjacency_[static_cast<size_t>(h)]) {
        out << entities_[static_cast<size_t>(h)].label << '\t' << edge.relation
            << '\t' << entities_[static_cast<size_t>(edge.tail)].label << '\n';
      }
    }
  }

  void write_types(std::ostream& out) const {
    for (const Entity& e : entities_) {
      out << e.label << '\t' << e.type << '\n';
    }
  }

  /// All distinct entity types, sorted.
  std::vector<std::string> type_vocabulary() const {
    std::vector<std::string> types;
    for (const Entity& e : entities_) types.push_back(e.type);
    std::sort(types.begin(), types.end());
    types.erase(std::unique(types.begin(), types.end()), types.end());
    return types;
  }

 private:
  friend class GraphBuilder;

  std::vector<Entity> entities_;
  std::unordered_map<std::string, EntityId> label_to_id_;
  std::vector<std::vector<Edge>> adjacency_;
  size_t triple_count_ = 0;
};

/// Accumulates entities and triples, then freezes them into a KnowledgeGraph.
/// Duplicate triples collapse; conflicting entity types are an error.
class GraphBuilder {
 public:
  EntityId add_entity(std::string label, std::string type) {
    if (label.empty()) throw std::invalid_argument("entity label must be non-empty");
    if (type.empty()) throw std::invalid_argument("entity type must be non-empty");
    auto it = label_to_id_.find(label);
    if (it != label_to_id_.end()) {
      const Entity& existing = entities_[static_cast<size_t>(it->second)];
      if (existing.type != type) {
        throw std::invalid_argument("conflicting type for entity '" + label +
                                    "': '" + existing.type + "' vs '" + type + "'");
      }
      return it->second;
    }
    EntityId id = static_cast<EntityId>(entities_.size());
    entities_.push_back(Entity{id, label, std::move(type)});
    label_to_id_.emplace(std::move(label), id);
    return id;
  }

  bool has_entity(const std::string& label) const {
    return label_to_id_.count(label) > 0;
  }

  void add_triple(EntityId head, std::string relation, EntityId tail) {
    if (head < 0 || static_cast<size_t>(head) >= entities_.size() || tail < 0 ||
        static_cast<size_t>(tail) >= entities_.size()) {
      throw std::out_of_range("add_triple: unknown entity id");
    }
    if (relation.empty()) throw std::invalid_argument("relation must be non-empty");
    edges_.resize(entities_.size());
    edges_[static_cast<size_t>(head)].push_back(Edge{std::move(relation), tail});
  }

  KnowledgeGraph build() {
    KnowledgeGraph g;
    g.entities_ = std::move(entities_);
    g.label_to_id_ = std::move(label_to_id_);
    edges_.resize(g.entities_.size());
    g.adjacency_.resize(g.entities_.size());
    size_t count = 0;
    for (size_t i = 0; i < edges_.size(); ++i) {
      auto& out = edges_[i];
      std::sort(out.begin(), out.end());
      out.erase(std::unique(out.begin(), out.end()), out.end());
      count += out.size();
      g.adjacency_[i] = std::move(out);
    }
    g.triple_count_ = count;
    entities_.clear();
    label_to_id_.clear();
    edges_.clear();
    return g;
  }

 private:
  std::vector<Entity> entities_;
  std::unordered_map<std::string, EntityId> label_to_id_;
  std::vector<std::vector<Edge>> edges_;
};

namespace detail {

inline std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

inline bool skippable(const std::string& line) {
  return line.empty() || line[0] == '#';
}

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  size_t start = 0;
  while (true) {
    size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

}  // namespace detail

/// Loads a graph from `head<TAB>relation<TAB>tail` triples plus an
/// `entity<TAB>type` table. Every entity mentioned by a triple must be typed;
/// ids are assigned densely in first-mention order.
inline KnowledgeGraph load_graph(const std::string& triples_path,
                                 const std::string& types_path) {
  std::ifstream types_in(types_path);
  if (!types_in) throw std::runtime_error("cannot open types file: " + types_path);

  std::unordered_map<std::string, std::string> type_of;
  std::string line;
  size_t lineno = 0;
  while (std::getline(types_in, line)) {
    ++lineno;
    line = detail::strip_cr(std::move(line));
    if (detail::skippable(line)) continue;
    auto fields = detail::split_tabs(line);
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
      throw std::runtime_error(types_path + ":" + std::to_string(lineno) +
                               ": expected `entity<TAB>type`");
    }
    auto [it, inserted] = type_of.emplace(fields[0], fields[1]);
    if (!inserted && it->second != fields[1]) {
      throw std::runtime_error(types_path + ":" + std::to_string(lineno) +
                               ": conflicting type for entity '" + fields[0] +
                               "': '" + it->second + "' vs '" + fields[1] + "'");
    }
  }

  std::ifstream triples_in(triples_path);
  if (!triples_in) throw std::runtime_error("cannot open triples file: " + triples_path);

  GraphBuilder builder;
  auto ensure_entity = [&](const std::string& label, size_t at_line) -> EntityId {
    if (builder.has_entity(label)) return builder.add_entity(label, type_of.at(label));
    auto it = type_of.find(label);
    if (it == type_of.end()) {
      throw std::runtime_error(triples_path + ":" + std::to_string(at_line) +
                               ": entity '" + label + "' has no type");
    }
    return builder.add_entity(label, it->second);
  };

  lineno = 0;
  while (std::getline(triples_in, line)) {
    ++lineno;
    line = detail::strip_cr(std::move(line));
    if (detail::skippable(line)) continue;
    auto fields = detail::split_tabs(line);
    if (fields.size() != 3 || fields[0].empty() || fields[1].empty() || fields[2].empty()) {
      throw std::runtime_error(triples_path + ":" + std::to_string(lineno) +
                               ": expected `head<TAB>relation<TAB>tail`");
    }
    EntityId head = ensure_entity(fields[0], lineno);
    EntityId tail = ensure_entity(fields[2], lineno);
    builder.add_triple(head, fields[1], tail);
  }
  return builder.build();
}

struct TrajStep {
  std::string relation;
  EntityId entity = -1;

  friend bool operator==(const TrajStep& a, const TrajStep& b) {
    return a.entity == b.entity && a.relation == b.relation;
  }
};

/// An anchored path through the graph: anchor entity plus ordered
/// (relation, entity) steps. Every prefix of a trajectory is itself a
/// trajectory; values are cheap to copy and safe to share across threads.
class Trajectory {
 public:
  Trajectory() = default;
  explicit Trajectory(EntityId anchor) : anchor_(anchor) {}
  Trajectory(EntityId anchor, std::vector<TrajStep> steps)
      : anchor_(anchor), steps_(std::move(steps)) {}

  EntityId anchor() const { return anchor_; }
  const std::vector<TrajStep>& steps() const { return steps_; }
  size_t length() const { return steps_.size(); }
  bool empty() const { return steps_.empty(); }

  EntityId last_entity() const {
    return steps_.empty() ? anchor_ : steps_.back().entity;
  }

  EntityId entity_at(size_t i) const {
    if (i > steps_.size()) throw std::out_of_range("entity_at: index past end");
    return i == 0 ? anchor_ : steps_[i - 1].entity;
  }

  Trajectory prefix(size_t j) const {
    if (j > steps_.size()) throw std::out_of_range("prefix longer than trajectory");
    return Trajectory(anchor_, std::vector<TrajStep>(steps_.begin(),
                                                     steps_.begin() + static_cast<long>(j)));
  }

  void push_step(TrajStep step) { steps_.push_back(std::move(step)); }

  friend bool operator==(const Trajectory& a, const Trajectory& b) {
    return a.anchor_ == b.anchor_ && a.steps_ == b.steps_;
  }

 private:
  EntityId anchor_ = -1;
  std::vector<TrajStep> steps_;
};

/// Appends one step; the (last entity, relation, e) edge must exist in g.
inline Trajectory extend(const Trajectory& t, const std::string& relation,
                         EntityId e, const KnowledgeGraph& g) {
  EntityId from = t.last_entity();
  if (!g.has_triple(from, relation, e)) {
    throw std::invalid_argument("extend: no triple (" + g.entity(from).label + ", " +
                                relation + ", " + g.entity(e).label + ")");
  }
  Trajectory next = t;
  next.push_step(TrajStep{relation, e});
  return next;
}

inline bool valid_in(const Trajectory& t, const KnowledgeGraph& g) {
  if (!g.valid_id(t.anchor())) return false;
  EntityId prev = t.anchor();
  for (const TrajStep& s : t.steps()) {
    if (!g.has_triple(prev, s.relation, s.entity)) return false;
    prev = s.entity;
  }
  return true;
}

/// `e0 -r0-> e1 -r1-> ... ek` over entity labels; the bare-anchor form is
/// just the anchor label.
inline std::string path_text(const Trajectory& t, const KnowledgeGraph& g) {
  std::string out = g.entity(t.anchor()).label;
  for (const TrajStep& s : t.steps()) {
    out += " -";
    out += s.relation;
    out += "-> ";
    out += g.entity(s.entity).label;
  }
  return out;
}

/// Scoring input text: prompt, query and rendered path joined in a fixed
/// order. Identical inputs always produce identical bytes.
inline std::string render_text(const std::string& prompt, const std::string& query,
                               const Trajectory& t, const KnowledgeGraph& g) {
  std::string out = prompt;
  out += query;
  out += ' ';
  out += path_text(t, g);
  return out;
}

}  // namespace kgr
