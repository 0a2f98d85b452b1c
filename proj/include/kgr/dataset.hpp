#pragma once

// Query records and their JSONL serialization, plus conversion between
// label-level paths (as stored on disk) and id-level trajectories.
//
// queries.jsonl, one object per line:
//   {"id", "text", "anchor", "answers": [labels],
//    "schema": {"anchor_type", "constraints": [text]},
//    "gold_paths": [[[head, relation, tail], ...], ...]}

#include <array>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "kgr/graph.hpp"
#include "kgr/io.hpp"
#include "kgr/schema.hpp"

namespace kgr {

using LabelTriple = std::array<std::string, 3>;
using LabelPath = std::vector<LabelTriple>;

struct QueryRecord {
  std::string id;
  std::string text;
  std::string anchor;  // entity label
  std::vector<std::string> answers;
  QuerySchema schema;
  std::vector<LabelPath> gold_paths;
};

/// Resolves a label-level path against the graph, validating every hop.
inline Trajectory trajectory_from_labels(const KnowledgeGraph& g, const LabelPath& path,
                                         const std::string& anchor_label) {
  auto anchor = g.find_label(anchor_label);
  if (!anchor) throw std::invalid_argument("unknown anchor entity: " + anchor_label);
  Trajectory t(*anchor);
  for (const LabelTriple& triple : path) {
    if (g.entity(t.last_entity()).label != triple[0]) {
      throw std::invalid_argument("path does not chain at entity " + triple[0]);
    }
    auto tail = g.find_label(triple[2]);
    if (!tail) throw std::invalid_argument("unknown entity in path: " + triple[2]);
    t = extend(t, triple[1], *tail, g);
  }
  return t;
}

inline LabelPath labels_from_trajectory(const KnowledgeGraph& g, const Trajectory& t) {
  LabelPath path;
  EntityId prev = t.anchor();
  for (const TrajStep& s : t.steps()) {
    path.push_back(LabelTriple{g.entity(prev).label, s.relation, g.entity(s.entity).label});
    prev = s.entity;
  }
  return path;
}

namespace detail {

inline nlohmann::ordered_json query_to_json(const QueryRecord& q) {
  nlohmann::ordered_json j;
  j["id"] = q.id;
  j["text"] = q.text;
  j["anchor"] = q.anchor;
  j["answers"] = q.answers;
  j["schema"] = {{"anchor_type", q.schema.anchor_type}, {"constraints", q.schema.constraints}};
  j["gold_paths"] = q.gold_paths;
  return j;
}

inline QueryRecord query_from_json(const nlohmann::json& j) {
  QueryRecord q;
  q.id = j.at("id").get<std::string>();
  q.text = j.at("text").get<std::string>();
  q.anchor = j.at("anchor").get<std::string>();
  q.answers = j.at("answers").get<std::vector<std::string>>();
  q.schema.anchor_type = j.at("schema").at("anchor_type").get<std::string>();
  q.schema.constraints = j.at("schema").at("constraints").get<std::vector<std::string>>();
  q.gold_paths = j.at("gold_paths").get<std::vector<LabelPath>>();
  return q;
}

}  // namespace detail

inline std::string queries_to_jsonl(const std::vector<QueryRecord>& queries) {
  std::string out;
  for (const QueryRecord& q : queries) {
    out += detail::query_to_json(q).dump();
    out += '\n';
  }
  return out;
}

inline void write_queries(const std::string& path, const std::vector<QueryRecord>& queries) {
  atomic_write_file(path, queries_to_jsonl(queries));
}

inline std::vector<QueryRecord> load_queries(const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<QueryRecord> queries;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      queries.push_back(detail::query_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return queries;
}

}  // namespace kgr
