#include "kgm/kg.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace kgm {

namespace {

struct Interner {
  std::vector<std::string> names;
  std::unordered_map<std::string, std::uint32_t> ids;

  std::uint32_t intern(const std::string& name) {
    auto it = ids.find(name);
    if (it != ids.end()) return it->second;
    auto id = static_cast<std::uint32_t>(names.size());
    names.push_back(name);
    ids.emplace(name, id);
    return id;
  }
};

}  // namespace

KnowledgeGraph KnowledgeGraph::from_rows(
    const std::vector<std::array<std::string, 3>>& rows) {
  Interner entities;
  Interner relations;
  std::vector<Triple> triples;
  triples.reserve(rows.size());
  for (const auto& row : rows) {
    EntityId h = entities.intern(row[0]);
    RelationId r = relations.intern(row[1]);
    EntityId t = entities.intern(row[2]);
    triples.push_back({h, r, t});
  }
  return from_triples(std::move(entities.names), std::move(relations.names),
                      std::move(triples));
}

KnowledgeGraph KnowledgeGraph::from_triples(
    std::vector<std::string> entity_names,
    std::vector<std::string> relation_names, std::vector<Triple> triples,
    bool inverse_augmented) {
  KnowledgeGraph g;
  g.entity_names_ = std::move(entity_names);
  g.relation_names_ = std::move(relation_names);
  for (const Triple& t : triples) {
    if (t.head >= g.entity_names_.size() || t.tail >= g.entity_names_.size() ||
        t.relation >= g.relation_names_.size()) {
      throw Error("triple references an id outside the name tables");
    }
  }
  std::sort(triples.begin(), triples.end());
  auto last = std::unique(triples.begin(), triples.end());
  g.duplicates_dropped_ = static_cast<std::size_t>(triples.end() - last);
  triples.erase(last, triples.end());
  g.triples_ = std::move(triples);
  g.inverse_augmented_ = inverse_augmented;
  g.build_indexes();
  return g;
}

void KnowledgeGraph::build_indexes() {
  const std::size_t nr = relation_names_.size();
  const std::size_t ne = entity_names_.size();
  rel_out_.assign(nr, {});
  rel_in_.assign(nr, {});
  ent_out_.assign(ne, {});
  ent_in_.assign(ne, {});
  pair_rels_.clear();
  pair_rels_.reserve(triples_.size());
  for (const Triple& t : triples_) {
    rel_out_[t.relation].emplace_back(t.head, t.tail);
    rel_in_[t.relation].emplace_back(t.tail, t.head);
    ent_out_[t.head].emplace_back(t.relation, t.tail);
    ent_in_[t.tail].emplace_back(t.relation, t.head);
    pair_rels_.push_back({{t.head, t.tail}, t.relation});
  }
  for (auto& v : rel_out_) std::sort(v.begin(), v.end());
  for (auto& v : rel_in_) std::sort(v.begin(), v.end());
  for (auto& v : ent_out_) std::sort(v.begin(), v.end());
  for (auto& v : ent_in_) std::sort(v.begin(), v.end());
  std::sort(pair_rels_.begin(), pair_rels_.end());
}

std::optional<EntityId> KnowledgeGraph::entity_id(std::string_view name) const {
  for (std::size_t i = 0; i < entity_names_.size(); ++i) {
    if (entity_names_[i] == name) return static_cast<EntityId>(i);
  }
  return std::nullopt;
}

std::optional<RelationId> KnowledgeGraph::relation_id(
    std::string_view name) const {
  for (std::size_t i = 0; i < relation_names_.size(); ++i) {
    if (relation_names_[i] == name) return static_cast<RelationId>(i);
  }
  return std::nullopt;
}

bool KnowledgeGraph::has_triple(EntityId h, RelationId r, EntityId t) const {
  if (r >= rel_out_.size()) return false;
  const auto& v = rel_out_[r];
  return std::binary_search(v.begin(), v.end(), std::make_pair(h, t));
}

std::span<const std::pair<EntityId, EntityId>> KnowledgeGraph::edges_of(
    RelationId r) const {
  return rel_out_.at(r);
}

namespace {

// Collects second components of the contiguous run of pairs whose first
// component equals key. The pair arrays are sorted, so the run is sorted
// on the second component as well.
template <typename A, typename B>
std::vector<B> second_run(const std::vector<std::pair<A, B>>& v, A key) {
  std::vector<B> out;
  auto lo = std::lower_bound(v.begin(), v.end(), std::make_pair(key, B{}));
  while (lo != v.end() && lo->first == key) {
    out.push_back(lo->second);
    ++lo;
  }
  return out;
}

}  // namespace

std::vector<EntityId> KnowledgeGraph::tails(RelationId r, EntityId h) const {
  return second_run(rel_out_.at(r), h);
}

std::vector<EntityId> KnowledgeGraph::heads(RelationId r, EntityId t) const {
  return second_run(rel_in_.at(r), t);
}

std::vector<RelationId> KnowledgeGraph::relations_between(EntityId h,
                                                          EntityId t) const {
  std::vector<RelationId> out;
  auto key = std::make_pair(std::make_pair(h, t), RelationId{0});
  auto lo = std::lower_bound(pair_rels_.begin(), pair_rels_.end(), key);
  while (lo != pair_rels_.end() && lo->first == key.first) {
    out.push_back(lo->second);
    ++lo;
  }
  return out;
}

std::span<const std::pair<RelationId, EntityId>> KnowledgeGraph::out_edges(
    EntityId e) const {
  return ent_out_.at(e);
}

std::span<const std::pair<RelationId, EntityId>> KnowledgeGraph::in_edges(
    EntityId e) const {
  return ent_in_.at(e);
}

namespace {

std::vector<std::array<std::string, 3>> parse_tsv(std::istream& in) {
  std::vector<std::array<std::string, 3>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto t1 = line.find('\t');
    auto t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos ||
        line.find('\t', t2 + 1) != std::string::npos) {
      throw Error("line " + std::to_string(lineno) +
                  ": expected head<TAB>relation<TAB>tail");
    }
    std::array<std::string, 3> row = {line.substr(0, t1),
                                      line.substr(t1 + 1, t2 - t1 - 1),
                                      line.substr(t2 + 1)};
    if (row[0].empty() || row[1].empty() || row[2].empty()) {
      throw Error("line " + std::to_string(lineno) + ": empty field");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// `<iri> <iri> <iri> .` lines only; literals and blank nodes are rejected.
std::vector<std::array<std::string, 3>> parse_ntriples(std::istream& in) {
  std::vector<std::array<std::string, 3>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t pos = line.find_first_not_of(" \t\r");
    if (pos == std::string::npos) continue;
    if (line[pos] == '#') continue;
    std::array<std::string, 3> row;
    for (int field = 0; field < 3; ++field) {
      pos = line.find_first_not_of(" \t", pos);
      if (pos == std::string::npos) {
        throw Error("line " + std::to_string(lineno) + ": truncated triple");
      }
      if (line[pos] == '"') {
        throw Error("line " + std::to_string(lineno) +
                    ": literals are not supported");
      }
      if (line[pos] != '<') {
        throw Error("line " + std::to_string(lineno) + ": expected <iri>");
      }
      auto end = line.find('>', pos);
      if (end == std::string::npos) {
        throw Error("line " + std::to_string(lineno) + ": unterminated <iri>");
      }
      row[field] = line.substr(pos + 1, end - pos - 1);
      pos = end + 1;
    }
    pos = line.find_first_not_of(" \t", pos);
    if (pos == std::string::npos || line[pos] != '.') {
      throw Error("line " + std::to_string(lineno) + ": missing terminating .");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

KnowledgeGraph load_triples(const std::filesystem::path& path,
                            TripleFormat format) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  auto rows = format == TripleFormat::kTsv ? parse_tsv(in) : parse_ntriples(in);
  return KnowledgeGraph::from_rows(rows);
}

KnowledgeGraph augment_inverses(const KnowledgeGraph& g) {
  if (g.inverse_augmented()) {
    throw Error("graph is already inverse-augmented");
  }
  std::vector<std::string> relation_names(2 * g.num_relations());
  for (std::size_t r = 0; r < g.num_relations(); ++r) {
    relation_names[2 * r] = g.relation_name(static_cast<RelationId>(r));
    relation_names[2 * r + 1] = g.relation_name(static_cast<RelationId>(r)) + "'";
  }
  std::vector<Triple> triples;
  triples.reserve(2 * g.num_triples());
  for (const Triple& t : g.triples()) {
    triples.push_back({t.head, 2 * t.relation, t.tail});
    triples.push_back({t.tail, 2 * t.relation + 1, t.head});
  }
  return KnowledgeGraph::from_triples(std::vector<std::string>(g.entity_names()),
                                      std::move(relation_names),
                                      std::move(triples),
                                      /*inverse_augmented=*/true);
}

std::vector<EntityId> neighborhood(const KnowledgeGraph& g, RelationId r,
                                   EntityId t) {
  if (r >= g.num_relations() || t >= g.num_entities()) {
    throw Error("neighborhood: id out of range");
  }
  return g.heads(r, t);
}

Monomorphism Monomorphism::identity(const KnowledgeGraph& g) {
  Monomorphism m;
  m.entity_map.resize(g.num_entities());
  m.relation_map.resize(g.num_relations());
  for (std::size_t i = 0; i < m.entity_map.size(); ++i) {
    m.entity_map[i] = static_cast<EntityId>(i);
  }
  for (std::size_t i = 0; i < m.relation_map.size(); ++i) {
    m.relation_map[i] = static_cast<RelationId>(i);
  }
  return m;
}

namespace {

template <typename Id>
bool injective(const std::vector<Id>& map) {
  std::vector<Id> sorted(map);
  std::sort(sorted.begin(), sorted.end());
  return std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end();
}

}  // namespace

bool check_monomorphism(const KnowledgeGraph& src, const KnowledgeGraph& dst,
                        const Monomorphism& m) {
  if (m.entity_map.size() != src.num_entities() ||
      m.relation_map.size() != src.num_relations()) {
    throw Error("check_monomorphism: map is not total on the source graph");
  }
  for (EntityId e : m.entity_map) {
    if (e >= dst.num_entities()) throw Error("entity_map target out of range");
  }
  for (RelationId r : m.relation_map) {
    if (r >= dst.num_relations()) throw Error("relation_map target out of range");
  }
  if (!injective(m.entity_map) || !injective(m.relation_map)) return false;
  for (const Triple& t : src.triples()) {
    if (!dst.has_triple(m.entity_map[t.head], m.relation_map[t.relation],
                        m.entity_map[t.tail])) {
      return false;
    }
  }
  return true;
}

std::string graph_stats_json(const KnowledgeGraph& g) {
  nlohmann::ordered_json j;
  j["entities"] = g.num_entities();
  j["relations"] = g.num_relations();
  j["triples"] = g.num_triples();
  j["inverse_augmented"] = g.inverse_augmented();
  return j.dump(2) + "\n";
}

}  // namespace kgm
