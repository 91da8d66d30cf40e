#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace kgm {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Triple {
  EntityId head;
  RelationId relation;
  EntityId tail;

  friend auto operator<=>(const Triple&, const Triple&) = default;
};

/// Immutable multi-relational directed graph over interned entity and
/// relation names. Triples are a set: duplicates are dropped at build time
/// (the dropped count is kept for diagnostics). All indexes are plain sorted
/// vectors, so lookups are binary searches and iteration order is
/// deterministic. Safe for unsynchronized shared reads.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;

  /// Builds a graph from name triples. Entities and relations are numbered
  /// by first appearance, in row order.
  static KnowledgeGraph from_rows(
      const std::vector<std::array<std::string, 3>>& rows);

  /// Builds a graph from id triples with explicit name tables.
  static KnowledgeGraph from_triples(std::vector<std::string> entity_names,
                                     std::vector<std::string> relation_names,
                                     std::vector<Triple> triples,
                                     bool inverse_augmented = false);

  std::size_t num_entities() const { return entity_names_.size(); }
  std::size_t num_relations() const { return relation_names_.size(); }
  std::size_t num_triples() const { return triples_.size(); }
  bool inverse_augmented() const { return inverse_augmented_; }
  std::size_t duplicates_dropped() const { return duplicates_dropped_; }

  const std::string& entity_name(EntityId e) const { return entity_names_.at(e); }
  const std::string& relation_name(RelationId r) const { return relation_names_.at(r); }
  const std::vector<std::string>& entity_names() const { return entity_names_; }
  const std::vector<std::string>& relation_names() const { return relation_names_; }

  std::optional<EntityId> entity_id(std::string_view name) const;
  std::optional<RelationId> relation_id(std::string_view name) const;

  /// All triples, sorted by (head, relation, tail), no duplicates.
  const std::vector<Triple>& triples() const { return triples_; }

  bool has_triple(EntityId h, RelationId r, EntityId t) const;

  /// (head, tail) pairs of one relation, sorted by (head, tail).
  std::span<const std::pair<EntityId, EntityId>> edges_of(RelationId r) const;

  /// Successors of h under r, sorted.
  std::vector<EntityId> tails(RelationId r, EntityId h) const;

  /// Predecessors of t under r, sorted. This is the neighborhood set
  /// N(r, t) = { h | r(h, t) is a triple }.
  std::vector<EntityId> heads(RelationId r, EntityId t) const;

  /// Relations with an edge from h to t, sorted.
  std::vector<RelationId> relations_between(EntityId h, EntityId t) const;

  /// Out-edges of an entity as (relation, tail), sorted.
  std::span<const std::pair<RelationId, EntityId>> out_edges(EntityId e) const;

  /// In-edges of an entity as (relation, head), sorted.
  std::span<const std::pair<RelationId, EntityId>> in_edges(EntityId e) const;

 private:
  void build_indexes();

  std::vector<std::string> entity_names_;
  std::vector<std::string> relation_names_;
  std::vector<Triple> triples_;  // sorted by (head, relation, tail)
  bool inverse_augmented_ = false;
  std::size_t duplicates_dropped_ = 0;

  // per-relation slices into out_/in_ pair arrays
  std::vector<std::vector<std::pair<EntityId, EntityId>>> rel_out_;  // (h,t)
  std::vector<std::vector<std::pair<EntityId, EntityId>>> rel_in_;   // (t,h)
  std::vector<std::pair<std::pair<EntityId, EntityId>, RelationId>> pair_rels_;
  std::vector<std::vector<std::pair<RelationId, EntityId>>> ent_out_;  // (r,t)
  std::vector<std::vector<std::pair<RelationId, EntityId>>> ent_in_;   // (r,h)
};

enum class TripleFormat { kTsv, kNTriples };

/// Loads a triple file. TSV rows are head<TAB>relation<TAB>tail; the
/// N-Triples subset accepts `<iri> <iri> <iri> .` lines and rejects
/// literals. Malformed rows raise Error with the line number. An empty
/// file yields an empty graph.
KnowledgeGraph load_triples(const std::filesystem::path& path,
                            TripleFormat format = TripleFormat::kTsv);

/// Adds a symbolic inverse r' for every relation r: each triple r(h, t)
/// gains r'(t, h). Relations are renumbered so that relation 2k is the
/// original k and 2k+1 its inverse (named with a trailing apostrophe).
/// Augmenting an already augmented graph is an error.
KnowledgeGraph augment_inverses(const KnowledgeGraph& g);

inline bool is_inverse_relation(RelationId r) { return (r & 1u) == 1u; }
inline RelationId inverse_relation(RelationId r) { return r ^ 1u; }

/// N(r, t): heads of all r-triples ending at t, as a sorted vector.
std::vector<EntityId> neighborhood(const KnowledgeGraph& g, RelationId r,
                                   EntityId t);

/// A candidate structure-preserving mapping between two graphs.
/// entity_map and relation_map must be total on the source graph.
struct Monomorphism {
  std::vector<EntityId> entity_map;
  std::vector<RelationId> relation_map;

  static Monomorphism identity(const KnowledgeGraph& g);
};

/// True iff both maps are injective and every mapped source triple exists
/// in dst. Throws Error if a map is not total on src.
bool check_monomorphism(const KnowledgeGraph& src, const KnowledgeGraph& dst,
                        const Monomorphism& m);

/// {entities, relations, triples, inverse_augmented} as a JSON document.
std::string graph_stats_json(const KnowledgeGraph& g);

}  // namespace kgm
