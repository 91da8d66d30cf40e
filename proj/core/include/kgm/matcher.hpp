#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "kgm/kg.hpp"
#include "kgm/vocabulary.hpp"

namespace kgm {

/// An equivalence class of pattern occurrences: all matches of `pattern`
/// whose anchored relation pair is (r1, r2). The weight is the class
/// cardinality in count mode and 0/1 in existence mode.
struct OccurrenceClass {
  std::string pattern;
  RelationId r1;
  RelationId r2;
  std::uint64_t weight;

  friend bool operator==(const OccurrenceClass&, const OccurrenceClass&) = default;
};

struct MatchOptions {
  MatchMode mode = MatchMode::kCount;
  /// Require the anchored relations to differ. The permissive setting
  /// (false) admits r1 == r2 and yields self-loop meta-edges.
  bool injective_relations = true;
};

/// Weight of one class: the number of distinct assignments of the
/// pattern's entity variables (and of its free relation variables) that
/// satisfy every edge and every distinctness filter. The wildcard slot
/// ranges over all relations, the anchored pair included; assignments
/// that differ only in the wildcard relation are distinct. Existence mode
/// returns 0/1 with early exit.
std::uint64_t match_pattern(const KnowledgeGraph& g, const GraphletPattern& p,
                            RelationId r1, RelationId r2,
                            const MatchOptions& opts = {});

/// All nonzero classes for every pattern and every ordered relation pair
/// (distinct pairs when injective). Output order is (pattern position in
/// the vocabulary, r1, r2) and is independent of the thread count.
std::vector<OccurrenceClass> mine(const KnowledgeGraph& g, const Vocabulary& v,
                                  const MatchOptions& opts = {},
                                  unsigned threads = 1);

/// Exhaustive oracle with the same contract as mine: enumerates every
/// entity-variable assignment directly. Refuses graphs with more than 12
/// entities; it exists to check mine, not to scale.
std::vector<OccurrenceClass> brute_force_mine(const KnowledgeGraph& g,
                                              const Vocabulary& v,
                                              const MatchOptions& opts = {});

/// Independent count for 2-path patterns via the masked product of
/// per-relation adjacency matrices: sums tau(u,A^r1)[l,m] * tau(v,A^r2)[m,n]
/// over index tuples with l!=m, m!=n, n!=l (open) or tau(u,A^r1)[l,m] *
/// tau(v,A^r2)[m,l] with l!=m (closed), where tau transposes the matrix
/// for reverse-oriented path steps. Patterns outside the 2-path family are
/// unsupported.
std::uint64_t spmm_count(const KnowledgeGraph& g, const GraphletPattern& p,
                         RelationId r1, RelationId r2);

/// Count for a 3-path pattern with the middle slot pinned to rmid instead
/// of ranging freely. Summing over rmid recovers match_pattern's count.
std::uint64_t motif_ternary_count(const KnowledgeGraph& g,
                                  const GraphletPattern& p, RelationId r1,
                                  RelationId rmid, RelationId r2,
                                  const MatchOptions& opts = {});

/// pattern<TAB>r1<TAB>r2<TAB>weight rows, one class per line, in class order.
void write_occurrences_tsv(std::ostream& out, const KnowledgeGraph& g,
                           const std::vector<OccurrenceClass>& classes);

}  // namespace kgm
