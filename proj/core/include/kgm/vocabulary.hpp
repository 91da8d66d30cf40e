#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kgm/kg.hpp"

namespace kgm {

/// Relation slot of a pattern edge. kRel1/kRel2 are the two anchored
/// positions of the positional binary order; kWildcard is a free relation
/// variable (the unanchored middle of 3-paths).
enum class Slot { kRel1, kRel2, kWildcard };

struct PatternEdge {
  int src;  // entity variable index
  Slot slot;
  int dst;

  friend auto operator<=>(const PatternEdge&, const PatternEdge&) = default;
};

/// A small pattern graph with variable entities and two anchored relation
/// slots. distinct_pairs lists exactly the inequality filters the pattern
/// carries; entity variables not covered by a filter may coincide.
struct GraphletPattern {
  std::string name;
  int num_vars = 0;
  std::vector<PatternEdge> edges;
  std::vector<std::pair<int, int>> distinct_pairs;  // normalized: a < b, sorted
  bool closed = false;

  friend bool operator==(const GraphletPattern&, const GraphletPattern&) = default;

  bool has_wildcard() const;
  bool is_two_path() const;  // exactly two edges, one per anchored slot
  bool connected() const;
  bool requires_distinct(int a, int b) const;
};

enum class MatchMode { kExistence, kCount };

struct Vocabulary {
  std::string name;
  std::vector<GraphletPattern> patterns;
  MatchMode mode = MatchMode::kCount;

  const GraphletPattern* find(std::string_view pattern_name) const;
};

/// Built-in vocabulary names: v2-, u2, v2, v2+, v3-, v3, v3+, m3, m4'
/// (alias m4p). With strict_stars the star patterns get all-pairs
/// distinctness filters instead of the weaker catalogue filter sets.
Vocabulary builtin_vocabulary(std::string_view name,
                              MatchMode mode = MatchMode::kCount,
                              bool strict_stars = false);

std::vector<std::string> builtin_vocabulary_names();

/// All catalogued patterns (paths, stars, undistinguished 2-paths).
const std::vector<GraphletPattern>& pattern_catalogue();

const GraphletPattern& builtin_pattern(std::string_view name);

/// Parses an ASK query template with {rel1}/{rel2} placeholders and
/// ?eN / ?relN variables into a pattern. Unsupported SPARQL constructs
/// raise Error naming the construct. The pattern name is left empty and
/// the closed flag unset; both are metadata the text does not carry.
GraphletPattern pattern_from_query_text(const std::string& text);

/// Renders the ASK text of a pattern, inverse of pattern_from_query_text.
std::string render_query(const GraphletPattern& p);

/// JSON (de)serialization of a pattern list:
/// [{name, edges, filters, anchor, closed}, ...].
std::string vocabulary_to_json(const Vocabulary& v);
Vocabulary vocabulary_from_json(const std::string& text);
Vocabulary load_vocabulary_file(const std::filesystem::path& path,
                                MatchMode mode = MatchMode::kCount);
void save_vocabulary_file(const std::filesystem::path& path,
                          const Vocabulary& v);

/// A positional m-ary order g_{i_1..i_m <= n}: the anchored argument
/// positions hold fixed relation indices, the remaining positions are
/// dummies. Positions and indices are 1-based.
struct PositionalOrder {
  int full_arity = 0;                            // n
  std::vector<std::pair<int, int>> anchors;      // (position, relation index)
};

/// All full-arity index tuples consistent with the anchors: position p of
/// every spanned n-ary holds the anchored index where p is anchored and
/// any index in 1..n elsewhere. Sorted lexicographically.
std::vector<std::vector<int>> spans(const PositionalOrder& order);

}  // namespace kgm
