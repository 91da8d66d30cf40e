#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "kgm/kg.hpp"
#include "kgm/matcher.hpp"
#include "kgm/vocabulary.hpp"

namespace kgm {

struct RelationGraphEdge {
  int type;  // index into edge_types()
  RelationId src;
  RelationId dst;
  std::uint64_t weight;

  friend auto operator<=>(const RelationGraphEdge&, const RelationGraphEdge&) = default;
};

/// The graph whose nodes are the source KG's relations and whose typed
/// edges are graphlet co-occurrence classes with weight >= epsilon. Edges
/// point from the relation bound to the first anchored slot toward the
/// relation bound to the last one. Every relation stays a node even when
/// isolated, so query one-hot initialization is defined for all of them.
class RelationGraph {
 public:
  RelationGraph() = default;

  static RelationGraph build(const KnowledgeGraph& g, const Vocabulary& v,
                             std::uint64_t epsilon = 1,
                             const MatchOptions& opts = {},
                             unsigned threads = 1);

  /// Assembles a relation graph from already mined classes.
  static RelationGraph from_classes(std::vector<std::string> node_names,
                                    std::vector<std::string> edge_types,
                                    const std::vector<OccurrenceClass>& classes,
                                    std::uint64_t epsilon,
                                    bool mined_on_augmented);

  std::size_t num_nodes() const { return node_names_.size(); }
  const std::vector<std::string>& node_names() const { return node_names_; }
  const std::vector<std::string>& edge_types() const { return edge_types_; }
  const std::vector<RelationGraphEdge>& edges() const { return edges_; }
  std::uint64_t epsilon() const { return epsilon_; }
  bool mined_on_augmented() const { return mined_on_augmented_; }

  int type_index(std::string_view pattern_name) const;  // -1 when absent

  /// Sources of pattern-typed edges pointing at r: the inbound set a
  /// message-passing layer aggregates over. Unknown pattern names yield
  /// the empty set.
  const std::vector<RelationId>& meta_neighborhood(std::string_view pattern_name,
                                                   RelationId r) const;
  const std::vector<RelationId>& meta_neighborhood(int type, RelationId r) const;

  std::string to_json_string() const;
  static RelationGraph from_json_string(const std::string& text);

  void save(const std::filesystem::path& path) const;          // json
  void save_tsv(const std::filesystem::path& path) const;      // type src dst w
  static RelationGraph load(const std::filesystem::path& path);

 private:
  void build_inbound_index();

  std::vector<std::string> node_names_;
  std::vector<std::string> edge_types_;
  std::vector<RelationGraphEdge> edges_;  // sorted by (type, src, dst)
  std::uint64_t epsilon_ = 1;
  bool mined_on_augmented_ = false;

  // inbound_[type][dst] = sorted source relations
  std::vector<std::vector<std::vector<RelationId>>> inbound_;
  std::vector<RelationId> empty_;
};

}  // namespace kgm
