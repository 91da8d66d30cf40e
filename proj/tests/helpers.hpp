#pragma once

#include <string>
#include <vector>

#include "kgm/kg.hpp"

namespace kgm::testutil {

/// A small family-style graph governed by two composition rules:
///   grandparent_of(x, z)    <- parent_of(x, y)  and parent_of(y, z)
///   aunt_or_uncle_of(x, z)  <- sibling_of(x, y) and parent_of(y, z)
/// Each family unit contributes nine triples. For the first
/// `holdout_families` units one derived fact about the second child is
/// withheld from the graph and returned as a query instead, alternating
/// between the two rules so held-out tails are not structurally marked.
struct FamilyCorpus {
  KnowledgeGraph graph;            // training/inference triples
  std::vector<Triple> test;       // held-out derived facts (graph id space)
};

inline FamilyCorpus synthetic_family_kg(int families, int holdout_families,
                                        const std::vector<std::string>& relations = {
                                            "parent_of", "sibling_of",
                                            "grandparent_of", "aunt_or_uncle_of"},
                                        const std::string& entity_prefix = "fam") {
  const std::string& parent = relations[0];
  const std::string& sibling = relations[1];
  const std::string& grandparent = relations[2];
  const std::string& aunt = relations[3];

  std::vector<std::array<std::string, 3>> rows;
  std::vector<std::array<std::string, 3>> held;
  for (int f = 0; f < families; ++f) {
    const std::string tag = entity_prefix + std::to_string(f) + "_";
    const std::string gp = tag + "grand";
    const std::string pa = tag + "parent";
    const std::string un = tag + "uncle";
    const std::string c1 = tag + "kid1";
    const std::string c2 = tag + "kid2";

    rows.push_back({gp, parent, pa});
    rows.push_back({pa, parent, c1});
    rows.push_back({pa, parent, c2});
    rows.push_back({un, sibling, pa});
    rows.push_back({pa, sibling, un});
    rows.push_back({gp, grandparent, c1});
    rows.push_back({un, aunt, c1});
    const bool hold_grandparent = f < holdout_families && f % 2 == 0;
    const bool hold_aunt = f < holdout_families && f % 2 == 1;
    if (hold_grandparent) {
      held.push_back({gp, grandparent, c2});
    } else {
      rows.push_back({gp, grandparent, c2});
    }
    if (hold_aunt) {
      held.push_back({un, aunt, c2});
    } else {
      rows.push_back({un, aunt, c2});
    }
  }

  FamilyCorpus corpus;
  corpus.graph = KnowledgeGraph::from_rows(rows);
  for (const auto& row : held) {
    corpus.test.push_back({*corpus.graph.entity_id(row[0]),
                           *corpus.graph.relation_id(row[1]),
                           *corpus.graph.entity_id(row[2])});
  }
  return corpus;
}

}  // namespace kgm::testutil
