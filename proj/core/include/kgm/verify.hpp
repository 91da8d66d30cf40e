#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "kgm/kg.hpp"
#include "kgm/model.hpp"

namespace kgm {

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Random small KG for property suites: up to max_entities entities, up to
/// max_relations relations, density drawn per trial. May come out empty.
KnowledgeGraph random_kg(std::mt19937_64& rng, int max_entities = 8,
                         int max_relations = 5);

/// Relabels entity ids by sigma and relation ids by rho (bijections).
KnowledgeGraph permuted_graph(const KnowledgeGraph& g,
                              const std::vector<EntityId>& sigma,
                              const std::vector<RelationId>& rho);

/// The three-relation directed cycle used by the expressiveness argument.
KnowledgeGraph cyclic_kg();

SuiteResult verify_oracle(int trials = 200, std::uint64_t seed = 11,
                          unsigned threads = 1);
SuiteResult verify_theorem1(int trials = 200, std::uint64_t seed = 12);
SuiteResult verify_theorem2(int trials = 200, std::uint64_t seed = 13);
SuiteResult verify_spmm(int trials = 100, std::uint64_t seed = 14);
SuiteResult verify_expressiveness(int draws = 50, std::uint64_t seed = 15);
SuiteResult verify_gradients(int points = 20, std::uint64_t seed = 16);
SuiteResult verify_isomorphism(int trials = 50, std::uint64_t seed = 17);

std::vector<std::string> verify_suite_names();

/// Runs one named suite with its default budget.
SuiteResult run_verify_suite(const std::string& name, unsigned threads = 1);

}  // namespace kgm
