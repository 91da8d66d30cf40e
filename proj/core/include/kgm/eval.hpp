#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "kgm/kg.hpp"

namespace kgm {

struct EvalReport {
  std::string setting = "transductive";
  double mrr = 0;
  double hits1 = 0, hits3 = 0, hits10 = 0;
  std::size_t num_queries = 0;
};

struct EvalOptions {
  bool filtered = true;
  unsigned threads = 1;
  std::string setting = "transductive";
};

/// Scores every candidate tail for the query q(h, ?).
using ScoreFn = std::function<std::vector<double>(EntityId h, RelationId q)>;

/// Filtered ranking: each query scores all entities, drops candidates other
/// than the target that appear in the filter set, and ranks the target with
/// the mid-rank tie rule 1 + #greater + (#equal - 1) / 2. Queries are
/// independent; aggregation follows input order regardless of threads.
EvalReport evaluate(const ScoreFn& score, std::size_t num_entities,
                    const std::vector<Triple>& queries,
                    const std::vector<Triple>& filter_triples,
                    const EvalOptions& opts = {});

/// Mid-rank of the target among the scores that survive filtering.
double ranked_position(const std::vector<double>& scores, EntityId target,
                       const std::vector<bool>& dropped);

enum class InductiveMode { kIndE, kIndER };

struct SplitFractions {
  double inference_entities = 0.5;  // share of entities moved to inference
  double inference_relations = 0.5; // share of relations (ind_er only)
  double test = 0.2;                // share of inference triples held out
};

struct InductiveSplit {
  KnowledgeGraph train;
  KnowledgeGraph inference;
  std::vector<Triple> test;  // ids live in the inference graph
};

/// ind_e: disjoint entity sets, equal relation name sets; ind_er: disjoint
/// entities and relations. Test triples are held out of the inference
/// graph. Throws when the graph cannot satisfy the mode.
InductiveSplit split_inductive(const KnowledgeGraph& g, InductiveMode mode,
                               const SplitFractions& fractions,
                               std::uint64_t seed);

std::string report_to_json(const EvalReport& report,
                           const std::string& config_hash = "");

}  // namespace kgm
