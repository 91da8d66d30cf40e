#include "kgm/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <thread>

#include <nlohmann/json.hpp>

namespace kgm {

double ranked_position(const std::vector<double>& scores, EntityId target,
                       const std::vector<bool>& dropped) {
  const double s = scores[target];
  std::size_t greater = 0;
  std::size_t equal = 0;  // includes the target
  for (std::size_t e = 0; e < scores.size(); ++e) {
    if (e != target && dropped[e]) continue;
    if (scores[e] > s) {
      ++greater;
    } else if (scores[e] == s) {
      ++equal;
    }
  }
  return 1.0 + static_cast<double>(greater) +
         (static_cast<double>(equal) - 1.0) / 2.0;
}

EvalReport evaluate(const ScoreFn& score, std::size_t num_entities,
                    const std::vector<Triple>& queries,
                    const std::vector<Triple>& filter_triples,
                    const EvalOptions& opts) {
  if (queries.empty()) throw Error("evaluate: no queries");
  std::vector<Triple> filter(filter_triples);
  std::sort(filter.begin(), filter.end());
  filter.erase(std::unique(filter.begin(), filter.end()), filter.end());

  for (const Triple& q : queries) {
    if (q.head >= num_entities || q.tail >= num_entities) {
      throw Error("evaluate: query references an unknown entity");
    }
  }

  auto is_true = [&](EntityId h, RelationId r, EntityId t) {
    return std::binary_search(filter.begin(), filter.end(), Triple{h, r, t});
  };

  std::vector<double> ranks(queries.size(), 0.0);
  auto run_query = [&](std::size_t i) {
    const Triple& q = queries[i];
    std::vector<double> scores = score(q.head, q.relation);
    if (scores.size() != num_entities) {
      throw Error("evaluate: scorer returned the wrong number of candidates");
    }
    std::vector<bool> dropped(num_entities, false);
    if (opts.filtered) {
      for (EntityId e = 0; e < num_entities; ++e) {
        if (e != q.tail && is_true(q.head, q.relation, e)) dropped[e] = true;
      }
    }
    ranks[i] = ranked_position(scores, q.tail, dropped);
  };

  if (opts.threads <= 1 || queries.size() < 2) {
    for (std::size_t i = 0; i < queries.size(); ++i) run_query(i);
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next.fetch_add(1); i < queries.size();
           i = next.fetch_add(1)) {
        run_query(i);
      }
    };
    std::vector<std::thread> pool;
    unsigned n = std::min<unsigned>(opts.threads,
                                    std::thread::hardware_concurrency());
    for (unsigned i = 0; i + 1 < std::max(2u, n); ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
  }

  EvalReport report;
  report.setting = opts.setting;
  report.num_queries = queries.size();
  for (double r : ranks) {
    report.mrr += 1.0 / r;
    report.hits1 += r <= 1.0 ? 1.0 : 0.0;
    report.hits3 += r <= 3.0 ? 1.0 : 0.0;
    report.hits10 += r <= 10.0 ? 1.0 : 0.0;
  }
  const auto n = static_cast<double>(queries.size());
  report.mrr /= n;
  report.hits1 /= n;
  report.hits3 /= n;
  report.hits10 /= n;
  return report;
}

namespace {

KnowledgeGraph subgraph_by_names(const KnowledgeGraph& g,
                                 const std::set<EntityId>& entities,
                                 const std::set<RelationId>& relations,
                                 std::vector<Triple>* kept_original = nullptr) {
  std::vector<std::array<std::string, 3>> rows;
  for (const Triple& t : g.triples()) {
    if (!entities.contains(t.head) || !entities.contains(t.tail)) continue;
    if (!relations.contains(t.relation)) continue;
    rows.push_back({g.entity_name(t.head), g.relation_name(t.relation),
                    g.entity_name(t.tail)});
    if (kept_original) kept_original->push_back(t);
  }
  return KnowledgeGraph::from_rows(rows);
}

}  // namespace

InductiveSplit split_inductive(const KnowledgeGraph& g, InductiveMode mode,
                               const SplitFractions& fractions,
                               std::uint64_t seed) {
  if (fractions.inference_entities <= 0 || fractions.inference_entities >= 1) {
    throw Error("split_inductive: inference entity fraction must be in (0, 1)");
  }
  if (fractions.test < 0 || fractions.test >= 1) {
    throw Error("split_inductive: test fraction must be in [0, 1)");
  }
  std::mt19937_64 rng(seed);

  std::vector<EntityId> entities(g.num_entities());
  std::iota(entities.begin(), entities.end(), 0);
  std::shuffle(entities.begin(), entities.end(), rng);
  const auto n_inf =
      static_cast<std::size_t>(std::round(g.num_entities() * fractions.inference_entities));
  if (n_inf == 0 || n_inf >= g.num_entities()) {
    throw Error("split_inductive: graph too small for the entity fractions");
  }
  std::set<EntityId> inf_entities(entities.begin(), entities.begin() + n_inf);
  std::set<EntityId> train_entities(entities.begin() + n_inf, entities.end());

  std::set<RelationId> train_relations;
  std::set<RelationId> inf_relations;
  for (RelationId r = 0; r < g.num_relations(); ++r) {
    train_relations.insert(r);
    inf_relations.insert(r);
  }
  if (mode == InductiveMode::kIndER) {
    std::vector<RelationId> rels(g.num_relations());
    std::iota(rels.begin(), rels.end(), 0);
    std::shuffle(rels.begin(), rels.end(), rng);
    const auto r_inf = static_cast<std::size_t>(
        std::round(g.num_relations() * fractions.inference_relations));
    if (r_inf == 0 || r_inf >= g.num_relations()) {
      throw Error("split_inductive: graph too small for the relation fractions");
    }
    inf_relations = std::set<RelationId>(rels.begin(), rels.begin() + r_inf);
    train_relations = std::set<RelationId>(rels.begin() + r_inf, rels.end());
  }

  InductiveSplit split;
  split.train = subgraph_by_names(g, train_entities, train_relations);
  KnowledgeGraph inference_full = subgraph_by_names(g, inf_entities, inf_relations);
  if (split.train.num_triples() == 0 || inference_full.num_triples() == 0) {
    throw Error("split_inductive: graph too small to satisfy the mode");
  }
  if (mode == InductiveMode::kIndE) {
    auto names = [](const KnowledgeGraph& kg) {
      return std::set<std::string>(kg.relation_names().begin(),
                                   kg.relation_names().end());
    };
    if (names(split.train) != names(inference_full)) {
      throw Error(
          "split_inductive: relation sets diverged; the graph is too small "
          "for an entity-only split");
    }
  }

  // hold out a share of the inference triples as prediction targets
  std::vector<Triple> inf_triples = inference_full.triples();
  std::shuffle(inf_triples.begin(), inf_triples.end(), rng);
  const auto n_test =
      static_cast<std::size_t>(std::floor(inf_triples.size() * fractions.test));
  std::vector<Triple> test(inf_triples.begin(), inf_triples.begin() + n_test);
  std::vector<std::array<std::string, 3>> keep_rows;
  // rebuild the inference graph from the kept triples but keep the full
  // entity/relation id space so test ids stay valid
  std::vector<Triple> kept(inf_triples.begin() + n_test, inf_triples.end());
  std::sort(kept.begin(), kept.end());
  split.inference = KnowledgeGraph::from_triples(
      std::vector<std::string>(inference_full.entity_names()),
      std::vector<std::string>(inference_full.relation_names()), kept);
  split.test = std::move(test);
  std::sort(split.test.begin(), split.test.end());
  return split;
}

std::string report_to_json(const EvalReport& report,
                           const std::string& config_hash) {
  nlohmann::ordered_json j;
  j["setting"] = report.setting;
  j["mrr"] = report.mrr;
  j["hits"] = {{"1", report.hits1}, {"3", report.hits3}, {"10", report.hits10}};
  j["num_queries"] = report.num_queries;
  if (!config_hash.empty()) j["config_hash"] = config_hash;
  return j.dump(2) + "\n";
}

}  // namespace kgm
