#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "helpers.hpp"
#include "kgm/eval.hpp"
#include "kgm/verify.hpp"

using namespace kgm;

namespace {

ScoreFn constant_scorer(std::size_t n, double value = 0.0) {
  return [n, value](EntityId, RelationId) {
    return std::vector<double>(n, value);
  };
}

}  // namespace

TEST_CASE("a perfect scorer gets mrr and hits of one") {
  const std::size_t n = 6;
  std::vector<Triple> queries = {{0, 0, 3}, {1, 0, 2}, {2, 0, 5}};
  ScoreFn oracle = [&](EntityId h, RelationId) {
    std::vector<double> s(n, 0.0);
    for (const Triple& q : queries) {
      if (q.head == h) s[q.tail] = 10.0;
    }
    return s;
  };
  EvalReport r = evaluate(oracle, n, queries, {});
  CHECK(r.mrr == 1.0);
  CHECK(r.hits1 == 1.0);
  CHECK(r.hits3 == 1.0);
  CHECK(r.hits10 == 1.0);
  CHECK(r.num_queries == 3);
}

TEST_CASE("constant scorer over four candidates gives mrr 0.4 exactly") {
  std::vector<Triple> queries = {{0, 0, 1}, {1, 0, 2}, {2, 0, 3}, {3, 0, 0}};
  EvalReport r = evaluate(constant_scorer(4), 4, queries, {});
  CHECK(r.mrr == 0.4);  // mid-rank 2.5 for every query
  CHECK(r.hits1 == 0.0);
  CHECK(r.hits3 == 1.0);
  CHECK(r.hits10 == 1.0);

  SUBCASE("mid-rank equals the expected rank under exhaustive tie-breaking") {
    // brute force: average the target's rank over all orderings of 4 ties
    std::vector<int> perm = {0, 1, 2, 3};
    double total = 0;
    int count = 0;
    do {
      // position of candidate 0 in this ordering, 1-based
      for (int i = 0; i < 4; ++i) {
        if (perm[i] == 0) total += i + 1;
      }
      ++count;
    } while (std::next_permutation(perm.begin(), perm.end()));
    const double expected_rank = total / count;
    CHECK(expected_rank == 2.5);
    CHECK(r.mrr == doctest::Approx(1.0 / expected_rank));
  }
}

TEST_CASE("hand-ranked three-entity case") {
  // scores: e0 = 2.0, e1 = 5.0, e2 = 5.0; target e2 ties for first
  ScoreFn f = [](EntityId, RelationId) {
    return std::vector<double>{2.0, 5.0, 5.0};
  };
  EvalReport r = evaluate(f, 3, {{0, 0, 2}}, {});
  CHECK(r.mrr == doctest::Approx(1.0 / 1.5));
  CHECK(r.hits1 == 0.0);
  CHECK(r.hits3 == 1.0);
}

TEST_CASE("filtering removes known-true competitors") {
  // target e1 scores below e2, but e2 is a known true tail
  ScoreFn f = [](EntityId, RelationId) {
    return std::vector<double>{0.0, 1.0, 2.0};
  };
  std::vector<Triple> queries = {{0, 0, 1}};
  EvalReport raw = evaluate(f, 3, queries, {}, {.filtered = false});
  CHECK(raw.mrr == doctest::Approx(0.5));
  EvalReport filtered = evaluate(f, 3, queries, {{0, 0, 2}});
  CHECK(filtered.mrr == 1.0);
}

TEST_CASE("adding a non-target true triple never lowers the rank") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> dist(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 8;
    std::vector<double> scores(n);
    for (double& s : scores) s = dist(rng);
    ScoreFn f = [&](EntityId, RelationId) { return scores; };
    std::vector<Triple> queries = {{0, 0, 3}};

    std::vector<Triple> filter;
    EvalReport prev = evaluate(f, n, queries, filter);
    for (EntityId e = 0; e < n; ++e) {
      if (e == 3) continue;
      filter.push_back({0, 0, e});
      EvalReport next = evaluate(f, n, queries, filter);
      CHECK(next.mrr >= prev.mrr - 1e-12);
      prev = next;
    }
  }
}

TEST_CASE("mrr is invariant under strictly monotone score transforms") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> dist(-2, 2);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 7;
    std::vector<double> scores(n);
    for (double& s : scores) s = std::round(dist(rng) * 4) / 4;  // force ties
    ScoreFn f = [&](EntityId, RelationId) { return scores; };
    ScoreFn g = [&](EntityId, RelationId) {
      std::vector<double> out(scores);
      for (double& s : out) s = std::atan(3 * s) + 5;
      return out;
    };
    std::vector<Triple> queries = {{0, 0, 2}, {0, 0, 5}};
    EvalReport a = evaluate(f, n, queries, {});
    EvalReport b = evaluate(g, n, queries, {});
    CHECK(a.mrr == doctest::Approx(b.mrr).epsilon(1e-12));
    CHECK(a.hits3 == b.hits3);
  }
}

TEST_CASE("hits are monotone in n") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> dist(0, 1);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 12;
    std::vector<double> scores(n);
    for (double& s : scores) s = dist(rng);
    ScoreFn f = [&](EntityId, RelationId) { return scores; };
    std::vector<Triple> queries;
    for (EntityId t = 0; t < 5; ++t) queries.push_back({0, 0, t});
    EvalReport r = evaluate(f, n, queries, {});
    CHECK(r.hits1 <= r.hits3);
    CHECK(r.hits3 <= r.hits10);
    CHECK(r.hits10 <= 1.0);
    CHECK(r.mrr <= 1.0);
    CHECK(r.mrr >= 0.0);
  }
}

TEST_CASE("evaluation refuses an empty query set and bad ids") {
  CHECK_THROWS_AS(evaluate(constant_scorer(3), 3, {}, {}), Error);
  CHECK_THROWS_AS(evaluate(constant_scorer(3), 3, {{0, 0, 9}}, {}), Error);
}

TEST_CASE("threaded evaluation matches single-threaded") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> dist(0, 1);
  const std::size_t n = 9;
  std::vector<std::vector<double>> table(n, std::vector<double>(n));
  for (auto& row : table) {
    for (double& x : row) x = dist(rng);
  }
  ScoreFn f = [&](EntityId h, RelationId) { return table[h]; };
  std::vector<Triple> queries;
  for (EntityId h = 0; h < n; ++h) queries.push_back({h, 0, (h + 3) % 9});
  EvalReport a = evaluate(f, n, queries, {}, {.filtered = true, .threads = 1});
  EvalReport b = evaluate(f, n, queries, {}, {.filtered = true, .threads = 4});
  CHECK(a.mrr == b.mrr);
  CHECK(a.hits10 == b.hits10);
}

TEST_CASE("inductive entity split keeps relations and separates entities") {
  auto corpus = testutil::synthetic_family_kg(8, 0);
  InductiveSplit split =
      split_inductive(corpus.graph, InductiveMode::kIndE, {}, 3);
  std::set<std::string> train_rel(split.train.relation_names().begin(),
                                  split.train.relation_names().end());
  std::set<std::string> inf_rel(split.inference.relation_names().begin(),
                                split.inference.relation_names().end());
  CHECK(train_rel == inf_rel);
  std::set<std::string> train_ent(split.train.entity_names().begin(),
                                  split.train.entity_names().end());
  for (const auto& name : split.inference.entity_names()) {
    CHECK_FALSE(train_ent.contains(name));
  }
  CHECK_FALSE(split.test.empty());
  // test ids live in the inference id space
  for (const Triple& t : split.test) {
    CHECK(t.head < split.inference.num_entities());
    CHECK(t.relation < split.inference.num_relations());
  }
}

TEST_CASE("inductive entity+relation split separates both name sets") {
  auto corpus = testutil::synthetic_family_kg(10, 0);
  InductiveSplit split =
      split_inductive(corpus.graph, InductiveMode::kIndER, {}, 5);
  std::set<std::string> train_rel(split.train.relation_names().begin(),
                                  split.train.relation_names().end());
  for (const auto& name : split.inference.relation_names()) {
    CHECK_FALSE(train_rel.contains(name));
  }
}

TEST_CASE("a zero test fraction leaves nothing to evaluate") {
  auto corpus = testutil::synthetic_family_kg(8, 0);
  SplitFractions fr;
  fr.test = 0.0;
  InductiveSplit split = split_inductive(corpus.graph, InductiveMode::kIndE, fr, 3);
  CHECK(split.test.empty());
  CHECK_THROWS_AS(
      evaluate(constant_scorer(split.inference.num_entities()),
               split.inference.num_entities(), split.test, {}),
      Error);
}

TEST_CASE("tiny graphs cannot satisfy a split") {
  KnowledgeGraph g = KnowledgeGraph::from_rows({{"a", "r", "b"}});
  CHECK_THROWS_AS(split_inductive(g, InductiveMode::kIndE, {}, 1), Error);
}

TEST_CASE("report json carries the metrics and the config hash") {
  EvalReport r;
  r.setting = "ind_e";
  r.mrr = 0.5;
  r.hits1 = 0.25;
  r.hits3 = 0.5;
  r.hits10 = 0.75;
  r.num_queries = 4;
  std::string j = report_to_json(r, "cafebabe");
  CHECK(j.find("\"setting\": \"ind_e\"") != std::string::npos);
  CHECK(j.find("\"mrr\": 0.5") != std::string::npos);
  CHECK(j.find("\"config_hash\": \"cafebabe\"") != std::string::npos);
}
