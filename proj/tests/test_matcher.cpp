#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>

#include "kgm/kg.hpp"
#include "kgm/matcher.hpp"
#include "kgm/verify.hpp"
#include "kgm/vocabulary.hpp"

using namespace kgm;

namespace {

const std::string kData = KGM_DATA_DIR;

KnowledgeGraph ikg() { return load_triples(kData + "/ikg.tsv"); }

RelationId rel(const KnowledgeGraph& g, const char* name) {
  auto r = g.relation_id(name);
  REQUIRE(r.has_value());
  return *r;
}

Vocabulary custom(std::initializer_list<const char*> names,
                  MatchMode mode = MatchMode::kCount) {
  Vocabulary v;
  v.name = "custom";
  v.mode = mode;
  for (const char* n : names) v.patterns.push_back(builtin_pattern(n));
  return v;
}

}  // namespace

TEST_CASE("worked 2-path counts on the toy graph") {
  KnowledgeGraph g = ikg();
  const auto& ffo = builtin_pattern("ffo");
  CHECK(match_pattern(g, ffo, rel(g, "r1"), rel(g, "r2")) == 1);
  CHECK(match_pattern(g, ffo, rel(g, "r5"), rel(g, "r3")) == 1);  // e -> f -> d
  CHECK(match_pattern(g, builtin_pattern("ffc"), rel(g, "r1"), rel(g, "r2")) == 0);
}

TEST_CASE("three 3-paths share the anchored pair (r1, r3)") {
  KnowledgeGraph g = ikg();
  const auto& fffo = builtin_pattern("fffo");
  CHECK(match_pattern(g, fffo, rel(g, "r1"), rel(g, "r3")) == 3);
}

TEST_CASE("anchored relations must differ in injective mode") {
  KnowledgeGraph g = ikg();
  CHECK_THROWS_AS(match_pattern(g, builtin_pattern("ffo"), 0, 0), Error);
  MatchOptions permissive;
  permissive.injective_relations = false;
  CHECK_NOTHROW(match_pattern(g, builtin_pattern("ffo"), 0, 0, permissive));
}

TEST_CASE("permissive mode reproduces the self-loop meta-edges") {
  // rf(r, r) holds for any relation with at least one non-loop triple:
  // the same triple instantiates both atoms
  KnowledgeGraph g = KnowledgeGraph::from_rows({{"a", "r", "b"}});
  MatchOptions permissive;
  permissive.injective_relations = false;
  CHECK(match_pattern(g, builtin_pattern("rf"), 0, 0, permissive) == 1);
  // but the open variant requires three distinct entities
  CHECK(match_pattern(g, builtin_pattern("rfo"), 0, 0, permissive) == 0);
}

TEST_CASE("mining the toy graph with {ffo, fffo} yields the seven classes") {
  KnowledgeGraph g = ikg();
  auto classes = mine(g, custom({"ffo", "fffo"}));
  REQUIRE(classes.size() == 7);
  auto has = [&](const char* p, const char* a, const char* b, std::uint64_t w) {
    OccurrenceClass want{p, rel(g, a), rel(g, b), w};
    return std::find(classes.begin(), classes.end(), want) != classes.end();
  };
  CHECK(has("ffo", "r1", "r2", 1));
  CHECK(has("ffo", "r2", "r3", 1));
  CHECK(has("ffo", "r1", "r4", 1));
  CHECK(has("ffo", "r4", "r3", 1));
  CHECK(has("ffo", "r1", "r5", 1));
  CHECK(has("ffo", "r5", "r3", 1));
  CHECK(has("fffo", "r1", "r3", 3));
}

TEST_CASE("mining the cyclic graph with {fffc} yields the three rotations") {
  KnowledgeGraph g = cyclic_kg();
  auto classes = mine(g, custom({"fffc"}));
  REQUIRE(classes.size() == 3);
  auto has = [&](const char* a, const char* b) {
    OccurrenceClass want{"fffc", rel(g, a), rel(g, b), 1};
    return std::find(classes.begin(), classes.end(), want) != classes.end();
  };
  CHECK(has("r1", "r3"));
  CHECK(has("r2", "r1"));
  CHECK(has("r3", "r2"));
}

TEST_CASE("closed patterns find nothing on the acyclic toy graph") {
  KnowledgeGraph g = ikg();
  for (const char* name : {"ffc", "frc", "rfc", "rrc", "fffc", "ffrc"}) {
    const auto& p = builtin_pattern(name);
    for (RelationId a = 0; a < g.num_relations(); ++a) {
      for (RelationId b = 0; b < g.num_relations(); ++b) {
        if (a == b) continue;
        CAPTURE(name);
        CHECK(match_pattern(g, p, a, b) == 0);
      }
    }
  }
}

TEST_CASE("empty graph mines to an empty class list") {
  KnowledgeGraph g;
  CHECK(mine(g, builtin_vocabulary("v3+")).empty());
  CHECK(brute_force_mine(g, builtin_vocabulary("v3+")).empty());
}

TEST_CASE("a single-triple graph has no injective v2 classes") {
  KnowledgeGraph g = KnowledgeGraph::from_rows({{"a", "r", "b"}});
  CHECK(mine(g, builtin_vocabulary("v2")).empty());
}

TEST_CASE("oracle equivalence on random graphs") {
  std::mt19937_64 rng(2024);
  const Vocabulary vocab = builtin_vocabulary("v3+");
  for (int trial = 0; trial < 40; ++trial) {
    KnowledgeGraph g = random_kg(rng);
    CAPTURE(trial);
    CHECK(mine(g, vocab) == brute_force_mine(g, vocab));
  }
}

TEST_CASE("oracle equivalence holds in permissive and existence modes") {
  std::mt19937_64 rng(77);
  const Vocabulary vocab = builtin_vocabulary("v2+");
  for (int trial = 0; trial < 10; ++trial) {
    KnowledgeGraph g = random_kg(rng, 6, 4);
    MatchOptions opts;
    opts.injective_relations = false;
    CHECK(mine(g, vocab, opts) == brute_force_mine(g, vocab, opts));
    opts.injective_relations = true;
    opts.mode = MatchMode::kExistence;
    CHECK(mine(g, vocab, opts) == brute_force_mine(g, vocab, opts));
  }
}

TEST_CASE("threaded mining is deterministic") {
  std::mt19937_64 rng(5);
  KnowledgeGraph g = random_kg(rng);
  const Vocabulary vocab = builtin_vocabulary("v3");
  CHECK(mine(g, vocab, {}, 1) == mine(g, vocab, {}, 4));
}

TEST_CASE("brute force refuses large graphs") {
  std::vector<std::array<std::string, 3>> rows;
  for (int i = 0; i < 13; ++i) {
    rows.push_back({"e" + std::to_string(i), "r", "e" + std::to_string((i + 1) % 13)});
  }
  KnowledgeGraph g = KnowledgeGraph::from_rows(rows);
  CHECK_THROWS_WITH_AS(brute_force_mine(g, builtin_vocabulary("v2")),
                       doctest::Contains("12"), Error);
}

TEST_CASE("existence output is the count output clamped at one") {
  std::mt19937_64 rng(9);
  const Vocabulary count_vocab = builtin_vocabulary("v3");
  for (int trial = 0; trial < 10; ++trial) {
    KnowledgeGraph g = random_kg(rng, 7, 4);
    MatchOptions count_opts;
    MatchOptions exist_opts;
    exist_opts.mode = MatchMode::kExistence;
    for (const auto& p : count_vocab.patterns) {
      for (RelationId a = 0; a < g.num_relations(); ++a) {
        for (RelationId b = 0; b < g.num_relations(); ++b) {
          if (a == b) continue;
          const auto c = match_pattern(g, p, a, b, count_opts);
          const auto e = match_pattern(g, p, a, b, exist_opts);
          CHECK(e == std::min<std::uint64_t>(1, c));
        }
      }
    }
  }
}

TEST_CASE("adding a triple never decreases a count") {
  std::mt19937_64 rng(13);
  const Vocabulary vocab = builtin_vocabulary("v2+");
  for (int trial = 0; trial < 8; ++trial) {
    KnowledgeGraph g = random_kg(rng, 6, 3);
    if (g.num_entities() < 2 || g.num_relations() < 2) continue;
    // add one fresh triple
    std::vector<std::array<std::string, 3>> rows;
    for (const Triple& t : g.triples()) {
      rows.push_back({g.entity_name(t.head), g.relation_name(t.relation),
                      g.entity_name(t.tail)});
    }
    std::uniform_int_distribution<EntityId> e(0, static_cast<EntityId>(g.num_entities()) - 1);
    std::uniform_int_distribution<RelationId> r(0, static_cast<RelationId>(g.num_relations()) - 1);
    rows.push_back({g.entity_name(e(rng)), g.relation_name(r(rng)),
                    g.entity_name(e(rng))});
    KnowledgeGraph g2 = KnowledgeGraph::from_rows(rows);

    for (const auto& p : vocab.patterns) {
      for (RelationId a = 0; a < g.num_relations(); ++a) {
        for (RelationId b = 0; b < g.num_relations(); ++b) {
          if (a == b) continue;
          CHECK(match_pattern(g2, p, a, b) >= match_pattern(g, p, a, b));
        }
      }
    }
  }
}

TEST_CASE("masked product equals the matcher on the toy graph") {
  KnowledgeGraph g = ikg();
  const auto& ffo = builtin_pattern("ffo");
  CHECK(spmm_count(g, ffo, rel(g, "r1"), rel(g, "r2")) == 1);
  CHECK(spmm_count(g, builtin_pattern("ffc"), rel(g, "r1"), rel(g, "r2")) == 0);
}

TEST_CASE("masked product equals the matcher on random graphs") {
  std::mt19937_64 rng(31);
  const Vocabulary v2 = builtin_vocabulary("v2");
  for (int trial = 0; trial < 25; ++trial) {
    KnowledgeGraph g = random_kg(rng, 6, 3);
    for (const auto& p : v2.patterns) {
      for (RelationId a = 0; a < g.num_relations(); ++a) {
        for (RelationId b = 0; b < g.num_relations(); ++b) {
          if (a == b) continue;
          CAPTURE(p.name);
          CHECK(spmm_count(g, p, a, b) == match_pattern(g, p, a, b));
        }
      }
    }
  }
}

TEST_CASE("masked product rejects patterns outside the 2-path family") {
  KnowledgeGraph g = ikg();
  CHECK_THROWS_AS(spmm_count(g, builtin_pattern("fffo"), 0, 1), Error);
  CHECK_THROWS_AS(spmm_count(g, builtin_pattern("ffo_1-2"), 0, 1), Error);
}

TEST_CASE("pinned-middle counts on the toy graph") {
  KnowledgeGraph g = ikg();
  const auto& fffo = builtin_pattern("fffo");
  const RelationId r1 = rel(g, "r1");
  const RelationId r3 = rel(g, "r3");
  CHECK(motif_ternary_count(g, fffo, r1, rel(g, "r2"), r3) == 1);
  CHECK(motif_ternary_count(g, fffo, r1, rel(g, "r4"), r3) == 1);
  CHECK(motif_ternary_count(g, fffo, r1, rel(g, "r5"), r3) == 1);
  CHECK(motif_ternary_count(g, fffo, r1, r1, r3) == 0);

  std::uint64_t sum = 0;
  for (RelationId m = 0; m < g.num_relations(); ++m) {
    sum += motif_ternary_count(g, fffo, r1, m, r3);
  }
  CHECK(sum == match_pattern(g, fffo, r1, r3));
}

TEST_CASE("occurrence dump is a sorted tsv") {
  KnowledgeGraph g = ikg();
  auto classes = mine(g, custom({"ffo", "fffo"}));
  std::ostringstream out;
  write_occurrences_tsv(out, g, classes);
  CHECK(out.str() ==
        "ffo\tr1\tr2\t1\n"
        "ffo\tr1\tr4\t1\n"
        "ffo\tr1\tr5\t1\n"
        "ffo\tr2\tr3\t1\n"
        "ffo\tr4\tr3\t1\n"
        "ffo\tr5\tr3\t1\n"
        "fffo\tr1\tr3\t3\n");
}
