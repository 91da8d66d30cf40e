#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <set>

#include "kgm/kg.hpp"

using namespace kgm;

namespace {
const std::string kData = KGM_DATA_DIR;
}

TEST_CASE("ikg fixture loads with the documented shape") {
  KnowledgeGraph g = load_triples(kData + "/ikg.tsv");
  CHECK(g.num_entities() == 7);
  CHECK(g.num_relations() == 5);
  CHECK(g.num_triples() == 8);
  CHECK_FALSE(g.inverse_augmented());
  CHECK(g.duplicates_dropped() == 0);
}

TEST_CASE("empty file yields an empty graph") {
  auto path = std::filesystem::temp_directory_path() / "kgm_empty.tsv";
  std::ofstream(path).close();
  KnowledgeGraph g = load_triples(path);
  CHECK(g.num_entities() == 0);
  CHECK(g.num_relations() == 0);
  CHECK(g.num_triples() == 0);
}

TEST_CASE("duplicate rows are dropped and counted") {
  auto path = std::filesystem::temp_directory_path() / "kgm_dup.tsv";
  {
    std::ofstream out(path);
    out << "a\tr\tb\n" << "a\tr\tb\n";
  }
  KnowledgeGraph g = load_triples(path);
  CHECK(g.num_triples() == 1);
  CHECK(g.duplicates_dropped() == 1);
}

TEST_CASE("malformed rows fail with a line number") {
  auto path = std::filesystem::temp_directory_path() / "kgm_bad.tsv";
  {
    std::ofstream out(path);
    out << "a\tr\tb\n" << "only two\tfields\n";
  }
  CHECK_THROWS_WITH_AS(load_triples(path), doctest::Contains("line 2"), Error);
}

TEST_CASE("ntriples subset parses iris and rejects literals") {
  auto path = std::filesystem::temp_directory_path() / "kgm_nt.nt";
  {
    std::ofstream out(path);
    out << "<http://x/a> <http://x/r> <http://x/b> .\n";
    out << "# comment\n";
  }
  KnowledgeGraph g = load_triples(path, TripleFormat::kNTriples);
  CHECK(g.num_triples() == 1);
  CHECK(g.entity_name(0) == "http://x/a");

  {
    std::ofstream out(path);
    out << "<http://x/a> <http://x/r> \"literal\" .\n";
  }
  CHECK_THROWS_WITH_AS(load_triples(path, TripleFormat::kNTriples),
                       doctest::Contains("literal"), Error);
}

TEST_CASE("interning is deterministic in file order") {
  KnowledgeGraph g = load_triples(kData + "/ikg.tsv");
  CHECK(g.entity_name(0) == "a");
  CHECK(g.relation_name(0) == "r1");
  CHECK(g.relation_name(4) == "r5");
  CHECK(*g.entity_id("d") == 3);
}

TEST_CASE("neighborhood returns the exact head set") {
  KnowledgeGraph g = load_triples(kData + "/ikg.tsv");
  const RelationId r3 = *g.relation_id("r3");
  const EntityId d = *g.entity_id("d");
  auto heads = neighborhood(g, r3, d);
  std::set<std::string> names;
  for (EntityId h : heads) names.insert(g.entity_name(h));
  CHECK(names == std::set<std::string>{"c", "f"});

  const RelationId r2 = *g.relation_id("r2");
  CHECK(neighborhood(g, r2, *g.entity_id("a")).empty());
}

TEST_CASE("augment_inverses doubles relations and pairs ids") {
  KnowledgeGraph g = load_triples(kData + "/ikg.tsv");
  KnowledgeGraph aug = augment_inverses(g);
  CHECK(aug.num_triples() == 16);
  CHECK(aug.num_relations() == 10);
  CHECK(aug.inverse_augmented());
  for (RelationId r = 0; r < g.num_relations(); ++r) {
    CHECK(aug.relation_name(2 * r) == g.relation_name(r));
    CHECK(aug.relation_name(2 * r + 1) == g.relation_name(r) + "'");
  }
  CHECK_THROWS_AS(augment_inverses(aug), Error);

  SUBCASE("inverse involution: dropping the added relations restores g") {
    std::vector<Triple> restored;
    for (const Triple& t : aug.triples()) {
      if (is_inverse_relation(t.relation)) continue;
      restored.push_back({t.head, t.relation / 2, t.tail});
    }
    std::sort(restored.begin(), restored.end());
    CHECK(restored == g.triples());
  }
}

TEST_CASE("augmenting an empty graph keeps it empty but flagged") {
  KnowledgeGraph g;
  KnowledgeGraph aug = augment_inverses(g);
  CHECK(aug.num_triples() == 0);
  CHECK(aug.inverse_augmented());
}

TEST_CASE("single triple gains its symbolic inverse") {
  KnowledgeGraph g = KnowledgeGraph::from_rows({{"a", "r", "b"}});
  KnowledgeGraph aug = augment_inverses(g);
  REQUIRE(aug.num_relations() == 2);
  auto heads = neighborhood(aug, 0, *aug.entity_id("b"));
  REQUIRE(heads.size() == 1);
  CHECK(aug.entity_name(heads[0]) == "a");
  // N(r', a) = {b}
  auto inv_heads = neighborhood(aug, 1, *aug.entity_id("a"));
  REQUIRE(inv_heads.size() == 1);
  CHECK(aug.entity_name(inv_heads[0]) == "b");
}

TEST_CASE("index coherence") {
  KnowledgeGraph g = load_triples(kData + "/ikg.tsv");
  std::size_t via_rel = 0;
  for (RelationId r = 0; r < g.num_relations(); ++r) via_rel += g.edges_of(r).size();
  CHECK(via_rel == g.num_triples());

  std::size_t via_out = 0, via_in = 0;
  for (EntityId e = 0; e < g.num_entities(); ++e) {
    via_out += g.out_edges(e).size();
    via_in += g.in_edges(e).size();
  }
  CHECK(via_out == g.num_triples());
  CHECK(via_in == g.num_triples());

  for (const Triple& t : g.triples()) {
    CHECK(g.has_triple(t.head, t.relation, t.tail));
    auto ts = g.tails(t.relation, t.head);
    CHECK(std::find(ts.begin(), ts.end(), t.tail) != ts.end());
    auto hs = g.heads(t.relation, t.tail);
    CHECK(std::find(hs.begin(), hs.end(), t.head) != hs.end());
    auto rb = g.relations_between(t.head, t.tail);
    CHECK(std::find(rb.begin(), rb.end(), t.relation) != rb.end());
  }
}

TEST_CASE("identity monomorphism always checks") {
  for (const char* file : {"/ikg.tsv", "/family.tsv", "/cyclic.tsv"}) {
    KnowledgeGraph g = load_triples(kData + file);
    CHECK(check_monomorphism(g, g, Monomorphism::identity(g)));
  }
}

TEST_CASE("family maps onto corporate structure") {
  KnowledgeGraph fam = load_triples(kData + "/family.tsv");
  KnowledgeGraph corp = load_triples(kData + "/corporate.tsv");
  Monomorphism m;
  m.entity_map.resize(fam.num_entities());
  m.relation_map.resize(fam.num_relations());
  auto emap = [&](const char* a, const char* b) {
    m.entity_map[*fam.entity_id(a)] = *corp.entity_id(b);
  };
  auto rmap = [&](const char* a, const char* b) {
    m.relation_map[*fam.relation_id(a)] = *corp.relation_id(b);
  };
  emap("george", "holdings");
  emap("dana", "lee");
  emap("frank", "kim");
  emap("mary", "ray");
  rmap("grand_father_of", "grandvisor");
  rmap("wife_of", "cofounder_with");
  rmap("son_of", "mentor_of");
  CHECK(check_monomorphism(fam, corp, m));

  SUBCASE("the scholarly graph is a third instance of the same shape") {
    KnowledgeGraph sch = load_triples(kData + "/scholarly.tsv");
    Monomorphism m2;
    m2.entity_map.resize(fam.num_entities());
    m2.relation_map.resize(fam.num_relations());
    m2.entity_map[*fam.entity_id("george")] = *sch.entity_id("noether");
    m2.entity_map[*fam.entity_id("dana")] = *sch.entity_id("weyl");
    m2.entity_map[*fam.entity_id("frank")] = *sch.entity_id("wigner");
    m2.entity_map[*fam.entity_id("mary")] = *sch.entity_id("szilard");
    m2.relation_map[*fam.relation_id("grand_father_of")] =
        *sch.relation_id("grandadvisor_of");
    m2.relation_map[*fam.relation_id("wife_of")] =
        *sch.relation_id("coauthor_with");
    m2.relation_map[*fam.relation_id("son_of")] =
        *sch.relation_id("student_of");
    CHECK(check_monomorphism(fam, sch, m2));
  }

  SUBCASE("collapsing two entities breaks injectivity") {
    m.entity_map[*fam.entity_id("dana")] = m.entity_map[*fam.entity_id("mary")];
    CHECK_FALSE(check_monomorphism(fam, corp, m));
  }
}

TEST_CASE("partial maps are rejected") {
  KnowledgeGraph g = load_triples(kData + "/ikg.tsv");
  Monomorphism m;  // empty maps
  CHECK_THROWS_AS(check_monomorphism(g, g, m), Error);
}

TEST_CASE("graph stats json") {
  KnowledgeGraph g = load_triples(kData + "/ikg.tsv");
  std::string j = graph_stats_json(g);
  CHECK(j.find("\"entities\": 7") != std::string::npos);
  CHECK(j.find("\"relations\": 5") != std::string::npos);
  CHECK(j.find("\"triples\": 8") != std::string::npos);
  CHECK(j.find("\"inverse_augmented\": false") != std::string::npos);
}
