#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "kgm/kg.hpp"
#include "kgm/relation_graph.hpp"
#include "kgm/vocabulary.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = KGM_CLI_PATH;
const std::string kData = KGM_DATA_DIR;

struct RunResult {
  int exit_code;
  std::string output;
};

RunResult run(const std::string& args) {
  const fs::path log = fs::temp_directory_path() / "kgm_cli_out.txt";
  const std::string cmd = kCli + " " + args + " > " + log.string() + " 2>&1";
  int status = std::system(cmd.c_str());
  int code = -1;
  if (WIFEXITED(status)) code = WEXITSTATUS(status);
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  return {code, ss.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_toy_vocab(const fs::path& dir) {
  kgm::Vocabulary v;
  v.name = "custom";
  v.patterns.push_back(kgm::builtin_pattern("ffo"));
  v.patterns.push_back(kgm::builtin_pattern("fffo"));
  fs::path path = dir / "vocab.json";
  kgm::save_vocabulary_file(path, v);
  return path;
}

}  // namespace

TEST_CASE("relgraph on the toy fixture reproduces the seven-edge graph") {
  fs::path dir = fresh_dir("kgm_cli_relgraph");
  fs::path vocab = write_toy_vocab(dir);
  RunResult r = run("relgraph --input " + kData + "/ikg.tsv --vocab custom:" +
                    vocab.string() + " --no-augment --epsilon 1 --out " +
                    dir.string());
  CHECK(r.exit_code == 0);
  kgm::RelationGraph rg = kgm::RelationGraph::load(dir / "relation_graph.json");
  CHECK(rg.num_nodes() == 5);
  CHECK(rg.edges().size() == 7);
  CHECK(slurp(dir / "relation_graph.json").find("config_hash") != std::string::npos);

  SUBCASE("epsilon 2 keeps only the weight-3 edge") {
    fs::path dir2 = fresh_dir("kgm_cli_relgraph_eps2");
    RunResult r2 = run("relgraph --input " + kData + "/ikg.tsv --vocab custom:" +
                       vocab.string() + " --no-augment --epsilon 2 --out " +
                       dir2.string());
    CHECK(r2.exit_code == 0);
    kgm::RelationGraph rg2 = kgm::RelationGraph::load(dir2 / "relation_graph.json");
    CHECK(rg2.edges().size() == 1);
  }
}

TEST_CASE("mine on an empty file writes an empty artifact and exits zero") {
  fs::path dir = fresh_dir("kgm_cli_empty");
  fs::path empty = dir / "empty.tsv";
  std::ofstream(empty).close();
  RunResult r = run("mine --input " + empty.string() + " --vocab v3+ --out " +
                    dir.string());
  CHECK(r.exit_code == 0);
  std::string tsv = slurp(dir / "occurrences.tsv");
  CHECK(tsv.rfind("# config_hash=", 0) == 0);
  CHECK(std::count(tsv.begin(), tsv.end(), '\n') == 1);  // comment line only
}

TEST_CASE("mine produces the golden occurrence dump") {
  fs::path dir = fresh_dir("kgm_cli_mine");
  fs::path vocab = write_toy_vocab(dir);
  RunResult r = run("mine --input " + kData + "/ikg.tsv --vocab custom:" +
                    vocab.string() + " --no-augment --out " + dir.string());
  CHECK(r.exit_code == 0);
  std::string tsv = slurp(dir / "occurrences.tsv");
  CHECK(tsv.find("fffo\tr1\tr3\t3\n") != std::string::npos);
  CHECK(tsv.find("ffo\tr5\tr3\t1\n") != std::string::npos);
}

TEST_CASE("same config produces byte-identical artifacts") {
  fs::path a = fresh_dir("kgm_cli_det_a");
  fs::path b = fresh_dir("kgm_cli_det_b");
  for (const fs::path& dir : {a, b}) {
    RunResult r = run("mine --input " + kData + "/ikg.tsv --vocab v2 --seed 7 "
                      "--deterministic --out " + dir.string());
    REQUIRE(r.exit_code == 0);
  }
  CHECK(slurp(a / "occurrences.tsv") == slurp(b / "occurrences.tsv"));
}

TEST_CASE("stats reports the fixture shape") {
  fs::path dir = fresh_dir("kgm_cli_stats");
  RunResult r = run("stats --input " + kData + "/ikg.tsv --no-augment --out " +
                    dir.string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("\"entities\": 7") != std::string::npos);
  CHECK(r.output.find("\"inverse_augmented\": false") != std::string::npos);

  RunResult aug = run("stats --input " + kData + "/ikg.tsv --out " + dir.string());
  CHECK(aug.output.find("\"relations\": 10") != std::string::npos);
}

TEST_CASE("train then eval round-trips through the artifacts") {
  fs::path dir = fresh_dir("kgm_cli_train");

  // small family corpus written as a TSV fixture
  auto corpus = kgm::testutil::synthetic_family_kg(4, 1);
  fs::path graph = dir / "family.tsv";
  {
    std::ofstream out(graph);
    for (const kgm::Triple& t : corpus.graph.triples()) {
      out << corpus.graph.entity_name(t.head) << '\t'
          << corpus.graph.relation_name(t.relation) << '\t'
          << corpus.graph.entity_name(t.tail) << '\n';
    }
  }
  fs::path test_file = dir / "test.tsv";
  {
    std::ofstream out(test_file);
    for (const kgm::Triple& t : corpus.test) {
      out << corpus.graph.entity_name(t.head) << '\t'
          << corpus.graph.relation_name(t.relation) << '\t'
          << corpus.graph.entity_name(t.tail) << '\n';
    }
  }

  RunResult tr = run("train --input " + graph.string() +
                     " --vocab v2- --dim 8 --rel-layers 2 --ent-layers 2 "
                     "--steps 12 --negatives 4 --seed 3 --out " + dir.string());
  CHECK(tr.exit_code == 0);
  CHECK(fs::exists(dir / "checkpoint.json"));
  CHECK(fs::exists(dir / "metrics.jsonl"));
  {
    std::string metrics = slurp(dir / "metrics.jsonl");
    CHECK(std::count(metrics.begin(), metrics.end(), '\n') == 13);  // header + steps
    CHECK(metrics.rfind("{\"config_hash\":", 0) == 0);
    CHECK(metrics.find("\"step\":0") != std::string::npos);
    CHECK(metrics.find("\"loss\":") != std::string::npos);
  }

  RunResult ev = run("eval --checkpoint " + (dir / "checkpoint.json").string() +
                     " --input " + graph.string() + " --test " +
                     test_file.string() + " --out " + dir.string());
  CHECK(ev.exit_code == 0);
  std::string report = slurp(dir / "report.json");
  CHECK(report.find("\"mrr\":") != std::string::npos);
  CHECK(report.find("\"num_queries\": 2") != std::string::npos);  // tail + head query
  CHECK(report.find("\"config_hash\":") != std::string::npos);

  SUBCASE("a conflicting vocabulary flag is refused") {
    RunResult bad = run("eval --checkpoint " + (dir / "checkpoint.json").string() +
                        " --input " + graph.string() + " --test " +
                        test_file.string() + " --vocab v3 --out " + dir.string());
    CHECK(bad.exit_code == 1);
    CHECK(bad.output.find("vocabulary") != std::string::npos);
  }

  SUBCASE("unknown names in the test file are an error") {
    std::ofstream out(test_file);
    out << "nobody\tparent_of\tnoone\n";
    out.close();
    RunResult bad = run("eval --checkpoint " + (dir / "checkpoint.json").string() +
                        " --input " + graph.string() + " --test " +
                        test_file.string() + " --out " + dir.string());
    CHECK(bad.exit_code == 1);
  }
}

TEST_CASE("zero-shot transfer works through the artifact files") {
  fs::path dir = fresh_dir("kgm_cli_zeroshot");

  auto write_graph = [](const kgm::KnowledgeGraph& g, const fs::path& p) {
    std::ofstream out(p);
    for (const kgm::Triple& t : g.triples()) {
      out << g.entity_name(t.head) << '\t' << g.relation_name(t.relation)
          << '\t' << g.entity_name(t.tail) << '\n';
    }
  };

  auto source = kgm::testutil::synthetic_family_kg(7, 3);
  write_graph(source.graph, dir / "train.tsv");

  auto target = kgm::testutil::synthetic_family_kg(
      7, 3,
      {"supervisor_of", "colleague_of", "grand_supervisor_of",
       "mentor_colleague_of"},
      "org");
  write_graph(target.graph, dir / "inference.tsv");
  {
    // deliberately includes the last-interned relation so any id-mapping
    // offset between raw and augmented spaces surfaces as a failure
    std::ofstream out(dir / "test.tsv");
    for (const kgm::Triple& t : target.test) {
      out << target.graph.entity_name(t.head) << '\t'
          << target.graph.relation_name(t.relation) << '\t'
          << target.graph.entity_name(t.tail) << '\n';
    }
  }

  RunResult tr = run("train --input " + (dir / "train.tsv").string() +
                     " --vocab v3 --dim 32 --rel-layers 3 --ent-layers 3 "
                     "--steps 300 --negatives 8 --batch-size 8 --lr 2e-3 "
                     "--seed 4 --out " + dir.string());
  REQUIRE(tr.exit_code == 0);
  RunResult ev = run("eval --checkpoint " + (dir / "checkpoint.json").string() +
                     " --input " + (dir / "inference.tsv").string() +
                     " --test " + (dir / "test.tsv").string() +
                     " --setting ind_er --out " + dir.string());
  REQUIRE(ev.exit_code == 0);
  std::string report = slurp(dir / "report.json");
  CHECK(report.find("\"setting\": \"ind_er\"") != std::string::npos);
  CHECK(report.find("\"num_queries\": 6") != std::string::npos);
  // the relabeled graph is fully unseen; a healthy run ranks every held-out
  // tail first or nearly first
  const auto pos = report.find("\"mrr\": ");
  REQUIRE(pos != std::string::npos);
  const double mrr = std::stod(report.substr(pos + 7));
  CHECK(mrr >= 0.5);
}

TEST_CASE("verify subcommand reports suite outcomes") {
  RunResult r = run("verify --suite expressiveness");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("PASS  expressiveness") != std::string::npos);

  RunResult bad = run("verify --suite nosuch");
  CHECK(bad.exit_code == 1);
}

TEST_CASE("usage errors exit with code one") {
  CHECK(run("mine").exit_code == 1);                       // missing --input
  CHECK(run("frobnicate").exit_code == 1);                 // unknown subcommand
  CHECK(run("mine --input /nonexistent.tsv").exit_code == 1);
  CHECK(run("--help").exit_code == 0);
}
