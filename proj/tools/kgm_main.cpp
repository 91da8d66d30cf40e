// kgm: mine graphlet occurrences, build relation graphs, train and evaluate
// the conditional two-level message-passing model, and run the verification
// suites. Exit codes: 0 success, 1 usage or IO error, 2 verification failure.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <nlohmann/json.hpp>

#include "kgm/eval.hpp"
#include "kgm/kg.hpp"
#include "kgm/matcher.hpp"
#include "kgm/model.hpp"
#include "kgm/relation_graph.hpp"
#include "kgm/verify.hpp"
#include "kgm/vocabulary.hpp"

namespace {

using nlohmann::ordered_json;

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct CommonOpts {
  std::string input;
  std::string format = "tsv";
  std::string vocab = "v2";
  std::string mode = "count";
  std::string out = ".";
  std::uint64_t seed = 0;
  unsigned threads = 1;
  bool deterministic = false;
  bool no_augment = false;
  bool permissive = false;
  bool strict_stars = false;
  std::uint64_t epsilon = 1;

  unsigned effective_threads() const { return deterministic ? 1 : threads; }
};

void add_io_options(CLI::App* cmd, CommonOpts& o, bool with_vocab = true) {
  cmd->add_option("--input", o.input, "triple file (head<TAB>relation<TAB>tail)")
      ->required();
  cmd->add_option("--format", o.format, "input format")
      ->check(CLI::IsMember({"tsv", "ntriples"}));
  if (with_vocab) {
    cmd->add_option("--vocab", o.vocab,
                    "structural vocabulary: v2-, u2, v2, v2+, v3-, v3, v3+ or "
                    "custom:FILE");
    cmd->add_option("--mode", o.mode, "occurrence weighting")
        ->check(CLI::IsMember({"existence", "count"}));
    cmd->add_flag("--strict-stars", o.strict_stars,
                  "use all-pairs distinctness for star patterns instead of "
                  "the weaker catalogue filter sets");
    cmd->add_flag("--permissive", o.permissive,
                  "allow both anchors to bind the same relation (self-loop "
                  "meta-edges)");
  }
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--threads", o.threads, "worker threads");
  cmd->add_flag("--deterministic", o.deterministic,
                "force single-threaded numeric paths");
  cmd->add_flag("--no-augment", o.no_augment,
                "skip the symbolic inverse-relation augmentation");
}

kgm::KnowledgeGraph load_input(const CommonOpts& o) {
  auto fmt = o.format == "ntriples" ? kgm::TripleFormat::kNTriples
                                    : kgm::TripleFormat::kTsv;
  kgm::KnowledgeGraph g = kgm::load_triples(o.input, fmt);
  if (g.duplicates_dropped() > 0) {
    std::cerr << "warning: dropped " << g.duplicates_dropped()
              << " duplicate triple(s)\n";
  }
  if (!o.no_augment) g = kgm::augment_inverses(g);
  return g;
}

kgm::Vocabulary load_vocab(const CommonOpts& o) {
  const auto mode = o.mode == "existence" ? kgm::MatchMode::kExistence
                                          : kgm::MatchMode::kCount;
  if (o.vocab.rfind("custom:", 0) == 0) {
    return kgm::load_vocabulary_file(o.vocab.substr(7), mode);
  }
  return kgm::builtin_vocabulary(o.vocab, mode, o.strict_stars);
}

ordered_json common_json(const char* command, const CommonOpts& o) {
  ordered_json j;
  j["command"] = command;
  j["input"] = o.input;
  j["format"] = o.format;
  j["vocab"] = o.vocab;
  j["mode"] = o.mode;
  j["seed"] = o.seed;
  j["threads"] = o.effective_threads();
  j["deterministic"] = o.deterministic;
  j["augment"] = !o.no_augment;
  j["permissive"] = o.permissive;
  j["strict_stars"] = o.strict_stars;
  return j;
}

std::filesystem::path prepare_out(const CommonOpts& o) {
  std::filesystem::path dir(o.out);
  std::filesystem::create_directories(dir);
  return dir;
}

kgm::MatchOptions match_opts(const CommonOpts& o) {
  kgm::MatchOptions m;
  m.mode = o.mode == "existence" ? kgm::MatchMode::kExistence
                                 : kgm::MatchMode::kCount;
  m.injective_relations = !o.permissive;
  return m;
}

int cmd_stats(const CommonOpts& o) {
  kgm::KnowledgeGraph g = load_input(o);
  ordered_json cfg = common_json("stats", o);
  const std::string hash = fnv1a_hex(cfg.dump());
  auto dir = prepare_out(o);
  std::string stats = kgm::graph_stats_json(g);
  // embed the run hash
  ordered_json j = ordered_json::parse(stats);
  j["config_hash"] = hash;
  std::ofstream out(dir / "stats.json");
  out << j.dump(2) << '\n';
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_mine(const CommonOpts& o) {
  kgm::KnowledgeGraph g = load_input(o);
  kgm::Vocabulary vocab = load_vocab(o);
  ordered_json cfg = common_json("mine", o);
  const std::string hash = fnv1a_hex(cfg.dump());

  auto classes = kgm::mine(g, vocab, match_opts(o), o.effective_threads());
  auto dir = prepare_out(o);
  std::ofstream out(dir / "occurrences.tsv");
  if (!out) throw kgm::Error("cannot write occurrences.tsv");
  out << "# config_hash=" << hash << '\n';
  kgm::write_occurrences_tsv(out, g, classes);
  std::cout << "mined " << classes.size() << " occurrence class(es) over "
            << g.num_relations() << " relation(s) -> "
            << (dir / "occurrences.tsv").string() << '\n';
  return 0;
}

int cmd_relgraph(const CommonOpts& o, const std::string& out_format) {
  kgm::KnowledgeGraph g = load_input(o);
  kgm::Vocabulary vocab = load_vocab(o);
  ordered_json cfg = common_json("relgraph", o);
  cfg["epsilon"] = o.epsilon;
  const std::string hash = fnv1a_hex(cfg.dump());

  kgm::RelationGraph rg =
      kgm::RelationGraph::build(g, vocab, o.epsilon, match_opts(o), o.effective_threads());
  auto dir = prepare_out(o);
  if (out_format == "tsv") {
    rg.save_tsv(dir / "relation_graph.tsv");
    std::cout << "wrote " << (dir / "relation_graph.tsv").string() << '\n';
  } else {
    ordered_json j = ordered_json::parse(rg.to_json_string());
    j["config_hash"] = hash;
    std::ofstream out(dir / "relation_graph.json");
    if (!out) throw kgm::Error("cannot write relation_graph.json");
    out << j.dump(2) << '\n';
    std::cout << "wrote " << (dir / "relation_graph.json").string() << " ("
              << rg.edges().size() << " edge(s) over " << rg.num_nodes()
              << " node(s))\n";
  }
  return 0;
}

struct TrainOpts {
  int dim = 64;
  int rel_layers = 6;
  int ent_layers = 6;
  int negatives = 32;  // desk-scale default; large runs typically use 256
  int steps = 200;
  int batch_size = 8;
  double lr = 5e-4;
  double weight_decay = 0.0;
  double adversarial_temperature = 1.0;
  bool self_adversarial = false;
  std::string entity_message = "per_relation_row";
};

int cmd_train(const CommonOpts& o, const TrainOpts& t) {
  kgm::KnowledgeGraph g = load_input(o);
  kgm::Vocabulary vocab = load_vocab(o);

  kgm::ModelConfig mc;
  mc.d = t.dim;
  mc.relation_layers = t.rel_layers;
  mc.entity_layers = t.ent_layers;
  mc.negatives = t.negatives;
  mc.steps = t.steps;
  mc.batch_size = t.batch_size;
  mc.learning_rate = t.lr;
  mc.weight_decay = t.weight_decay;
  mc.adversarial_temperature = t.adversarial_temperature;
  mc.self_adversarial = t.self_adversarial;
  mc.seed = o.seed;
  mc.entity_message = t.entity_message == "query_row"
                          ? kgm::EntityMessage::kQueryRow
                          : kgm::EntityMessage::kPerRelationRow;

  ordered_json cfg = common_json("train", o);
  cfg["epsilon"] = o.epsilon;
  cfg["model"] = ordered_json{{"d", mc.d},
                              {"relation_layers", mc.relation_layers},
                              {"entity_layers", mc.entity_layers},
                              {"negatives", mc.negatives},
                              {"steps", mc.steps},
                              {"batch_size", mc.batch_size},
                              {"learning_rate", mc.learning_rate},
                              {"weight_decay", mc.weight_decay},
                              {"entity_message", t.entity_message}};
  const std::string hash = fnv1a_hex(cfg.dump());

  kgm::RelationGraph rg =
      kgm::RelationGraph::build(g, vocab, o.epsilon, match_opts(o), o.effective_threads());

  auto dir = prepare_out(o);
  std::ofstream metrics(dir / "metrics.jsonl");
  if (!metrics) throw kgm::Error("cannot write metrics.jsonl");
  metrics << ordered_json{{"config_hash", hash}}.dump() << '\n';

  kgm::TrainStats stats;
  kgm::Parameters params =
      kgm::train(g, rg, mc, &stats, [&](int step, double loss) {
        ordered_json line;
        line["step"] = step;
        line["loss"] = loss;
        metrics << line.dump() << '\n';
      });

  kgm::save_checkpoint(dir / "checkpoint.json", params, mc, vocab.name, hash);
  std::cout << "trained " << mc.steps << " step(s); loss "
            << stats.initial_loss << " -> " << stats.final_loss << "; wrote "
            << (dir / "checkpoint.json").string() << '\n';
  return 0;
}

std::vector<kgm::Triple> read_test_triples(const kgm::KnowledgeGraph& g,
                                           const std::string& path) {
  kgm::KnowledgeGraph raw = kgm::load_triples(path);
  std::vector<kgm::Triple> out;
  for (const kgm::Triple& t : raw.triples()) {
    auto h = g.entity_id(raw.entity_name(t.head));
    auto r = g.relation_id(raw.relation_name(t.relation));
    auto e = g.entity_id(raw.entity_name(t.tail));
    if (!h || !r || !e) {
      throw kgm::Error("test triple references names unknown to the inference "
                       "graph: " + raw.entity_name(t.head) + " " +
                       raw.relation_name(t.relation) + " " +
                       raw.entity_name(t.tail));
    }
    out.push_back({*h, *r, *e});
  }
  return out;
}

int cmd_eval(const CommonOpts& o, bool vocab_explicit,
             const std::string& checkpoint_path, const std::string& test_path,
             bool raw_ranking, const std::string& setting) {
  // the checkpoint decides the vocabulary; an explicit --vocab must agree
  kgm::Checkpoint ck = kgm::load_checkpoint(checkpoint_path);
  if (vocab_explicit && o.vocab != ck.vocabulary_name) {
    throw kgm::Error("checkpoint was trained with vocabulary '" +
                     ck.vocabulary_name + "', refusing to evaluate with '" +
                     o.vocab + "'");
  }
  CommonOpts effective = o;
  effective.vocab = ck.vocabulary_name;

  kgm::KnowledgeGraph g = load_input(effective);
  kgm::Vocabulary vocab = load_vocab(effective);
  kgm::RelationGraph rg = kgm::RelationGraph::build(
      g, vocab, effective.epsilon, match_opts(effective), o.effective_threads());

  // names in the test file resolve directly against the (possibly
  // augmented) inference graph, so the ids need no further mapping
  std::vector<kgm::Triple> test = read_test_triples(g, test_path);

  // tail queries plus head queries rewritten through the inverse relation
  std::vector<kgm::Triple> queries;
  for (const kgm::Triple& t : test) {
    queries.push_back(t);
    if (!o.no_augment) {
      queries.push_back({t.tail, kgm::inverse_relation(t.relation), t.head});
    }
  }

  std::vector<kgm::Triple> filter = g.triples();
  for (const kgm::Triple& q : queries) filter.push_back(q);

  ordered_json cfg = common_json("eval", effective);
  cfg["checkpoint"] = checkpoint_path;
  cfg["test"] = test_path;
  cfg["filtered"] = !raw_ranking;
  cfg["setting"] = setting;
  const std::string hash = fnv1a_hex(cfg.dump());

  kgm::ScoreFn scorer = [&](kgm::EntityId h, kgm::RelationId q) {
    return kgm::score_all(g, rg, ck.params, ck.cfg, h, q);
  };
  kgm::EvalOptions eopts;
  eopts.filtered = !raw_ranking;
  eopts.threads = o.effective_threads();
  eopts.setting = setting;
  kgm::EvalReport report =
      kgm::evaluate(scorer, g.num_entities(), queries, filter, eopts);

  auto dir = prepare_out(o);
  std::string json = kgm::report_to_json(report, hash);
  std::ofstream out(dir / "report.json");
  if (!out) throw kgm::Error("cannot write report.json");
  out << json;
  std::cout << json;
  return 0;
}

int cmd_verify(const std::vector<std::string>& suites, unsigned threads) {
  std::vector<std::string> names = suites;
  if (names.empty() || (names.size() == 1 && names[0] == "all")) {
    names = kgm::verify_suite_names();
  }
  bool all_passed = true;
  for (const auto& name : names) {
    kgm::SuiteResult r = kgm::run_verify_suite(name, threads);
    std::cout << (r.passed ? "PASS" : "FAIL") << "  " << r.name << "  "
              << r.detail << '\n';
    all_passed = all_passed && r.passed;
  }
  return all_passed ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "graphlet mining, relation graphs, and zero-shot link prediction over "
      "knowledge graphs"};
  app.require_subcommand(1);

  CommonOpts stats_o, mine_o, rel_o, train_o, eval_o;
  TrainOpts train_t;
  std::string rel_format = "json";
  std::string checkpoint_path, test_path;
  bool raw_ranking = false;
  std::string setting = "transductive";
  std::vector<std::string> suites;
  unsigned verify_threads = 1;

  auto* stats_cmd = app.add_subcommand("stats", "graph statistics as JSON");
  add_io_options(stats_cmd, stats_o, /*with_vocab=*/false);

  auto* mine_cmd =
      app.add_subcommand("mine", "mine graphlet occurrence classes to a TSV");
  add_io_options(mine_cmd, mine_o);

  auto* rel_cmd = app.add_subcommand(
      "relgraph", "assemble the relation graph from mined classes");
  add_io_options(rel_cmd, rel_o);
  rel_cmd->add_option("--epsilon", rel_o.epsilon, "minimum class weight for an edge")
      ->check(CLI::PositiveNumber);
  rel_cmd->add_option("--out-format", rel_format, "artifact format")
      ->check(CLI::IsMember({"json", "tsv"}));

  auto* train_cmd =
      app.add_subcommand("train", "train the conditional two-level encoder");
  add_io_options(train_cmd, train_o);
  train_cmd->add_option("--epsilon", train_o.epsilon)->check(CLI::PositiveNumber);
  train_cmd->add_option("--dim", train_t.dim, "embedding width");
  train_cmd->add_option("--rel-layers", train_t.rel_layers);
  train_cmd->add_option("--ent-layers", train_t.ent_layers);
  train_cmd->add_option("--negatives", train_t.negatives);
  train_cmd->add_option("--steps", train_t.steps);
  train_cmd->add_option("--batch-size", train_t.batch_size);
  train_cmd->add_option("--lr", train_t.lr);
  train_cmd->add_option("--weight-decay", train_t.weight_decay);
  train_cmd->add_option("--adversarial-temperature",
                        train_t.adversarial_temperature);
  train_cmd->add_flag("--self-adversarial", train_t.self_adversarial,
                      "weight negatives by softmax of their scores");
  train_cmd->add_option("--entity-message", train_t.entity_message)
      ->check(CLI::IsMember({"per_relation_row", "query_row"}));

  auto* eval_cmd = app.add_subcommand(
      "eval", "filtered ranking evaluation of a trained checkpoint");
  add_io_options(eval_cmd, eval_o);
  eval_cmd->add_option("--checkpoint", checkpoint_path, "trained model file")
      ->required();
  eval_cmd->add_option("--test", test_path, "test triples (TSV)")->required();
  eval_cmd->add_option("--epsilon", eval_o.epsilon)->check(CLI::PositiveNumber);
  eval_cmd->add_flag("--raw", raw_ranking, "rank without filtering");
  eval_cmd->add_option("--setting", setting)
      ->check(CLI::IsMember({"transductive", "ind_e", "ind_er"}));

  auto* verify_cmd = app.add_subcommand(
      "verify", "run the oracle/theorem/expressiveness suites");
  verify_cmd->add_option(
      "--suite", suites,
      "oracle, theorem1, theorem2, spmm, expressiveness, gradients, "
      "isomorphism, or all");
  verify_cmd->add_option("--threads", verify_threads);

  try {
    app.parse(argc, argv);
    if (stats_cmd->parsed()) return cmd_stats(stats_o);
    if (mine_cmd->parsed()) return cmd_mine(mine_o);
    if (rel_cmd->parsed()) return cmd_relgraph(rel_o, rel_format);
    if (train_cmd->parsed()) return cmd_train(train_o, train_t);
    if (eval_cmd->parsed()) {
      return cmd_eval(eval_o, eval_cmd->count("--vocab") > 0,
                      checkpoint_path, test_path, raw_ranking, setting);
    }
    if (verify_cmd->parsed()) return cmd_verify(suites, verify_threads);
    return 1;
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const kgm::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << '\n';
    return 1;
  }
}
