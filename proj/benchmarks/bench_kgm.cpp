// Benchmarks for the mining and encoding paths.
//
// Expected shapes, which these benchmarks track rather than assert:
//  - 2-path vocabularies: query-based matching is bounded by O(|E|^2 |R|)
//    in the worst case; index joins keep the average far below that.
//  - 3-path vocabularies: O(|E| |R|^3)-shaped worst case, the wildcard
//    middle slot contributing the extra |R| factor per anchored pair.
//  - The dense masked product (spmm_count) pays O(|E|^3) per relation
//    pair regardless of sparsity, which is why the matcher is the
//    production route and the product is kept as a cross-check.

#include <benchmark/benchmark.h>

#include <random>

#include "kgm/kg.hpp"
#include "kgm/matcher.hpp"
#include "kgm/model.hpp"
#include "kgm/relation_graph.hpp"
#include "kgm/vocabulary.hpp"

namespace {

kgm::KnowledgeGraph random_graph(int entities, int relations, int triples,
                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> e(0, entities - 1);
  std::uniform_int_distribution<int> r(0, relations - 1);
  std::vector<std::array<std::string, 3>> rows;
  rows.reserve(triples);
  for (int i = 0; i < triples; ++i) {
    rows.push_back({"e" + std::to_string(e(rng)), "r" + std::to_string(r(rng)),
                    "e" + std::to_string(e(rng))});
  }
  return kgm::KnowledgeGraph::from_rows(rows);
}

void BM_MineV2(benchmark::State& state) {
  const int entities = static_cast<int>(state.range(0));
  auto g = random_graph(entities, 8, entities * 4, 42);
  const auto vocab = kgm::builtin_vocabulary("v2");
  for (auto _ : state) {
    benchmark::DoNotOptimize(kgm::mine(g, vocab));
  }
  state.SetComplexityN(entities);
}
BENCHMARK(BM_MineV2)->RangeMultiplier(2)->Range(32, 256)->Complexity();

void BM_MineV3(benchmark::State& state) {
  const int entities = static_cast<int>(state.range(0));
  auto g = random_graph(entities, 8, entities * 4, 43);
  const auto vocab = kgm::builtin_vocabulary("v3");
  for (auto _ : state) {
    benchmark::DoNotOptimize(kgm::mine(g, vocab));
  }
  state.SetComplexityN(entities);
}
BENCHMARK(BM_MineV3)->RangeMultiplier(2)->Range(32, 128)->Complexity();

void BM_MineV3Threaded(benchmark::State& state) {
  auto g = random_graph(128, 8, 512, 43);
  const auto vocab = kgm::builtin_vocabulary("v3");
  const auto threads = static_cast<unsigned>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(kgm::mine(g, vocab, {}, threads));
  }
}
BENCHMARK(BM_MineV3Threaded)->Arg(1)->Arg(2)->Arg(4);

void BM_MatcherVsSpmm_Matcher(benchmark::State& state) {
  const int entities = static_cast<int>(state.range(0));
  auto g = random_graph(entities, 4, entities * 4, 44);
  const auto& ffo = kgm::builtin_pattern("ffo");
  for (auto _ : state) {
    benchmark::DoNotOptimize(kgm::match_pattern(g, ffo, 0, 1));
  }
  state.SetComplexityN(entities);
}
BENCHMARK(BM_MatcherVsSpmm_Matcher)->RangeMultiplier(2)->Range(32, 256)->Complexity();

void BM_MatcherVsSpmm_Spmm(benchmark::State& state) {
  const int entities = static_cast<int>(state.range(0));
  auto g = random_graph(entities, 4, entities * 4, 44);
  const auto& ffo = kgm::builtin_pattern("ffo");
  for (auto _ : state) {
    benchmark::DoNotOptimize(kgm::spmm_count(g, ffo, 0, 1));
  }
  state.SetComplexityN(entities);
}
BENCHMARK(BM_MatcherVsSpmm_Spmm)->RangeMultiplier(2)->Range(32, 256)->Complexity();

void BM_ScoreAll(benchmark::State& state) {
  auto raw = random_graph(48, 4, 180, 45);
  auto g = kgm::augment_inverses(raw);
  const auto vocab = kgm::builtin_vocabulary("v2");
  auto rg = kgm::RelationGraph::build(g, vocab);
  kgm::ModelConfig cfg;
  cfg.d = 64;
  cfg.relation_layers = 6;
  cfg.entity_layers = 6;
  auto theta = kgm::Parameters::init(cfg, static_cast<int>(vocab.patterns.size()));
  for (auto _ : state) {
    benchmark::DoNotOptimize(kgm::score_all(g, rg, theta, cfg, 0, 0));
  }
}
BENCHMARK(BM_ScoreAll);

}  // namespace

BENCHMARK_MAIN();
