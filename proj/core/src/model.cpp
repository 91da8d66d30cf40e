#include "kgm/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace kgm {

void ModelConfig::validate() const {
  if (d < 1 || relation_layers < 1 || entity_layers < 1) {
    throw Error("model config: d and layer counts must be >= 1");
  }
  if (negatives < 1) throw Error("model config: negatives must be >= 1");
  if (message_kind != "elementwise_product") {
    throw Error("model config: unsupported message_kind " + message_kind);
  }
  if (norm_kind != "layer_normalization") {
    throw Error("model config: unsupported norm_kind " + norm_kind);
  }
}

namespace {

double glorot_limit(int fan_in, int fan_out) {
  return std::sqrt(6.0 / (fan_in + fan_out));
}

ad::Matrix draw_uniform(std::mt19937_64& rng, int rows, int cols, double limit) {
  ad::Matrix m(rows, cols);
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (double& x : m.a) x = dist(rng);
  return m;
}

ad::Matrix constant(int rows, int cols, double v) {
  ad::Matrix m(rows, cols);
  for (double& x : m.a) x = v;
  return m;
}

}  // namespace

Parameters Parameters::init(const ModelConfig& cfg, int num_patterns) {
  cfg.validate();
  if (num_patterns < 1) throw Error("parameters: at least one edge type required");
  std::mt19937_64 rng(cfg.seed);
  const int d = cfg.d;

  Parameters p;
  p.d = d;
  p.num_patterns = num_patterns;
  for (int l = 0; l < cfg.relation_layers; ++l) {
    RelLayer layer;
    layer.meta = draw_uniform(rng, num_patterns, d, 1.0);
    layer.w_update = draw_uniform(rng, d, 2 * d, glorot_limit(2 * d, d));
    layer.gain = constant(1, d, 1.0);
    p.rel_layers.push_back(std::move(layer));
  }
  for (int l = 0; l < cfg.entity_layers; ++l) {
    EntLayer layer;
    layer.w1 = draw_uniform(rng, d, d, glorot_limit(d, d));
    layer.b1 = ad::Matrix(1, d);
    layer.w2 = draw_uniform(rng, d, d, glorot_limit(d, d));
    layer.b2 = ad::Matrix(1, d);
    layer.w_update = draw_uniform(rng, d, 2 * d, glorot_limit(2 * d, d));
    layer.gain = constant(1, d, 1.0);
    p.ent_layers.push_back(std::move(layer));
  }
  p.w_out = draw_uniform(rng, d, d, glorot_limit(d, d));
  p.b_out = ad::Matrix(1, d);
  p.w_score = draw_uniform(rng, d, 1, glorot_limit(d, 1));
  p.b_score = ad::Matrix(1, 1);
  return p;
}

// ---------------------------------------------------------------------------
// message routing
// ---------------------------------------------------------------------------

TypedMessagePairs relation_message_pairs(const RelationGraph& rg) {
  TypedMessagePairs pairs;
  pairs.num_nodes = static_cast<int>(rg.num_nodes());
  pairs.per_type.assign(rg.edge_types().size(), {});
  for (const auto& e : rg.edges()) {
    pairs.per_type[e.type].emplace_back(static_cast<int>(e.src),
                                        static_cast<int>(e.dst));
  }
  for (auto& v : pairs.per_type) {
    std::sort(v.begin(), v.end(), [](const auto& x, const auto& y) {
      return std::tie(x.second, x.first) < std::tie(y.second, y.first);
    });
  }
  return pairs;
}

TypedMessagePairs motif_message_pairs(const std::vector<HyperEdge>& edges,
                                      int num_relations) {
  std::set<std::pair<int, int>> seen;
  for (const auto& e : edges) {
    const RelationId rel[3] = {e.a, e.b, e.c};
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        if (rel[i] == rel[j]) continue;
        if (rel[i] >= static_cast<RelationId>(num_relations) ||
            rel[j] >= static_cast<RelationId>(num_relations)) {
          throw Error("motif_message_pairs: relation id out of range");
        }
        seen.emplace(static_cast<int>(rel[i]), static_cast<int>(rel[j]));
      }
    }
  }
  TypedMessagePairs pairs;
  pairs.num_nodes = num_relations;
  pairs.per_type.resize(1);
  pairs.per_type[0].assign(seen.begin(), seen.end());
  std::sort(pairs.per_type[0].begin(), pairs.per_type[0].end(),
            [](const auto& x, const auto& y) {
              return std::tie(x.second, x.first) < std::tie(y.second, y.first);
            });
  return pairs;
}

// ---------------------------------------------------------------------------
// forward passes on the tape
// ---------------------------------------------------------------------------

namespace {

struct RelLayerVars {
  ad::Tape::Var meta, w_update, gain;
};
struct EntLayerVars {
  ad::Tape::Var w1, b1, w2, b2, w_update, gain;
};
struct ParamVars {
  std::vector<RelLayerVars> rel;
  std::vector<EntLayerVars> ent;
  ad::Tape::Var w_out, b_out, w_score, b_score;
};

ParamVars register_params(ad::Tape& tape, const Parameters& p) {
  ParamVars v;
  for (const auto& l : p.rel_layers) {
    v.rel.push_back({tape.input(l.meta), tape.input(l.w_update), tape.input(l.gain)});
  }
  for (const auto& l : p.ent_layers) {
    v.ent.push_back({tape.input(l.w1), tape.input(l.b1), tape.input(l.w2),
                     tape.input(l.b2), tape.input(l.w_update), tape.input(l.gain)});
  }
  v.w_out = tape.input(p.w_out);
  v.b_out = tape.input(p.b_out);
  v.w_score = tape.input(p.w_score);
  v.b_score = tape.input(p.b_score);
  return v;
}

// Collects registered parameter leaves in Parameters::visit order so
// gradients can be read back positionally.
std::vector<ad::Tape::Var> param_leaves(const ParamVars& v) {
  std::vector<ad::Tape::Var> out;
  for (const auto& l : v.rel) {
    out.push_back(l.meta);
    out.push_back(l.w_update);
    out.push_back(l.gain);
  }
  for (const auto& l : v.ent) {
    out.push_back(l.w1);
    out.push_back(l.b1);
    out.push_back(l.w2);
    out.push_back(l.b2);
    out.push_back(l.w_update);
    out.push_back(l.gain);
  }
  out.push_back(v.w_out);
  out.push_back(v.b_out);
  out.push_back(v.w_score);
  out.push_back(v.b_score);
  return out;
}

ad::Tape::Var relation_forward(ad::Tape& tape, const TypedMessagePairs& pairs,
                               int q, const ParamVars& pv,
                               const ModelConfig& cfg) {
  if (q < 0 || q >= pairs.num_nodes) {
    throw Error("encode_relations: query relation is not a node");
  }
  ad::Matrix init(pairs.num_nodes, cfg.d);
  for (int j = 0; j < cfg.d; ++j) init(q, j) = 1.0;
  ad::Tape::Var h = tape.input(std::move(init));

  for (const auto& layer : pv.rel) {
    ad::Tape::Var agg = -1;
    for (std::size_t z = 0; z < pairs.per_type.size(); ++z) {
      const auto& pz = pairs.per_type[z];
      if (pz.empty()) continue;
      std::vector<int> srcs(pz.size());
      std::vector<int> dsts(pz.size());
      for (std::size_t i = 0; i < pz.size(); ++i) {
        srcs[i] = pz[i].first;
        dsts[i] = pz[i].second;
      }
      ad::Tape::Var meta_row =
          tape.gather_rows(layer.meta, {static_cast<int>(z)});
      ad::Tape::Var msgs =
          tape.row_broadcast_mul(tape.gather_rows(h, std::move(srcs)), meta_row);
      ad::Tape::Var partial =
          tape.scatter_add_rows(msgs, std::move(dsts), pairs.num_nodes);
      agg = agg < 0 ? partial : tape.add(agg, partial);
    }
    if (agg < 0) agg = tape.input(ad::Matrix(pairs.num_nodes, cfg.d));
    ad::Tape::Var u = tape.matmul_nt(tape.concat_cols(h, agg), layer.w_update);
    h = tape.layer_norm_rows(u, layer.gain, cfg.layer_norm_eps);
  }
  return h;
}

ad::Tape::Var mlp_forward(ad::Tape& tape, ad::Tape::Var x,
                          const EntLayerVars& l) {
  ad::Tape::Var hidden =
      tape.relu(tape.row_broadcast_add(tape.matmul_nt(x, l.w1), l.b1));
  return tape.row_broadcast_add(tape.matmul_nt(hidden, l.w2), l.b2);
}

struct TripleIndex {
  std::vector<int> heads, rels, tails;
};

TripleIndex index_triples(const KnowledgeGraph& g) {
  TripleIndex ti;
  ti.heads.reserve(g.num_triples());
  ti.rels.reserve(g.num_triples());
  ti.tails.reserve(g.num_triples());
  for (const Triple& t : g.triples()) {
    ti.heads.push_back(static_cast<int>(t.head));
    ti.rels.push_back(static_cast<int>(t.relation));
    ti.tails.push_back(static_cast<int>(t.tail));
  }
  return ti;
}

// The message graph with the query triple and its inverse twin hidden.
TripleIndex masked_index(const KnowledgeGraph& g, const TripleIndex& ti,
                         const TrainSample& s) {
  TripleIndex out;
  const bool augmented = g.inverse_augmented();
  for (std::size_t i = 0; i < ti.heads.size(); ++i) {
    const auto h = static_cast<EntityId>(ti.heads[i]);
    const auto r = static_cast<RelationId>(ti.rels[i]);
    const auto t = static_cast<EntityId>(ti.tails[i]);
    if (h == s.head && r == s.relation && t == s.tail) continue;
    if (augmented && h == s.tail && r == inverse_relation(s.relation) &&
        t == s.head) {
      continue;
    }
    out.heads.push_back(ti.heads[i]);
    out.rels.push_back(ti.rels[i]);
    out.tails.push_back(ti.tails[i]);
  }
  return out;
}

ad::Tape::Var entity_forward(ad::Tape& tape, const KnowledgeGraph& g,
                             const TripleIndex& ti, ad::Tape::Var rel_embedding,
                             int q, int h, const ParamVars& pv,
                             const ModelConfig& cfg) {
  if (h < 0 || h >= static_cast<int>(g.num_entities())) {
    throw Error("encode_entities: head entity out of range");
  }
  if (q < 0 || q >= tape.value(rel_embedding).rows) {
    throw Error("encode_entities: query relation out of range");
  }
  const int ne = static_cast<int>(g.num_entities());
  ad::Tape::Var q_row = tape.gather_rows(rel_embedding, {q});
  ad::Tape::Var he = tape.scatter_add_rows(q_row, {h}, ne);

  for (const auto& layer : pv.ent) {
    ad::Tape::Var agg;
    if (ti.heads.empty()) {
      agg = tape.input(ad::Matrix(ne, cfg.d));
    } else {
      ad::Tape::Var rel_rows;
      if (cfg.entity_message == EntityMessage::kPerRelationRow) {
        ad::Tape::Var f = mlp_forward(tape, rel_embedding, layer);
        rel_rows = tape.gather_rows(f, ti.rels);
      } else {
        ad::Tape::Var f = mlp_forward(tape, q_row, layer);
        rel_rows = tape.gather_rows(
            f, std::vector<int>(ti.heads.size(), 0));
      }
      ad::Tape::Var msgs = tape.mul(tape.gather_rows(he, ti.heads), rel_rows);
      agg = tape.scatter_add_rows(msgs, ti.tails, ne);
    }
    ad::Tape::Var u = tape.matmul_nt(tape.concat_cols(he, agg), layer.w_update);
    he = tape.layer_norm_rows(u, layer.gain, cfg.layer_norm_eps);
  }
  return he;
}

ad::Tape::Var score_head(ad::Tape& tape, ad::Tape::Var entity_embedding,
                         const ParamVars& pv) {
  ad::Tape::Var projected = tape.row_broadcast_add(
      tape.matmul_nt(entity_embedding, pv.w_out), pv.b_out);
  return tape.row_broadcast_add(tape.matmul(projected, pv.w_score), pv.b_score);
}

}  // namespace

ad::Matrix encode_relations(const RelationGraph& rg, RelationId q,
                            const Parameters& params, const ModelConfig& cfg) {
  cfg.validate();
  if (q >= rg.num_nodes()) {
    throw Error("encode_relations: query relation is not a node of the graph");
  }
  ad::Tape tape;
  ParamVars pv = register_params(tape, params);
  auto pairs = relation_message_pairs(rg);
  return tape.value(relation_forward(tape, pairs, static_cast<int>(q), pv, cfg));
}

ad::Matrix encode_with_pairs(const TypedMessagePairs& pairs, int q,
                             const Parameters& params, const ModelConfig& cfg) {
  cfg.validate();
  if (params.num_patterns < static_cast<int>(pairs.per_type.size())) {
    throw Error("encode_with_pairs: more edge types than meta embeddings");
  }
  ad::Tape tape;
  ParamVars pv = register_params(tape, params);
  return tape.value(relation_forward(tape, pairs, q, pv, cfg));
}

ad::Matrix motif_baseline_encode(const std::vector<HyperEdge>& hyperedges,
                                 int num_relations, RelationId q,
                                 const Parameters& params,
                                 const ModelConfig& cfg) {
  TypedMessagePairs pairs = motif_message_pairs(hyperedges, num_relations);
  return encode_with_pairs(pairs, static_cast<int>(q), params, cfg);
}

ad::Matrix encode_entities(const KnowledgeGraph& g,
                           const ad::Matrix& relation_embedding, RelationId q,
                           EntityId h, const Parameters& params,
                           const ModelConfig& cfg) {
  cfg.validate();
  ad::Tape tape;
  ParamVars pv = register_params(tape, params);
  ad::Tape::Var rel = tape.input(relation_embedding);
  auto ti = index_triples(g);
  return tape.value(entity_forward(tape, g, ti, rel, static_cast<int>(q),
                                   static_cast<int>(h), pv, cfg));
}

std::vector<double> score_all(const KnowledgeGraph& g, const RelationGraph& rg,
                              const Parameters& params, const ModelConfig& cfg,
                              EntityId h, RelationId q) {
  cfg.validate();
  if (g.num_relations() != rg.num_nodes()) {
    throw Error("score: relation graph does not match the knowledge graph");
  }
  ad::Tape tape;
  ParamVars pv = register_params(tape, params);
  auto pairs = relation_message_pairs(rg);
  auto ti = index_triples(g);
  ad::Tape::Var rel = relation_forward(tape, pairs, static_cast<int>(q), pv, cfg);
  ad::Tape::Var ent = entity_forward(tape, g, ti, rel, static_cast<int>(q),
                                     static_cast<int>(h), pv, cfg);
  ad::Tape::Var logits = score_head(tape, ent, pv);
  const ad::Matrix& m = tape.value(logits);
  std::vector<double> out(m.a.begin(), m.a.end());
  return out;
}

double score(const KnowledgeGraph& g, const RelationGraph& rg,
             const Parameters& params, const ModelConfig& cfg, EntityId h,
             RelationId q, EntityId e) {
  if (e >= g.num_entities()) throw Error("score: tail entity out of range");
  return score_all(g, rg, params, cfg, h, q)[e];
}

double bce_loss(const std::vector<double>& positive_logits,
                const std::vector<std::vector<double>>& negative_logits) {
  if (positive_logits.empty()) throw Error("bce_loss: empty batch");
  if (negative_logits.size() != positive_logits.size()) {
    throw Error("bce_loss: one negative set per positive required");
  }
  auto softplus = [](double x) {
    return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
  };
  double total = 0;
  for (std::size_t i = 0; i < positive_logits.size(); ++i) {
    if (negative_logits[i].empty()) {
      throw Error("bce_loss: every positive needs at least one negative");
    }
    double item = -softplus(-positive_logits[i]);  // log sigma
    double neg = 0;
    for (double x : negative_logits[i]) neg += -softplus(x);  // log(1 - sigma)
    item += neg / static_cast<double>(negative_logits[i].size());
    total += item;
  }
  return -total / static_cast<double>(positive_logits.size());
}

// ---------------------------------------------------------------------------
// training
// ---------------------------------------------------------------------------

namespace {

ad::Tape::Var batch_loss_forward(ad::Tape& tape, const KnowledgeGraph& g,
                                 const TypedMessagePairs& pairs,
                                 const TripleIndex& ti, const ParamVars& pv,
                                 const ModelConfig& cfg,
                                 const std::vector<TrainSample>& batch) {
  if (batch.empty()) throw Error("loss: empty batch");
  std::map<RelationId, ad::Tape::Var> rel_cache;
  ad::Tape::Var total = -1;
  for (const TrainSample& s : batch) {
    auto it = rel_cache.find(s.relation);
    ad::Tape::Var rel;
    if (it == rel_cache.end()) {
      rel = relation_forward(tape, pairs, static_cast<int>(s.relation), pv, cfg);
      rel_cache.emplace(s.relation, rel);
    } else {
      rel = it->second;
    }
    ad::Tape::Var ent;
    if (cfg.remove_target_edge) {
      TripleIndex masked = masked_index(g, ti, s);
      ent = entity_forward(tape, g, masked, rel, static_cast<int>(s.relation),
                           static_cast<int>(s.head), pv, cfg);
    } else {
      ent = entity_forward(tape, g, ti, rel, static_cast<int>(s.relation),
                           static_cast<int>(s.head), pv, cfg);
    }
    ad::Tape::Var logits = score_head(tape, ent, pv);

    if (s.negatives.empty()) {
      throw Error("loss: every positive needs at least one negative");
    }
    ad::Tape::Var pos_logit =
        tape.gather_rows(logits, {static_cast<int>(s.tail)});
    std::vector<int> neg_idx(s.negatives.begin(), s.negatives.end());
    ad::Tape::Var neg_logits = tape.gather_rows(logits, std::move(neg_idx));

    ad::Tape::Var item = tape.sum_all(tape.log_logistic(pos_logit));
    ad::Tape::Var neg_term = tape.log1m_logistic(neg_logits);
    if (cfg.self_adversarial) {
      // softmax weights over the negatives, treated as constants
      const ad::Matrix& nl = tape.value(neg_logits);
      double mx = nl.a[0];
      for (double x : nl.a) mx = std::max(mx, x);
      double zsum = 0;
      ad::Matrix w(nl.rows, 1);
      for (std::size_t i = 0; i < nl.a.size(); ++i) {
        w.a[i] = std::exp((nl.a[i] - mx) / cfg.adversarial_temperature);
        zsum += w.a[i];
      }
      for (double& x : w.a) x /= zsum;
      item = tape.add(item, tape.sum_all(tape.mul(neg_term, tape.input(std::move(w)))));
    } else {
      item = tape.add(
          item, tape.scale(tape.sum_all(neg_term),
                           1.0 / static_cast<double>(s.negatives.size())));
    }
    total = total < 0 ? item : tape.add(total, item);
  }
  return tape.scale(total, -1.0 / static_cast<double>(batch.size()));
}

}  // namespace

double loss_and_gradients(const KnowledgeGraph& g, const RelationGraph& rg,
                          Parameters& params, const ModelConfig& cfg,
                          const std::vector<TrainSample>& batch,
                          std::vector<ad::Matrix>* grads) {
  ad::Tape tape;
  ParamVars pv = register_params(tape, params);
  auto pairs = relation_message_pairs(rg);
  auto ti = index_triples(g);
  ad::Tape::Var loss = batch_loss_forward(tape, g, pairs, ti, pv, cfg, batch);
  const double value = tape.value(loss).a[0];
  if (grads) {
    tape.backward(loss);
    grads->clear();
    for (ad::Tape::Var v : param_leaves(pv)) grads->push_back(tape.grad(v));
  }
  return value;
}

namespace {

struct AdamState {
  std::vector<ad::Matrix> m;
  std::vector<ad::Matrix> v;
};

void adamw_step(Parameters& params, const std::vector<ad::Matrix>& grads,
                AdamState& state, const ModelConfig& cfg, int t) {
  constexpr double beta1 = 0.9;
  constexpr double beta2 = 0.999;
  constexpr double eps = 1e-8;
  std::size_t i = 0;
  params.visit([&](const std::string&, ad::Matrix& p) {
    const ad::Matrix& grad = grads[i];
    ad::Matrix& m = state.m[i];
    ad::Matrix& v = state.v[i];
    const double bc1 = 1.0 - std::pow(beta1, t);
    const double bc2 = 1.0 - std::pow(beta2, t);
    for (std::size_t k = 0; k < p.a.size(); ++k) {
      m.a[k] = beta1 * m.a[k] + (1.0 - beta1) * grad.a[k];
      v.a[k] = beta2 * v.a[k] + (1.0 - beta2) * grad.a[k] * grad.a[k];
      const double mhat = m.a[k] / bc1;
      const double vhat = v.a[k] / bc2;
      p.a[k] -= cfg.learning_rate *
                (mhat / (std::sqrt(vhat) + eps) + cfg.weight_decay * p.a[k]);
    }
    ++i;
  });
}

std::vector<EntityId> sample_negatives(const KnowledgeGraph& g, EntityId h,
                                       RelationId q, int count,
                                       std::mt19937_64& rng) {
  const auto ne = static_cast<EntityId>(g.num_entities());
  std::uniform_int_distribution<EntityId> dist(0, ne - 1);
  std::vector<EntityId> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    EntityId cand = 0;
    bool ok = false;
    for (int attempt = 0; attempt < 100; ++attempt) {
      cand = dist(rng);
      if (!g.has_triple(h, q, cand)) {
        ok = true;
        break;
      }
    }
    if (!ok) {
      // dense corner: walk from a random offset to the first false triple
      EntityId start = dist(rng);
      for (EntityId step = 0; step < ne; ++step) {
        EntityId c = (start + step) % ne;
        if (!g.has_triple(h, q, c)) {
          cand = c;
          ok = true;
          break;
        }
      }
    }
    if (!ok) {
      throw Error("negative sampling: every entity is a true tail for this query");
    }
    out.push_back(cand);
  }
  return out;
}

}  // namespace

Parameters train(const KnowledgeGraph& g, const RelationGraph& rg,
                 const ModelConfig& cfg, TrainStats* stats,
                 const std::function<void(int, double)>& metrics_sink) {
  cfg.validate();
  if (g.num_triples() == 0) throw Error("train: the graph has no triples");
  if (g.num_relations() != rg.num_nodes()) {
    throw Error("train: relation graph does not match the knowledge graph");
  }

  Parameters params = Parameters::init(cfg, static_cast<int>(rg.edge_types().size()));
  AdamState adam;
  params.visit([&](const std::string&, ad::Matrix& m) {
    adam.m.emplace_back(m.rows, m.cols);
    adam.v.emplace_back(m.rows, m.cols);
  });

  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
  const auto& triples = g.triples();
  std::uniform_int_distribution<std::size_t> pick(0, triples.size() - 1);

  // fixed evaluation batch for the before/after loss comparison
  std::vector<TrainSample> eval_batch;
  {
    std::mt19937_64 eval_rng(cfg.seed ^ 0xc2b2ae3d27d4eb4full);
    const std::size_t n = std::min<std::size_t>(triples.size(), 64);
    for (std::size_t i = 0; i < n; ++i) {
      const Triple& t = triples[i];
      eval_batch.push_back({t.head, t.relation, t.tail,
                            sample_negatives(g, t.head, t.relation,
                                             cfg.negatives, eval_rng)});
    }
  }

  if (stats) {
    stats->initial_loss =
        loss_and_gradients(g, rg, params, cfg, eval_batch, nullptr);
    stats->loss_per_step.clear();
  }

  std::vector<ad::Matrix> grads;
  for (int step = 0; step < cfg.steps; ++step) {
    std::vector<TrainSample> batch;
    batch.reserve(cfg.batch_size);
    for (int b = 0; b < cfg.batch_size; ++b) {
      const Triple& t = triples[pick(rng)];
      batch.push_back({t.head, t.relation, t.tail,
                       sample_negatives(g, t.head, t.relation, cfg.negatives, rng)});
    }
    const double loss = loss_and_gradients(g, rg, params, cfg, batch, &grads);
    if (!std::isfinite(loss)) {
      throw Error("train: non-finite loss at step " + std::to_string(step));
    }
    adamw_step(params, grads, adam, cfg, step + 1);
    if (stats) stats->loss_per_step.push_back(loss);
    if (metrics_sink) metrics_sink(step, loss);
  }

  if (stats) {
    stats->final_loss =
        loss_and_gradients(g, rg, params, cfg, eval_batch, nullptr);
  }
  return params;
}

// ---------------------------------------------------------------------------
// checkpoint io
// ---------------------------------------------------------------------------

namespace {

nlohmann::ordered_json matrix_to_json(const ad::Matrix& m) {
  nlohmann::ordered_json j;
  j["rows"] = m.rows;
  j["cols"] = m.cols;
  j["data"] = m.a;
  return j;
}

ad::Matrix matrix_from_json(const nlohmann::json& j) {
  ad::Matrix m(j.at("rows").get<int>(), j.at("cols").get<int>());
  auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != m.a.size()) throw Error("checkpoint: matrix size mismatch");
  m.a = std::move(data);
  return m;
}

nlohmann::ordered_json config_to_json(const ModelConfig& cfg) {
  nlohmann::ordered_json j;
  j["d"] = cfg.d;
  j["relation_layers"] = cfg.relation_layers;
  j["entity_layers"] = cfg.entity_layers;
  j["negatives"] = cfg.negatives;
  j["adversarial_temperature"] = cfg.adversarial_temperature;
  j["self_adversarial"] = cfg.self_adversarial;
  j["seed"] = cfg.seed;
  j["message_kind"] = cfg.message_kind;
  j["norm_kind"] = cfg.norm_kind;
  j["entity_message"] = cfg.entity_message == EntityMessage::kPerRelationRow
                            ? "per_relation_row"
                            : "query_row";
  j["layer_norm_eps"] = cfg.layer_norm_eps;
  j["learning_rate"] = cfg.learning_rate;
  j["weight_decay"] = cfg.weight_decay;
  j["batch_size"] = cfg.batch_size;
  j["steps"] = cfg.steps;
  return j;
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  cfg.d = j.at("d").get<int>();
  cfg.relation_layers = j.at("relation_layers").get<int>();
  cfg.entity_layers = j.at("entity_layers").get<int>();
  cfg.negatives = j.at("negatives").get<int>();
  cfg.adversarial_temperature = j.at("adversarial_temperature").get<double>();
  cfg.self_adversarial = j.value("self_adversarial", false);
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.message_kind = j.at("message_kind").get<std::string>();
  cfg.norm_kind = j.at("norm_kind").get<std::string>();
  cfg.entity_message = j.at("entity_message").get<std::string>() == "query_row"
                           ? EntityMessage::kQueryRow
                           : EntityMessage::kPerRelationRow;
  cfg.layer_norm_eps = j.at("layer_norm_eps").get<double>();
  cfg.learning_rate = j.value("learning_rate", 5e-4);
  cfg.weight_decay = j.value("weight_decay", 0.0);
  cfg.batch_size = j.value("batch_size", 8);
  cfg.steps = j.value("steps", 200);
  return cfg;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Parameters& params,
                     const ModelConfig& cfg, const std::string& vocabulary_name,
                     const std::string& config_hash) {
  nlohmann::ordered_json j;
  j["format"] = "kgm-checkpoint";
  j["version"] = 1;
  j["vocabulary"] = vocabulary_name;
  j["config"] = config_to_json(cfg);
  j["num_patterns"] = params.num_patterns;
  nlohmann::ordered_json jp;
  const_cast<Parameters&>(params).visit(
      [&](const std::string& name, ad::Matrix& m) { jp[name] = matrix_to_json(m); });
  j["params"] = std::move(jp);
  if (!config_hash.empty()) j["config_hash"] = config_hash;

  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const std::string& expected_vocabulary) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("checkpoint: ") + e.what());
  }
  if (j.value("format", "") != "kgm-checkpoint" || j.value("version", 0) != 1) {
    throw Error("checkpoint: unrecognized format or version");
  }
  Checkpoint ck;
  ck.vocabulary_name = j.at("vocabulary").get<std::string>();
  if (!expected_vocabulary.empty() && ck.vocabulary_name != expected_vocabulary) {
    throw Error("checkpoint was trained with vocabulary '" + ck.vocabulary_name +
                "', refusing to use it with '" + expected_vocabulary + "'");
  }
  ck.cfg = config_from_json(j.at("config"));
  ck.params = Parameters::init(ck.cfg, j.at("num_patterns").get<int>());
  ck.params.visit([&](const std::string& name, ad::Matrix& m) {
    m = matrix_from_json(j.at("params").at(name));
  });
  return ck;
}

}  // namespace kgm
