#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "kgm/autodiff.hpp"
#include "kgm/kg.hpp"
#include "kgm/relation_graph.hpp"

namespace kgm {

enum class EntityMessage {
  kPerRelationRow,  // f^t applied to each relation's conditional embedding
  kQueryRow,        // f^t applied to the query row only, shared by all triples
};

struct ModelConfig {
  int d = 64;
  int relation_layers = 6;
  int entity_layers = 6;
  int negatives = 256;  // desk-scale runs typically use 32
  double adversarial_temperature = 1.0;
  bool self_adversarial = false;
  std::uint64_t seed = 0;
  std::string message_kind = "elementwise_product";
  std::string norm_kind = "layer_normalization";
  EntityMessage entity_message = EntityMessage::kPerRelationRow;
  double layer_norm_eps = 1e-5;

  // training loop
  /// Hide the positive triple (and its inverse twin) from the entity
  /// encoder while scoring that query, so the model must predict the edge
  /// from the surrounding structure instead of reading it back.
  bool remove_target_edge = true;
  double learning_rate = 5e-4;
  double weight_decay = 0.0;
  int batch_size = 8;
  int steps = 200;

  void validate() const;
};

/// All trainable parameters. The update maps are bias-free so that a row
/// with no signal stays exactly zero through any number of layers.
struct Parameters {
  struct RelLayer {
    ad::Matrix meta;      // num_patterns x d, one meta-relation vector per edge type
    ad::Matrix w_update;  // d x 2d over [self | aggregate]
    ad::Matrix gain;      // 1 x d
  };
  struct EntLayer {
    ad::Matrix w1, b1, w2, b2;  // relational transform f^t
    ad::Matrix w_update;        // d x 2d
    ad::Matrix gain;            // 1 x d
  };

  std::vector<RelLayer> rel_layers;
  std::vector<EntLayer> ent_layers;
  ad::Matrix w_out;    // d x d
  ad::Matrix b_out;    // 1 x d
  ad::Matrix w_score;  // d x 1
  ad::Matrix b_score;  // 1 x 1

  int d = 0;
  int num_patterns = 0;

  static Parameters init(const ModelConfig& cfg, int num_patterns);

  template <typename F>
  void visit(F&& f) {
    for (std::size_t l = 0; l < rel_layers.size(); ++l) {
      auto tag = "rel" + std::to_string(l);
      f(tag + ".meta", rel_layers[l].meta);
      f(tag + ".w_update", rel_layers[l].w_update);
      f(tag + ".gain", rel_layers[l].gain);
    }
    for (std::size_t l = 0; l < ent_layers.size(); ++l) {
      auto tag = "ent" + std::to_string(l);
      f(tag + ".w1", ent_layers[l].w1);
      f(tag + ".b1", ent_layers[l].b1);
      f(tag + ".w2", ent_layers[l].w2);
      f(tag + ".b2", ent_layers[l].b2);
      f(tag + ".w_update", ent_layers[l].w_update);
      f(tag + ".gain", ent_layers[l].gain);
    }
    f("head.w_out", w_out);
    f("head.b_out", b_out);
    f("head.w_score", w_score);
    f("head.b_score", b_score);
  }
};

/// Message routing of a typed graph: for every edge type, the (src, dst)
/// node pairs a layer aggregates over, sorted by (dst, src) so summation
/// order is reproducible. Shared by the relation graph and by the ternary
/// hypergraph baseline.
struct TypedMessagePairs {
  int num_nodes = 0;
  std::vector<std::vector<std::pair<int, int>>> per_type;
};

TypedMessagePairs relation_message_pairs(const RelationGraph& rg);

/// A ternary hyperedge with one positional slot per relation.
struct HyperEdge {
  RelationId a, b, c;
};

/// Union of positional neighborhoods: x receives a message from y whenever
/// some hyperedge contains both, with one shared meta-embedding per type.
TypedMessagePairs motif_message_pairs(const std::vector<HyperEdge>& edges,
                                      int num_relations);

/// Conditional relation embedding R|q: one-hot-of-ones init at q, then
/// `relation_layers` rounds of product messages, sum aggregation, and a
/// normalized linear update. Rows follow the relation-graph node order.
ad::Matrix encode_relations(const RelationGraph& rg, RelationId q,
                            const Parameters& params, const ModelConfig& cfg);

/// Same recurrence over an arbitrary typed pair structure; used by the
/// ternary-hypergraph baseline.
ad::Matrix encode_with_pairs(const TypedMessagePairs& pairs, int q,
                             const Parameters& params, const ModelConfig& cfg);

/// Relation embedding over a ternary hypergraph: one shared meta-embedding
/// for the hyperedge type, messages summed over the union of positional
/// neighborhoods. A reference point for the expressiveness comparison, not
/// a full hypergraph network.
ad::Matrix motif_baseline_encode(const std::vector<HyperEdge>& hyperedges,
                                 int num_relations, RelationId q,
                                 const Parameters& params,
                                 const ModelConfig& cfg);

/// Conditional entity embedding: row h starts at q's row of R|q, everything
/// else at zero; messages flow along triples r(e', e) with the layer's
/// transform of the relation row gating each product.
ad::Matrix encode_entities(const KnowledgeGraph& g, const ad::Matrix& relation_embedding,
                           RelationId q, EntityId h, const Parameters& params,
                           const ModelConfig& cfg);

/// Logits pi(h, q, e) for every candidate tail e.
std::vector<double> score_all(const KnowledgeGraph& g, const RelationGraph& rg,
                              const Parameters& params, const ModelConfig& cfg,
                              EntityId h, RelationId q);

double score(const KnowledgeGraph& g, const RelationGraph& rg,
             const Parameters& params, const ModelConfig& cfg, EntityId h,
             RelationId q, EntityId e);

/// Plain BCE over probabilities: each positive contributes
/// -log p - (1/n) sum log(1 - p') with logits squashed by the logistic.
/// Throws on an empty batch.
double bce_loss(const std::vector<double>& positive_logits,
                const std::vector<std::vector<double>>& negative_logits);

struct TrainSample {
  EntityId head;
  RelationId relation;
  EntityId tail;
  std::vector<EntityId> negatives;  // corrupted tails
};

struct TrainStats {
  double initial_loss = 0;
  double final_loss = 0;
  std::vector<double> loss_per_step;
};

/// Deterministic single-threaded AdamW training: uniform positive
/// sampling, tail corruptions filtered against the true triple set,
/// full-batch BCE. Non-finite loss aborts with diagnostics. An optional
/// sink receives {step, loss} after every step.
Parameters train(const KnowledgeGraph& g, const RelationGraph& rg,
                 const ModelConfig& cfg, TrainStats* stats = nullptr,
                 const std::function<void(int, double)>& metrics_sink = nullptr);

/// One full forward/backward on an explicit batch; returns the loss and
/// writes gradients into `grads` (mirroring Parameters::visit order).
double loss_and_gradients(const KnowledgeGraph& g, const RelationGraph& rg,
                          Parameters& params, const ModelConfig& cfg,
                          const std::vector<TrainSample>& batch,
                          std::vector<ad::Matrix>* grads);

// checkpoint io
void save_checkpoint(const std::filesystem::path& path, const Parameters& params,
                     const ModelConfig& cfg, const std::string& vocabulary_name,
                     const std::string& config_hash = "");
struct Checkpoint {
  Parameters params;
  ModelConfig cfg;
  std::string vocabulary_name;
};
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const std::string& expected_vocabulary = "");

}  // namespace kgm
