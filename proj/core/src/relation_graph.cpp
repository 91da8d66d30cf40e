#include "kgm/relation_graph.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace kgm {

RelationGraph RelationGraph::build(const KnowledgeGraph& g, const Vocabulary& v,
                                   std::uint64_t epsilon,
                                   const MatchOptions& opts, unsigned threads) {
  if (epsilon < 1) throw Error("relation graph: epsilon must be >= 1");
  auto classes = mine(g, v, opts, threads);
  std::vector<std::string> edge_types;
  edge_types.reserve(v.patterns.size());
  for (const auto& p : v.patterns) edge_types.push_back(p.name);
  return from_classes(g.relation_names(), std::move(edge_types), classes,
                      epsilon, g.inverse_augmented());
}

RelationGraph RelationGraph::from_classes(
    std::vector<std::string> node_names, std::vector<std::string> edge_types,
    const std::vector<OccurrenceClass>& classes, std::uint64_t epsilon,
    bool mined_on_augmented) {
  RelationGraph rg;
  rg.node_names_ = std::move(node_names);
  rg.edge_types_ = std::move(edge_types);
  rg.epsilon_ = epsilon;
  rg.mined_on_augmented_ = mined_on_augmented;
  for (const auto& c : classes) {
    if (c.weight < epsilon) continue;
    int type = rg.type_index(c.pattern);
    if (type < 0) throw Error("relation graph: class pattern not in edge types: " + c.pattern);
    if (c.r1 >= rg.node_names_.size() || c.r2 >= rg.node_names_.size()) {
      throw Error("relation graph: edge references an unknown relation");
    }
    rg.edges_.push_back({type, c.r1, c.r2, c.weight});
  }
  std::sort(rg.edges_.begin(), rg.edges_.end());
  rg.build_inbound_index();
  return rg;
}

int RelationGraph::type_index(std::string_view pattern_name) const {
  for (std::size_t i = 0; i < edge_types_.size(); ++i) {
    if (edge_types_[i] == pattern_name) return static_cast<int>(i);
  }
  return -1;
}

void RelationGraph::build_inbound_index() {
  inbound_.assign(edge_types_.size(),
                  std::vector<std::vector<RelationId>>(node_names_.size()));
  for (const auto& e : edges_) {
    inbound_[e.type][e.dst].push_back(e.src);
  }
  for (auto& per_type : inbound_) {
    for (auto& sources : per_type) std::sort(sources.begin(), sources.end());
  }
}

const std::vector<RelationId>& RelationGraph::meta_neighborhood(
    std::string_view pattern_name, RelationId r) const {
  int type = type_index(pattern_name);
  if (type < 0) return empty_;
  return meta_neighborhood(type, r);
}

const std::vector<RelationId>& RelationGraph::meta_neighborhood(
    int type, RelationId r) const {
  if (type < 0 || type >= static_cast<int>(inbound_.size()) ||
      r >= node_names_.size()) {
    return empty_;
  }
  return inbound_[type][r];
}

std::string RelationGraph::to_json_string() const {
  nlohmann::ordered_json j;
  j["nodes"] = node_names_;
  j["edge_types"] = edge_types_;
  auto edges = nlohmann::ordered_json::array();
  for (const auto& e : edges_) {
    nlohmann::ordered_json je;
    je["type"] = edge_types_[e.type];
    je["src"] = node_names_[e.src];
    je["dst"] = node_names_[e.dst];
    je["w"] = e.weight;
    edges.push_back(std::move(je));
  }
  j["edges"] = edges;
  j["epsilon"] = epsilon_;
  j["mined_on_augmented"] = mined_on_augmented_;
  return j.dump(2) + "\n";
}

RelationGraph RelationGraph::from_json_string(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("relation graph json: ") + e.what());
  }
  RelationGraph rg;
  rg.node_names_ = j.at("nodes").get<std::vector<std::string>>();
  rg.edge_types_ = j.at("edge_types").get<std::vector<std::string>>();
  rg.epsilon_ = j.at("epsilon").get<std::uint64_t>();
  rg.mined_on_augmented_ = j.value("mined_on_augmented", false);

  auto node_index = [&](const std::string& name) {
    for (std::size_t i = 0; i < rg.node_names_.size(); ++i) {
      if (rg.node_names_[i] == name) return static_cast<RelationId>(i);
    }
    throw Error("relation graph json: unknown node " + name);
  };
  for (const auto& je : j.at("edges")) {
    RelationGraphEdge e{};
    e.type = rg.type_index(je.at("type").get<std::string>());
    if (e.type < 0) {
      throw Error("relation graph json: unknown edge type " +
                  je.at("type").get<std::string>());
    }
    e.src = node_index(je.at("src").get<std::string>());
    e.dst = node_index(je.at("dst").get<std::string>());
    e.weight = je.at("w").get<std::uint64_t>();
    rg.edges_.push_back(e);
  }
  std::sort(rg.edges_.begin(), rg.edges_.end());
  rg.build_inbound_index();
  return rg;
}

void RelationGraph::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << to_json_string();
  if (!out) throw Error("write failed: " + path.string());
}

void RelationGraph::save_tsv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& e : edges_) {
    out << edge_types_[e.type] << '\t' << node_names_[e.src] << '\t'
        << node_names_[e.dst] << '\t' << e.weight << '\n';
  }
  if (!out) throw Error("write failed: " + path.string());
}

RelationGraph RelationGraph::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_string(ss.str());
}

}  // namespace kgm
