#include "kgm/matcher.hpp"

#include <algorithm>
#include <atomic>
#include <limits>
#include <ostream>
#include <thread>

namespace kgm {

namespace {

constexpr EntityId kUnbound = std::numeric_limits<EntityId>::max();

void checked_increment(std::uint64_t& w) {
  if (w == std::numeric_limits<std::uint64_t>::max()) {
    throw Error("occurrence weight overflow");
  }
  ++w;
}

// Edge visit order: a rel1 edge seeds the search, every later edge touches
// an already-bound variable, wildcard edges go last among the eligible.
std::vector<int> plan_edges(const GraphletPattern& p) {
  const int n = static_cast<int>(p.edges.size());
  std::vector<int> order;
  std::vector<bool> used(n, false);
  std::vector<bool> bound(p.num_vars, false);

  int seed = -1;
  for (int i = 0; i < n; ++i) {
    if (p.edges[i].slot == Slot::kRel1) {
      seed = i;
      break;
    }
  }
  if (seed < 0) throw Error("pattern has no rel1 anchor");
  order.push_back(seed);
  used[seed] = true;
  bound[p.edges[seed].src] = bound[p.edges[seed].dst] = true;

  while (static_cast<int>(order.size()) < n) {
    int best = -1;
    int best_rank = 100;
    for (int i = 0; i < n; ++i) {
      if (used[i]) continue;
      const auto& e = p.edges[i];
      bool sb = bound[e.src];
      bool db = bound[e.dst];
      if (!sb && !db) continue;
      int rank = (sb && db ? 0 : 2) + (e.slot == Slot::kWildcard ? 1 : 0);
      if (rank < best_rank) {
        best_rank = rank;
        best = i;
      }
    }
    if (best < 0) throw Error("pattern graph is not connected");
    used[best] = true;
    bound[p.edges[best].src] = bound[p.edges[best].dst] = true;
    order.push_back(best);
  }
  return order;
}

class Matcher {
 public:
  Matcher(const KnowledgeGraph& g, const GraphletPattern& p, RelationId r1,
          RelationId r2, MatchMode mode, RelationId pinned_wildcard)
      : g_(g),
        p_(p),
        r1_(r1),
        r2_(r2),
        mode_(mode),
        pinned_wildcard_(pinned_wildcard),
        order_(plan_edges(p)),
        binding_(p.num_vars, kUnbound) {}

  std::uint64_t run() {
    extend(0);
    return count_;
  }

 private:
  bool done() const { return mode_ == MatchMode::kExistence && count_ > 0; }

  bool can_bind(int var, EntityId value) const {
    for (int u = 0; u < p_.num_vars; ++u) {
      if (binding_[u] == value && u != var && p_.requires_distinct(var, u)) {
        return false;
      }
    }
    return true;
  }

  void extend(std::size_t k) {
    if (done()) return;
    if (k == order_.size()) {
      checked_increment(count_);
      return;
    }
    const PatternEdge& e = p_.edges[order_[k]];
    const EntityId sv = binding_[e.src];
    const EntityId dv = binding_[e.dst];

    if (e.slot != Slot::kWildcard) {
      const RelationId rel = e.slot == Slot::kRel1 ? r1_ : r2_;
      if (sv != kUnbound && dv != kUnbound) {
        if (g_.has_triple(sv, rel, dv)) extend(k + 1);
      } else if (sv != kUnbound) {
        for (EntityId t : g_.tails(rel, sv)) {
          if (!try_bind(e.dst, t)) continue;
          extend(k + 1);
          binding_[e.dst] = kUnbound;
          if (done()) return;
        }
      } else if (dv != kUnbound) {
        for (EntityId h : g_.heads(rel, dv)) {
          if (!try_bind(e.src, h)) continue;
          extend(k + 1);
          binding_[e.src] = kUnbound;
          if (done()) return;
        }
      } else {
        // seed edge
        if (e.src == e.dst) {
          for (const auto& [h, t] : g_.edges_of(rel)) {
            if (h != t || !try_bind(e.src, h)) continue;
            extend(k + 1);
            binding_[e.src] = kUnbound;
            if (done()) return;
          }
        } else {
          for (const auto& [h, t] : g_.edges_of(rel)) {
            if (!try_bind(e.src, h)) continue;
            if (try_bind(e.dst, t)) {
              extend(k + 1);
              binding_[e.dst] = kUnbound;
            }
            binding_[e.src] = kUnbound;
            if (done()) return;
          }
        }
      }
      return;
    }

    // wildcard edge: the relation is a free variable and every choice is a
    // distinct assignment
    if (sv != kUnbound && dv != kUnbound) {
      if (pinned_wildcard_ != kNoPin) {
        if (g_.has_triple(sv, pinned_wildcard_, dv)) extend(k + 1);
      } else {
        for ([[maybe_unused]] RelationId r : g_.relations_between(sv, dv)) {
          extend(k + 1);
          if (done()) return;
        }
      }
    } else if (sv != kUnbound) {
      if (pinned_wildcard_ != kNoPin) {
        for (EntityId t : g_.tails(pinned_wildcard_, sv)) {
          if (!try_bind(e.dst, t)) continue;
          extend(k + 1);
          binding_[e.dst] = kUnbound;
          if (done()) return;
        }
      } else {
        for (const auto& [r, t] : g_.out_edges(sv)) {
          if (!try_bind(e.dst, t)) continue;
          extend(k + 1);
          binding_[e.dst] = kUnbound;
          if (done()) return;
        }
      }
    } else if (dv != kUnbound) {
      if (pinned_wildcard_ != kNoPin) {
        for (EntityId h : g_.heads(pinned_wildcard_, dv)) {
          if (!try_bind(e.src, h)) continue;
          extend(k + 1);
          binding_[e.src] = kUnbound;
          if (done()) return;
        }
      } else {
        for (const auto& [r, h] : g_.in_edges(dv)) {
          if (!try_bind(e.src, h)) continue;
          extend(k + 1);
          binding_[e.src] = kUnbound;
          if (done()) return;
        }
      }
    } else {
      throw Error("wildcard edge reached with no bound endpoint");
    }
  }

  bool try_bind(int var, EntityId value) {
    if (binding_[var] != kUnbound) return binding_[var] == value;
    if (!can_bind(var, value)) return false;
    binding_[var] = value;
    return true;
  }

 public:
  static constexpr RelationId kNoPin = std::numeric_limits<RelationId>::max();

 private:
  const KnowledgeGraph& g_;
  const GraphletPattern& p_;
  const RelationId r1_;
  const RelationId r2_;
  const MatchMode mode_;
  const RelationId pinned_wildcard_;
  const std::vector<int> order_;
  std::vector<EntityId> binding_;
  std::uint64_t count_ = 0;
};

void validate_anchors(const KnowledgeGraph& g, RelationId r1, RelationId r2,
                      const MatchOptions& opts) {
  if (r1 >= g.num_relations() || r2 >= g.num_relations()) {
    throw Error("match_pattern: relation id out of range");
  }
  if (opts.injective_relations && r1 == r2) {
    throw Error("match_pattern: anchored relations must differ (injective mode)");
  }
}

}  // namespace

std::uint64_t match_pattern(const KnowledgeGraph& g, const GraphletPattern& p,
                            RelationId r1, RelationId r2,
                            const MatchOptions& opts) {
  validate_anchors(g, r1, r2, opts);
  Matcher m(g, p, r1, r2, opts.mode, Matcher::kNoPin);
  return m.run();
}

std::uint64_t motif_ternary_count(const KnowledgeGraph& g,
                                  const GraphletPattern& p, RelationId r1,
                                  RelationId rmid, RelationId r2,
                                  const MatchOptions& opts) {
  validate_anchors(g, r1, r2, opts);
  if (rmid >= g.num_relations()) {
    throw Error("motif_ternary_count: relation id out of range");
  }
  if (!p.has_wildcard()) {
    throw Error("motif_ternary_count: pattern has no free middle slot");
  }
  Matcher m(g, p, r1, r2, opts.mode, rmid);
  return m.run();
}

namespace {

struct Task {
  std::size_t pattern;
  RelationId r1;
  RelationId r2;
};

std::vector<Task> build_tasks(const KnowledgeGraph& g, const Vocabulary& v,
                              const MatchOptions& opts) {
  std::vector<Task> tasks;
  const auto nr = static_cast<RelationId>(g.num_relations());
  for (std::size_t pi = 0; pi < v.patterns.size(); ++pi) {
    for (RelationId a = 0; a < nr; ++a) {
      for (RelationId b = 0; b < nr; ++b) {
        if (opts.injective_relations && a == b) continue;
        tasks.push_back({pi, a, b});
      }
    }
  }
  return tasks;
}

}  // namespace

std::vector<OccurrenceClass> mine(const KnowledgeGraph& g, const Vocabulary& v,
                                  const MatchOptions& opts, unsigned threads) {
  const std::vector<Task> tasks = build_tasks(g, v, opts);
  std::vector<std::uint64_t> weights(tasks.size(), 0);

  auto run_task = [&](std::size_t i) {
    const Task& t = tasks[i];
    weights[i] = match_pattern(g, v.patterns[t.pattern], t.r1, t.r2, opts);
  };

  if (threads <= 1 || tasks.size() < 2) {
    for (std::size_t i = 0; i < tasks.size(); ++i) run_task(i);
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next.fetch_add(1); i < tasks.size();
           i = next.fetch_add(1)) {
        run_task(i);
      }
    };
    std::vector<std::thread> pool;
    unsigned n = std::min<unsigned>(threads, std::thread::hardware_concurrency());
    for (unsigned i = 0; i + 1 < std::max(2u, n); ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
  }

  std::vector<OccurrenceClass> classes;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (weights[i] == 0) continue;
    classes.push_back({v.patterns[tasks[i].pattern].name, tasks[i].r1,
                       tasks[i].r2, weights[i]});
  }
  return classes;
}

namespace {

// Relations present on a bound pattern edge, as a sorted vector.
std::vector<RelationId> edge_relations(const KnowledgeGraph& g,
                                       const PatternEdge& e,
                                       const std::vector<EntityId>& binding) {
  return g.relations_between(binding[e.src], binding[e.dst]);
}

std::vector<RelationId> intersect(std::vector<RelationId> a,
                                  const std::vector<RelationId>& b) {
  std::vector<RelationId> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(out));
  return out;
}

}  // namespace

std::vector<OccurrenceClass> brute_force_mine(const KnowledgeGraph& g,
                                              const Vocabulary& v,
                                              const MatchOptions& opts) {
  if (g.num_entities() > 12) {
    throw Error(
        "brute_force_mine: graph has more than 12 entities; use mine() and "
        "keep the oracle for desk-sized graphs");
  }
  const auto ne = static_cast<EntityId>(g.num_entities());
  const auto nr = static_cast<RelationId>(g.num_relations());

  std::vector<OccurrenceClass> classes;
  for (const GraphletPattern& p : v.patterns) {
    // weight matrix for this pattern, anchored pair major
    std::vector<std::uint64_t> w(static_cast<std::size_t>(nr) * nr, 0);

    std::vector<EntityId> binding(p.num_vars, 0);
    while (true) {
      bool ok = true;
      for (const auto& [a, b] : p.distinct_pairs) {
        if (binding[a] == binding[b]) {
          ok = false;
          break;
        }
      }
      if (ok && ne > 0) {
        // candidate relations per anchored slot: the intersection over that
        // slot's edges of the relations present on the bound endpoints
        std::vector<RelationId> c1;
        std::vector<RelationId> c2;
        bool first1 = true;
        bool first2 = true;
        std::uint64_t wildcard_ways = 1;
        for (const PatternEdge& e : p.edges) {
          auto rels = edge_relations(g, e, binding);
          switch (e.slot) {
            case Slot::kRel1:
              c1 = first1 ? rels : intersect(std::move(c1), rels);
              first1 = false;
              break;
            case Slot::kRel2:
              c2 = first2 ? rels : intersect(std::move(c2), rels);
              first2 = false;
              break;
            case Slot::kWildcard:
              wildcard_ways *= rels.size();
              break;
          }
          if ((!first1 && c1.empty()) || (!first2 && c2.empty()) ||
              wildcard_ways == 0) {
            break;
          }
        }
        if (wildcard_ways > 0) {
          for (RelationId a : c1) {
            for (RelationId b : c2) {
              if (opts.injective_relations && a == b) continue;
              auto& cell = w[static_cast<std::size_t>(a) * nr + b];
              if (cell > std::numeric_limits<std::uint64_t>::max() - wildcard_ways) {
                throw Error("occurrence weight overflow");
              }
              cell += wildcard_ways;
            }
          }
        }
      }
      // next assignment (odometer)
      int var = p.num_vars - 1;
      while (var >= 0) {
        if (++binding[var] < ne) break;
        binding[var] = 0;
        --var;
      }
      if (var < 0 || ne == 0) break;
    }

    for (RelationId a = 0; a < nr; ++a) {
      for (RelationId b = 0; b < nr; ++b) {
        std::uint64_t weight = w[static_cast<std::size_t>(a) * nr + b];
        if (weight == 0) continue;
        if (opts.mode == MatchMode::kExistence) weight = 1;
        classes.push_back({p.name, a, b, weight});
      }
    }
  }
  return classes;
}

std::uint64_t spmm_count(const KnowledgeGraph& g, const GraphletPattern& p,
                         RelationId r1, RelationId r2) {
  if (!p.is_two_path()) {
    throw Error("spmm_count: only 2-path patterns are supported");
  }
  if (r1 >= g.num_relations() || r2 >= g.num_relations()) {
    throw Error("spmm_count: relation id out of range");
  }
  const PatternEdge& e1 = p.edges[0];
  const PatternEdge& e2 = p.edges[1];

  const auto n = g.num_entities();
  std::vector<char> a1(n * n, 0);
  std::vector<char> a2(n * n, 0);
  for (const auto& [h, t] : g.edges_of(r1)) a1[h * n + t] = 1;
  for (const auto& [h, t] : g.edges_of(r2)) a2[h * n + t] = 1;

  if (!p.closed) {
    // shared middle variable m, outer variables l and n
    int m = -1;
    int shared = 0;
    for (int v : {e1.src, e1.dst}) {
      if (v == e2.src || v == e2.dst) {
        m = v;
        ++shared;
      }
    }
    if (shared != 1) {
      throw Error("spmm_count: an open 2-path must share exactly one variable");
    }
    const bool u_forward = e1.dst == m;  // rel1 step enters the middle
    const bool v_forward = e2.src == m;  // rel2 step leaves the middle
    std::uint64_t total = 0;
    for (std::size_t l = 0; l < n; ++l) {
      for (std::size_t mm = 0; mm < n; ++mm) {
        if (l == mm) continue;
        const bool first =
            u_forward ? a1[l * n + mm] != 0 : a1[mm * n + l] != 0;
        if (!first) continue;
        for (std::size_t nn = 0; nn < n; ++nn) {
          if (nn == l || nn == mm) continue;
          const bool second =
              v_forward ? a2[mm * n + nn] != 0 : a2[nn * n + mm] != 0;
          if (second) checked_increment(total);
        }
      }
    }
    return total;
  }

  // closed: both edges connect the same two variables l and m
  const int l_var = std::min({e1.src, e1.dst});
  const int m_var = std::max({e1.src, e1.dst});
  if (std::min(e2.src, e2.dst) != l_var || std::max(e2.src, e2.dst) != m_var) {
    throw Error("spmm_count: closed pattern edges do not share both variables");
  }
  const bool u_forward = e1.src == l_var;  // tau(u, A^r1)[l, m]
  const bool v_forward = e2.src == m_var;  // tau(v, A^r2)[m, l]
  std::uint64_t total = 0;
  for (std::size_t l = 0; l < n; ++l) {
    for (std::size_t mm = 0; mm < n; ++mm) {
      if (l == mm) continue;
      const bool first = u_forward ? a1[l * n + mm] != 0 : a1[mm * n + l] != 0;
      const bool second = v_forward ? a2[mm * n + l] != 0 : a2[l * n + mm] != 0;
      if (first && second) checked_increment(total);
    }
  }
  return total;
}

void write_occurrences_tsv(std::ostream& out, const KnowledgeGraph& g,
                           const std::vector<OccurrenceClass>& classes) {
  for (const auto& c : classes) {
    out << c.pattern << '\t' << g.relation_name(c.r1) << '\t'
        << g.relation_name(c.r2) << '\t' << c.weight << '\n';
  }
}

}  // namespace kgm
