#ifndef GTRWS_DECOMPOSITION_HPP
#define GTRWS_DECOMPOSITION_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "gtrws/error.hpp"
#include "gtrws/model.hpp"

namespace gtrws {

/// Total order on nodes: order[i] is the i-th node, rank[v] its position.
struct NodeOrder {
  std::vector<NodeId> order;
  std::vector<std::size_t> rank;

  static NodeOrder identity(std::size_t n) {
    std::vector<NodeId> perm(n);
    std::iota(perm.begin(), perm.end(), NodeId{0});
    return from_permutation(std::move(perm));
  }

  static NodeOrder from_permutation(std::vector<NodeId> perm) {
    NodeOrder o;
    o.rank.assign(perm.size(), std::numeric_limits<std::size_t>::max());
    for (std::size_t i = 0; i < perm.size(); ++i) {
      if (perm[i] >= perm.size() || o.rank[perm[i]] != std::numeric_limits<std::size_t>::max())
        throw Error(ErrorCode::InvalidArgument, "node order is not a permutation");
      o.rank[perm[i]] = i;
    }
    o.order = std::move(perm);
    return o;
  }

  std::size_t size() const { return order.size(); }
  bool less(NodeId u, NodeId v) const { return rank[u] < rank[v]; }
};

/// sigma_A = (min A, max A, remaining nodes ascending), expressed as ranks.
inline std::vector<std::size_t> sigma_key(std::span<const NodeId> scope, const NodeOrder& order) {
  std::vector<std::size_t> r;
  r.reserve(scope.size());
  for (NodeId v : scope) r.push_back(order.rank[v]);
  std::sort(r.begin(), r.end());
  std::vector<std::size_t> key;
  key.reserve(r.size() + 1);
  key.push_back(r.front());
  key.push_back(r.back());
  for (std::size_t i = 1; i + 1 < r.size(); ++i) key.push_back(r[i]);
  return key;
}

inline bool sigma_less(std::span<const NodeId> a, std::span<const NodeId> b, const NodeOrder& order) {
  return sigma_key(a, order) < sigma_key(b, order);
}

inline NodeId min_node(std::span<const NodeId> scope, const NodeOrder& order) {
  return *std::min_element(scope.begin(), scope.end(), [&](NodeId u, NodeId v) { return order.less(u, v); });
}

inline NodeId max_node(std::span<const NodeId> scope, const NodeOrder& order) {
  return *std::max_element(scope.begin(), scope.end(), [&](NodeId u, NodeId v) { return order.less(u, v); });
}

/// Separators sorted by the lexicographic sigma order; this order extends the node order.
inline std::vector<FactorId> extend_order_to_separators(const Model& model, const JStructure& js,
                                                        const NodeOrder& order) {
  std::vector<std::pair<std::vector<std::size_t>, FactorId>> keyed;
  keyed.reserve(js.separators.size());
  for (FactorId b : js.separators) keyed.emplace_back(sigma_key(model.scope(b), order), b);
  std::sort(keyed.begin(), keyed.end());
  std::vector<FactorId> out;
  out.reserve(keyed.size());
  for (auto& [k, b] : keyed) out.push_back(b);
  return out;
}

/// Monotonicity of a join: every node of left−S precedes every node of S, which precede right−S.
inline bool monotonic_join(std::span<const NodeId> left, std::span<const NodeId> right, const NodeOrder& order) {
  const Scope s = scope_intersection(left, right);
  if (s.empty()) return false;
  std::size_t left_max = 0, right_min = std::numeric_limits<std::size_t>::max();
  bool has_left = false;
  for (NodeId u : left)
    if (!std::binary_search(s.begin(), s.end(), u)) {
      left_max = std::max(left_max, order.rank[u]);
      has_left = true;
    }
  for (NodeId w : right)
    if (!std::binary_search(s.begin(), s.end(), w)) right_min = std::min(right_min, order.rank[w]);
  std::size_t s_min = std::numeric_limits<std::size_t>::max(), s_max = 0;
  for (NodeId v : s) {
    s_min = std::min(s_min, order.rank[v]);
    s_max = std::max(s_max, order.rank[v]);
  }
  return (!has_left || left_max < s_min) && s_max < right_min;
}

struct SeparatorBounds {
  FactorId minus;
  FactorId plus;
};

/// Left and right separators of `a` inside `chain`: intersections with the neighbours, or the
/// singleton of the extreme node at either end of the chain.
inline SeparatorBounds sep_bounds(const Model& model, std::span<const FactorId> chain, FactorId a,
                                  const NodeOrder& order) {
  auto pos = std::find(chain.begin(), chain.end(), a);
  if (pos == chain.end()) throw Error(ErrorCode::InvalidArgument, "factor not in chain");
  auto lookup = [&](const Scope& s) {
    auto id = model.find(s);
    if (!id) throw Error(ErrorCode::MissingSeparatorFactor, scope_string(s));
    return *id;
  };
  const Scope& sa = model.scope(a);
  SeparatorBounds out{};
  out.minus = pos == chain.begin() ? lookup(Scope{min_node(sa, order)})
                                   : lookup(scope_intersection(model.scope(*(pos - 1)), sa));
  out.plus = pos + 1 == chain.end() ? lookup(Scope{max_node(sa, order)})
                                    : lookup(scope_intersection(sa, model.scope(*(pos + 1))));
  return out;
}

struct JunctionTree {
  std::vector<FactorId> outer;
  /// Tree edges as index pairs into `outer`.
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  double rho = 1.0;
};

struct Augmentation {
  enum class Kind { SingletonFactor, IntersectionFactor, Edge };
  Kind kind;
  FactorId factor;
  Edge edge;
};

/// A set of monotonic junction chains over the outer factors together with everything the
/// chain solvers derive from it. Construction never throws on structural violations; use
/// validate_decomposition to inspect them.
class Decomposition {
 public:
  static constexpr FactorId npos = std::numeric_limits<FactorId>::max();

  Decomposition(Model model, JStructure js, NodeOrder order, std::vector<std::vector<FactorId>> chains,
                std::vector<Augmentation> augmentations = {})
      : model_(std::move(model)),
        js_(std::move(js)),
        order_(std::move(order)),
        chains_(std::move(chains)),
        augmentations_(std::move(augmentations)) {
    if (order_.size() != model_.node_count())
      throw Error(ErrorCode::InvalidArgument, "node order size does not match the model");
    derive();
  }

  const Model& model() const { return model_; }
  const JStructure& js() const { return js_; }
  const NodeOrder& node_order() const { return order_; }
  const std::vector<Augmentation>& augmentations() const { return augmentations_; }

  std::size_t chain_count() const { return chains_.size(); }
  const std::vector<std::vector<FactorId>>& chains() const { return chains_; }
  const std::vector<FactorId>& chain(std::size_t t) const { return chains_[t]; }
  double rho(std::size_t t) const { return rho_[t]; }

  /// Appearance probability of a factor: sum of rho over the chains containing it.
  double rho_factor(FactorId c) const { return rho_factor_[c]; }
  const std::vector<std::size_t>& trees_of(FactorId c) const { return trees_of_[c]; }
  const std::vector<FactorId>& tree_factors(std::size_t t) const { return tree_factors_[t]; }
  bool tree_contains(std::size_t t, FactorId c) const {
    return std::binary_search(tree_factors_[t].begin(), tree_factors_[t].end(), c);
  }

  /// Chain index of an outer factor, npos if uncovered.
  std::size_t chain_of(FactorId a) const { return chain_of_[a]; }

  FactorId sep_minus(FactorId a) const { return sep_minus_[a]; }
  FactorId sep_plus(FactorId a) const { return sep_plus_[a]; }
  /// Separators of F_A inside the window [sep-(A), sep+(A)], in separator order.
  const std::vector<FactorId>& local_separators(FactorId a) const { return local_separators_[a]; }

  const std::vector<FactorId>& separator_order() const { return separator_order_; }
  std::size_t separator_rank(FactorId b) const { return separator_rank_[b]; }

  JunctionTree junction_tree(std::size_t t) const {
    JunctionTree jt;
    jt.outer = chains_[t];
    for (std::size_t i = 0; i + 1 < jt.outer.size(); ++i) jt.edges.emplace_back(i, i + 1);
    jt.rho = rho_[t];
    return jt;
  }

  std::vector<JunctionTree> junction_trees() const {
    std::vector<JunctionTree> out;
    for (std::size_t t = 0; t < chains_.size(); ++t) out.push_back(junction_tree(t));
    return out;
  }

  /// Edges (A,B) with A outer and B in its separator window; these carry the stored messages.
  std::vector<Edge> message_edges() const {
    std::vector<Edge> out;
    for (FactorId a : js_.outer)
      for (FactorId b : local_separators_[a]) out.emplace_back(a, b);
    return out;
  }

  /// Restriction map from the states of `a` to the states of `b` for b ∈ F_a (b == a allowed).
  const std::vector<std::size_t>& restriction(FactorId a, FactorId b) const {
    const auto& row = maps_[a];
    auto it = std::lower_bound(row.begin(), row.end(), b,
                               [](const auto& entry, FactorId key) { return entry.first < key; });
    if (it == row.end() || it->first != b)
      throw Error(ErrorCode::InvalidEdge, "(" + std::to_string(a) + "," + std::to_string(b) + ") is not a closed edge");
    return it->second;
  }

  std::size_t states(FactorId a) const { return model_.table_size(a); }

  /// Nodes touched by chain t, sorted by id.
  std::vector<NodeId> tree_nodes(std::size_t t) const {
    std::vector<NodeId> nodes;
    for (FactorId a : chains_[t]) nodes.insert(nodes.end(), model_.scope(a).begin(), model_.scope(a).end());
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    return nodes;
  }

 private:
  void derive() {
    const std::size_t nf = model_.factor_count();
    const std::size_t nt = chains_.size();
    rho_.assign(nt, nt ? 1.0 / static_cast<double>(nt) : 0.0);

    chain_of_.assign(nf, npos);
    for (std::size_t t = 0; t < nt; ++t)
      for (FactorId a : chains_[t])
        if (a < nf && chain_of_[a] == npos) chain_of_[a] = t;

    tree_factors_.assign(nt, {});
    trees_of_.assign(nf, {});
    rho_factor_.assign(nf, 0.0);
    for (std::size_t t = 0; t < nt; ++t) {
      auto& ft = tree_factors_[t];
      for (FactorId a : chains_[t])
        if (a < nf) ft.insert(ft.end(), js_.locals[a].begin(), js_.locals[a].end());
      std::sort(ft.begin(), ft.end());
      ft.erase(std::unique(ft.begin(), ft.end()), ft.end());
      for (FactorId c : ft) {
        trees_of_[c].push_back(t);
        rho_factor_[c] += rho_[t];
      }
    }

    separator_order_ = extend_order_to_separators(model_, js_, order_);
    separator_rank_.assign(nf, npos);
    for (std::size_t i = 0; i < separator_order_.size(); ++i) separator_rank_[separator_order_[i]] = i;

    sep_minus_.assign(nf, npos);
    sep_plus_.assign(nf, npos);
    local_separators_.assign(nf, {});
    for (const auto& chain : chains_) {
      for (FactorId a : chain) {
        if (a >= nf) continue;
        if (model_.scope(a).size() == 1) {
          sep_minus_[a] = sep_plus_[a] = a;
          continue;
        }
        try {
          const auto sb = sep_bounds(model_, chain, a, order_);
          sep_minus_[a] = sb.minus;
          sep_plus_[a] = sb.plus;
        } catch (const Error&) {
          continue;  // reported by validate_decomposition
        }
        if (js_.is_outer[sep_minus_[a]] || js_.is_outer[sep_plus_[a]]) continue;
        const std::size_t lo = separator_rank_[sep_minus_[a]];
        const std::size_t hi = separator_rank_[sep_plus_[a]];
        auto& sa = local_separators_[a];
        for (FactorId b : js_.locals[a])
          if (!js_.is_outer[b] && separator_rank_[b] >= lo && separator_rank_[b] <= hi) sa.push_back(b);
        std::sort(sa.begin(), sa.end(),
                  [&](FactorId x, FactorId y) { return separator_rank_[x] < separator_rank_[y]; });
      }
    }

    maps_.assign(nf, {});
    for (FactorId a = 0; a < nf; ++a) {
      for (FactorId b : js_.locals[a])
        maps_[a].emplace_back(b, restriction_map(model_.label_counts(), model_.scope(a), model_.scope(b)));
    }
  }

  Model model_;
  JStructure js_;
  NodeOrder order_;
  std::vector<std::vector<FactorId>> chains_;
  std::vector<Augmentation> augmentations_;

  std::vector<double> rho_;
  std::vector<double> rho_factor_;
  std::vector<std::size_t> chain_of_;
  std::vector<std::vector<FactorId>> tree_factors_;
  std::vector<std::vector<std::size_t>> trees_of_;
  std::vector<FactorId> separator_order_;
  std::vector<std::size_t> separator_rank_;
  std::vector<FactorId> sep_minus_, sep_plus_;
  std::vector<std::vector<FactorId>> local_separators_;
  std::vector<std::vector<std::pair<FactorId, std::vector<std::size_t>>>> maps_;
};

inline const std::vector<FactorId>& local_separator_window(const Decomposition& d, FactorId a) {
  return d.local_separators(a);
}

// ---------------------------------------------------------------------------
// Greedy construction
// ---------------------------------------------------------------------------

struct ChainOptions {
  /// Allow joining two outer factors whose intersection is not yet a separator in both, by adding
  /// a zero-cost factor and/or the missing edges. Singleton separators are always completed.
  bool add_missing_intersections = true;
};

namespace detail {

inline bool running_intersection_ok(const Model& model, std::span<const FactorId> chain, FactorId next) {
  const Scope& sn = model.scope(next);
  for (std::size_t i = 0; i < chain.size(); ++i) {
    const Scope inter = scope_intersection(model.scope(chain[i]), sn);
    for (std::size_t j = i + 1; j < chain.size(); ++j)
      if (!is_subset(inter, model.scope(chain[j]))) return false;
  }
  return true;
}

}  // namespace detail

/// Covers the outer factors with monotonic chains. Outer factors are visited in sigma order and
/// appended to the first chain whose last factor joins monotonically. Missing singleton separators
/// (and, optionally, intersection separators) are added with zero costs.
inline Decomposition build_monotonic_chains(const Model& input, const JStructure& input_js, const NodeOrder& order,
                                            ChainOptions options = {}) {
  if (order.size() != input.node_count())
    throw Error(ErrorCode::InvalidArgument, "node order size does not match the model");
  Model model = input;
  std::vector<Edge> edges = input_js.edges;
  std::vector<Augmentation> aug;

  auto zero_factor = [&](Scope s) {
    const std::size_t n = joint_size(model.label_counts(), s);
    return model.add_factor(Factor{std::move(s), Table(n, 0.0)});
  };

  JStructure js = close_j(model, edges);
  {
    bool added = false;
    for (FactorId a : std::vector<FactorId>(js.outer)) {
      if (model.scope(a).size() < 2) continue;
      const Scope sa = model.scope(a);
      for (NodeId v : sa) {
        auto id = model.find(Scope{v});
        if (!id) {
          id = zero_factor(Scope{v});
          aug.push_back({Augmentation::Kind::SingletonFactor, *id, {}});
        }
        if (!js.in_locals(a, *id)) {
          edges.emplace_back(a, *id);
          aug.push_back({Augmentation::Kind::Edge, *id, {a, *id}});
          added = true;
        }
      }
    }
    if (added || model.factor_count() != input.factor_count()) js = close_j(model, edges);
  }

  std::vector<FactorId> outer = js.outer;
  std::sort(outer.begin(), outer.end(),
            [&](FactorId x, FactorId y) { return sigma_less(model.scope(x), model.scope(y), order); });

  std::vector<std::vector<FactorId>> chains;
  for (FactorId a : outer) {
    if (model.scope(a).size() < 2) {
      chains.push_back({a});
      continue;
    }
    std::size_t ready = Decomposition::npos, fixable = Decomposition::npos;
    for (std::size_t t = 0; t < chains.size(); ++t) {
      const FactorId last = chains[t].back();
      if (model.scope(last).size() < 2) continue;
      if (!monotonic_join(model.scope(last), model.scope(a), order)) continue;
      if (!detail::running_intersection_ok(model, chains[t], a)) continue;
      const Scope s = scope_intersection(model.scope(last), model.scope(a));
      const auto sid = model.find(s);
      if (sid && js.is_outer[*sid]) continue;
      if (sid && js.in_locals(last, *sid) && js.in_locals(a, *sid)) {
        ready = t;
        break;
      }
      if (fixable == Decomposition::npos) fixable = t;
    }
    std::size_t target = ready;
    if (target == Decomposition::npos && options.add_missing_intersections) target = fixable;
    if (target == Decomposition::npos) {
      chains.push_back({a});
      continue;
    }
    if (target != ready) {
      const FactorId last = chains[target].back();
      Scope s = scope_intersection(model.scope(last), model.scope(a));
      auto sid = model.find(s);
      if (!sid) {
        sid = zero_factor(std::move(s));
        aug.push_back({Augmentation::Kind::IntersectionFactor, *sid, {}});
      }
      for (FactorId end : {last, a})
        if (!(*sid < js.locals.size() && js.in_locals(end, *sid))) {
          edges.emplace_back(end, *sid);
          aug.push_back({Augmentation::Kind::Edge, *sid, {end, *sid}});
        }
      js = close_j(model, edges);
    }
    chains[target].push_back(a);
  }
  return Decomposition(std::move(model), std::move(js), order, std::move(chains), std::move(aug));
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

enum class Check {
  Coverage,            // every factor lies in some chain; chain members are outer factors
  RunningIntersection,
  SeparatorPresence,   // consecutive intersections are separators local to both ends
  SingletonPresence,   // {v} ∈ F_A for every v ∈ A
  UniqueChain,         // each outer factor in exactly one chain
  Monotonicity,
  OrderExtension,
  NestedLocality,      // B ⊂ A, both in a tree  =>  B ∈ F_A
  WindowCover,         // F_T ∩ S equals the union of the windows S_A
  SeparatorChain,      // sep-(A1) ≺ sep+(A1) = sep-(A2) ≺ ... ≺ sep+(Ak)
  Probabilities,
};

inline const char* to_string(Check c) {
  switch (c) {
    case Check::Coverage: return "coverage";
    case Check::RunningIntersection: return "running-intersection";
    case Check::SeparatorPresence: return "separator-presence";
    case Check::SingletonPresence: return "singleton-presence";
    case Check::UniqueChain: return "unique-chain";
    case Check::Monotonicity: return "monotonicity";
    case Check::OrderExtension: return "order-extension";
    case Check::NestedLocality: return "nested-locality";
    case Check::WindowCover: return "window-cover";
    case Check::SeparatorChain: return "separator-chain";
    case Check::Probabilities: return "probabilities";
  }
  return "unknown";
}

struct Violation {
  Check check;
  std::vector<FactorId> factors;
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;
  /// Zero-cost structure added by the builder (reported, not a violation).
  std::size_t augmented_factors = 0;

  bool ok() const { return violations.empty(); }
  bool has(Check c) const {
    return std::any_of(violations.begin(), violations.end(), [c](const Violation& v) { return v.check == c; });
  }
};

inline ValidationReport validate_decomposition(const Decomposition& d) {
  ValidationReport report;
  const Model& model = d.model();
  const JStructure& js = d.js();
  const NodeOrder& order = d.node_order();
  const std::size_t nf = model.factor_count();
  auto add = [&](Check c, std::vector<FactorId> f, std::string detail) {
    report.violations.push_back({c, std::move(f), std::move(detail)});
  };
  for (const auto& a : d.augmentations())
    if (a.kind != Augmentation::Kind::Edge) ++report.augmented_factors;

  // membership
  std::vector<int> times(nf, 0);
  for (std::size_t t = 0; t < d.chain_count(); ++t)
    for (FactorId a : d.chain(t)) {
      if (a >= nf || !js.is_outer[a]) {
        add(Check::Coverage, {a}, "chain member is not an outer factor");
        continue;
      }
      ++times[a];
    }
  for (FactorId a : js.outer)
    if (times[a] != 1) add(Check::UniqueChain, {a}, "outer factor covered " + std::to_string(times[a]) + " times");
  for (FactorId c = 0; c < nf; ++c)
    if (d.trees_of(c).empty()) add(Check::Coverage, {c}, "factor not covered by any chain");

  // singletons
  for (FactorId a = 0; a < nf; ++a)
    for (NodeId v : model.scope(a)) {
      auto id = model.find(Scope{v});
      if (!id || !js.in_locals(a, *id)) add(Check::SingletonPresence, {a}, "missing {" + std::to_string(v) + "}");
    }

  for (std::size_t t = 0; t < d.chain_count(); ++t) {
    const auto& chain = d.chain(t);
    bool chain_ok = true;
    for (FactorId a : chain)
      if (a >= nf) chain_ok = false;
    if (!chain_ok) continue;
    for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
      const FactorId l = chain[i], r = chain[i + 1];
      const Scope s = scope_intersection(model.scope(l), model.scope(r));
      const auto sid = s.empty() ? std::nullopt : model.find(s);
      if (!sid || js.is_outer[*sid] || !js.in_locals(l, *sid) || !js.in_locals(r, *sid))
        add(Check::SeparatorPresence, {l, r}, "intersection " + scope_string(s) + " is not a shared separator");
      if (!monotonic_join(model.scope(l), model.scope(r), order))
        add(Check::Monotonicity, {l, r}, "join is not monotonic in the node order");
    }
    for (std::size_t i = 0; i < chain.size(); ++i)
      for (std::size_t j = i + 2; j < chain.size(); ++j) {
        const Scope inter = scope_intersection(model.scope(chain[i]), model.scope(chain[j]));
        for (std::size_t k = i + 1; k < j; ++k)
          if (!is_subset(inter, model.scope(chain[k])))
            add(Check::RunningIntersection, {chain[i], chain[j], chain[k]}, "path factor misses the intersection");
      }

    // nested locality
    const auto& ft = d.tree_factors(t);
    for (FactorId a : ft)
      for (FactorId b : ft)
        if (a != b && is_strict_subset(model.scope(b), model.scope(a)) && !js.in_locals(a, b))
          add(Check::NestedLocality, {a, b}, "nested factor not local");

    // window cover
    std::vector<FactorId> lhs, rhs;
    for (FactorId c : ft)
      if (!js.is_outer[c]) lhs.push_back(c);
    for (FactorId a : chain) rhs.insert(rhs.end(), d.local_separators(a).begin(), d.local_separators(a).end());
    std::sort(rhs.begin(), rhs.end());
    rhs.erase(std::unique(rhs.begin(), rhs.end()), rhs.end());
    if (lhs != rhs) add(Check::WindowCover, chain, "tree separators differ from the union of windows");

    // separator chain
    bool seps_known = true;
    for (FactorId a : chain)
      if (model.scope(a).size() > 1 &&
          (d.sep_minus(a) == Decomposition::npos || d.sep_plus(a) == Decomposition::npos ||
           js.is_outer[d.sep_minus(a)] || js.is_outer[d.sep_plus(a)]))
        seps_known = false;
    if (!seps_known) {
      add(Check::SeparatorPresence, chain, "chain end or join separator missing");
    } else if (model.scope(chain.front()).size() > 1) {
      for (std::size_t i = 0; i < chain.size(); ++i) {
        const FactorId a = chain[i];
        if (!(d.separator_rank(d.sep_minus(a)) < d.separator_rank(d.sep_plus(a))))
          add(Check::SeparatorChain, {a}, "sep- does not precede sep+");
        if (i + 1 < chain.size() && d.sep_plus(a) != d.sep_minus(chain[i + 1]))
          add(Check::SeparatorChain, {a, chain[i + 1]}, "sep+ differs from the next sep-");
      }
    }
  }

  // order extension on all separator pairs
  const auto& so = d.separator_order();
  for (FactorId a : so)
    for (FactorId b : so) {
      if (a == b) continue;
      const NodeId amin = min_node(model.scope(a), order), amax = max_node(model.scope(a), order);
      const NodeId bmin = min_node(model.scope(b), order), bmax = max_node(model.scope(b), order);
      const bool a_before = d.separator_rank(a) < d.separator_rank(b);
      if (order.less(amin, bmin) && order.less(amax, bmax) && !a_before)
        add(Check::OrderExtension, {a, b}, "first extension clause");
      if (order.less(bmax, amax) && !order.less(amin, bmin) && a_before)
        add(Check::OrderExtension, {a, b}, "second extension clause");
    }

  double total = 0.0;
  for (std::size_t t = 0; t < d.chain_count(); ++t) total += d.rho(t);
  if (d.chain_count() && std::abs(total - 1.0) > 1e-12) add(Check::Probabilities, {}, "rho does not sum to one");
  for (FactorId c = 0; c < nf; ++c) {
    double s = 0.0;
    for (std::size_t t : d.trees_of(c)) s += d.rho(t);
    if (std::abs(s - d.rho_factor(c)) > 1e-12) add(Check::Probabilities, {c}, "appearance probability mismatch");
  }
  return report;
}

/// Throws InvalidDecomposition with the first violation.
inline void require_valid(const Decomposition& d) {
  const auto report = validate_decomposition(d);
  if (!report.ok()) {
    const auto& v = report.violations.front();
    throw Error(ErrorCode::InvalidDecomposition, std::string(to_string(v.check)) + ": " + v.detail);
  }
}

}  // namespace gtrws

#endif  // GTRWS_DECOMPOSITION_HPP
