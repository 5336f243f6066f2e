#ifndef GTRWS_DIAGNOSTICS_HPP
#define GTRWS_DIAGNOSTICS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gtrws/decomposition.hpp"
#include "gtrws/error.hpp"
#include "gtrws/model.hpp"
#include "gtrws/trws.hpp"

namespace gtrws {

inline constexpr double kStateSpaceGuard = 1e7;
inline constexpr double kArgminTolerance = 1e-9;

// ---------------------------------------------------------------------------
// Exhaustive search
// ---------------------------------------------------------------------------

inline double state_space_size(const Model& model, std::span<const NodeId> nodes) {
  double n = 1.0;
  for (NodeId v : nodes) n *= static_cast<double>(model.labels(v));
  return n;
}

/// Calls visit(labeling, f) for every joint state of `nodes` in increasing row-major index order,
/// where f sums the non-empty tables whose scope lies inside `nodes`. Other nodes stay at label 0.
inline void enumerate_states(const Model& model, const Potentials& tables, std::span<const NodeId> nodes,
                             const std::function<void(const Labeling&, double)>& visit) {
  if (state_space_size(model, nodes) > kStateSpaceGuard)
    throw Error(ErrorCode::TooLarge, std::to_string(state_space_size(model, nodes)) + " joint states");
  const std::size_t n = nodes.size();
  std::vector<std::size_t> depth_of(model.node_count(), n);
  for (std::size_t i = 0; i < n; ++i) depth_of[nodes[i]] = i;
  // factors grouped by the depth of their deepest node
  std::vector<std::vector<FactorId>> at(n);
  for (FactorId a = 0; a < model.factor_count(); ++a) {
    if (tables[a].empty()) continue;
    std::size_t deepest = 0;
    bool inside = true;
    for (NodeId v : model.scope(a)) {
      if (depth_of[v] == n) inside = false;
      else deepest = std::max(deepest, depth_of[v]);
    }
    if (inside) at[deepest].push_back(a);
  }
  Labeling x(model.node_count(), 0);
  std::vector<double> partial(n + 1, 0.0);
  if (n == 0) {
    visit(x, 0.0);
    return;
  }
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    const NodeId v = nodes[i];
    for (std::size_t l = 0; l < model.labels(v); ++l) {
      x[v] = l;
      double s = partial[i];
      for (FactorId a : at[i]) s += tables[a][model.index_of(a, x)];
      partial[i + 1] = s;
      if (i + 1 == n) visit(x, s);
      else rec(i + 1);
    }
    x[v] = 0;
  };
  rec(0);
}

struct MapSolution {
  Labeling labeling;
  double value = 0.0;
};

inline MapSolution brute_force_map(const Model& model) {
  std::vector<NodeId> nodes(model.node_count());
  for (NodeId v = 0; v < nodes.size(); ++v) nodes[v] = v;
  MapSolution best;
  best.value = std::numeric_limits<double>::infinity();
  best.labeling.assign(model.node_count(), 0);
  enumerate_states(model, model.potentials(), nodes, [&](const Labeling& x, double f) {
    if (f < best.value) {
      best.value = f;
      best.labeling = x;
    }
  });
  return best;
}

/// Nodes touched by the non-empty tables.
inline std::vector<NodeId> support_nodes(const Model& model, const Potentials& tables) {
  std::vector<NodeId> nodes;
  for (FactorId a = 0; a < model.factor_count(); ++a)
    if (!tables[a].empty()) nodes.insert(nodes.end(), model.scope(a).begin(), model.scope(a).end());
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  return nodes;
}

/// Exact min-marginals of f(. | tables) for every factor with a non-empty table.
inline Potentials brute_force_all_min_marginals(const Model& model, const Potentials& tables) {
  const auto nodes = support_nodes(model, tables);
  Potentials mm(model.factor_count());
  for (FactorId a = 0; a < model.factor_count(); ++a)
    if (!tables[a].empty()) mm[a].assign(model.table_size(a), std::numeric_limits<double>::infinity());
  enumerate_states(model, tables, nodes, [&](const Labeling& x, double f) {
    for (FactorId a = 0; a < model.factor_count(); ++a) {
      if (mm[a].empty()) continue;
      double& slot = mm[a][model.index_of(a, x)];
      slot = std::min(slot, f);
    }
  });
  return mm;
}

inline Table brute_force_min_marginals(const Model& model, const Potentials& tables, FactorId b) {
  if (b >= model.factor_count()) throw Error(ErrorCode::InvalidArgument, "factor " + std::to_string(b));
  auto nodes = support_nodes(model, tables);
  nodes.insert(nodes.end(), model.scope(b).begin(), model.scope(b).end());
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  Table out(model.table_size(b), std::numeric_limits<double>::infinity());
  enumerate_states(model, tables, nodes, [&](const Labeling& x, double f) {
    double& slot = out[model.index_of(b, x)];
    slot = std::min(slot, f);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Relations
// ---------------------------------------------------------------------------

struct Relation {
  Scope scope;
  /// Sorted row-major state indices over `scope`.
  std::vector<std::size_t> states;

  bool empty() const { return states.empty(); }
  friend bool operator==(const Relation&, const Relation&) = default;
};

inline bool near_min(double v, double min, double tol) { return v <= min + tol * std::max(1.0, std::abs(min)); }

inline Relation argmin_relation(const Scope& scope, std::span<const double> values, double tol = kArgminTolerance) {
  Relation r{scope, {}};
  if (values.empty()) return r;
  const double mn = *std::min_element(values.begin(), values.end());
  for (std::size_t i = 0; i < values.size(); ++i)
    if (near_min(values[i], mn, tol)) r.states.push_back(i);
  return r;
}

inline Relation project(const Model& model, const Relation& r, const Scope& onto) {
  if (!is_subset(onto, r.scope)) throw Error(ErrorCode::InvalidArgument, scope_string(onto) + " is not a subset");
  const auto map = restriction_map(model.label_counts(), r.scope, onto);
  Relation out{onto, {}};
  for (std::size_t s : r.states) out.states.push_back(map[s]);
  std::sort(out.states.begin(), out.states.end());
  out.states.erase(std::unique(out.states.begin(), out.states.end()), out.states.end());
  return out;
}

// ---------------------------------------------------------------------------
// Agreement and consistency checks
// ---------------------------------------------------------------------------

struct FactorVerdict {
  FactorId factor;
  bool holds;
};

struct EwtaReport {
  std::vector<FactorVerdict> factors;

  bool holds() const {
    return std::all_of(factors.begin(), factors.end(), [](const FactorVerdict& f) { return f.holds; });
  }
  std::vector<FactorId> violated() const {
    std::vector<FactorId> out;
    for (const auto& f : factors)
      if (!f.holds) out.push_back(f.factor);
    return out;
  }
};

/// Per tree and factor, the projection of the tree's argmin set onto the factor.
inline std::vector<std::vector<Relation>> tree_argmin_projections(const Decomposition& d, const TreeParams& params,
                                                                  double tol = kArgminTolerance) {
  const Model& m = d.model();
  std::vector<std::vector<Relation>> out(d.chain_count(), std::vector<Relation>(m.factor_count()));
  for (std::size_t t = 0; t < d.chain_count(); ++t) {
    const Potentials mm = brute_force_all_min_marginals(m, params[t]);
    double tree_min = std::numeric_limits<double>::infinity();
    for (const auto& tab : mm)
      if (!tab.empty()) tree_min = std::min(tree_min, *std::min_element(tab.begin(), tab.end()));
    for (FactorId c : d.tree_factors(t)) {
      Relation r{m.scope(c), {}};
      for (std::size_t i = 0; i < mm[c].size(); ++i)
        if (near_min(mm[c][i], tree_min, tol)) r.states.push_back(i);
      out[t][c] = std::move(r);
    }
  }
  return out;
}

inline EwtaReport check_ewta(const Decomposition& d, const TreeParams& params, double tol = kArgminTolerance) {
  const auto proj = tree_argmin_projections(d, params, tol);
  EwtaReport report;
  for (FactorId c = 0; c < d.model().factor_count(); ++c) {
    const auto& trees = d.trees_of(c);
    bool ok = true;
    for (std::size_t k = 1; k < trees.size(); ++k) ok = ok && proj[trees[k]][c] == proj[trees[0]][c];
    report.factors.push_back({c, ok});
  }
  return report;
}

struct EdgeVerdict {
  Edge edge;
  bool holds;
};

struct ConsistencyReport {
  std::vector<EdgeVerdict> edges;
  /// Witness relations per factor (only filled by the existential check).
  std::vector<Relation> relations;

  bool holds() const {
    return std::all_of(edges.begin(), edges.end(), [](const EdgeVerdict& e) { return e.holds; });
  }
};

/// pi_B(<theta_A>) == <theta_B> for every listed edge.
inline ConsistencyReport check_j_consistency_enhanced(const Model& model, std::span<const Edge> edges,
                                                      const Potentials& theta, double tol = kArgminTolerance) {
  ConsistencyReport report;
  for (const auto& e : edges) {
    const auto [a, b] = e;
    const Relation ra = argmin_relation(model.scope(a), theta[a], tol);
    const Relation rb = argmin_relation(model.scope(b), theta[b], tol);
    report.edges.push_back({e, project(model, ra, model.scope(b)) == rb});
  }
  return report;
}

inline ConsistencyReport check_j_consistency_enhanced(const Model& model, const JStructure& js, const Potentials& theta,
                                                      double tol = kArgminTolerance) {
  return check_j_consistency_enhanced(model, js.edges, theta, tol);
}

/// Existential form: prunes the argmin relations to their largest mutually consistent subfamily.
/// The check holds when no relation becomes empty; the surviving relations are returned as witness.
inline ConsistencyReport check_j_consistency(const Model& model, std::span<const Edge> edges, const Potentials& theta,
                                             double tol = kArgminTolerance) {
  const std::size_t nf = model.factor_count();
  std::vector<std::vector<bool>> keep(nf);
  for (FactorId a = 0; a < nf; ++a) {
    keep[a].assign(theta[a].size(), false);
    for (std::size_t s : argmin_relation(model.scope(a), theta[a], tol).states) keep[a][s] = true;
  }
  std::vector<std::vector<std::size_t>> maps;
  for (const auto& [a, b] : edges) maps.push_back(restriction_map(model.label_counts(), model.scope(a), model.scope(b)));
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t k = 0; k < edges.size(); ++k) {
      const auto [a, b] = edges[k];
      std::vector<bool> reach(keep[b].size(), false);
      for (std::size_t i = 0; i < maps[k].size(); ++i)
        if (keep[a][i]) reach[maps[k][i]] = true;
      for (std::size_t j = 0; j < reach.size(); ++j)
        if (keep[b][j] && !reach[j]) {
          keep[b][j] = false;
          changed = true;
        }
      for (std::size_t i = 0; i < maps[k].size(); ++i)
        if (keep[a][i] && !keep[b][maps[k][i]]) {
          keep[a][i] = false;
          changed = true;
        }
    }
  }
  ConsistencyReport report;
  for (FactorId a = 0; a < nf; ++a) {
    Relation r{model.scope(a), {}};
    for (std::size_t s = 0; s < keep[a].size(); ++s)
      if (keep[a][s]) r.states.push_back(s);
    report.relations.push_back(std::move(r));
  }
  for (const auto& e : edges)
    report.edges.push_back({e, !report.relations[e.first].empty() && !report.relations[e.second].empty()});
  return report;
}

// ---------------------------------------------------------------------------
// Bound-preserving mappings between the two fixpoint families
// ---------------------------------------------------------------------------

struct MappingOptions {
  bool check = true;
  double tol = kArgminTolerance;
};

/// Per tree: make every chain factor carry correct min-marginals, peel the chain from its first
/// factor while moving all local separator costs into it, and sum the trees with weights rho^T.
inline Potentials map_wta_to_jconsistent(const Decomposition& d, const TreeParams& params, MappingOptions opts = {}) {
  if (opts.check && !check_ewta(d, params, opts.tol).holds())
    throw Error(ErrorCode::NotAtFixpoint, "tree agreement does not hold");
  const Model& m = d.model();
  const JStructure& js = d.js();
  Potentials theta(m.factor_count());
  for (FactorId c = 0; c < theta.size(); ++c) theta[c].assign(d.states(c), 0.0);
  for (std::size_t t = 0; t < d.chain_count(); ++t) {
    Potentials p = params[t];
    const auto& chain = d.chain(t);
    for (std::size_t i = chain.size(); i-- > 1;) send_message(d, p, chain[i], d.sep_minus(chain[i]));
    for (FactorId a : chain) {
      for (FactorId c : js.locals[a]) {
        if (c == a) continue;
        const auto& map = d.restriction(a, c);
        for (std::size_t i = 0; i < map.size(); ++i) p[a][i] += p[c][map[i]];
        std::fill(p[c].begin(), p[c].end(), 0.0);
      }
      for (std::size_t i = 0; i < p[a].size(); ++i) theta[a][i] += d.rho(t) * p[a][i];
    }
  }
  return theta;
}

/// Moves each separator's costs into the first covering outer factor (chain order), then splits
/// the outer costs over their trees: theta^T_A = theta_A / rho^T, separators zero.
inline TreeParams map_jconsistent_to_wta(const Decomposition& d, const Potentials& theta_in, MappingOptions opts = {}) {
  const Model& m = d.model();
  const JStructure& js = d.js();
  if (opts.check && !check_j_consistency(m, js.edges, theta_in, opts.tol).holds())
    throw Error(ErrorCode::NotAtFixpoint, "J-consistency does not hold");
  Potentials theta = theta_in;
  std::vector<bool> moved(m.factor_count(), false);
  for (const auto& chain : d.chains())
    for (FactorId a : chain)
      for (FactorId c : js.locals[a]) {
        if (c == a || moved[c]) continue;
        moved[c] = true;
        const auto& map = d.restriction(a, c);
        for (std::size_t i = 0; i < map.size(); ++i) theta[a][i] += theta[c][map[i]];
        std::fill(theta[c].begin(), theta[c].end(), 0.0);
      }
  TreeParams params(d.chain_count(), Potentials(m.factor_count()));
  for (std::size_t t = 0; t < d.chain_count(); ++t) {
    for (FactorId c : d.tree_factors(t)) params[t][c].assign(d.states(c), 0.0);
    for (FactorId a : d.chain(t))
      for (std::size_t i = 0; i < theta[a].size(); ++i) params[t][a][i] = theta[a][i] / d.rho(t);
  }
  return params;
}

// ---------------------------------------------------------------------------
// Primal rounding
// ---------------------------------------------------------------------------

/// Labels nodes in the node order; each node takes the label minimizing the costs of the factors
/// whose last node it is, given the labels fixed so far. Ties go to the lowest label.
inline Labeling extract_primal(const Model& model, const Potentials& theta, const NodeOrder& order) {
  std::vector<std::vector<FactorId>> closing(model.node_count());
  for (FactorId a = 0; a < model.factor_count(); ++a) closing[max_node(model.scope(a), order)].push_back(a);
  Labeling x(model.node_count(), 0);
  for (NodeId v : order.order) {
    std::size_t best = 0;
    double best_val = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < model.labels(v); ++l) {
      x[v] = l;
      double s = 0.0;
      for (FactorId a : closing[v]) s += theta[a][model.index_of(a, x)];
      if (s < best_val) {
        best_val = s;
        best = l;
      }
    }
    x[v] = best;
  }
  return x;
}

}  // namespace gtrws

#endif  // GTRWS_DIAGNOSTICS_HPP
