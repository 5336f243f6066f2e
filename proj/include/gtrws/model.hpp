#ifndef GTRWS_MODEL_HPP
#define GTRWS_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iterator>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gtrws/error.hpp"

namespace gtrws {

using NodeId = std::size_t;
using FactorId = std::size_t;
using Scope = std::vector<NodeId>;
using Table = std::vector<double>;
/// One table per factor id. An empty table means "factor absent".
using Potentials = std::vector<Table>;
using Labeling = std::vector<std::size_t>;
using Edge = std::pair<FactorId, FactorId>;

inline std::string scope_string(std::span<const NodeId> scope) {
  std::string out = "{";
  for (std::size_t i = 0; i < scope.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(scope[i]);
  }
  return out + "}";
}

// ---------------------------------------------------------------------------
// Row-major table indexing: the last node of a scope varies fastest.
// ---------------------------------------------------------------------------

inline std::size_t joint_size(std::span<const std::size_t> label_counts, std::span<const NodeId> scope) {
  std::size_t n = 1;
  for (NodeId v : scope) n *= label_counts[v];
  return n;
}

inline std::size_t state_index(std::span<const std::size_t> label_counts, std::span<const NodeId> scope,
                               std::span<const std::size_t> labeling) {
  std::size_t idx = 0;
  for (NodeId v : scope) idx = idx * label_counts[v] + labeling[v];
  return idx;
}

/// Writes the labels encoded by `index` over `scope` into `labeling` (indexed by node id).
inline void decode_state(std::span<const std::size_t> label_counts, std::span<const NodeId> scope, std::size_t index,
                         std::span<std::size_t> labeling) {
  for (std::size_t i = scope.size(); i-- > 0;) {
    const std::size_t k = label_counts[scope[i]];
    labeling[scope[i]] = index % k;
    index /= k;
  }
}

inline bool is_subset(std::span<const NodeId> small, std::span<const NodeId> big) {
  return std::includes(big.begin(), big.end(), small.begin(), small.end());
}

inline bool is_strict_subset(std::span<const NodeId> small, std::span<const NodeId> big) {
  return small.size() < big.size() && is_subset(small, big);
}

inline Scope scope_intersection(std::span<const NodeId> a, std::span<const NodeId> b) {
  Scope out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

/// For every joint state of `outer`, the index of its restriction to `inner` (inner ⊆ outer, both sorted).
inline std::vector<std::size_t> restriction_map(std::span<const std::size_t> label_counts,
                                                std::span<const NodeId> outer, std::span<const NodeId> inner) {
  // stride of each outer position inside the inner table (0 if the node is not in inner)
  std::vector<std::size_t> stride(outer.size(), 0);
  {
    std::size_t s = 1;
    for (std::size_t j = inner.size(); j-- > 0;) {
      auto it = std::lower_bound(outer.begin(), outer.end(), inner[j]);
      stride[static_cast<std::size_t>(it - outer.begin())] = s;
      s *= label_counts[inner[j]];
    }
  }
  const std::size_t n = joint_size(label_counts, outer);
  std::vector<std::size_t> map(n);
  std::vector<std::size_t> digit(outer.size(), 0);
  std::size_t inner_idx = 0;
  for (std::size_t idx = 0; idx < n; ++idx) {
    map[idx] = inner_idx;
    for (std::size_t p = outer.size(); p-- > 0;) {
      ++digit[p];
      inner_idx += stride[p];
      if (digit[p] < label_counts[outer[p]]) break;
      inner_idx -= stride[p] * digit[p];
      digit[p] = 0;
    }
  }
  return map;
}

/// out(x_B) = min over x_A restricting to x_B of values(x_A).
inline Table min_marginalize(std::span<const double> values, std::span<const std::size_t> map, std::size_t inner_size) {
  Table out(inner_size, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < values.size(); ++i) out[map[i]] = std::min(out[map[i]], values[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

struct Factor {
  Scope scope;
  Table table;
};

class Model {
 public:
  Model() = default;

  /// Validates and canonicalizes: scopes are sorted and tables re-indexed row-major over the sorted scope.
  Model(std::vector<std::size_t> label_counts, std::vector<Factor> factors) : label_counts_(std::move(label_counts)) {
    for (std::size_t v = 0; v < label_counts_.size(); ++v)
      if (label_counts_[v] == 0) throw Error(ErrorCode::InvalidArgument, "node " + std::to_string(v) + " has no labels");
    factors_.reserve(factors.size());
    for (auto& f : factors) add_factor(std::move(f));
  }

  std::size_t node_count() const { return label_counts_.size(); }
  std::size_t labels(NodeId v) const { return label_counts_[v]; }
  const std::vector<std::size_t>& label_counts() const { return label_counts_; }

  std::size_t factor_count() const { return factors_.size(); }
  const std::vector<Factor>& factors() const { return factors_; }
  const Factor& factor(FactorId a) const { return factors_[a]; }
  const Scope& scope(FactorId a) const { return factors_[a].scope; }
  const Table& table(FactorId a) const { return factors_[a].table; }
  std::size_t table_size(FactorId a) const { return factors_[a].table.size(); }

  std::optional<FactorId> find(std::span<const NodeId> sorted_scope) const {
    auto it = index_.find(Scope(sorted_scope.begin(), sorted_scope.end()));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  /// Appends a factor; its table is row-major over the scope *as given*.
  FactorId add_factor(Factor f) {
    if (f.scope.empty()) throw Error(ErrorCode::EmptyScope, "factor " + std::to_string(factors_.size()));
    for (NodeId v : f.scope)
      if (v >= label_counts_.size())
        throw Error(ErrorCode::InvalidNode, "node " + std::to_string(v) + " in factor " + std::to_string(factors_.size()));
    Scope sorted = f.scope;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw Error(ErrorCode::DuplicateNodeInScope, scope_string(f.scope));
    if (index_.count(sorted)) throw Error(ErrorCode::DuplicateFactor, scope_string(sorted));
    const std::size_t n = joint_size(label_counts_, sorted);
    if (f.table.size() != n)
      throw Error(ErrorCode::TableShapeMismatch, scope_string(sorted) + " expects " + std::to_string(n) +
                                                     " entries, got " + std::to_string(f.table.size()));
    for (double c : f.table)
      if (!std::isfinite(c)) throw Error(ErrorCode::NonFiniteCost, scope_string(sorted));

    Table table;
    if (sorted == f.scope) {
      table = std::move(f.table);
    } else {
      table.resize(n);
      std::vector<std::size_t> x(label_counts_.size(), 0);
      for (std::size_t idx = 0; idx < n; ++idx) {
        decode_state(label_counts_, sorted, idx, x);
        table[idx] = f.table[state_index(label_counts_, f.scope, x)];
      }
    }
    const FactorId id = factors_.size();
    index_.emplace(sorted, id);
    factors_.push_back(Factor{std::move(sorted), std::move(table)});
    return id;
  }

  /// Copy of all cost tables, indexed by factor id.
  Potentials potentials() const {
    Potentials out;
    out.reserve(factors_.size());
    for (const auto& f : factors_) out.push_back(f.table);
    return out;
  }

  std::size_t index_of(FactorId a, std::span<const std::size_t> labeling) const {
    return state_index(label_counts_, factors_[a].scope, labeling);
  }

  friend bool operator==(const Model& a, const Model& b) {
    if (a.label_counts_ != b.label_counts_ || a.factors_.size() != b.factors_.size()) return false;
    for (std::size_t i = 0; i < a.factors_.size(); ++i)
      if (a.factors_[i].scope != b.factors_[i].scope || a.factors_[i].table != b.factors_[i].table) return false;
    return true;
  }

 private:
  std::vector<std::size_t> label_counts_;
  std::vector<Factor> factors_;
  std::map<Scope, FactorId> index_;
};

inline Model build_model(std::vector<std::size_t> label_counts, std::vector<Factor> factors) {
  return Model(std::move(label_counts), std::move(factors));
}

inline void validate_labeling(const Model& model, std::span<const std::size_t> labeling) {
  if (labeling.size() != model.node_count())
    throw Error(ErrorCode::InvalidLabeling, "labeling has " + std::to_string(labeling.size()) + " entries, model has " +
                                                std::to_string(model.node_count()) + " nodes");
  for (NodeId v = 0; v < labeling.size(); ++v)
    if (labeling[v] >= model.labels(v))
      throw Error(ErrorCode::InvalidLabeling, "label " + std::to_string(labeling[v]) + " out of range at node " +
                                                  std::to_string(v));
}

/// f(x | costs) = sum over factors of costs_A(x_A). Absent (empty) tables contribute nothing.
inline double evaluate(const Model& model, const Potentials& costs, std::span<const std::size_t> labeling) {
  double sum = 0.0;
  for (FactorId a = 0; a < model.factor_count(); ++a)
    if (!costs[a].empty()) sum += costs[a][model.index_of(a, labeling)];
  return sum;
}

inline double energy(const Model& model, std::span<const std::size_t> labeling) {
  validate_labeling(model, labeling);
  double sum = 0.0;
  for (FactorId a = 0; a < model.factor_count(); ++a) sum += model.table(a)[model.index_of(a, labeling)];
  return sum;
}

// ---------------------------------------------------------------------------
// Marginalization edge structure J and its closure
// ---------------------------------------------------------------------------

struct JStructure {
  std::vector<Edge> edges;         // J, sorted and deduplicated
  std::vector<Edge> closed_edges;  // closure of J, sorted
  std::vector<bool> is_outer;
  std::vector<FactorId> outer;
  std::vector<FactorId> separators;
  /// locals[A] = F_A: A itself plus every B with (A,B) in the closure; sorted.
  std::vector<std::vector<FactorId>> locals;

  std::size_t factor_count() const { return is_outer.size(); }

  bool has_closed_edge(FactorId a, FactorId b) const {
    return std::binary_search(closed_edges.begin(), closed_edges.end(), Edge{a, b});
  }

  bool in_locals(FactorId a, FactorId b) const {
    return std::binary_search(locals[a].begin(), locals[a].end(), b);
  }
};

namespace detail {

inline void check_edge(const Model& model, const Edge& e) {
  if (e.first >= model.factor_count() || e.second >= model.factor_count())
    throw Error(ErrorCode::InvalidArgument,
                "edge (" + std::to_string(e.first) + "," + std::to_string(e.second) + ") references unknown factor");
  if (!is_strict_subset(model.scope(e.second), model.scope(e.first)))
    throw Error(ErrorCode::NotNested, scope_string(model.scope(e.second)) + " is not a strict subset of " +
                                          scope_string(model.scope(e.first)));
}

}  // namespace detail

/// Saturates J under transitivity (A,B),(B,C) -> (A,C) and nesting (A,B),(A,C), C ⊂ B -> (B,C).
inline JStructure close_j(const Model& model, std::vector<Edge> edges) {
  for (const auto& e : edges) detail::check_edge(model, e);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  const std::size_t nf = model.factor_count();
  std::vector<std::vector<FactorId>> out(nf);
  for (const auto& [a, b] : edges) out[a].push_back(b);

  auto insert = [&](FactorId a, FactorId b) {
    auto it = std::lower_bound(out[a].begin(), out[a].end(), b);
    if (it != out[a].end() && *it == b) return false;
    out[a].insert(it, b);
    return true;
  };

  bool changed = true;
  while (changed) {
    changed = false;
    for (FactorId a = 0; a < nf; ++a) {
      const std::vector<FactorId> kids = out[a];
      for (FactorId b : kids) {
        const std::vector<FactorId> grandkids = out[b];
        for (FactorId c : grandkids) changed |= insert(a, c);
        for (FactorId c : kids)
          if (c != b && is_strict_subset(model.scope(c), model.scope(b))) changed |= insert(b, c);
      }
    }
  }

  JStructure js;
  js.edges = std::move(edges);
  js.is_outer.assign(nf, true);
  js.locals.resize(nf);
  for (FactorId a = 0; a < nf; ++a) {
    for (FactorId b : out[a]) {
      js.closed_edges.emplace_back(a, b);
      js.is_outer[b] = false;
    }
    js.locals[a] = out[a];
    js.locals[a].insert(std::lower_bound(js.locals[a].begin(), js.locals[a].end(), a), a);
  }
  for (FactorId a = 0; a < nf; ++a) (js.is_outer[a] ? js.outer : js.separators).push_back(a);
  return js;
}

/// Messages stored on edges (A,B) with A outer and B a separator in F_A.
using MessageSet = std::map<Edge, Table>;

/// theta_A = base_A - sum_B m_AB for outer A; theta_B = base_B + sum_A m_AB for separators B.
inline Potentials reparameterized_costs(const Model& model, const JStructure& js, const MessageSet& messages) {
  Potentials theta = model.potentials();
  for (const auto& [edge, m] : messages) {
    const auto [a, b] = edge;
    if (a >= model.factor_count() || b >= model.factor_count() || !js.is_outer[a] || js.is_outer[b] ||
        !js.has_closed_edge(a, b))
      throw Error(ErrorCode::InvalidMessageEdge, "(" + std::to_string(a) + "," + std::to_string(b) + ")");
    if (m.size() != model.table_size(b))
      throw Error(ErrorCode::TableShapeMismatch, "message on (" + std::to_string(a) + "," + std::to_string(b) + ")");
    const auto map = restriction_map(model.label_counts(), model.scope(a), model.scope(b));
    for (std::size_t i = 0; i < map.size(); ++i) theta[a][i] -= m[map[i]];
    for (std::size_t j = 0; j < m.size(); ++j) theta[b][j] += m[j];
  }
  return theta;
}

/// Psi(theta) = sum over factors of min_x theta_A(x).
inline double factor_min_sum(const Potentials& theta) {
  double s = 0.0;
  for (const auto& t : theta)
    if (!t.empty()) s += *std::min_element(t.begin(), t.end());
  return s;
}

}  // namespace gtrws

#endif  // GTRWS_MODEL_HPP
