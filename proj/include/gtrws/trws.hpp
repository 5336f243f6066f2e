#ifndef GTRWS_TRWS_HPP
#define GTRWS_TRWS_HPP

#include <algorithm>
#include <cstddef>
#include <functional>
#include <limits>
#include <queue>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gtrws/decomposition.hpp"
#include "gtrws/error.hpp"
#include "gtrws/model.hpp"
#include "gtrws/trace.hpp"

namespace gtrws {

/// Per-tree parameter vectors: params[t][c] is theta^T_c, empty when c is not in F_T.
using TreeParams = std::vector<Potentials>;

namespace detail {

inline std::string edge_string(FactorId a, FactorId b) {
  return "(" + std::to_string(a) + "," + std::to_string(b) + ")";
}

inline std::size_t argmin_index(std::span<const double> v) {
  return static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
}

}  // namespace detail

/// nu_a = sum of tables[e] over e in F_a, expressed on the states of a.
inline Table local_sum(const Decomposition& d, const Potentials& tables, FactorId a) {
  Table nu(d.states(a), 0.0);
  for (FactorId e : d.js().locals[a]) {
    const Table& t = tables[e];
    if (t.empty()) throw Error(ErrorCode::FactorNotInTree, "factor " + std::to_string(e) + " has no parameters");
    const auto& map = d.restriction(a, e);
    for (std::size_t i = 0; i < nu.size(); ++i) nu[i] += t[map[i]];
  }
  return nu;
}

inline TreeParams initial_tree_params(const Decomposition& d) {
  const Model& m = d.model();
  TreeParams params(d.chain_count(), Potentials(m.factor_count()));
  for (std::size_t t = 0; t < d.chain_count(); ++t)
    for (FactorId c : d.tree_factors(t)) {
      Table tab = m.table(c);
      for (double& v : tab) v /= d.rho_factor(c);
      params[t][c] = std::move(tab);
    }
  return params;
}

/// Sum over trees of rho^T theta^T; a reparameterization of the model costs for any params in Omega.
inline Potentials cumulative_theta(const Decomposition& d, const TreeParams& params) {
  Potentials theta(d.model().factor_count());
  for (FactorId c = 0; c < theta.size(); ++c) theta[c].assign(d.states(c), 0.0);
  for (std::size_t t = 0; t < params.size(); ++t)
    for (FactorId c = 0; c < params[t].size(); ++c)
      for (std::size_t i = 0; i < params[t][c].size(); ++i) theta[c][i] += d.rho(t) * params[t][c][i];
  return theta;
}

// ---------------------------------------------------------------------------
// Exact minimization along one chain
// ---------------------------------------------------------------------------

struct TreeSolution {
  double value = 0.0;
  /// Minimizing labeling; nodes outside the tree are labeled 0.
  Labeling labeling;
};

namespace detail {

struct ChainDp {
  std::vector<Table> cur;                          // per position: local costs plus incoming message
  std::vector<Scope> seps;                         // seps[i] = A_i ∩ A_{i+1}
  std::vector<std::vector<std::size_t>> to_right;  // A_i -> seps[i]
};

inline ChainDp run_chain_dp(const Decomposition& d, std::size_t t, const Potentials& tables) {
  const Model& model = d.model();
  const auto& chain = d.chain(t);
  const auto& lc = model.label_counts();
  std::vector<bool> used(model.factor_count(), false);
  ChainDp dp;
  Table msg;
  std::vector<std::size_t> from_left;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    const FactorId a = chain[i];
    Table cur(d.states(a), 0.0);
    for (FactorId e : d.js().locals[a]) {
      if (used[e] || tables[e].empty()) continue;
      used[e] = true;
      const auto& map = d.restriction(a, e);
      for (std::size_t x = 0; x < cur.size(); ++x) cur[x] += tables[e][map[x]];
    }
    if (i > 0)
      for (std::size_t x = 0; x < cur.size(); ++x) cur[x] += msg[from_left[x]];
    if (i + 1 < chain.size()) {
      Scope s = scope_intersection(model.scope(a), model.scope(chain[i + 1]));
      auto right = restriction_map(lc, model.scope(a), s);
      msg = min_marginalize(cur, right, joint_size(lc, s));
      from_left = restriction_map(lc, model.scope(chain[i + 1]), s);
      dp.seps.push_back(std::move(s));
      dp.to_right.push_back(std::move(right));
    }
    dp.cur.push_back(std::move(cur));
  }
  return dp;
}

}  // namespace detail

/// min_x f(x | tables) over the factors of tree t.
inline double tree_minimum(const Decomposition& d, std::size_t t, const Potentials& tables) {
  const auto dp = detail::run_chain_dp(d, t, tables);
  return *std::min_element(dp.cur.back().begin(), dp.cur.back().end());
}

/// Minimizer of the tree energy; ties broken towards the lowest state index at each chain position.
inline TreeSolution tree_argmin(const Decomposition& d, std::size_t t, const Potentials& tables) {
  const Model& model = d.model();
  const auto& lc = model.label_counts();
  const auto& chain = d.chain(t);
  const auto dp = detail::run_chain_dp(d, t, tables);
  TreeSolution sol;
  sol.labeling.assign(model.node_count(), 0);
  const std::size_t k = chain.size();
  std::size_t best = detail::argmin_index(dp.cur[k - 1]);
  sol.value = dp.cur[k - 1][best];
  decode_state(lc, model.scope(chain[k - 1]), best, sol.labeling);
  for (std::size_t i = k - 1; i-- > 0;) {
    const std::size_t s = state_index(lc, dp.seps[i], sol.labeling);
    const Table& cur = dp.cur[i];
    std::size_t arg = 0;
    double val = std::numeric_limits<double>::infinity();
    for (std::size_t x = 0; x < cur.size(); ++x)
      if (dp.to_right[i][x] == s && cur[x] < val) {
        val = cur[x];
        arg = x;
      }
    decode_state(lc, model.scope(chain[i]), arg, sol.labeling);
  }
  return sol;
}

/// Phi = sum_T rho^T min_x f(x | theta^T).
inline double tree_bound(const Decomposition& d, const TreeParams& params) {
  double phi = 0.0;
  for (std::size_t t = 0; t < d.chain_count(); ++t) phi += d.rho(t) * tree_minimum(d, t, params[t]);
  return phi;
}

// ---------------------------------------------------------------------------
// Elementary operations on one tree
// ---------------------------------------------------------------------------

/// Sends a -> b inside one tree and returns the applied increment delta(x_b).
inline Table send_message(const Decomposition& d, Potentials& tables, FactorId a, FactorId b, Effort* effort = nullptr) {
  const std::size_t nf = d.model().factor_count();
  if (a >= nf || b >= nf || !d.js().has_closed_edge(a, b))
    throw Error(ErrorCode::InvalidEdge, detail::edge_string(a, b) + " is not a closed edge");
  const Table nu_a = local_sum(d, tables, a);
  const auto& map = d.restriction(a, b);
  Table delta = min_marginalize(nu_a, map, d.states(b));
  const Table nu_b = local_sum(d, tables, b);
  for (std::size_t j = 0; j < delta.size(); ++j) delta[j] -= nu_b[j];
  for (std::size_t i = 0; i < map.size(); ++i) tables[a][i] -= delta[map[i]];
  for (std::size_t j = 0; j < delta.size(); ++j) tables[b][j] += delta[j];
  if (effort) effort->meff += d.states(a);
  return delta;
}

/// Reparameterizes the tree so that nu_b gives correct min-marginals and returns nu_b.
inline Table tree_min_marginal(const Decomposition& d, const JunctionTree& tree, Potentials& tables, FactorId b,
                               Effort* effort = nullptr) {
  const Model& model = d.model();
  const JStructure& js = d.js();
  if (b >= model.factor_count() || tables[b].empty())
    throw Error(ErrorCode::FactorNotInTree, "factor " + std::to_string(b));
  std::size_t root = tree.outer.size();
  for (std::size_t i = 0; i < tree.outer.size(); ++i)
    if (js.in_locals(tree.outer[i], b)) {
      root = i;
      break;
    }
  if (root == tree.outer.size()) throw Error(ErrorCode::FactorNotInTree, "factor " + std::to_string(b));

  std::vector<std::vector<std::size_t>> adj(tree.outer.size());
  for (const auto& [u, v] : tree.edges) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  std::vector<std::size_t> parent(tree.outer.size(), tree.outer.size()), visit;
  std::vector<bool> seen(tree.outer.size(), false);
  std::queue<std::size_t> q;
  q.push(root);
  seen[root] = true;
  while (!q.empty()) {
    const std::size_t u = q.front();
    q.pop();
    visit.push_back(u);
    for (std::size_t v : adj[u])
      if (!seen[v]) {
        seen[v] = true;
        parent[v] = u;
        q.push(v);
      }
  }
  for (std::size_t k = visit.size(); k-- > 1;) {
    const FactorId c = tree.outer[visit[k]];
    const FactorId p = tree.outer[parent[visit[k]]];
    const Scope s = scope_intersection(model.scope(c), model.scope(p));
    const auto sid = model.find(s);
    if (!sid || !js.in_locals(c, *sid)) throw Error(ErrorCode::MissingSeparatorFactor, scope_string(s));
    send_message(d, tables, c, *sid, effort);
  }
  if (tree.outer[root] != b) send_message(d, tables, tree.outer[root], b, effort);
  return local_sum(d, tables, b);
}

/// Replaces nu^T_b by the rho-weighted mean over the trees containing b.
inline void average_factor(const Decomposition& d, TreeParams& params, FactorId b) {
  if (b >= d.model().factor_count() || d.js().is_outer[b])
    throw Error(ErrorCode::NotASeparator, "factor " + std::to_string(b));
  const auto& trees = d.trees_of(b);
  if (trees.size() < 2) return;
  std::vector<Table> nus;
  Table mean(d.states(b), 0.0);
  for (std::size_t t : trees) {
    nus.push_back(local_sum(d, params[t], b));
    for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += d.rho(t) * nus.back()[j];
  }
  for (double& v : mean) v /= d.rho_factor(b);
  for (std::size_t k = 0; k < trees.size(); ++k)
    for (std::size_t j = 0; j < mean.size(); ++j) params[trees[k]][b][j] += mean[j] - nus[k][j];
}

// ---------------------------------------------------------------------------
// General version: exact min-marginals by junction-tree sweeps
// ---------------------------------------------------------------------------

class GeneralTrws {
 public:
  explicit GeneralTrws(const Decomposition& d) : GeneralTrws(d, initial_tree_params(d)) {}

  GeneralTrws(const Decomposition& d, TreeParams params, Direction next = Direction::Forward)
      : d_(&d), trees_(d.junction_trees()), params_(std::move(params)), dir_(next) {}

  Direction direction() const { return dir_; }

  /// One sweep over the separators in the extended order (reversed on backward passes).
  double pass() {
    std::vector<FactorId> order = d_->separator_order();
    if (dir_ == Direction::Backward) std::reverse(order.begin(), order.end());
    dir_ = reversed(dir_);
    return pass(order);
  }

  double pass(std::span<const FactorId> order) {
    for (FactorId b : order) {
      for (std::size_t t : d_->trees_of(b)) tree_min_marginal(*d_, trees_[t], params_[t], b, &effort_);
      average_factor(*d_, params_, b);
    }
    ++passes_;
    return bound();
  }

  double bound() const { return tree_bound(*d_, params_); }
  const TreeParams& params() const { return params_; }
  const Effort& effort() const { return effort_; }
  std::size_t passes_done() const { return passes_; }

 private:
  const Decomposition* d_;
  std::vector<JunctionTree> trees_;
  TreeParams params_;
  Direction dir_;
  Effort effort_;
  std::size_t passes_ = 0;
};

// ---------------------------------------------------------------------------
// Monotonic chains with explicit per-tree storage (CUR / CHILD bookkeeping)
// ---------------------------------------------------------------------------

struct StepContext {
  FactorId separator;
  std::size_t pass;
  Direction direction;
};

using AverageHook = std::function<void(const StepContext&, const TreeParams&)>;

class ExplicitChainTrws {
 public:
  explicit ExplicitChainTrws(const Decomposition& d)
      : d_(&d), params_(initial_tree_params(d)), cur_(d.chain_count(), 0), child_(d.model().factor_count()) {
    for (FactorId a : d.js().outer) child_[a] = d.sep_minus(a);
  }

  void set_average_hook(AverageHook hook) { hook_ = std::move(hook); }
  /// Checks the CUR/CHILD invariants at every step; failures are counted, not thrown.
  void set_instrumentation(bool on) { instrument_ = on; }
  std::size_t invariant_violations() const { return violations_; }

  Direction direction() const { return dir_; }

  double pass() {
    ++passes_;
    const Direction dir = dir_;
    const bool fwd = dir == Direction::Forward;
    std::vector<FactorId> order = d_->separator_order();
    if (!fwd) std::reverse(order.begin(), order.end());
    for (std::size_t t = 0; t < d_->chain_count(); ++t) cur_[t] = fwd ? 0 : d_->chain(t).size() - 1;

    for (FactorId b : order) {
      for (std::size_t t : d_->trees_of(b)) {
        const auto& chain = d_->chain(t);
        const FactorId a = chain[cur_[t]];
        if (instrument_) check(t, b);
        if (child_[a] != b) {
          if (a != b && d_->js().in_locals(a, b)) {
            send_message(*d_, params_[t], a, b, &effort_);
            ++effort_.message_ops;
          } else {
            ++violations_;
          }
          child_[a] = b;
        }
        if (fwd && b == d_->sep_plus(a) && cur_[t] + 1 < chain.size()) ++cur_[t];
        if (!fwd && b == d_->sep_minus(a) && cur_[t] > 0) --cur_[t];
      }
      if (hook_) hook_({b, passes_, dir}, params_);
      average_factor(*d_, params_, b);
    }
    dir_ = reversed(dir_);
    return bound();
  }

  double bound() const { return tree_bound(*d_, params_); }
  const TreeParams& params() const { return params_; }
  const Effort& effort() const { return effort_; }
  FactorId child(FactorId a) const { return child_[a]; }
  std::size_t current(std::size_t t) const { return cur_[t]; }

 private:
  void check(std::size_t t, FactorId b) {
    const auto& chain = d_->chain(t);
    const std::size_t c = cur_[t];
    const auto& sa = d_->local_separators(chain[c]);
    if (std::find(sa.begin(), sa.end(), b) == sa.end()) ++violations_;
    for (std::size_t i = 0; i < chain.size(); ++i) {
      if (i < c && child_[chain[i]] != d_->sep_plus(chain[i])) ++violations_;
      if (i > c && child_[chain[i]] != d_->sep_minus(chain[i])) ++violations_;
    }
  }

  const Decomposition* d_;
  TreeParams params_;
  std::vector<std::size_t> cur_;
  std::vector<FactorId> child_;
  Direction dir_ = Direction::Forward;
  Effort effort_;
  AverageHook hook_;
  bool instrument_ = false;
  std::size_t violations_ = 0;
  std::size_t passes_ = 0;
};

// ---------------------------------------------------------------------------
// Monotonic chains via messages
// ---------------------------------------------------------------------------

enum class Reuse { None, After, BeforeAfter };

inline const char* to_string(Reuse r) {
  switch (r) {
    case Reuse::None: return "none";
    case Reuse::After: return "after";
    case Reuse::BeforeAfter: return "before-after";
  }
  return "none";
}

struct TrwsOptions {
  bool normalize = true;
  Reuse reuse = Reuse::None;
  /// Recompute the full message before every reuse and throw StaleMessage if the shortcut would differ.
  bool verify_reuse = false;
  double verify_tolerance = 1e-9;
};

class ChainTrws {
 public:
  static constexpr FactorId npos = Decomposition::npos;

  ChainTrws() = default;

  explicit ChainTrws(const Decomposition& d, TrwsOptions options = {}) : d_(&d), opts_(options) {
    const std::size_t nf = d.model().factor_count();
    edges_ = d.message_edges();
    out_.assign(nf, {});
    incoming_.assign(nf, {});
    for (std::size_t k = 0; k < edges_.size(); ++k) {
      out_[edges_[k].first].push_back(k);
      incoming_[edges_[k].second].push_back(k);
    }
    reset();
  }

  /// Zero messages and separator caches equal to the model costs.
  void reset() {
    if (!d_) throw Error(ErrorCode::StateNotInitialized, "solver has no decomposition");
    const Model& m = d_->model();
    msgs_.clear();
    for (const auto& [a, b] : edges_) msgs_.emplace_back(d_->states(b), 0.0);
    theta_sep_.assign(m.factor_count(), {});
    for (FactorId b : d_->js().separators) theta_sep_[b] = m.table(b);
    pending_.assign(edges_.size(), false);
    last_valid_.assign(m.factor_count(), npos);
    last_gamma_.assign(m.factor_count(), 0.0);
    dir_ = Direction::Forward;
    effort_ = {};
    last_ops_ = 0;
  }

  Direction direction() const { return dir_; }

  double pass() {
    if (!d_) throw Error(ErrorCode::StateNotInitialized, "solver has no decomposition");
    const bool fwd = dir_ == Direction::Forward;
    std::vector<FactorId> order = d_->separator_order();
    if (!fwd) std::reverse(order.begin(), order.end());
    std::size_t ops = 0;
    for (FactorId b : order) {
      Table& th = theta_sep_[b];
      th = d_->model().table(b);
      for (std::size_t k : incoming_[b]) {
        const FactorId a = edges_[k].first;
        const bool exempt = fwd ? b == d_->sep_minus(a) : b == d_->sep_plus(a);
        if (!exempt) {
          if (pending_[k]) {
            pending_[k] = false;
            mark_valid(a, b, normalize(k));
          } else {
            update(k, fwd);
            ++ops;
          }
        }
        for (std::size_t j = 0; j < th.size(); ++j) th[j] += msgs_[k][j];
      }
    }
    dir_ = reversed(dir_);
    last_ops_ = ops;
    effort_.message_ops += ops;
    return bound();
  }

  double bound() const {
    if (!d_) throw Error(ErrorCode::StateNotInitialized, "solver has no decomposition");
    Potentials scaled = theta();
    for (FactorId c = 0; c < scaled.size(); ++c)
      if (d_->rho_factor(c) > 0)
        for (double& v : scaled[c]) v /= d_->rho_factor(c);
    double phi = 0.0;
    for (std::size_t t = 0; t < d_->chain_count(); ++t) phi += d_->rho(t) * tree_minimum(*d_, t, scaled);
    return phi;
  }

  /// Cumulative reparameterized costs theta = sum_T rho^T theta^T.
  Potentials theta() const {
    const Model& m = d_->model();
    Potentials th(m.factor_count());
    for (FactorId c = 0; c < th.size(); ++c) th[c] = d_->js().is_outer[c] ? m.table(c) : theta_sep_[c];
    for (std::size_t k = 0; k < edges_.size(); ++k) {
      const auto [a, b] = edges_[k];
      const auto& map = d_->restriction(a, b);
      for (std::size_t i = 0; i < map.size(); ++i) th[a][i] -= msgs_[k][map[i]];
    }
    return th;
  }

  TreeParams tree_params() const {
    const Potentials th = theta();
    TreeParams params(d_->chain_count(), Potentials(th.size()));
    for (std::size_t t = 0; t < d_->chain_count(); ++t)
      for (FactorId c : d_->tree_factors(t)) {
        params[t][c] = th[c];
        for (double& v : params[t][c]) v /= d_->rho_factor(c);
      }
    return params;
  }

  const Effort& effort() const { return effort_; }
  std::size_t last_pass_ops() const { return last_ops_; }
  std::size_t message_edge_count() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }
  const Table& message(FactorId a, FactorId b) const { return msgs_[edge_id(a, b)]; }
  const Table& separator_theta(FactorId b) const { return theta_sep_[b]; }

  MessageSet messages() const {
    MessageSet out;
    for (std::size_t k = 0; k < edges_.size(); ++k) out.emplace(edges_[k], msgs_[k]);
    return out;
  }

  /// The full message update for (a,b) evaluated on the current state, without changing it.
  Table compute_message(FactorId a, FactorId b) const {
    const JStructure& js = d_->js();
    const std::size_t kb = edge_id(a, b);
    const double rho_a = d_->rho_factor(a);
    Table val = d_->model().table(a);
    for (std::size_t k : out_[a]) {
      if (k == kb) continue;
      const auto& map = d_->restriction(a, edges_[k].second);
      for (std::size_t i = 0; i < val.size(); ++i) val[i] -= msgs_[k][map[i]];
    }
    for (FactorId c : js.locals[a]) {
      if (js.is_outer[c] || js.in_locals(b, c)) continue;
      const double r = rho_a / d_->rho_factor(c);
      const auto& map = d_->restriction(a, c);
      for (std::size_t i = 0; i < val.size(); ++i) val[i] += r * theta_sep_[c][map[i]];
    }
    return min_marginalize(val, d_->restriction(a, b), d_->states(b));
  }

  /// Increment for m_ab computed through the valid message on (a,p), b ⊂ p.
  Table reuse_after(FactorId a, FactorId p, FactorId b) const {
    edge_id(a, p);
    edge_id(a, b);
    if (p == b || !d_->js().in_locals(p, b)) throw Error(ErrorCode::InvalidEdge, detail::edge_string(p, b));
    if (last_valid_[a] != p)
      throw Error(ErrorCode::StaleMessage, "message on " + detail::edge_string(a, p) + " is not known to be valid");
    if (opts_.verify_reuse) verify_valid(a, p);
    Table inc = nested_sum_min(a, p, b, nullptr);
    for (double& v : inc) v += last_gamma_[a];
    return inc;
  }

  /// Updates m_ab through a preemptive update of m_ap, where b is processed right before p.
  void reuse_before(FactorId a, FactorId p, FactorId b) {
    const std::size_t kp = edge_id(a, p), kb = edge_id(a, b);
    if (p == b || !d_->js().in_locals(p, b)) throw Error(ErrorCode::InvalidEdge, detail::edge_string(p, b));
    if (neighbour(a, b, dir_ == Direction::Forward, true) != p)
      throw Error(ErrorCode::ReuseOrderViolation,
                  std::to_string(b) + " is not processed immediately before " + std::to_string(p) + " in S_" +
                      std::to_string(a));
    const Table old = msgs_[kp];
    Table fresh = compute_message(a, p);
    Table delta_ap(fresh.size());
    for (std::size_t i = 0; i < fresh.size(); ++i) delta_ap[i] = fresh[i] - old[i];
    const Table delta = nested_sum_min(a, p, b, &delta_ap);
    const auto& map = d_->restriction(p, b);
    for (std::size_t j = 0; j < delta.size(); ++j) msgs_[kb][j] += delta[j];
    for (std::size_t i = 0; i < fresh.size(); ++i) fresh[i] -= delta[map[i]];
    msgs_[kp] = std::move(fresh);
    pending_[kp] = true;
    effort_.meff += d_->states(a) + d_->states(p);
  }

  bool pending(FactorId a, FactorId b) const { return pending_[edge_id(a, b)]; }
  FactorId last_valid(FactorId a) const { return last_valid_[a]; }

 private:
  std::size_t edge_id(FactorId a, FactorId b) const {
    if (!d_) throw Error(ErrorCode::StateNotInitialized, "solver has no decomposition");
    if (a < out_.size())
      for (std::size_t k : out_[a])
        if (edges_[k].second == b) return k;
    throw Error(ErrorCode::InvalidMessageEdge, detail::edge_string(a, b));
  }

  /// Neighbour of b inside S_a in processing order: the next one (`after` = true) or the previous one.
  FactorId neighbour(FactorId a, FactorId b, bool forward, bool after) const {
    const auto& sa = d_->local_separators(a);
    const auto it = std::find(sa.begin(), sa.end(), b);
    if (it == sa.end()) return npos;
    const std::size_t pos = static_cast<std::size_t>(it - sa.begin());
    const bool up = forward == after;
    if (up) return pos + 1 < sa.size() ? sa[pos + 1] : npos;
    return pos > 0 ? sa[pos - 1] : npos;
  }

  /// min over x_{p-b} of [extra(x_p) + sum_{c in F_p - F_b} (rho_a/rho_c) theta_c(x_c)].
  Table nested_sum_min(FactorId a, FactorId p, FactorId b, const Table* extra) const {
    const JStructure& js = d_->js();
    const double rho_a = d_->rho_factor(a);
    Table val = extra ? *extra : Table(d_->states(p), 0.0);
    for (FactorId c : js.locals[p]) {
      if (js.in_locals(b, c)) continue;
      const double r = rho_a / d_->rho_factor(c);
      const auto& map = d_->restriction(p, c);
      for (std::size_t i = 0; i < val.size(); ++i) val[i] += r * theta_sep_[c][map[i]];
    }
    return min_marginalize(val, d_->restriction(p, b), d_->states(b));
  }

  void verify_valid(FactorId a, FactorId p) const {
    const Table full = compute_message(a, p);
    const Table& m = msgs_[edge_id(a, p)];
    for (std::size_t j = 0; j < m.size(); ++j)
      if (std::abs(full[j] - m[j] - last_gamma_[a]) > opts_.verify_tolerance * std::max(1.0, std::abs(full[j])))
        throw Error(ErrorCode::StaleMessage, "message on " + detail::edge_string(a, p) + " changed since it was sent");
  }

  double normalize(std::size_t k) {
    if (!opts_.normalize) return 0.0;
    Table& m = msgs_[k];
    const double g = *std::min_element(m.begin(), m.end());
    for (double& v : m) v -= g;
    return g;
  }

  void mark_valid(FactorId a, FactorId b, double gamma) {
    last_valid_[a] = b;
    last_gamma_[a] = gamma;
  }

  void update(std::size_t k, bool fwd) {
    const auto [a, b] = edges_[k];
    const JStructure& js = d_->js();
    const FactorId p = neighbour(a, b, fwd, false);
    const FactorId q = neighbour(a, b, fwd, true);
    if (opts_.reuse != Reuse::None && p != npos && js.in_locals(p, b) && last_valid_[a] == p) {
      const Table inc = reuse_after(a, p, b);
      for (std::size_t j = 0; j < inc.size(); ++j) msgs_[k][j] += inc[j];
      effort_.meff += d_->states(p);
      mark_valid(a, b, normalize(k));
      return;
    }
    if (opts_.reuse == Reuse::BeforeAfter && q != npos && js.in_locals(q, b) && !pending_[edge_id(a, q)]) {
      reuse_before(a, q, b);
      const double g = normalize(k);
      for (double& v : msgs_[edge_id(a, q)]) v += g;
      mark_valid(a, b, g);
      return;
    }
    msgs_[k] = compute_message(a, b);
    effort_.meff += d_->states(a);
    mark_valid(a, b, normalize(k));
  }

  const Decomposition* d_ = nullptr;
  TrwsOptions opts_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> out_;       // per outer factor, edge ids in S_A order
  std::vector<std::vector<std::size_t>> incoming_;  // per separator, edge ids by source
  std::vector<Table> msgs_;
  Potentials theta_sep_;
  std::vector<bool> pending_;
  std::vector<FactorId> last_valid_;
  std::vector<double> last_gamma_;
  Direction dir_ = Direction::Forward;
  Effort effort_;
  std::size_t last_ops_ = 0;
};

}  // namespace gtrws

#endif  // GTRWS_TRWS_HPP
