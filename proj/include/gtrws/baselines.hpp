#ifndef GTRWS_BASELINES_HPP
#define GTRWS_BASELINES_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gtrws/decomposition.hpp"
#include "gtrws/error.hpp"
#include "gtrws/model.hpp"
#include "gtrws/trace.hpp"
#include "gtrws/trws.hpp"

namespace gtrws {

// ---------------------------------------------------------------------------
// Min-sum diffusion
// ---------------------------------------------------------------------------

/// Closed edges ordered by target separator (sigma order), then by source id.
inline std::vector<Edge> diffusion_sweep(const Model& model, const JStructure& js, const NodeOrder& order) {
  std::vector<Edge> edges = js.closed_edges;
  std::stable_sort(edges.begin(), edges.end(), [&](const Edge& x, const Edge& y) {
    if (x.second != y.second) return sigma_less(model.scope(x.second), model.scope(y.second), order);
    return x.first < y.first;
  });
  return edges;
}

class Msd {
 public:
  Msd(const Model& model, const JStructure& js) : Msd(model, js, NodeOrder::identity(model.node_count())) {}

  Msd(const Model& model, const JStructure& js, const NodeOrder& order)
      : Msd(model, diffusion_sweep(model, js, order), model.potentials()) {}

  /// Starts from the given reparameterization instead of the model costs.
  Msd(const Model& model, std::vector<Edge> sweep, Potentials theta)
      : model_(&model), sweep_(std::move(sweep)), theta_(std::move(theta)) {
    for (const auto& [a, b] : sweep_) maps_.push_back(restriction_map(model.label_counts(), model.scope(a), model.scope(b)));
  }

  Direction direction() const { return Direction::Forward; }

  double pass() {
    for (std::size_t k = 0; k < sweep_.size(); ++k) {
      const auto [a, b] = sweep_[k];
      const auto& map = maps_[k];
      Table delta = min_marginalize(theta_[a], map, theta_[b].size());
      for (std::size_t j = 0; j < delta.size(); ++j) {
        delta[j] = 0.5 * (delta[j] - theta_[b][j]);
        theta_[b][j] += delta[j];
      }
      for (std::size_t i = 0; i < map.size(); ++i) theta_[a][i] -= delta[map[i]];
      effort_.meff += theta_[a].size();
      ++effort_.message_ops;
    }
    ++passes_;
    return bound();
  }

  double bound() const { return factor_min_sum(theta_); }
  const Potentials& theta() const { return theta_; }
  const std::vector<Edge>& sweep() const { return sweep_; }
  const Effort& effort() const { return effort_; }
  std::size_t passes_done() const { return passes_; }

 private:
  const Model* model_;
  std::vector<Edge> sweep_;
  std::vector<std::vector<std::size_t>> maps_;
  Potentials theta_;
  Effort effort_;
  std::size_t passes_ = 0;
};

// ---------------------------------------------------------------------------
// Subgradient ascent on the chain decomposition
// ---------------------------------------------------------------------------

class Subgradient {
 public:
  Subgradient(const Decomposition& d, double lambda) : d_(&d), lambda_(lambda), params_(initial_tree_params(d)) {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
      throw Error(ErrorCode::InvalidStepSize, "step size base must be positive, got " + std::to_string(lambda));
  }

  Direction direction() const { return Direction::Forward; }

  /// One step: tree minimizers, bound bookkeeping, then theta^T_C += alpha * g^T_C. Returns the best bound so far.
  double pass() {
    const Model& m = d_->model();
    std::vector<Labeling> x(d_->chain_count());
    double phi = 0.0;
    for (std::size_t t = 0; t < d_->chain_count(); ++t) {
      TreeSolution sol = tree_argmin(*d_, t, params_[t]);
      phi += d_->rho(t) * sol.value;
      x[t] = std::move(sol.labeling);
      for (FactorId a : d_->chain(t)) effort_.meff += d_->states(a);
    }
    current_ = phi;
    if (passes_ == 0 || phi > best_) {
      best_ = phi;
    } else if (phi < best_) {
      ++inferior_;
    }
    const double alpha = lambda_ / static_cast<double>(inferior_ + 1);

    std::vector<std::size_t> idx;
    for (FactorId c = 0; c < m.factor_count(); ++c) {
      const auto& trees = d_->trees_of(c);
      if (trees.size() < 2) continue;
      idx.clear();
      for (std::size_t t : trees) idx.push_back(m.index_of(c, x[t]));
      Table avg(d_->states(c), 0.0);
      for (std::size_t k = 0; k < trees.size(); ++k) avg[idx[k]] += d_->rho(trees[k]) / d_->rho_factor(c);
      for (std::size_t k = 0; k < trees.size(); ++k) {
        Table& tab = params_[trees[k]][c];
        for (std::size_t j = 0; j < tab.size(); ++j) tab[j] -= alpha * avg[j];
        tab[idx[k]] += alpha;
      }
    }
    ++passes_;
    return best_;
  }

  double best() const { return best_; }
  /// Bound at the parameters the last pass started from, before its step.
  double current() const { return current_; }
  std::size_t inferior_count() const { return inferior_; }
  double lambda() const { return lambda_; }
  const TreeParams& params() const { return params_; }
  const Effort& effort() const { return effort_; }

 private:
  const Decomposition* d_;
  double lambda_;
  TreeParams params_;
  double best_ = -std::numeric_limits<double>::infinity();
  double current_ = -std::numeric_limits<double>::infinity();
  std::size_t inferior_ = 0;
  std::size_t passes_ = 0;
  Effort effort_;
};

struct LambdaChoice {
  double lambda = 0.0;
  double best_bound = -std::numeric_limits<double>::infinity();
};

/// Runs `passes` steps for every candidate and keeps the one with the highest best bound.
inline LambdaChoice select_lambda(const Decomposition& d, std::span<const double> grid, std::size_t passes) {
  if (grid.empty()) throw Error(ErrorCode::InvalidArgument, "empty step size grid");
  LambdaChoice choice;
  for (double lambda : grid) {
    Subgradient sg(d, lambda);
    for (std::size_t k = 0; k < passes; ++k) sg.pass();
    if (sg.best() > choice.best_bound) choice = {lambda, sg.best()};
  }
  return choice;
}

}  // namespace gtrws

#endif  // GTRWS_BASELINES_HPP
