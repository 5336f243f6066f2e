#ifndef GTRWS_GENERATORS_HPP
#define GTRWS_GENERATORS_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <random>
#include <vector>

#include "gtrws/error.hpp"
#include "gtrws/model.hpp"

namespace gtrws {

struct Instance {
  Model model;
  JStructure js;
};

enum class SeparatorMode { Singleton, Pair };

/// Second-order smoothness on three consecutive disparities.
inline double stereo_cost(std::size_t l1, std::size_t l2, std::size_t l3, double lambda) {
  const long d1 = static_cast<long>(l1) - static_cast<long>(l2);
  const long d2 = static_cast<long>(l2) - static_cast<long>(l3);
  if (std::labs(d1) <= 1 && std::labs(d2) <= 1) {
    const long second = std::labs(d1 - d2);
    if (second == 0) return 0.0;
    if (second == 1) return lambda;
  }
  return 3.0 * lambda;
}

enum class PottsVariant {
  AllEqual,     // 0 if the four labels agree, the block weight otherwise
  PairwiseSum,  // block weight per disagreeing horizontal or vertical pair inside the block
};

inline double potts_block_cost(const std::array<std::size_t, 4>& l, double weight, PottsVariant variant) {
  // l = (top-left, top-right, bottom-left, bottom-right)
  if (variant == PottsVariant::AllEqual) return (l[0] == l[1] && l[1] == l[2] && l[2] == l[3]) ? 0.0 : weight;
  const int diff = (l[0] != l[1]) + (l[2] != l[3]) + (l[0] != l[2]) + (l[1] != l[3]);
  return weight * diff;
}

namespace detail {

class InstanceBuilder {
 public:
  InstanceBuilder(std::size_t nodes, std::size_t labels) : labels_(nodes, labels) {}

  FactorId factor(Scope scope, Table table) {
    const FactorId id = factors_.size();
    index_[scope] = id;
    factors_.push_back({std::move(scope), std::move(table)});
    return id;
  }

  /// Zero-cost factor on `scope`, created on first request.
  FactorId zero(const Scope& scope) {
    auto it = index_.find(scope);
    if (it != index_.end()) return it->second;
    return factor(scope, Table(joint_size(labels_, scope), 0.0));
  }

  void edge(FactorId a, FactorId b) { edges_.emplace_back(a, b); }
  const std::vector<std::size_t>& labels() const { return labels_; }

  Instance finish() {
    Model m(labels_, std::move(factors_));
    JStructure js = close_j(m, std::move(edges_));
    return {std::move(m), std::move(js)};
  }

 private:
  std::vector<std::size_t> labels_;
  std::vector<Factor> factors_;
  std::map<Scope, FactorId> index_;
  std::vector<Edge> edges_;
};

inline std::vector<FactorId> add_unaries(InstanceBuilder& b, std::size_t nodes, std::size_t labels, double hi,
                                         const std::vector<Table>& given, std::uint64_t seed) {
  if (!given.empty() && given.size() != nodes)
    throw Error(ErrorCode::InvalidArgument, "expected " + std::to_string(nodes) + " unary tables");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> noise(0.0, hi);
  std::vector<FactorId> ids;
  for (NodeId v = 0; v < nodes; ++v) {
    Table t(labels);
    if (given.empty()) {
      for (double& x : t) x = noise(rng);
    } else {
      if (given[v].size() != labels) throw Error(ErrorCode::TableShapeMismatch, "unary table of node " + std::to_string(v));
      t = given[v];
    }
    ids.push_back(b.factor(Scope{v}, std::move(t)));
  }
  return ids;
}

}  // namespace detail

/// Horizontal and vertical pixel triplets with the second-order table; nodes are pixels in
/// row-major order. Unaries are uniform noise in [0, 3 lambda] unless supplied.
inline Instance gen_stereo_second_order(std::size_t width, std::size_t height, std::size_t labels, double lambda,
                                        std::uint64_t seed, SeparatorMode mode = SeparatorMode::Singleton,
                                        const std::vector<Table>& unaries = {}) {
  if (labels < 2 || width < 3 || height < 3)
    throw Error(ErrorCode::InvalidArgument, "stereo needs labels >= 2 and a grid of at least 3x3");
  const std::size_t n = width * height;
  detail::InstanceBuilder b(n, labels);
  const auto unary = detail::add_unaries(b, n, labels, 3.0 * lambda, unaries, seed);
  Table tri(labels * labels * labels);
  for (std::size_t l1 = 0; l1 < labels; ++l1)
    for (std::size_t l2 = 0; l2 < labels; ++l2)
      for (std::size_t l3 = 0; l3 < labels; ++l3) tri[(l1 * labels + l2) * labels + l3] = stereo_cost(l1, l2, l3, lambda);

  auto triplet = [&](NodeId u, NodeId v, NodeId w) {
    const FactorId f = b.factor(Scope{u, v, w}, tri);
    for (NodeId s : {u, v, w}) b.edge(f, unary[s]);
    if (mode == SeparatorMode::Pair) {
      b.edge(f, b.zero(Scope{u, v}));
      b.edge(f, b.zero(Scope{v, w}));
    }
  };
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x + 2 < width; ++x) triplet(y * width + x, y * width + x + 1, y * width + x + 2);
  for (std::size_t x = 0; x < width; ++x)
    for (std::size_t y = 0; y + 2 < height; ++y) triplet(y * width + x, (y + 1) * width + x, (y + 2) * width + x);
  return b.finish();
}

/// One 4-ary factor per 2x2 pixel block; unaries are uniform noise in [0, block_weight] unless supplied.
inline Instance gen_potts_2x2(std::size_t width, std::size_t height, std::size_t labels, double block_weight,
                              std::uint64_t seed, SeparatorMode mode = SeparatorMode::Singleton,
                              PottsVariant variant = PottsVariant::AllEqual, const std::vector<Table>& unaries = {}) {
  if (labels < 1 || width < 2 || height < 2)
    throw Error(ErrorCode::InvalidArgument, "potts needs at least one label and a grid of at least 2x2");
  const std::size_t n = width * height;
  detail::InstanceBuilder b(n, labels);
  const auto unary = detail::add_unaries(b, n, labels, block_weight, unaries, seed);
  Table block(labels * labels * labels * labels);
  std::size_t i = 0;
  for (std::size_t a = 0; a < labels; ++a)
    for (std::size_t c = 0; c < labels; ++c)
      for (std::size_t e = 0; e < labels; ++e)
        for (std::size_t g = 0; g < labels; ++g) block[i++] = potts_block_cost({a, c, e, g}, block_weight, variant);

  for (std::size_t y = 0; y + 1 < height; ++y)
    for (std::size_t x = 0; x + 1 < width; ++x) {
      const NodeId tl = y * width + x, tr = tl + 1, bl = tl + width, br = bl + 1;
      const FactorId f = b.factor(Scope{tl, tr, bl, br}, block);
      for (NodeId s : {tl, tr, bl, br}) b.edge(f, unary[s]);
      if (mode == SeparatorMode::Pair)
        for (const Scope& p : {Scope{tl, tr}, Scope{bl, br}, Scope{tl, bl}, Scope{tr, br}}) b.edge(f, b.zero(p));
    }
  return b.finish();
}

}  // namespace gtrws

#endif  // GTRWS_GENERATORS_HPP
