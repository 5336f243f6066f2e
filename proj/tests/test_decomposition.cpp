#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include <gtest/gtest.h>

#include "gtrws/gtrws.hpp"
#include "support/instances.hpp"

using namespace gtrws;

namespace {

FactorId id_of(const Model& m, Scope s) { return *m.find(s); }

// a..e = 0..4
enum : NodeId { a_, b_, c_, d_, e_ };

}  // namespace

TEST(SeparatorOrder, NestedPairChainSeparators) {
  const auto p = inst::nested_pair_chain(1);
  const auto& m = p.model;
  const auto order = extend_order_to_separators(m, p.js, p.order);
  const std::vector<FactorId> expected{id_of(m, {a_}), id_of(m, {b_}), id_of(m, {b_, c_}),
                                       id_of(m, {c_}), id_of(m, {d_}), id_of(m, {e_})};
  EXPECT_EQ(order, expected);
}

TEST(SeparatorOrder, SingletonsFollowTheNodeOrder) {
  const Model m = build_model({2, 2, 2, 2}, {{{0, 1, 2, 3}, Table(16, 0.0)},
                                            {{0}, Table(2, 0.0)},
                                            {{1}, Table(2, 0.0)},
                                            {{2}, Table(2, 0.0)},
                                            {{3}, Table(2, 0.0)}});
  const JStructure js = close_j(m, {{0, 1}, {0, 2}, {0, 3}, {0, 4}});
  const NodeOrder order = NodeOrder::from_permutation({2, 0, 3, 1});
  const auto sep = extend_order_to_separators(m, js, order);
  std::vector<NodeId> nodes;
  for (FactorId b : sep) nodes.push_back(m.scope(b)[0]);
  EXPECT_EQ(nodes, order.order);
}

TEST(SeparatorOrder, PairsCompareByMinThenMax) {
  const Model m = build_model({2, 2, 2}, {{{0, 1, 2}, Table(8, 0.0)}, {{0, 2}, Table(4, 0.0)}, {{0, 1}, Table(4, 0.0)}});
  const JStructure js = close_j(m, {{0, 1}, {0, 2}});
  const auto sep = extend_order_to_separators(m, js, NodeOrder::identity(3));
  EXPECT_EQ(sep, (std::vector<FactorId>{2, 1}));
}

TEST(SeparatorOrder, ExtendsTheNodeOrderOnAllPairs) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto p = inst::random_model(seed);
    const auto d = inst::decompose(p);
    const auto& m = d.model();
    std::vector<NodeId> perm(m.node_count());
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    const NodeOrder order = NodeOrder::from_permutation(perm);
    const auto sep = extend_order_to_separators(m, d.js(), order);
    std::vector<std::size_t> rank(m.factor_count());
    for (std::size_t i = 0; i < sep.size(); ++i) rank[sep[i]] = i;
    for (FactorId x : sep)
      for (FactorId y : sep) {
        if (x == y) continue;
        const auto& sx = m.scope(x);
        const auto& sy = m.scope(y);
        const auto rmin = [&](const Scope& s) { return order.rank[min_node(s, order)]; };
        const auto rmax = [&](const Scope& s) { return order.rank[max_node(s, order)]; };
        if (rmin(sx) < rmin(sy) && rmax(sx) < rmax(sy)) EXPECT_LT(rank[x], rank[y]);
        if (rmax(sx) > rmax(sy) && rmin(sx) >= rmin(sy)) EXPECT_GT(rank[x], rank[y]);
      }
  }
}

TEST(SepBounds, NestedPairChainChain) {
  const auto p = inst::nested_pair_chain(1);
  const auto d = inst::decompose(p);
  const auto& m = d.model();
  const FactorId X = id_of(m, {a_, b_, c_}), Y = id_of(m, {b_, c_, d_}), Z = id_of(m, {d_, e_});
  ASSERT_EQ(d.chain_count(), 1u);
  EXPECT_EQ(d.chain(0), (std::vector<FactorId>{X, Y, Z}));
  EXPECT_EQ(d.sep_minus(X), id_of(m, {a_}));
  EXPECT_EQ(d.sep_plus(X), id_of(m, {b_, c_}));
  EXPECT_EQ(d.sep_minus(Y), id_of(m, {b_, c_}));
  EXPECT_EQ(d.sep_plus(Y), id_of(m, {d_}));
  EXPECT_EQ(d.sep_minus(Z), id_of(m, {d_}));
  EXPECT_EQ(d.sep_plus(Z), id_of(m, {e_}));
}

TEST(SepBounds, SingleFactorChainUsesExtremeNodes) {
  const Model m = build_model({2, 2, 2}, {{{0, 1, 2}, Table(8, 0.0)}, {{0}, Table(2, 0.0)}, {{2}, Table(2, 0.0)}});
  const auto sb = sep_bounds(m, std::vector<FactorId>{0}, 0, NodeOrder::identity(3));
  EXPECT_EQ(sb.minus, 1u);
  EXPECT_EQ(sb.plus, 2u);
  const auto rev = sep_bounds(m, std::vector<FactorId>{0}, 0, NodeOrder::from_permutation({2, 1, 0}));
  EXPECT_EQ(rev.minus, 2u);
  EXPECT_EQ(rev.plus, 1u);
}

TEST(SepBounds, TwoFactorChainSharesTheIntersection) {
  const Model m = build_model({2, 2, 2}, {{{0, 1}, Table(4, 0.0)}, {{1, 2}, Table(4, 0.0)}, {{0}, Table(2, 0.0)},
                                         {{1}, Table(2, 0.0)}, {{2}, Table(2, 0.0)}});
  const std::vector<FactorId> chain{0, 1};
  const auto order = NodeOrder::identity(3);
  EXPECT_EQ(sep_bounds(m, chain, 0, order).plus, 3u);
  EXPECT_EQ(sep_bounds(m, chain, 1, order).minus, 3u);
}

TEST(SepBounds, MissingSeparatorFactor) {
  const Model m = build_model({2, 2, 2}, {{{0, 1}, Table(4, 0.0)}, {{1, 2}, Table(4, 0.0)}, {{0}, Table(2, 0.0)}});
  try {
    sep_bounds(m, std::vector<FactorId>{0, 1}, 0, NodeOrder::identity(3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingSeparatorFactor);
  }
}

TEST(LocalSeparators, NestedPairChainWindows) {
  const auto p = inst::nested_pair_chain(1);
  const auto d = inst::decompose(p);
  const auto& m = d.model();
  const FactorId X = id_of(m, {a_, b_, c_}), Y = id_of(m, {b_, c_, d_}), Z = id_of(m, {d_, e_});
  const FactorId A = id_of(m, {a_}), B = id_of(m, {b_}), BC = id_of(m, {b_, c_}), C = id_of(m, {c_}),
                 D = id_of(m, {d_}), E = id_of(m, {e_});
  EXPECT_EQ(local_separator_window(d, X), (std::vector<FactorId>{A, B, BC}));
  EXPECT_EQ(local_separator_window(d, Y), (std::vector<FactorId>{BC, C, D}));
  EXPECT_EQ(local_separator_window(d, Z), (std::vector<FactorId>{D, E}));
  // c belongs to F_X but lies after sep+(X) = bc.
  EXPECT_TRUE(d.js().in_locals(X, C));
  const auto& sx = d.local_separators(X);
  EXPECT_EQ(std::find(sx.begin(), sx.end(), C), sx.end());
}

TEST(LocalSeparators, PairWithSingletonLocals) {
  const Model m = build_model({2, 2}, {{{0, 1}, Table(4, 0.0)}, {{0}, Table(2, 0.0)}, {{1}, Table(2, 0.0)}});
  const Decomposition d = build_monotonic_chains(m, close_j(m, {{0, 1}, {0, 2}}), NodeOrder::identity(2));
  EXPECT_EQ(d.local_separators(0), (std::vector<FactorId>{1, 2}));
}

TEST(BuildChains, PairwisePathIsOneChain) {
  inst::Builder b({2, 2, 2, 2});
  for (NodeId v = 0; v < 4; ++v) b.add({v}, Table(2, 0.0));
  const FactorId ab = b.add({0, 1}, Table(4, 0.0)), bc = b.add({1, 2}, Table(4, 0.0)), cd = b.add({2, 3}, Table(4, 0.0));
  b.singleton_edges();
  const auto p = b.finish();
  const auto d = inst::decompose(p);
  ASSERT_EQ(d.chain_count(), 1u);
  EXPECT_EQ(d.chain(0), (std::vector<FactorId>{ab, bc, cd}));
}

TEST(BuildChains, DisjointFactorsStaySeparate) {
  inst::Builder b({2, 2, 2, 2});
  for (NodeId v = 0; v < 4; ++v) b.add({v}, Table(2, 0.0));
  b.add({0, 1}, Table(4, 0.0));
  b.add({2, 3}, Table(4, 0.0));
  b.singleton_edges();
  const auto d = inst::decompose(b.finish());
  EXPECT_EQ(d.chain_count(), 2u);
}

TEST(BuildChains, TwoByTwoGridFollowsTheGreedyRule) {
  // nodes 0 1 / 2 3; sigma order of the edges: 01, 02, 13, 23.
  inst::Builder b({2, 2, 2, 2});
  for (NodeId v = 0; v < 4; ++v) b.add({v}, Table(2, 0.0));
  const FactorId h0 = b.add({0, 1}, Table(4, 0.0)), h1 = b.add({2, 3}, Table(4, 0.0));
  const FactorId v0 = b.add({0, 2}, Table(4, 0.0)), v1 = b.add({1, 3}, Table(4, 0.0));
  b.singleton_edges();
  const auto d = inst::decompose(b.finish());
  ASSERT_EQ(d.chain_count(), 2u);
  EXPECT_EQ(d.chain(0), (std::vector<FactorId>{h0, v1}));
  EXPECT_EQ(d.chain(1), (std::vector<FactorId>{v0, h1}));
  // 01 followed by 02 would put node 1 before the shared node 0.
  EXPECT_FALSE(monotonic_join(d.model().scope(h0), d.model().scope(v0), d.node_order()));
  for (const auto& chain : d.chains())
    for (std::size_t i = 0; i + 1 < chain.size(); ++i)
      EXPECT_TRUE(monotonic_join(d.model().scope(chain[i]), d.model().scope(chain[i + 1]), d.node_order()));
}

TEST(BuildChains, AddsMissingSingletonsWithZeroCost) {
  const Model m = build_model({2, 3}, {{{0, 1}, {1, 2, 3, 4, 5, 6}}});
  const Decomposition d = build_monotonic_chains(m, close_j(m, {}), NodeOrder::identity(2));
  EXPECT_EQ(d.model().factor_count(), 3u);
  for (NodeId v = 0; v < 2; ++v) {
    const auto id = d.model().find(Scope{v});
    ASSERT_TRUE(id.has_value());
    for (double x : d.model().table(*id)) EXPECT_EQ(x, 0.0);
    EXPECT_TRUE(d.js().in_locals(0, *id));
  }
  EXPECT_FALSE(d.augmentations().empty());
  EXPECT_TRUE(validate_decomposition(d).ok());
}

TEST(ValidateDecomposition, GeneratedDecompositionsAreValid) {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    for (bool intersections : {true, false}) {
      const auto p = inst::random_model(seed);
      const auto d = inst::decompose(p, intersections);
      const auto report = validate_decomposition(d);
      EXPECT_TRUE(report.ok()) << "seed " << seed << ": " << (report.ok() ? "" : report.violations[0].detail);
    }
  }
}

TEST(ValidateDecomposition, NonMonotonicChain) {
  inst::Builder b({2, 2, 2});
  for (NodeId v = 0; v < 3; ++v) b.add({v}, Table(2, 0.0));
  const FactorId ab = b.add({0, 1}, Table(4, 0.0)), bc = b.add({1, 2}, Table(4, 0.0));
  b.singleton_edges();
  const auto p = b.finish();
  const Decomposition d(p.model, p.js, p.order, {{bc, ab}});
  const auto report = validate_decomposition(d);
  EXPECT_TRUE(report.has(Check::Monotonicity));
}

TEST(ValidateDecomposition, MissingSingletonEdge) {
  inst::Builder b({2, 2, 2});
  for (NodeId v = 0; v < 3; ++v) b.add({v}, Table(2, 0.0));
  const FactorId ab = b.add({0, 1}, Table(4, 0.0)), bc = b.add({1, 2}, Table(4, 0.0));
  b.edge(ab, b.id({0}));
  b.edge(ab, b.id({1}));
  b.edge(bc, b.id({1}));  // {2} not attached to bc
  const auto p = b.finish();
  const Decomposition d(p.model, p.js, p.order, {{ab, bc}, {b.id({2})}});
  const auto report = validate_decomposition(d);
  EXPECT_TRUE(report.has(Check::SingletonPresence));
  EXPECT_THROW(require_valid(d), Error);
}

TEST(DecompositionProperties, SeparatorChainAndWindowCover) {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const auto p = seed % 2 ? inst::random_model(seed) : inst::nested_model(seed);
    const auto d = inst::decompose(p);
    const auto& js = d.js();
    for (std::size_t t = 0; t < d.chain_count(); ++t) {
      const auto& chain = d.chain(t);
      if (d.model().scope(chain[0]).size() < 2) continue;
      // sep-(A1) < sep+(A1) = sep-(A2) < ... < sep+(Ak)
      for (std::size_t i = 0; i < chain.size(); ++i) {
        EXPECT_LT(d.separator_rank(d.sep_minus(chain[i])), d.separator_rank(d.sep_plus(chain[i])));
        if (i + 1 < chain.size()) EXPECT_EQ(d.sep_plus(chain[i]), d.sep_minus(chain[i + 1]));
      }
      // F_T ∩ S equals the union of the windows
      std::set<FactorId> lhs, rhs;
      for (FactorId c : d.tree_factors(t))
        if (!js.is_outer[c]) lhs.insert(c);
      for (FactorId a : chain) rhs.insert(d.local_separators(a).begin(), d.local_separators(a).end());
      EXPECT_EQ(lhs, rhs) << "seed " << seed;
      // Nested factors inside a tree are locals of each other.
      for (FactorId x : d.tree_factors(t))
        for (FactorId y : d.tree_factors(t))
          if (x != y && is_subset(d.model().scope(y), d.model().scope(x))) EXPECT_TRUE(js.has_closed_edge(x, y));
    }
  }
}

TEST(DecompositionProperties, Probabilities) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto d = inst::decompose(inst::random_model(seed));
    double total = 0.0;
    for (std::size_t t = 0; t < d.chain_count(); ++t) total += d.rho(t);
    EXPECT_NEAR(total, 1.0, 1e-12);
    for (FactorId c = 0; c < d.model().factor_count(); ++c) {
      double sum = 0.0;
      for (std::size_t t : d.trees_of(c)) sum += d.rho(t);
      EXPECT_NEAR(sum, d.rho_factor(c), 1e-12);
      EXPECT_FALSE(d.trees_of(c).empty());
      if (d.js().is_outer[c]) EXPECT_EQ(d.trees_of(c).size(), 1u);
    }
  }
}
