#include <cmath>
#include <cstdint>
#include <random>

#include <gtest/gtest.h>

#include "gtrws/gtrws.hpp"
#include "support/instances.hpp"
#include "support/oracles.hpp"

using namespace gtrws;

namespace {

template <class Solver>
void converge(Solver& s, std::size_t max_passes, double eps) {
  double prev = s.pass();
  for (std::size_t k = 1; k < max_passes; ++k) {
    const double b = s.pass();
    if (std::abs(b - prev) <= eps && k % 2 == 1) return;
    prev = b;
  }
}

inst::RandomSpec small_spec() {
  inst::RandomSpec spec;
  spec.max_nodes = 7;
  spec.max_labels = 3;
  spec.max_states = 5e3;
  return spec;
}

Decomposition two_trees(Table left, Table right) {
  const Model m = build_model({2, 2, 2}, {{{0, 1}, std::move(left)},
                                          {{1, 2}, std::move(right)},
                                          {{1}, {0, 0}},
                                          {{0}, {0, 0}},
                                          {{2}, {0, 0}}});
  const Decomposition d(m, close_j(m, {{0, 2}, {1, 2}, {0, 3}, {1, 4}}), NodeOrder::identity(3), {{0}, {1}});
  require_valid(d);
  return d;
}

}  // namespace

TEST(BruteForceMap, ZeroModel) {
  const Model m = build_model({2, 3}, {{{0, 1}, Table(6, 0.0)}});
  const auto sol = brute_force_map(m);
  EXPECT_EQ(sol.value, 0.0);
  EXPECT_EQ(sol.labeling, (Labeling{0, 0}));
}

TEST(BruteForceMap, IsingPair) {
  const Model m = build_model({2, 2}, {{{0, 1}, {0, 1, 1, 0}}, {{0}, {0, 0.5}}, {{1}, {0, 0.5}}});
  const auto sol = brute_force_map(m);
  EXPECT_EQ(sol.value, 0.0);
  EXPECT_EQ(sol.labeling, (Labeling{0, 0}));
}

TEST(BruteForceMap, AgreesWithChainDpAndTheOracle) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto p = inst::random_tree(seed);
    const auto d = inst::decompose(p);
    ASSERT_EQ(d.chain_count(), 1u);
    const auto sol = brute_force_map(p.model);
    EXPECT_NEAR(sol.value, tree_minimum(d, 0, d.model().potentials()), 1e-12);
    const auto ref = oracle::map(p.model);
    EXPECT_NEAR(sol.value, ref.value, 1e-12);
    EXPECT_EQ(sol.labeling, ref.labeling);
  }
}

TEST(BruteForceMap, GuardsLargeStateSpaces) {
  const Model m = build_model(std::vector<std::size_t>(24, 2), {{{0}, {0, 1}}});
  try {
    brute_force_map(m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooLarge);
  }
}

TEST(BruteForceMinMarginals, ZeroCase) {
  const Model m = build_model({2, 3}, {{{0, 1}, Table(6, 0.0)}, {{1}, Table(3, 0.0)}});
  EXPECT_EQ(brute_force_min_marginals(m, m.potentials(), 1), Table(3, 0.0));
}

TEST(BruteForceMinMarginals, ThreeNodeHandInstance) {
  // f = t01(x0,x1) + t12(x1,x2), binary
  const Model m = build_model({2, 2, 2}, {{{0, 1}, {0, 3, 2, 1}}, {{1, 2}, {4, 0, 1, 5}}, {{1}, {0, 0}}});
  // x1 = 0: min t01(.,0) = 0, min t12(0,.) = 0 -> 0;  x1 = 1: min(3,1) + min(1,5) = 2
  EXPECT_EQ(brute_force_min_marginals(m, m.potentials(), 2), (Table{0, 2}));
}

TEST(BruteForceMinMarginals, AgreeWithJunctionTreeSweeps) {
  for (std::uint64_t seed = 1; seed <= 15; ++seed) {
    const auto d = inst::decompose(inst::random_model(seed));
    auto params = initial_tree_params(d);
    for (std::size_t t = 0; t < d.chain_count(); ++t)
      for (FactorId b : d.tree_factors(t)) {
        const Table bf = brute_force_min_marginals(d.model(), params[t], b);
        EXPECT_LE(oracle::max_abs_diff(bf, oracle::min_marginal(d.model(), oracle::tree_tables(d, params, t), b)), 1e-9);
        EXPECT_LE(oracle::max_abs_diff(bf, tree_min_marginal(d, d.junction_tree(t), params[t], b)), 1e-9);
      }
  }
}

TEST(Relations, ArgminAndProjection) {
  const Model m = build_model({2, 3}, {{{0, 1}, {1, 0, 4, 0, 2, 0}}});
  const Relation r = argmin_relation(m.scope(0), m.table(0));
  EXPECT_EQ(r.states, (std::vector<std::size_t>{1, 3, 5}));
  EXPECT_EQ(project(m, r, Scope{0}).states, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(project(m, r, Scope{1}).states, (std::vector<std::size_t>{0, 1, 2}));
}

TEST(Ewta, SingleTreeHoldsVacuously) {
  const auto p = inst::random_tree(3);
  const auto d = inst::decompose(p);
  ASSERT_EQ(d.chain_count(), 1u);
  EXPECT_TRUE(check_ewta(d, initial_tree_params(d)).holds());
}

TEST(Ewta, ConvergedTrwsAgrees) {
  std::size_t checked = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto d = inst::decompose(inst::random_model(seed, small_spec()));
    ChainTrws s(d);
    converge(s, 3000, 1e-14);
    checked += check_ewta(d, s.tree_params()).holds();
  }
  EXPECT_GE(checked, 18u);
}

TEST(Ewta, DisagreementOnASharedNode) {
  const Decomposition d = two_trees({0, 5, 5, 5}, {5, 5, 0, 5});
  const auto report = check_ewta(d, initial_tree_params(d));
  EXPECT_FALSE(report.holds());
  EXPECT_EQ(report.violated(), (std::vector<FactorId>{2}));
}

TEST(JConsistency, ZeroTablesAreConsistent) {
  const auto p = inst::nested_pair_chain(1);
  Potentials zero = p.model.potentials();
  for (auto& t : zero) std::fill(t.begin(), t.end(), 0.0);
  EXPECT_TRUE(check_j_consistency_enhanced(p.model, p.js, zero).holds());
  EXPECT_TRUE(check_j_consistency(p.model, p.js.edges, zero).holds());
}

TEST(JConsistency, ConvergedDiffusionIsConsistent) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto p = inst::random_model(seed, small_spec());
    Msd msd(p.model, p.js);
    converge(msd, 20000, 1e-15);
    EXPECT_TRUE(check_j_consistency(p.model, p.js.edges, msd.theta()).holds()) << "seed " << seed;
  }
}

TEST(JConsistency, PeakedOuterAgainstUniformSeparator) {
  const Model m = build_model({2, 2}, {{{0, 1}, {0, 1, 1, 1}}, {{0}, {0, 0}}});
  const JStructure js = close_j(m, {{0, 1}});
  const auto report = check_j_consistency_enhanced(m, js, m.potentials());
  EXPECT_FALSE(report.holds());
  // The existential form keeps the shared state (0, 0).
  EXPECT_TRUE(check_j_consistency(m, js.edges, m.potentials()).holds());
}

TEST(JConsistency, ExistentialFormDetectsEmptyWitness) {
  const Model m = build_model({2, 2}, {{{0, 1}, {0, 1, 1, 1}}, {{0}, {1, 0}}});
  const JStructure js = close_j(m, {{0, 1}});
  EXPECT_FALSE(check_j_consistency(m, js.edges, m.potentials()).holds());
}

TEST(Mappings, SingleFactorTreesMoveCostsOnly) {
  const Model m = build_model({2, 2, 2}, {{{0, 1}, {3, 1, 2, 5}},
                                          {{1, 2}, {0, 4, 2, 2}},
                                          {{1}, {1, 0}},
                                          {{0}, {0, 0}},
                                          {{2}, {0, 0}}});
  const Decomposition d(m, close_j(m, {{0, 2}, {1, 2}, {0, 3}, {1, 4}}), NodeOrder::identity(3), {{0}, {1}});
  ASSERT_TRUE(validate_decomposition(d).ok());
  ChainTrws s(d);
  converge(s, 200, 1e-14);
  const auto params = s.tree_params();
  EXPECT_NEAR(s.bound(), 3.0, 1e-9);
  ASSERT_TRUE(check_ewta(d, params).holds());
  const Potentials theta = map_wta_to_jconsistent(d, params);
  EXPECT_NEAR(oracle::psi(theta), tree_bound(d, params), 1e-9);
}

TEST(Mappings, TrwsFixpointsMapToConsistentPointsWithTheSameBound) {
  std::size_t done = 0;
  for (std::uint64_t seed = 1; done < 20 && seed <= 100; ++seed) {
    const auto d = inst::decompose(inst::random_model(100 + seed, small_spec()));
    ChainTrws s(d);
    converge(s, 3000, 1e-14);
    const auto params = s.tree_params();
    if (!check_ewta(d, params).holds()) continue;
    const Potentials theta = map_wta_to_jconsistent(d, params);
    EXPECT_NEAR(oracle::psi(theta), oracle::phi(d, params), 1e-9);
    EXPECT_TRUE(check_j_consistency(d.model(), d.js().edges, theta).holds()) << "seed " << seed;
    // theta is a reparameterization of the model
    std::mt19937_64 rng(seed);
    for (int k = 0; k < 10; ++k) {
      Labeling x(d.model().node_count());
      for (NodeId v = 0; v < x.size(); ++v) x[v] = rng() % d.model().labels(v);
      EXPECT_NEAR(oracle::energy(d.model(), theta, x), oracle::energy(d.model(), x), 1e-9);
    }
    // and mapping back recovers the bound
    const TreeParams back = map_jconsistent_to_wta(d, theta);
    EXPECT_NEAR(tree_bound(d, back), oracle::psi(theta), 1e-9);
    ++done;
  }
  EXPECT_EQ(done, 20u);
}

TEST(Mappings, DiffusionFixpointsMapToTreeAgreement) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto d = inst::decompose(inst::random_model(200 + seed, small_spec()));
    Msd msd(d.model(), d.js(), d.node_order());
    converge(msd, 20000, 1e-15);
    const TreeParams params = map_jconsistent_to_wta(d, msd.theta());
    EXPECT_NEAR(oracle::phi(d, params), msd.bound(), 1e-9);
    const Potentials theta = cumulative_theta(d, params);
    std::mt19937_64 rng(seed);
    for (int k = 0; k < 10; ++k) {
      Labeling x(d.model().node_count());
      for (NodeId v = 0; v < x.size(); ++v) x[v] = rng() % d.model().labels(v);
      EXPECT_NEAR(oracle::energy(d.model(), theta, x), oracle::energy(d.model(), x), 1e-9);
    }
  }
}

TEST(Mappings, ZeroTables) {
  const auto d = inst::decompose(inst::nested_pair_chain(1));
  Potentials zero = d.model().potentials();
  for (auto& t : zero) std::fill(t.begin(), t.end(), 0.0);
  const TreeParams params = map_jconsistent_to_wta(d, zero);
  EXPECT_EQ(tree_bound(d, params), 0.0);
}

TEST(Mappings, RejectNonFixpoints) {
  const Decomposition d = two_trees({0, 5, 5, 5}, {5, 5, 0, 5});
  try {
    map_wta_to_jconsistent(d, initial_tree_params(d));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotAtFixpoint);
  }
  const Model m = build_model({2, 2}, {{{0, 1}, {0, 1, 1, 1}}, {{0}, {1, 0}}, {{1}, {0, 0}}});
  const Decomposition d2(m, close_j(m, {{0, 1}, {0, 2}}), NodeOrder::identity(2), {{0}});
  try {
    map_jconsistent_to_wta(d2, m.potentials());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotAtFixpoint);
  }
}

TEST(ExtractPrimal, ExactOnConvergedTrees) {
  for (std::uint64_t seed = 1; seed <= 15; ++seed) {
    const auto p = inst::random_tree(seed);
    const auto d = inst::decompose(p);
    ChainTrws s(d);
    s.pass();
    s.pass();
    const Labeling x = extract_primal(d.model(), s.theta(), d.node_order());
    EXPECT_NEAR(energy(p.model, x), oracle::map(p.model).value, 1e-9);
  }
}

TEST(ExtractPrimal, ZeroModelGivesZeros) {
  const Model m = build_model({3, 2, 4}, {{{0, 1, 2}, Table(24, 0.0)}});
  EXPECT_EQ(extract_primal(m, m.potentials(), NodeOrder::identity(3)), (Labeling{0, 0, 0}));
}

TEST(ExtractPrimal, WeakDuality) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto d = inst::decompose(inst::random_model(seed));
    ChainTrws s(d);
    Msd msd(d.model(), d.js(), d.node_order());
    for (int k = 0; k < 5; ++k) {
      const double phi = s.pass();
      const double psi = msd.pass();
      EXPECT_GE(energy(d.model(), extract_primal(d.model(), s.theta(), d.node_order())), phi - 1e-9);
      EXPECT_GE(energy(d.model(), extract_primal(d.model(), msd.theta(), d.node_order())), psi - 1e-9);
    }
  }
}

TEST(FixpointBehaviour, AgreementPointsStayPut) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto d = inst::decompose(inst::random_model(300 + seed, small_spec()));
    ChainTrws s(d);
    converge(s, 3000, 1e-14);
    if (!check_ewta(d, s.tree_params()).holds()) continue;
    const double phi = s.bound();
    for (int k = 0; k < 4; ++k) {
      EXPECT_NEAR(s.pass(), phi, 1e-9);
      EXPECT_TRUE(check_ewta(d, s.tree_params()).holds());
    }
  }
}

TEST(FixpointBehaviour, ArgminSetsNeverGrowWhileTheBoundStalls) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto d = inst::decompose(inst::random_model(400 + seed, small_spec()));
    ExplicitChainTrws s(d);
    double prev = s.pass();
    auto before = tree_argmin_projections(d, s.params());
    for (int k = 0; k < 30; ++k) {
      const double b = s.pass();
      const auto after = tree_argmin_projections(d, s.params());
      if (std::abs(b - prev) <= 1e-12)
        for (std::size_t t = 0; t < d.chain_count(); ++t)
          for (FactorId c : d.tree_factors(t))
            EXPECT_TRUE(std::includes(before[t][c].states.begin(), before[t][c].states.end(), after[t][c].states.begin(),
                                      after[t][c].states.end()));
      before = after;
      prev = b;
    }
  }
}
