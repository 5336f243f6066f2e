#include <algorithm>

#include <gtest/gtest.h>

#include "gtrws/gtrws.hpp"
#include "support/oracles.hpp"

using namespace gtrws;

namespace {

std::size_t count_arity(const Model& m, std::size_t arity) {
  return std::count_if(m.factors().begin(), m.factors().end(), [&](const Factor& f) { return f.scope.size() == arity; });
}

}  // namespace

TEST(StereoCost, ReferenceValues) {
  EXPECT_EQ(stereo_cost(3, 3, 3, 15), 0.0);
  EXPECT_EQ(stereo_cost(2, 3, 3, 15), 15.0);
  EXPECT_EQ(stereo_cost(0, 2, 4, 15), 45.0);
}

TEST(StereoCost, Branches) {
  EXPECT_EQ(stereo_cost(1, 2, 3, 15), 0.0);
  EXPECT_EQ(stereo_cost(1, 2, 1, 15), 45.0);
  EXPECT_EQ(stereo_cost(3, 3, 4, 15), 15.0);
  EXPECT_EQ(stereo_cost(0, 0, 2, 15), 45.0);
}

TEST(GenStereo, StructureAndTables) {
  const auto inst = gen_stereo_second_order(4, 3, 5, 15, 7);
  const Model& m = inst.model;
  EXPECT_EQ(m.node_count(), 12u);
  EXPECT_EQ(count_arity(m, 1), 12u);
  EXPECT_EQ(count_arity(m, 3), 3u * 2 + 4u * 1);
  for (const auto& f : m.factors()) {
    if (f.scope.size() == 1) {
      for (double v : f.table) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 45.0);
      }
    } else {
      EXPECT_EQ(f.table[(3 * 5 + 3) * 5 + 3], 0.0);
      EXPECT_EQ(f.table[(2 * 5 + 3) * 5 + 3], 15.0);
      EXPECT_EQ(f.table[(0 * 5 + 2) * 5 + 4], 45.0);
    }
  }
  EXPECT_EQ(inst.js.outer.size(), 10u);
  EXPECT_TRUE(validate_decomposition(build_monotonic_chains(m, inst.js, NodeOrder::identity(12))).ok());
}

TEST(GenStereo, PairSeparators) {
  const auto inst = gen_stereo_second_order(3, 3, 2, 15, 1, SeparatorMode::Pair);
  EXPECT_EQ(count_arity(inst.model, 2), 12u);
  for (const auto& f : inst.model.factors())
    if (f.scope.size() == 2) EXPECT_EQ(f.table, Table(4, 0.0));
}

TEST(GenStereo, SuppliedUnaries) {
  std::vector<Table> unaries(9, Table{0.0, 1.0});
  const auto inst = gen_stereo_second_order(3, 3, 2, 15, 1, SeparatorMode::Singleton, unaries);
  for (const auto& f : inst.model.factors())
    if (f.scope.size() == 1) EXPECT_EQ(f.table, (Table{0.0, 1.0}));
  EXPECT_THROW(gen_stereo_second_order(3, 3, 2, 15, 1, SeparatorMode::Singleton, std::vector<Table>(2, Table{0, 1})),
               Error);
}

TEST(GenStereo, RejectsTinyGrids) {
  EXPECT_THROW(gen_stereo_second_order(2, 3, 2, 15, 1), Error);
  EXPECT_THROW(gen_stereo_second_order(3, 3, 1, 15, 1), Error);
}

TEST(GenStereo, DeterministicInTheSeed) {
  const auto a = gen_stereo_second_order(3, 4, 3, 15, 11);
  const auto b = gen_stereo_second_order(3, 4, 3, 15, 11);
  const auto c = gen_stereo_second_order(3, 4, 3, 15, 12);
  EXPECT_EQ(serialize_model(a.model, a.js), serialize_model(b.model, b.js));
  EXPECT_NE(serialize_model(a.model, a.js), serialize_model(c.model, c.js));
}

TEST(PottsBlock, Costs) {
  EXPECT_EQ(potts_block_cost({2, 2, 2, 2}, 5000, PottsVariant::AllEqual), 0.0);
  EXPECT_EQ(potts_block_cost({0, 0, 0, 1}, 5000, PottsVariant::AllEqual), 5000.0);
  EXPECT_EQ(potts_block_cost({0, 0, 0, 1}, 5000, PottsVariant::PairwiseSum), 10000.0);
  EXPECT_EQ(potts_block_cost({0, 1, 1, 0}, 1, PottsVariant::PairwiseSum), 4.0);
  EXPECT_EQ(potts_block_cost({1, 1, 1, 1}, 1, PottsVariant::PairwiseSum), 0.0);
}

TEST(GenPotts, SingleBlockWithZeroUnaries) {
  const std::size_t L = 3;
  const auto inst = gen_potts_2x2(2, 2, L, 5000, 1, SeparatorMode::Singleton, PottsVariant::AllEqual,
                                  std::vector<Table>(4, Table(L, 0.0)));
  EXPECT_EQ(count_arity(inst.model, 4), 1u);
  const auto sol = oracle::map(inst.model);
  EXPECT_EQ(sol.value, 0.0);
  for (std::size_t l = 0; l < L; ++l) EXPECT_EQ(energy(inst.model, Labeling(4, l)), 0.0);
  EXPECT_EQ(energy(inst.model, Labeling{0, 0, 0, 1}), 5000.0);
}

TEST(GenPotts, GridStructure) {
  const auto inst = gen_potts_2x2(4, 3, 2, 5000, 3);
  EXPECT_EQ(count_arity(inst.model, 4), 3u * 2);
  EXPECT_EQ(count_arity(inst.model, 1), 12u);
  for (const auto& f : inst.model.factors())
    if (f.scope.size() == 1)
      for (double v : f.table) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 5000.0);
      }
  const auto pair = gen_potts_2x2(3, 3, 2, 5000, 3, SeparatorMode::Pair);
  EXPECT_EQ(count_arity(pair.model, 2), 12u);
  EXPECT_TRUE(
      validate_decomposition(build_monotonic_chains(pair.model, pair.js, NodeOrder::identity(9), {true})).ok());
}

TEST(GenPotts, PairwiseVariantTable) {
  const auto inst = gen_potts_2x2(2, 2, 2, 1, 1, SeparatorMode::Singleton, PottsVariant::PairwiseSum);
  const Model& m = inst.model;
  const FactorId block = *m.find(Scope{0, 1, 2, 3});
  EXPECT_EQ(m.table(block)[0b0110], 4.0);
  EXPECT_EQ(m.table(block)[0b0011], 2.0);
}

TEST(GenPotts, RejectsTinyGrids) { EXPECT_THROW(gen_potts_2x2(1, 2, 2, 1, 1), Error); }
